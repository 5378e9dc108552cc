#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "clickstorm/clickgen.hpp"
#include "clickstorm/grid.hpp"

namespace clickstorm {

enum class InputMode { disk_maps, raw_coordinates };
enum class Direction { minimize, maximize };

const char* to_string(Direction direction);
const char* to_string(InputMode mode);

struct SegmenterRequest {
  const Image& image;
  std::span<const Click> clicks;
  const ProbMap* prev_mask = nullptr;
};

struct SegmenterCapabilities {
  InputMode input_mode = InputMode::disk_maps;
  bool supports_gradients = false;
  std::optional<int> native_resolution;
};

// Failure inside a segmenter call; `click_index` names the click being processed when known.
class SegmenterError : public Error {
 public:
  SegmenterError(const std::string& what, std::optional<std::size_t> click_index = std::nullopt)
      : Error(what), click_index_(click_index) {}
  std::optional<std::size_t> click_index() const { return click_index_; }

 private:
  std::optional<std::size_t> click_index_;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;

  virtual SegmenterCapabilities capabilities() const = 0;
  virtual ProbMap predict(const SegmenterRequest& request) = 0;

  // Gradient of s * Dice(predict(request), gt) with respect to the coordinates of click
  // `active`, where s = +1 when maximizing quality and -1 when minimizing.
  virtual Vec2 dice_gradient(const SegmenterRequest& request, const BinaryMask& gt, Direction direction,
                             std::size_t active) = 0;
};

// Segmenters defined by a logit field that is differentiable in click coordinates.
class DifferentiableSegmenter : public Segmenter {
 public:
  SegmenterCapabilities capabilities() const override;
  ProbMap predict(const SegmenterRequest& request) override;
  Vec2 dice_gradient(const SegmenterRequest& request, const BinaryMask& gt, Direction direction,
                     std::size_t active) override;

  virtual Grid<double> logits(const SegmenterRequest& request) const = 0;
  // Vector-Jacobian product: gradient of a scalar with respect to every click's (x, y),
  // given that scalar's gradient with respect to the logits.
  virtual std::vector<Vec2> logits_vjp(const SegmenterRequest& request, const Grid<double>& upstream) const = 0;
};

// Interaction-location term of the attack loss, precomputed for one optimized click.
struct IllField {
  DistanceMap distance;  // outer distance transform of the click's target error region
  double sharpness = 2.0;
};

struct LossEvaluation {
  double loss = 0.0;
  double dice = 0.0;
  double ill = 0.0;
  Vec2 gradient;
  ProbMap prediction;
};

// total_loss and its gradient with respect to click `active`. Fails before any model call when
// the segmenter cannot provide gradients.
LossEvaluation loss_gradient(Segmenter& segmenter, const SegmenterRequest& request, const BinaryMask& gt,
                             Direction direction, const IllField& ill, double ill_weight, std::size_t active);

}  // namespace clickstorm
