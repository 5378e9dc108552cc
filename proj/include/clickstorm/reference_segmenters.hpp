#pragma once

#include <cstdint>
#include <memory>

#include "clickstorm/segmenter.hpp"

namespace clickstorm {

// Desk-scale analytic segmenter:
//   prob = sigmoid(w+ * G(M+) - w- * G(M-) + bias + a * A)
// where M+/M- are the rendered click maps, G a Gaussian blur (truncated at 3 sigma, zero
// padding) and A(p) = exp(-(I(p) - mean)^2 / tau) an intensity affinity to the disk-weighted mean
// intensity under the positive clicks.
struct BlobParams {
  double sigma = 2.0;
  double positive_weight = 8.0;
  double negative_weight = 8.0;
  double bias = -4.0;
  double affinity_weight = 6.0;
  double affinity_tau = 0.02;
  double sharpness = 2.0;
};

class BlobSegmenter final : public DifferentiableSegmenter {
 public:
  explicit BlobSegmenter(BlobParams params);

  const BlobParams& params() const { return params_; }

  Grid<double> logits(const SegmenterRequest& request) const override;
  std::vector<Vec2> logits_vjp(const SegmenterRequest& request, const Grid<double>& upstream) const override;

 private:
  BlobParams params_;
  std::vector<double> kernel_;  // normalized, symmetric, length 2r+1
};

std::unique_ptr<BlobSegmenter> blob_segmenter(const BlobParams& params);

// Separable Gaussian blur with zero padding; self-adjoint.
Grid<double> gaussian_blur(const Grid<double>& in, std::span<const double> kernel);
std::vector<double> gaussian_kernel(double sigma);

// Wraps a differentiable segmenter and shifts its logits by a smooth pseudo-random function of
// the click coordinates: amplitude * mean over clicks of sum_j sin(k_j . c + phi_j) / sqrt(J).
class RuggedSegmenter final : public DifferentiableSegmenter {
 public:
  static constexpr int kWaves = 6;

  RuggedSegmenter(std::shared_ptr<const DifferentiableSegmenter> base, std::uint64_t seed, double amplitude);

  // The uniform logit offset the current clicks induce.
  double offset(std::span<const Click> clicks) const;

  Grid<double> logits(const SegmenterRequest& request) const override;
  std::vector<Vec2> logits_vjp(const SegmenterRequest& request, const Grid<double>& upstream) const override;

 private:
  struct Wave {
    double kx;
    double ky;
    double phase;
  };
  std::shared_ptr<const DifferentiableSegmenter> base_;
  double amplitude_;
  std::vector<Wave> waves_;
};

std::unique_ptr<RuggedSegmenter> rugged_segmenter(std::shared_ptr<const DifferentiableSegmenter> base,
                                                  std::uint64_t seed, double amplitude);

// Test double and sanity baseline: returns the ground truth once a positive click lands on the
// object, an empty map otherwise. Gradients are identically zero.
class OracleSegmenter final : public Segmenter {
 public:
  explicit OracleSegmenter(BinaryMask gt) : gt_(std::move(gt)) {}

  SegmenterCapabilities capabilities() const override { return {InputMode::disk_maps, true, std::nullopt}; }
  ProbMap predict(const SegmenterRequest& request) override;
  Vec2 dice_gradient(const SegmenterRequest& request, const BinaryMask& gt, Direction direction,
                     std::size_t active) override;

 private:
  BinaryMask gt_;
};

}  // namespace clickstorm
