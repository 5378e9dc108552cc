#pragma once

#include <optional>
#include <span>

#include "clickstorm/clickgen.hpp"
#include "clickstorm/grid.hpp"
#include "clickstorm/maskops.hpp"
#include "clickstorm/segmenter.hpp"

namespace clickstorm {

inline constexpr double kDiceSmoothing = 1.0;

// 1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps), eps = kDiceSmoothing.
double dice_loss(const ProbMap& pred, const BinaryMask& gt);
// Per-pixel d(dice_loss)/d(pred).
Grid<double> dice_loss_gradient(const ProbMap& pred, const BinaryMask& gt);

// Soft-disk-weighted mean distance to the click's target region, divided by the image diagonal:
//   ILL = sum(m * D) / (sum(m) * diag).
// The target region is FN for a positive click and FP for a negative one.
double interaction_location_loss(const Click& click, const IllField& field);
double interaction_location_loss(const Click& click, const ErrorRegions& regions, double sharpness = 8.0);

struct IllValue {
  double value = 0.0;
  Vec2 gradient;
};
IllValue interaction_location_loss_with_gradient(const Click& click, const IllField& field);

// Builds the field for a click of the given polarity; throws when its target region is empty.
IllField make_ill_field(const ErrorRegions& regions, Polarity polarity, double sharpness);

// s * dice_loss(pred, gt) + ill_weight * ILL(active), s = +1 for maximize, -1 for minimize.
double total_loss(const ProbMap& pred, const BinaryMask& gt, const Click& active, Direction direction,
                  const IllField& field, double ill_weight);

double direction_sign(Direction direction);

// 5 * sqrt(H^2 + W^2) / (400 * sqrt(2)) unless overridden.
double learning_rate(int height, int width, std::optional<double> lr_override = std::nullopt);

}  // namespace clickstorm
