#include "clickstorm/losses.hpp"

#include "clickstorm/render.hpp"

namespace clickstorm {

double dice_loss(const ProbMap& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "dice_loss");
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_g = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = gt[i] ? 1.0 : 0.0;
    inter += pred[i] * g;
    sum_p += pred[i];
    sum_g += g;
  }
  return 1.0 - (2.0 * inter + kDiceSmoothing) / (sum_p + sum_g + kDiceSmoothing);
}

Grid<double> dice_loss_gradient(const ProbMap& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "dice_loss_gradient");
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_g = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = gt[i] ? 1.0 : 0.0;
    inter += pred[i] * g;
    sum_p += pred[i];
    sum_g += g;
  }
  const double num = 2.0 * inter + kDiceSmoothing;
  const double den = sum_p + sum_g + kDiceSmoothing;
  Grid<double> out(pred.width(), pred.height());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = gt[i] ? 1.0 : 0.0;
    out[i] = -(2.0 * g * den - num) / (den * den);
  }
  return out;
}

IllField make_ill_field(const ErrorRegions& regions, Polarity polarity, double sharpness) {
  const BinaryMask& target = polarity == Polarity::positive ? regions.false_negative : regions.false_positive;
  if (count(target) == 0) {
    throw Error(std::string("interaction location loss: no ") +
                (polarity == Polarity::positive ? "false-negative" : "false-positive") +
                " pixels, no valid placement exists");
  }
  return IllField{outer_distance_transform(target), sharpness};
}

IllValue interaction_location_loss_with_gradient(const Click& click, const IllField& field) {
  const auto& dist = field.distance;
  const Footprint fp = render_footprint(click, dist.width(), dist.height(), field.sharpness);
  double mass = 0.0;
  double weighted = 0.0;
  Vec2 d_mass;
  Vec2 d_weighted;
  for (const auto& s : fp.samples) {
    const double d = dist[s.index];
    mass += s.value;
    weighted += s.value * d;
    d_mass.x += s.d_dx;
    d_mass.y += s.d_dy;
    d_weighted.x += s.d_dx * d;
    d_weighted.y += s.d_dy * d;
  }
  if (!(mass > 0.0)) {
    throw Error("interaction location loss: click footprint does not overlap the image");
  }
  const double diag = image_diagonal(dist.width(), dist.height());
  IllValue out;
  out.value = weighted / (mass * diag);
  out.gradient.x = (d_weighted.x * mass - weighted * d_mass.x) / (mass * mass * diag);
  out.gradient.y = (d_weighted.y * mass - weighted * d_mass.y) / (mass * mass * diag);
  return out;
}

double interaction_location_loss(const Click& click, const IllField& field) {
  return interaction_location_loss_with_gradient(click, field).value;
}

double interaction_location_loss(const Click& click, const ErrorRegions& regions, double sharpness) {
  return interaction_location_loss(click, make_ill_field(regions, click.polarity, sharpness));
}

double direction_sign(Direction direction) {
  return direction == Direction::maximize ? 1.0 : -1.0;
}

double total_loss(const ProbMap& pred, const BinaryMask& gt, const Click& active, Direction direction,
                  const IllField& field, double ill_weight) {
  return direction_sign(direction) * dice_loss(pred, gt) + ill_weight * interaction_location_loss(active, field);
}

double learning_rate(int height, int width, std::optional<double> lr_override) {
  if (lr_override) {
    return *lr_override;
  }
  if (height < 1 || width < 1) {
    throw Error("learning rate: image dimensions must be positive");
  }
  // sqrt(H^2 + W^2) / sqrt(2) folded under one root so square images give exact values.
  const double h = height;
  const double w = width;
  return 5.0 * std::sqrt((h * h + w * w) / 2.0) / 400.0;
}

}  // namespace clickstorm
