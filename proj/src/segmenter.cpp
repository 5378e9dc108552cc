#include "clickstorm/segmenter.hpp"

#include "clickstorm/losses.hpp"

namespace clickstorm {

const char* to_string(Direction direction) {
  return direction == Direction::maximize ? "max" : "min";
}

const char* to_string(InputMode mode) {
  return mode == InputMode::disk_maps ? "disk_maps" : "raw_coordinates";
}

SegmenterCapabilities DifferentiableSegmenter::capabilities() const {
  return {InputMode::disk_maps, true, std::nullopt};
}

ProbMap DifferentiableSegmenter::predict(const SegmenterRequest& request) {
  Grid<double> z = logits(request);
  for (auto& v : z.data()) {
    v = sigmoid(v);
  }
  return z;
}

Vec2 DifferentiableSegmenter::dice_gradient(const SegmenterRequest& request, const BinaryMask& gt,
                                            Direction direction, std::size_t active) {
  if (active >= request.clicks.size()) {
    throw SegmenterError("active click index out of range", active);
  }
  const ProbMap pred = predict(request);
  Grid<double> upstream = dice_loss_gradient(pred, gt);
  const double s = direction_sign(direction);
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    upstream[i] *= s * pred[i] * (1.0 - pred[i]);
  }
  return logits_vjp(request, upstream)[active];
}

LossEvaluation loss_gradient(Segmenter& segmenter, const SegmenterRequest& request, const BinaryMask& gt,
                             Direction direction, const IllField& ill, double ill_weight, std::size_t active) {
  if (!segmenter.capabilities().supports_gradients) {
    throw SegmenterError("segmenter does not support gradients", active);
  }
  if (active >= request.clicks.size()) {
    throw SegmenterError("active click index out of range", active);
  }
  LossEvaluation out;
  out.prediction = segmenter.predict(request);
  require_same_shape(out.prediction, gt, "loss_gradient");
  out.dice = dice_loss(out.prediction, gt);
  const Vec2 dice_grad = segmenter.dice_gradient(request, gt, direction, active);
  const IllValue ill_value = interaction_location_loss_with_gradient(request.clicks[active], ill);
  out.ill = ill_value.value;
  out.loss = direction_sign(direction) * out.dice + ill_weight * out.ill;
  out.gradient = {dice_grad.x + ill_weight * ill_value.gradient.x, dice_grad.y + ill_weight * ill_value.gradient.y};
  if (!std::isfinite(out.gradient.x) || !std::isfinite(out.gradient.y) || !std::isfinite(out.loss)) {
    throw SegmenterError("non-finite loss gradient", active);
  }
  return out;
}

}  // namespace clickstorm
