#include "clickstorm/attack.hpp"

#include <algorithm>
#include <cmath>

namespace clickstorm {

void AttackConfig::validate() const {
  if (clicks < 1) throw Error("attack config: clicks must be >= 1");
  if (iterations < 1) throw Error("attack config: iterations must be >= 1");
  if (!(ill_weight >= 0.0)) throw Error("attack config: ill_weight must be >= 0");
  if (!(ill_margin >= 0.0 && ill_margin < 1.0)) throw Error("attack config: ill_margin must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error("attack config: Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error("attack config: adam_eps must be > 0");
  if (lr_override && !(*lr_override >= 0.0)) throw Error("attack config: lr_override must be >= 0");
  if (!(ill_sharpness > 0.0)) throw Error("attack config: ill_sharpness must be > 0");
  if (!(iou_tolerance >= 0.0) || !(ill_tolerance >= 0.0)) throw Error("attack config: tolerances must be >= 0");
}

bool iou_improves(double candidate, double incumbent, Direction direction, double tolerance) {
  return direction == Direction::minimize ? candidate < incumbent - tolerance : candidate > incumbent + tolerance;
}

bool accept_candidate(double candidate_iou, double incumbent_iou, double candidate_ill, double initial_ill,
                      bool candidate_valid, Direction direction, const AttackConfig& cfg) {
  return candidate_valid && iou_improves(candidate_iou, incumbent_iou, direction, cfg.iou_tolerance) &&
         candidate_ill <= (1.0 + cfg.ill_margin) * initial_ill + cfg.ill_tolerance;
}

namespace {

struct Adam {
  double beta1;
  double beta2;
  double eps;
  double lr;
  Vec2 m;
  Vec2 v;
  int t = 0;

  Vec2 step(Vec2 pos, Vec2 g) {
    ++t;
    m.x = beta1 * m.x + (1.0 - beta1) * g.x;
    m.y = beta1 * m.y + (1.0 - beta1) * g.y;
    v.x = beta2 * v.x + (1.0 - beta2) * g.x * g.x;
    v.y = beta2 * v.y + (1.0 - beta2) * g.y * g.y;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    pos.x -= lr * (m.x / c1) / (std::sqrt(v.x / c2) + eps);
    pos.y -= lr * (m.y / c1) / (std::sqrt(v.y / c2) + eps);
    return pos;
  }
};

}  // namespace

std::optional<OptimizedClick> optimize_click(Segmenter& segmenter, const Image& image, const BinaryMask& gt,
                                             std::span<const Click> prefix, const ProbMap& prev_pred,
                                             Direction direction, const AttackConfig& cfg,
                                             const ClickPolicy& policy) {
  cfg.validate();
  const ErrorRegions regions = error_regions(prev_pred, gt, policy.threshold, policy.connectivity);
  const auto initial = baseline_click(regions, policy.radius);
  if (!initial) {
    return std::nullopt;
  }
  const IllField field = make_ill_field(regions, initial->polarity, cfg.ill_sharpness);
  const std::size_t active = prefix.size();
  std::vector<Click> clicks(prefix.begin(), prefix.end());
  clicks.push_back(*initial);

  auto evaluate = [&]() {
    return loss_gradient(segmenter, {image, clicks, &prev_pred}, gt, direction, field, cfg.ill_weight, active);
  };

  LossEvaluation current = evaluate();
  const double initial_ill = current.ill;
  OptimizedClick best{*initial, current.prediction, {}, true};
  double best_iou = iou(binarize(current.prediction, policy.threshold), gt);

  Adam adam{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, learning_rate(gt.height(), gt.width(), cfg.lr_override),
            {}, {}, 0};
  Vec2 pos{initial->x, initial->y};
  const double max_x = gt.width() - 1;
  const double max_y = gt.height() - 1;
  best.records.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int t = 1; t <= cfg.iterations; ++t) {
    pos = adam.step(pos, current.gradient);
    pos.x = std::clamp(pos.x, 0.0, max_x);
    pos.y = std::clamp(pos.y, 0.0, max_y);
    // Candidates are pixel positions; Adam keeps the continuous iterate (straight-through).
    clicks.back().x = std::round(pos.x);
    clicks.back().y = std::round(pos.y);

    current = evaluate();
    const double cand_iou = iou(binarize(current.prediction, policy.threshold), gt);
    const bool valid = is_valid_click(clicks.back(), regions);
    const bool accepted = accept_candidate(cand_iou, best_iou, current.ill, initial_ill, valid, direction, cfg);
    best.records.push_back({t, clicks.back().x, clicks.back().y, current.loss, cand_iou, current.ill, accepted});
    if (accepted) {
      best.click = clicks.back();
      best.prediction = current.prediction;
      best.fallback = false;
      best_iou = cand_iou;
    }
  }
  return best;
}

Trajectory run_adversarial_trajectory(Segmenter& segmenter, const Image& image, const BinaryMask& gt,
                                      Direction direction, const AttackConfig& cfg, const ClickPolicy& policy) {
  cfg.validate();
  Trajectory out;
  out.kind = direction == Direction::minimize ? TrajectoryKind::minimizing : TrajectoryKind::maximizing;
  ProbMap pred(gt.width(), gt.height(), 0.0);
  for (int k = 0; k < cfg.clicks; ++k) {
    std::optional<OptimizedClick> step;
    try {
      step = optimize_click(segmenter, image, gt, out.clicks, pred, direction, cfg, policy);
    } catch (const SegmenterError& e) {
      throw SegmenterError("round " + std::to_string(k) + ": " + e.what(), static_cast<std::size_t>(k));
    } catch (const std::exception& e) {
      throw SegmenterError("round " + std::to_string(k) + ": " + e.what(), static_cast<std::size_t>(k));
    }
    if (!step) {
      if (out.iou_curve.empty()) {
        throw Error("ground truth mask is empty; nothing to click");
      }
      out.iou_curve.push_back(out.iou_curve.back());
      out.biou_curve.push_back(out.biou_curve.back());
      continue;
    }
    out.clicks.push_back(step->click);
    out.diagnostics.push_back(std::move(step->records));
    pred = std::move(step->prediction);
    const auto scores = score_prediction(pred, gt, policy);
    out.iou_curve.push_back(scores.iou);
    out.biou_curve.push_back(scores.biou);
  }
  return out;
}

std::vector<double> iteration_deltas(std::span<const IterationRecord> records, int height, int width) {
  if (records.size() < 2) {
    throw Error("iteration deltas need at least two records");
  }
  const double scale = std::max(height, width);
  std::vector<double> out;
  out.reserve(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i) {
    out.push_back(std::hypot(records[i].x - records[i - 1].x, records[i].y - records[i - 1].y) / scale);
  }
  return out;
}

}  // namespace clickstorm
