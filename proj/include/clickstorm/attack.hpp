#pragma once

#include <optional>
#include <vector>

#include "clickstorm/clickgen.hpp"
#include "clickstorm/losses.hpp"
#include "clickstorm/segmenter.hpp"

namespace clickstorm {

struct AttackConfig {
  int clicks = 10;      // K, clicks per trajectory
  int iterations = 10;  // T, optimizer steps per click
  double ill_weight = 1000.0;
  double ill_margin = 0.05;  // relative to the initial click's ILL
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::optional<double> lr_override;
  double ill_sharpness = 8.0;  // soft-disk profile used by the ILL term only
  double iou_tolerance = 1e-9;
  double ill_tolerance = 1e-9;  // absolute slack on the ILL bound; absorbs sub-noise sigmoid tails

  void validate() const;
};

struct OptimizedClick {
  Click click;
  ProbMap prediction;
  std::vector<IterationRecord> records;  // exactly cfg.iterations entries
  bool fallback = true;                  // no candidate was accepted
};

// Whether `candidate` strictly improves on `incumbent` in the chosen direction.
bool iou_improves(double candidate, double incumbent, Direction direction, double tolerance);

// The acceptance predicate applied to every optimizer candidate.
bool accept_candidate(double candidate_iou, double incumbent_iou, double candidate_ill, double initial_ill,
                      bool candidate_valid, Direction direction, const AttackConfig& cfg);

// Optimizes the click placed after `prefix`, whose prediction is `prev_pred`. Starts at the
// baseline click and runs cfg.iterations Adam steps on total_loss. Adam moves a continuous
// iterate; each candidate is evaluated, recorded and returned at its nearest pixel, with the
// gradient taken there. nullopt when the previous prediction already has no error.
std::optional<OptimizedClick> optimize_click(Segmenter& segmenter, const Image& image, const BinaryMask& gt,
                                             std::span<const Click> prefix, const ProbMap& prev_pred,
                                             Direction direction, const AttackConfig& cfg,
                                             const ClickPolicy& policy = {});

Trajectory run_adversarial_trajectory(Segmenter& segmenter, const Image& image, const BinaryMask& gt,
                                      Direction direction, const AttackConfig& cfg, const ClickPolicy& policy = {});

// |pos_t - pos_{t-1}| / max(H, W) for consecutive records.
std::vector<double> iteration_deltas(std::span<const IterationRecord> records, int height, int width);

}  // namespace clickstorm
