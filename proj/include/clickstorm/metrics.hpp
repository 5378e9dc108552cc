#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clickstorm/clickgen.hpp"

namespace clickstorm {

// Normalized area under a per-click quality curve with unit spacing: the mean of its values.
double normalized_auc(std::span<const double> curve);
// normalized_auc of a curve that must have exactly 10 entries.
double auc_at_10(std::span<const double> curve);
// Robustness gap: auc_max - auc_min (smaller is more robust).
double robustness_d(double auc_min, double auc_max);

struct CurveAuc {
  double iou = 0.0;
  double biou = 0.0;
};

struct ImageReport {
  std::string image_id;
  std::map<TrajectoryKind, CurveAuc> auc;
};

ImageReport image_report(const std::string& image_id, std::span<const Trajectory> trajectories);

// Dataset-level numbers are percentages (x100). D comes from the aggregated Max and Min.
struct MetricSummary {
  std::optional<double> base;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> d;
};

struct RobustnessReport {
  std::string dataset;
  std::string model;
  MetricSummary iou;
  MetricSummary biou;
  std::vector<ImageReport> per_image;  // sorted by image id
};

RobustnessReport aggregate(std::vector<ImageReport> per_image, const std::string& dataset = "",
                           const std::string& model = "");

// One long-format report line: metric in {iou, biou}, kind in {base, min, max, d}.
struct ScoreRow {
  std::string dataset;
  std::string model;
  std::string metric;
  std::string kind;
  double value = 0.0;
};

std::vector<ScoreRow> score_rows(const RobustnessReport& report);
// Header dataset,model,metric,kind,value; values in shortest round-trip form.
std::string format_report_csv(std::span<const ScoreRow> rows);
std::vector<ScoreRow> parse_report_csv(const std::string& text);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);
// Pearson correlation of fractional ranks.
double spearman(std::span<const double> a, std::span<const double> b);

enum class CorrelationAxis { cross_metric, cross_dataset };
CorrelationAxis correlation_axis_from_string(const std::string& name);

struct CorrelationMatrix {
  std::string group;  // dataset (cross_metric) or metric column (cross_dataset)
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
};

// cross_metric: one matrix per dataset, over metric columns ("iou-min", ...), ranking models.
// cross_dataset: one matrix per metric column, over datasets, ranking models.
std::vector<CorrelationMatrix> correlation_matrix(std::span<const ScoreRow> rows, CorrelationAxis axis);
std::string format_matrix_csv(const CorrelationMatrix& matrix);

std::string format_double(double value);

}  // namespace clickstorm
