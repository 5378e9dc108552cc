#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clickstorm/grid.hpp"
#include "clickstorm/maskops.hpp"

namespace clickstorm {

class Segmenter;

struct Click {
  double x = 0.0;  // column
  double y = 0.0;  // row
  Polarity polarity = Polarity::positive;
  double radius = 5.0;

  friend bool operator==(const Click&, const Click&) = default;
};

enum class TrajectoryKind { baseline, minimizing, maximizing, external };

const char* to_string(TrajectoryKind kind);
TrajectoryKind trajectory_kind_from_string(const std::string& name);
const char* to_string(Polarity polarity);

// One optimizer step for one click.
struct IterationRecord {
  int iteration = 0;
  double x = 0.0;
  double y = 0.0;
  double loss = 0.0;
  double iou = 0.0;
  double ill = 0.0;
  bool accepted = false;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

// Curves always hold K entries; a run that converges early stores fewer clicks and repeats
// its last value in the curves.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::baseline;
  std::vector<Click> clicks;
  std::vector<double> iou_curve;
  std::vector<double> biou_curve;
  std::vector<std::vector<IterationRecord>> diagnostics;  // one entry per placed click
};

// Knobs shared by every click-placing strategy.
struct ClickPolicy {
  double radius = 5.0;
  double threshold = 0.5;
  Connectivity connectivity = Connectivity::eight;
  std::optional<double> boundary_width;  // default_boundary_width() when unset
};

// Largest error component (ties: lower label), clicked at its inner-distance maximum
// (ties: smallest row, then smallest column). nullopt when there is no error left.
std::optional<Click> baseline_click(const ErrorRegions& regions, double radius);
std::optional<Click> baseline_click(const ProbMap& pred, const BinaryMask& gt, const ClickPolicy& policy = {});

// Nearest integer pixel to (x, y), or nullopt off the image.
std::optional<std::pair<int, int>> snap_to_pixel(const Click& click, int width, int height);

bool is_valid_click(const Click& click, const ErrorRegions& regions);
bool is_valid_click(const Click& click, const ProbMap& pred, const BinaryMask& gt, double threshold = 0.5);

struct SegmentationScores {
  double iou = 0.0;
  double biou = 0.0;
};
SegmentationScores score_prediction(const ProbMap& pred, const BinaryMask& gt, const ClickPolicy& policy);

Trajectory run_baseline_trajectory(Segmenter& segmenter, const Image& image, const BinaryMask& gt, int clicks,
                                   const ClickPolicy& policy = {});

struct ClickGroup {
  std::string image_id;
  std::vector<Click> clicks;
};

// CSV with header image_id,x,y,polarity. Groups keep first-appearance order.
std::vector<ClickGroup> load_external_clicks(const std::filesystem::path& path, double radius = 5.0);
std::vector<ClickGroup> parse_external_clicks(const std::string& text, double radius = 5.0);

}  // namespace clickstorm
