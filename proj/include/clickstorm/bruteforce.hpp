#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clickstorm/clickgen.hpp"
#include "clickstorm/segmenter.hpp"

namespace clickstorm {

struct GridExtremum {
  double value = 0.0;
  int x = 0;  // pixel coordinates of the click
  int y = 0;
};

// Cell (i, j) holds the click at pixel (j * stride, i * stride).
struct GridResult {
  int stride = 1;
  int rows = 0;
  int cols = 0;
  std::vector<double> iou;   // row-major, NaN where the segmenter failed
  std::vector<double> biou;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> failed;
  std::vector<std::string> failures;  // "row,col: message"
  std::optional<GridExtremum> iou_min, iou_max, biou_min, biou_max;  // over valid cells only
};

enum class GridChannel { iou, biou };
const char* to_string(GridChannel channel);

// 1 for images up to 128 px per side, otherwise the smallest stride whose grid has at most 16384 cells.
int auto_stride(int height, int width);

using SegmenterFactory = std::function<std::unique_ptr<Segmenter>()>;

// Evaluates one click of `polarity` appended to `prefix` at every grid position. Each worker
// gets its own segmenter from `factory`; results do not depend on the worker count.
GridResult grid_search(const SegmenterFactory& factory, const Image& image, const BinaryMask& gt,
                       std::span<const Click> prefix, const ProbMap& prev_pred, Polarity polarity, int stride,
                       int workers = 1, const ClickPolicy& policy = {});
GridResult grid_search(Segmenter& segmenter, const Image& image, const BinaryMask& gt, std::span<const Click> prefix,
                       const ProbMap& prev_pred, Polarity polarity, int stride, const ClickPolicy& policy = {});

// Color ramp from cold (0) to warm (1); failed cells are neutral gray.
std::array<std::uint8_t, 3> heatmap_color(double value);

// Writes an RGB PNG with one pixel per grid cell and a sidecar JSON (same path, .json extension)
// holding the raw values.
void write_heatmap(const GridResult& grid, GridChannel channel, const std::filesystem::path& png_path);

struct HeatmapSidecar {
  int stride = 1;
  std::string channel;
  std::vector<std::vector<std::optional<double>>> values;
  std::vector<std::vector<bool>> valid;
};
HeatmapSidecar read_heatmap_sidecar(const std::filesystem::path& json_path);

// max - min of a nonempty list.
double spread(std::span<const double> values);

}  // namespace clickstorm
