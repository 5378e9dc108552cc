#include "clickstorm/bruteforce.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "clickstorm/png_io.hpp"
#include "json.hpp"

namespace clickstorm {

using nlohmann::json;

const char* to_string(GridChannel channel) {
  return channel == GridChannel::iou ? "iou" : "biou";
}

int auto_stride(int height, int width) {
  if (std::max(height, width) <= 128) {
    return 1;
  }
  int stride = 1;
  auto cells = [&](int s) {
    return static_cast<long long>((height + s - 1) / s) * static_cast<long long>((width + s - 1) / s);
  };
  while (cells(stride) > 16384) {
    ++stride;
  }
  return stride;
}

namespace {

void evaluate_cells(Segmenter& segmenter, const Image& image, const BinaryMask& gt, std::span<const Click> prefix,
                    const ProbMap& prev_pred, Polarity polarity, const ClickPolicy& policy, GridResult& out,
                    std::atomic<std::size_t>& next, std::mutex& failure_mutex,
                    std::vector<std::pair<std::size_t, std::string>>& failures) {
  std::vector<Click> clicks(prefix.begin(), prefix.end());
  clicks.push_back(Click{0.0, 0.0, polarity, policy.radius});
  const std::size_t total = static_cast<std::size_t>(out.rows) * out.cols;
  for (std::size_t cell = next++; cell < total; cell = next++) {
    const int row = static_cast<int>(cell / out.cols);
    const int col = static_cast<int>(cell % out.cols);
    clicks.back().x = col * out.stride;
    clicks.back().y = row * out.stride;
    try {
      const ProbMap pred = segmenter.predict({image, clicks, &prev_pred});
      const auto scores = score_prediction(pred, gt, policy);
      out.iou[cell] = scores.iou;
      out.biou[cell] = scores.biou;
    } catch (const std::exception& e) {
      out.failed[cell] = 1;
      std::lock_guard lock(failure_mutex);
      failures.emplace_back(cell, std::to_string(row) + "," + std::to_string(col) + ": " + e.what());
    }
  }
}

void find_extrema(const std::vector<double>& values, const GridResult& grid, std::optional<GridExtremum>& lo,
                  std::optional<GridExtremum>& hi) {
  for (std::size_t cell = 0; cell < values.size(); ++cell) {
    if (!grid.valid[cell] || grid.failed[cell]) {
      continue;
    }
    const int x = static_cast<int>(cell % grid.cols) * grid.stride;
    const int y = static_cast<int>(cell / grid.cols) * grid.stride;
    const double v = values[cell];
    if (!lo || v < lo->value) lo = GridExtremum{v, x, y};
    if (!hi || v > hi->value) hi = GridExtremum{v, x, y};
  }
}

}  // namespace

GridResult grid_search(const SegmenterFactory& factory, const Image& image, const BinaryMask& gt,
                       std::span<const Click> prefix, const ProbMap& prev_pred, Polarity polarity, int stride,
                       int workers, const ClickPolicy& policy) {
  if (stride < 1) {
    throw Error("grid stride must be >= 1");
  }
  require_same_shape(prev_pred, gt, "grid_search");
  GridResult out;
  out.stride = stride;
  out.rows = (gt.height() + stride - 1) / stride;
  out.cols = (gt.width() + stride - 1) / stride;
  const std::size_t total = static_cast<std::size_t>(out.rows) * out.cols;
  out.iou.assign(total, std::numeric_limits<double>::quiet_NaN());
  out.biou.assign(total, std::numeric_limits<double>::quiet_NaN());
  out.valid.assign(total, 0);
  out.failed.assign(total, 0);

  const ErrorRegions regions = error_regions(prev_pred, gt, policy.threshold, policy.connectivity);
  for (std::size_t cell = 0; cell < total; ++cell) {
    const Click c{static_cast<double>(static_cast<int>(cell % out.cols) * stride),
                  static_cast<double>(static_cast<int>(cell / out.cols) * stride), polarity, policy.radius};
    out.valid[cell] = is_valid_click(c, regions) ? 1 : 0;
  }

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::vector<std::pair<std::size_t, std::string>> failures;
  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(total)));
  if (n_workers == 1) {
    auto segmenter = factory();
    evaluate_cells(*segmenter, image, gt, prefix, prev_pred, polarity, policy, out, next, failure_mutex, failures);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          auto segmenter = factory();
          evaluate_cells(*segmenter, image, gt, prefix, prev_pred, polarity, policy, out, next, failure_mutex,
                         failures);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::sort(failures.begin(), failures.end());
  for (auto& [cell, msg] : failures) {
    out.failures.push_back(std::move(msg));
  }
  find_extrema(out.iou, out, out.iou_min, out.iou_max);
  find_extrema(out.biou, out, out.biou_min, out.biou_max);
  return out;
}

namespace {

// Forwards to a caller-owned segmenter.
class BorrowedSegmenter final : public Segmenter {
 public:
  explicit BorrowedSegmenter(Segmenter& inner) : inner_(inner) {}
  SegmenterCapabilities capabilities() const override { return inner_.capabilities(); }
  ProbMap predict(const SegmenterRequest& r) override { return inner_.predict(r); }
  Vec2 dice_gradient(const SegmenterRequest& r, const BinaryMask& gt, Direction d, std::size_t a) override {
    return inner_.dice_gradient(r, gt, d, a);
  }

 private:
  Segmenter& inner_;
};

}  // namespace

GridResult grid_search(Segmenter& segmenter, const Image& image, const BinaryMask& gt, std::span<const Click> prefix,
                       const ProbMap& prev_pred, Polarity polarity, int stride, const ClickPolicy& policy) {
  return grid_search([&] { return std::make_unique<BorrowedSegmenter>(segmenter); }, image, gt, prefix, prev_pred,
                     polarity, stride, 1, policy);
}

std::array<std::uint8_t, 3> heatmap_color(double value) {
  if (!std::isfinite(value)) {
    return {128, 128, 128};
  }
  // Diverging blue -> pale yellow -> red.
  static constexpr std::array<std::array<double, 3>, 3> stops{{{49, 54, 149}, {255, 255, 191}, {165, 0, 38}}};
  const double v = std::clamp(value, 0.0, 1.0);
  const int seg = v < 0.5 ? 0 : 1;
  const double t = v < 0.5 ? v / 0.5 : (v - 0.5) / 0.5;
  std::array<std::uint8_t, 3> out{};
  for (int c = 0; c < 3; ++c) {
    out[c] = static_cast<std::uint8_t>(std::lround(stops[seg][c] + t * (stops[seg + 1][c] - stops[seg][c])));
  }
  return out;
}

void write_heatmap(const GridResult& grid, GridChannel channel, const std::filesystem::path& png_path) {
  const auto& values = channel == GridChannel::iou ? grid.iou : grid.biou;
  if (grid.rows < 1 || grid.cols < 1 || values.size() != static_cast<std::size_t>(grid.rows) * grid.cols) {
    throw Error("write_heatmap: grid is not populated");
  }
  Rgb8Image img{grid.cols, grid.rows, std::vector<std::uint8_t>(values.size() * 3)};
  json rows_json = json::array();
  json valid_json = json::array();
  for (int r = 0; r < grid.rows; ++r) {
    json row = json::array();
    json vrow = json::array();
    for (int c = 0; c < grid.cols; ++c) {
      const std::size_t cell = static_cast<std::size_t>(r) * grid.cols + c;
      const double v = grid.failed[cell] ? std::numeric_limits<double>::quiet_NaN() : values[cell];
      const auto color = heatmap_color(v);
      std::copy(color.begin(), color.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(cell * 3));
      row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
      vrow.push_back(grid.valid[cell] != 0);
    }
    rows_json.push_back(std::move(row));
    valid_json.push_back(std::move(vrow));
  }
  write_png_rgb(png_path, img);
  const json sidecar = {
      {"stride", grid.stride},
      {"channel", to_string(channel)},
      {"ramp",
       "linear RGB ramp: 0.0 -> (49,54,149) cold, 0.5 -> (255,255,191), 1.0 -> (165,0,38) warm; "
       "null (failed cell) -> (128,128,128)"},
      {"values", rows_json},
      {"valid", valid_json}};
  auto json_path = png_path;
  json_path.replace_extension(".json");
  std::ofstream out(json_path);
  if (!out) {
    throw Error("cannot write " + json_path.string());
  }
  out << sidecar.dump(1) << '\n';
}

HeatmapSidecar read_heatmap_sidecar(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) {
    throw Error("cannot read " + json_path.string());
  }
  const json j = json::parse(in);
  HeatmapSidecar out;
  out.stride = j.at("stride").get<int>();
  out.channel = j.at("channel").get<std::string>();
  for (const auto& row : j.at("values")) {
    auto& dst = out.values.emplace_back();
    for (const auto& v : row) {
      dst.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    }
  }
  for (const auto& row : j.at("valid")) {
    auto& dst = out.valid.emplace_back();
    for (const auto& v : row) dst.push_back(v.get<bool>());
  }
  return out;
}

double spread(std::span<const double> values) {
  if (values.empty()) {
    throw Error("spread of an empty list");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

}  // namespace clickstorm
