#include "clickstorm/clickgen.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "clickstorm/segmenter.hpp"

namespace clickstorm {

const char* to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::baseline:
      return "baseline";
    case TrajectoryKind::minimizing:
      return "min";
    case TrajectoryKind::maximizing:
      return "max";
    case TrajectoryKind::external:
      return "external";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  if (name == "baseline" || name == "base") return TrajectoryKind::baseline;
  if (name == "min" || name == "minimizing") return TrajectoryKind::minimizing;
  if (name == "max" || name == "maximizing") return TrajectoryKind::maximizing;
  if (name == "external") return TrajectoryKind::external;
  throw Error("unknown trajectory kind '" + name + "'");
}

const char* to_string(Polarity polarity) {
  return polarity == Polarity::positive ? "positive" : "negative";
}

std::optional<Click> baseline_click(const ErrorRegions& regions, double radius) {
  const auto& comps = regions.components.components;
  if (comps.empty()) {
    return std::nullopt;
  }
  const Component* target = &comps.front();
  for (const auto& c : comps) {
    if (c.area > target->area) {
      target = &c;
    }
  }
  const auto& labels = regions.components.labels;
  BinaryMask region(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    region[i] = labels[i] == target->label ? 1 : 0;
  }
  const DistanceMap dt = inner_distance_transform(region);
  int best_x = -1;
  int best_y = -1;
  double best = -1.0;
  // Row-major scan with strict improvement keeps the smallest row, then column.
  for (int y = 0; y < region.height(); ++y) {
    for (int x = 0; x < region.width(); ++x) {
      if (region(x, y) && dt(x, y) > best) {
        best = dt(x, y);
        best_x = x;
        best_y = y;
      }
    }
  }
  return Click{static_cast<double>(best_x), static_cast<double>(best_y), target->polarity, radius};
}

std::optional<Click> baseline_click(const ProbMap& pred, const BinaryMask& gt, const ClickPolicy& policy) {
  return baseline_click(error_regions(pred, gt, policy.threshold, policy.connectivity), policy.radius);
}

std::optional<std::pair<int, int>> snap_to_pixel(const Click& click, int width, int height) {
  if (!std::isfinite(click.x) || !std::isfinite(click.y)) {
    return std::nullopt;
  }
  const double rx = std::round(click.x);
  const double ry = std::round(click.y);
  if (rx < 0 || ry < 0 || rx >= width || ry >= height) {
    return std::nullopt;
  }
  return std::pair{static_cast<int>(rx), static_cast<int>(ry)};
}

bool is_valid_click(const Click& click, const ErrorRegions& regions) {
  const auto& fn = regions.false_negative;
  const auto pixel = snap_to_pixel(click, fn.width(), fn.height());
  if (!pixel) {
    return false;
  }
  const auto [x, y] = *pixel;
  if (click.polarity == Polarity::positive) {
    return fn(x, y) != 0;
  }
  return regions.false_positive(x, y) != 0;
}

bool is_valid_click(const Click& click, const ProbMap& pred, const BinaryMask& gt, double threshold) {
  const auto pixel = snap_to_pixel(click, gt.width(), gt.height());
  if (!pixel) {
    return false;
  }
  require_same_shape(pred, gt, "is_valid_click");
  const auto [x, y] = *pixel;
  const bool selected = pred(x, y) >= threshold;
  const bool object = gt(x, y) != 0;
  return click.polarity == Polarity::positive ? (object && !selected) : (selected && !object);
}

SegmentationScores score_prediction(const ProbMap& pred, const BinaryMask& gt, const ClickPolicy& policy) {
  const BinaryMask mask = binarize(pred, policy.threshold);
  const double width = policy.boundary_width.value_or(default_boundary_width(gt.width(), gt.height()));
  return {iou(mask, gt), boundary_iou(mask, gt, width)};
}

Trajectory run_baseline_trajectory(Segmenter& segmenter, const Image& image, const BinaryMask& gt, int clicks,
                                   const ClickPolicy& policy) {
  if (clicks < 1) {
    throw Error("trajectory length must be at least 1");
  }
  Trajectory out;
  out.kind = TrajectoryKind::baseline;
  ProbMap pred(gt.width(), gt.height(), 0.0);
  for (int k = 0; k < clicks; ++k) {
    const auto click = baseline_click(pred, gt, policy);
    if (!click) {
      if (out.iou_curve.empty()) {
        throw Error("ground truth mask is empty; nothing to click");
      }
      out.iou_curve.push_back(out.iou_curve.back());
      out.biou_curve.push_back(out.biou_curve.back());
      continue;
    }
    out.clicks.push_back(*click);
    out.diagnostics.emplace_back();
    try {
      pred = segmenter.predict({image, out.clicks, &pred});
    } catch (const SegmenterError& e) {
      throw SegmenterError(e.what(), static_cast<std::size_t>(k));
    } catch (const std::exception& e) {
      throw SegmenterError(std::string("click ") + std::to_string(k) + ": " + e.what(), static_cast<std::size_t>(k));
    }
    const auto scores = score_prediction(pred, gt, policy);
    out.iou_curve.push_back(scores.iou);
    out.biou_curve.push_back(scores.biou);
  }
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& token, std::size_t line, const char* field) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw Error("clicks csv line " + std::to_string(line) + ": invalid " + field + " '" + token + "'");
  }
  return value;
}

}  // namespace

std::vector<ClickGroup> parse_external_clicks(const std::string& text, double radius) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<ClickGroup> groups;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
      fields.emplace_back();
    }
    if (!header_seen) {
      if (fields != std::vector<std::string>{"image_id", "x", "y", "polarity"}) {
        throw Error("clicks csv line " + std::to_string(line_no) + ": expected header image_id,x,y,polarity");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw Error("clicks csv line " + std::to_string(line_no) + ": expected 4 fields, got " +
                  std::to_string(fields.size()));
    }
    if (fields[0].empty()) {
      throw Error("clicks csv line " + std::to_string(line_no) + ": empty image_id");
    }
    Click click;
    click.x = parse_number(fields[1], line_no, "x");
    click.y = parse_number(fields[2], line_no, "y");
    click.radius = radius;
    if (fields[3] == "positive") {
      click.polarity = Polarity::positive;
    } else if (fields[3] == "negative") {
      click.polarity = Polarity::negative;
    } else {
      throw Error("clicks csv line " + std::to_string(line_no) + ": invalid polarity '" + fields[3] + "'");
    }
    auto [it, inserted] = index.emplace(fields[0], groups.size());
    if (inserted) {
      groups.push_back(ClickGroup{fields[0], {}});
    }
    groups[it->second].clicks.push_back(click);
  }
  if (!header_seen) {
    throw Error("clicks csv is empty; expected header image_id,x,y,polarity");
  }
  return groups;
}

std::vector<ClickGroup> load_external_clicks(const std::filesystem::path& path, double radius) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open clicks file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_external_clicks(buffer.str(), radius);
}

}  // namespace clickstorm
