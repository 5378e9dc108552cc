#include "clickstorm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>
#include <sstream>

namespace clickstorm {

double normalized_auc(std::span<const double> curve) {
  if (curve.empty()) {
    throw Error("area under an empty curve");
  }
  return std::accumulate(curve.begin(), curve.end(), 0.0) / static_cast<double>(curve.size());
}

double auc_at_10(std::span<const double> curve) {
  if (curve.size() != 10) {
    throw Error("AuC@10 needs exactly 10 values, got " + std::to_string(curve.size()));
  }
  return normalized_auc(curve);
}

double robustness_d(double auc_min, double auc_max) {
  return auc_max - auc_min;
}

ImageReport image_report(const std::string& image_id, std::span<const Trajectory> trajectories) {
  ImageReport out{image_id, {}};
  for (const auto& t : trajectories) {
    out.auc[t.kind] = {normalized_auc(t.iou_curve), normalized_auc(t.biou_curve)};
  }
  return out;
}

namespace {

std::optional<double> mean_percent(const std::vector<ImageReport>& images, TrajectoryKind kind, bool biou) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& img : images) {
    const auto it = img.auc.find(kind);
    if (it == img.auc.end()) {
      continue;
    }
    total += biou ? it->second.biou : it->second.iou;
    ++n;
  }
  if (n != images.size() || n == 0) {
    return std::nullopt;
  }
  return 100.0 * total / static_cast<double>(n);
}

MetricSummary summarize(const std::vector<ImageReport>& images, bool biou) {
  MetricSummary s;
  s.base = mean_percent(images, TrajectoryKind::baseline, biou);
  s.min = mean_percent(images, TrajectoryKind::minimizing, biou);
  s.max = mean_percent(images, TrajectoryKind::maximizing, biou);
  if (s.min && s.max) {
    s.d = robustness_d(*s.min, *s.max);
  }
  return s;
}

}  // namespace

RobustnessReport aggregate(std::vector<ImageReport> per_image, const std::string& dataset, const std::string& model) {
  if (per_image.empty()) {
    throw Error("cannot aggregate an empty set of image reports");
  }
  std::sort(per_image.begin(), per_image.end(),
            [](const ImageReport& a, const ImageReport& b) { return a.image_id < b.image_id; });
  RobustnessReport out;
  out.dataset = dataset;
  out.model = model;
  out.iou = summarize(per_image, false);
  out.biou = summarize(per_image, true);
  out.per_image = std::move(per_image);
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) {
    throw Error("cannot format number");
  }
  return std::string(buf, ptr);
}

std::vector<ScoreRow> score_rows(const RobustnessReport& report) {
  std::vector<ScoreRow> rows;
  auto add = [&](const char* metric, const MetricSummary& s) {
    const std::pair<const char*, const std::optional<double>*> kinds[] = {
        {"base", &s.base}, {"min", &s.min}, {"max", &s.max}, {"d", &s.d}};
    for (const auto& [kind, value] : kinds) {
      if (*value) {
        rows.push_back({report.dataset, report.model, metric, kind, **value});
      }
    }
  };
  add("iou", report.iou);
  add("biou", report.biou);
  return rows;
}

std::string format_report_csv(std::span<const ScoreRow> rows) {
  std::string out = "dataset,model,metric,kind,value\n";
  for (const auto& r : rows) {
    out += r.dataset + "," + r.model + "," + r.metric + "," + r.kind + "," + format_double(r.value) + "\n";
  }
  return out;
}

std::vector<ScoreRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ScoreRow> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "dataset,model,metric,kind,value") {
        throw Error("report csv: unexpected header '" + line + "'");
      }
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 5) {
      throw Error("report csv line " + std::to_string(line_no) + ": expected 5 fields");
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), v);
    if (ec != std::errc() || ptr != f[4].data() + f[4].size()) {
      throw Error("report csv line " + std::to_string(line_no) + ": invalid value '" + f[4] + "'");
    }
    rows.push_back({f[0], f[1], f[2], f[3], v});
  }
  return rows;
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[order[k]] = rank;
    }
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("spearman: inputs differ in length");
  }
  if (a.size() < 2) {
    throw Error("spearman: need at least two observations");
  }
  const auto ra = fractional_ranks(a);
  const auto rb = fractional_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0;
  double va = 0.0;
  double vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) {
    throw Error("spearman: zero rank variance, correlation undefined");
  }
  return std::clamp(num / std::sqrt(va * vb), -1.0, 1.0);
}

CorrelationAxis correlation_axis_from_string(const std::string& name) {
  if (name == "cross_metric" || name == "cross-metric") return CorrelationAxis::cross_metric;
  if (name == "cross_dataset" || name == "cross-dataset") return CorrelationAxis::cross_dataset;
  throw Error("unknown correlation axis '" + name + "'");
}

namespace {

int column_order(const std::string& column) {
  static const char* const order[] = {"iou-base",  "iou-min",  "iou-max",  "iou-d",
                                      "biou-base", "biou-min", "biou-max", "biou-d"};
  for (int i = 0; i < 8; ++i) {
    if (column == order[i]) return i;
  }
  return 8;
}

std::vector<std::string> sorted_columns(const std::set<std::string>& columns) {
  std::vector<std::string> out(columns.begin(), columns.end());
  std::stable_sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
    const int oa = column_order(a);
    const int ob = column_order(b);
    return oa != ob ? oa < ob : a < b;
  });
  return out;
}

CorrelationMatrix correlate(const std::string& group, const std::vector<std::string>& labels,
                            const std::vector<std::vector<double>>& series) {
  CorrelationMatrix m{group, labels, std::vector<std::vector<double>>(labels.size(), std::vector<double>(labels.size()))};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i; j < labels.size(); ++j) {
      const double r = spearman(series[i], series[j]);
      m.values[i][j] = r;
      m.values[j][i] = r;
    }
  }
  return m;
}

}  // namespace

std::vector<CorrelationMatrix> correlation_matrix(std::span<const ScoreRow> rows, CorrelationAxis axis) {
  // dataset -> column -> model -> value
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> table;
  std::set<std::string> columns;
  for (const auto& r : rows) {
    const std::string column = r.metric + "-" + r.kind;
    table[r.dataset][column][r.model] = r.value;
    columns.insert(column);
  }
  if (table.empty()) {
    throw Error("correlation: no report rows");
  }
  std::vector<CorrelationMatrix> out;
  if (axis == CorrelationAxis::cross_metric) {
    for (const auto& [dataset, by_column] : table) {
      std::set<std::string> dataset_columns;
      std::set<std::string> models;
      for (const auto& [column, by_model] : by_column) {
        dataset_columns.insert(column);
        for (const auto& [model, v] : by_model) models.insert(model);
      }
      if (models.size() < 2) {
        throw Error("correlation: dataset '" + dataset + "' has fewer than two models");
      }
      const auto labels = sorted_columns(dataset_columns);
      std::vector<std::vector<double>> series;
      for (const auto& column : labels) {
        const auto& by_model = by_column.at(column);
        auto& s = series.emplace_back();
        for (const auto& model : models) {
          const auto it = by_model.find(model);
          if (it == by_model.end()) {
            throw Error("correlation: model '" + model + "' lacks column '" + column + "' in dataset '" + dataset + "'");
          }
          s.push_back(it->second);
        }
      }
      out.push_back(correlate(dataset, labels, series));
    }
    return out;
  }
  for (const auto& column : sorted_columns(columns)) {
    std::vector<std::string> labels;
    std::vector<std::map<std::string, double>> per_dataset;
    for (const auto& [dataset, by_column] : table) {
      const auto it = by_column.find(column);
      if (it == by_column.end()) {
        throw Error("correlation: dataset '" + dataset + "' lacks column '" + column + "'");
      }
      labels.push_back(dataset);
      per_dataset.push_back(it->second);
    }
    std::vector<std::string> models;
    for (const auto& [model, v] : per_dataset.front()) models.push_back(model);
    if (models.size() < 2) {
      throw Error("correlation: fewer than two models");
    }
    std::vector<std::vector<double>> series;
    for (std::size_t d = 0; d < per_dataset.size(); ++d) {
      if (per_dataset[d].size() != models.size()) {
        throw Error("correlation: model sets differ between datasets '" + labels.front() + "' and '" + labels[d] + "'");
      }
      auto& s = series.emplace_back();
      for (const auto& model : models) {
        const auto it = per_dataset[d].find(model);
        if (it == per_dataset[d].end()) {
          throw Error("correlation: model '" + model + "' missing from dataset '" + labels[d] + "'");
        }
        s.push_back(it->second);
      }
    }
    out.push_back(correlate(column, labels, series));
  }
  return out;
}

std::string format_matrix_csv(const CorrelationMatrix& matrix) {
  std::string out = matrix.group;
  for (const auto& l : matrix.labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    out += matrix.labels[i];
    for (double v : matrix.values[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

}  // namespace clickstorm
