#include "clickstorm/serialize.hpp"

namespace clickstorm {

using nlohmann::json;

json to_json(const Trajectory& t) {
  json clicks = json::array();
  for (const auto& c : t.clicks) {
    clicks.push_back({{"x", c.x}, {"y", c.y}, {"polarity", to_string(c.polarity)}, {"radius", c.radius}});
  }
  json diagnostics = json::array();
  for (const auto& records : t.diagnostics) {
    json arr = json::array();
    for (const auto& r : records) {
      arr.push_back({{"iteration", r.iteration},
                     {"x", r.x},
                     {"y", r.y},
                     {"loss", r.loss},
                     {"iou", r.iou},
                     {"ill", r.ill},
                     {"accepted", r.accepted}});
    }
    diagnostics.push_back(std::move(arr));
  }
  return {{"kind", to_string(t.kind)},
          {"clicks", clicks},
          {"iou_curve", t.iou_curve},
          {"biou_curve", t.biou_curve},
          {"diagnostics", diagnostics}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.kind = trajectory_kind_from_string(j.at("kind").get<std::string>());
  for (const auto& c : j.at("clicks")) {
    const std::string pol = c.at("polarity").get<std::string>();
    if (pol != "positive" && pol != "negative") {
      throw Error("trajectory json: invalid polarity '" + pol + "'");
    }
    t.clicks.push_back({c.at("x").get<double>(), c.at("y").get<double>(),
                        pol == "positive" ? Polarity::positive : Polarity::negative, c.at("radius").get<double>()});
  }
  t.iou_curve = j.at("iou_curve").get<std::vector<double>>();
  t.biou_curve = j.at("biou_curve").get<std::vector<double>>();
  for (const auto& records : j.at("diagnostics")) {
    auto& dst = t.diagnostics.emplace_back();
    for (const auto& r : records) {
      dst.push_back({r.at("iteration").get<int>(), r.at("x").get<double>(), r.at("y").get<double>(),
                     r.at("loss").get<double>(), r.at("iou").get<double>(), r.at("ill").get<double>(),
                     r.at("accepted").get<bool>()});
    }
  }
  return t;
}

namespace {

json summary_json(const MetricSummary& s) {
  json out = json::object();
  if (s.base) out["base"] = *s.base;
  if (s.min) out["min"] = *s.min;
  if (s.max) out["max"] = *s.max;
  if (s.d) out["d"] = *s.d;
  return out;
}

}  // namespace

json to_json(const RobustnessReport& report) {
  json images = json::array();
  for (const auto& img : report.per_image) {
    json iou = json::object();
    json biou = json::object();
    for (const auto& [kind, auc] : img.auc) {
      const std::string key = kind == TrajectoryKind::baseline ? "base" : to_string(kind);
      iou[key] = auc.iou;
      biou[key] = auc.biou;
    }
    const auto lo = img.auc.find(TrajectoryKind::minimizing);
    const auto hi = img.auc.find(TrajectoryKind::maximizing);
    if (lo != img.auc.end() && hi != img.auc.end()) {
      iou["d"] = robustness_d(lo->second.iou, hi->second.iou);
      biou["d"] = robustness_d(lo->second.biou, hi->second.biou);
    }
    images.push_back({{"id", img.image_id}, {"iou", iou}, {"biou", biou}});
  }
  return {{"dataset", report.dataset},
          {"model", report.model},
          {"images", report.per_image.size()},
          {"summary", {{"iou", summary_json(report.iou)}, {"biou", summary_json(report.biou)}}},
          {"per_image", images}};
}

}  // namespace clickstorm
