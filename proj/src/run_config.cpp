#include "clickstorm/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "clickstorm/bridge.hpp"

namespace clickstorm {

using nlohmann::json;

const char* to_string(SegmenterKind kind) {
  switch (kind) {
    case SegmenterKind::blob:
      return "blob";
    case SegmenterKind::rugged:
      return "rugged";
    case SegmenterKind::oracle:
      return "oracle";
    case SegmenterKind::bridge:
      return "bridge";
  }
  return "unknown";
}

SegmenterKind segmenter_kind_from_string(const std::string& name) {
  if (name == "blob") return SegmenterKind::blob;
  if (name == "rugged") return SegmenterKind::rugged;
  if (name == "oracle") return SegmenterKind::oracle;
  if (name == "bridge") return SegmenterKind::bridge;
  throw Error("unknown segmenter kind '" + name + "'");
}

ClickPolicy RunConfig::policy() const {
  ClickPolicy p;
  p.radius = segmenter.radius;
  p.boundary_width = boundary_width;
  return p;
}

void RunConfig::validate() const {
  attack.validate();
  if (workers < 1) throw Error("config: workers must be >= 1");
  if (kinds.empty()) throw Error("config: no trajectory kinds requested");
  for (auto k : kinds) {
    if (k == TrajectoryKind::external) throw Error("config: 'external' trajectories come from the spread command");
  }
  if (!(segmenter.radius > 0.0)) throw Error("config: segmenter radius must be > 0");
  if (segmenter.kind == SegmenterKind::bridge && segmenter.endpoint.empty()) {
    throw Error("config: bridge segmenter '" + segmenter.name + "' has no endpoint");
  }
  if (boundary_width && !(*boundary_width > 0.0)) throw Error("config: boundary_width must be > 0");
}

SegmenterProfile builtin_profile(const std::string& name) {
  SegmenterProfile p;
  p.name = name;
  p.kind = segmenter_kind_from_string(name);
  if (p.kind == SegmenterKind::bridge) {
    throw Error("the bridge segmenter needs a profile with an endpoint");
  }
  return p;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) {
    throw Error("config: " + where + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw Error("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

SegmenterProfile profile_from_json(const json& j, const std::string& fallback_name) {
  check_keys(j, {"name", "kind", "params", "amplitude", "noise_seed", "endpoint", "radius"}, "segmenter profile");
  SegmenterProfile p;
  p.kind = segmenter_kind_from_string(j.at("kind").get<std::string>());
  p.name = j.value("name", fallback_name.empty() ? std::string(to_string(p.kind)) : fallback_name);
  if (j.contains("params")) {
    const json& b = j.at("params");
    check_keys(b, {"sigma", "positive_weight", "negative_weight", "bias", "affinity_weight", "affinity_tau", "sharpness"},
               "segmenter params");
    read(b, "sigma", p.blob.sigma);
    read(b, "positive_weight", p.blob.positive_weight);
    read(b, "negative_weight", p.blob.negative_weight);
    read(b, "bias", p.blob.bias);
    read(b, "affinity_weight", p.blob.affinity_weight);
    read(b, "affinity_tau", p.blob.affinity_tau);
    read(b, "sharpness", p.blob.sharpness);
  }
  read(j, "amplitude", p.amplitude);
  if (j.contains("noise_seed")) p.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  read(j, "endpoint", p.endpoint);
  read(j, "radius", p.radius);
  return p;
}

json profile_to_json(const SegmenterProfile& p) {
  json j = {{"name", p.name},
            {"kind", to_string(p.kind)},
            {"radius", p.radius},
            {"params",
             {{"sigma", p.blob.sigma},
              {"positive_weight", p.blob.positive_weight},
              {"negative_weight", p.blob.negative_weight},
              {"bias", p.blob.bias},
              {"affinity_weight", p.blob.affinity_weight},
              {"affinity_tau", p.blob.affinity_tau},
              {"sharpness", p.blob.sharpness}}}};
  if (p.kind == SegmenterKind::rugged) {
    j["amplitude"] = p.amplitude;
    if (p.noise_seed) j["noise_seed"] = *p.noise_seed;
  }
  if (p.kind == SegmenterKind::bridge) j["endpoint"] = p.endpoint;
  return j;
}

AttackConfig attack_from_json(const json& j) {
  check_keys(j,
             {"clicks", "iterations", "ill_weight", "ill_margin", "adam_beta1", "adam_beta2", "adam_eps", "lr_override",
              "ill_sharpness", "iou_tolerance", "ill_tolerance"},
             "attack");
  AttackConfig a;
  read(j, "clicks", a.clicks);
  read(j, "iterations", a.iterations);
  read(j, "ill_weight", a.ill_weight);
  read(j, "ill_margin", a.ill_margin);
  read(j, "adam_beta1", a.adam_beta1);
  read(j, "adam_beta2", a.adam_beta2);
  read(j, "adam_eps", a.adam_eps);
  if (j.contains("lr_override") && !j.at("lr_override").is_null()) a.lr_override = j.at("lr_override").get<double>();
  read(j, "ill_sharpness", a.ill_sharpness);
  read(j, "iou_tolerance", a.iou_tolerance);
  read(j, "ill_tolerance", a.ill_tolerance);
  return a;
}

json attack_to_json(const AttackConfig& a) {
  return {{"clicks", a.clicks},
          {"iterations", a.iterations},
          {"ill_weight", a.ill_weight},
          {"ill_margin", a.ill_margin},
          {"adam_beta1", a.adam_beta1},
          {"adam_beta2", a.adam_beta2},
          {"adam_eps", a.adam_eps},
          {"lr_override", a.lr_override ? json(*a.lr_override) : json(nullptr)},
          {"ill_sharpness", a.ill_sharpness},
          {"iou_tolerance", a.iou_tolerance},
          {"ill_tolerance", a.ill_tolerance}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    check_keys(j, {"dataset", "segmenter", "profiles", "attack", "kinds", "workers", "out", "seed", "boundary_width"},
               "run config");
    RunConfig c;
    if (j.contains("dataset")) c.dataset = resolve(base_dir, j.at("dataset").get<std::string>());
    std::map<std::string, json> profiles;
    if (j.contains("profiles")) {
      for (const auto& [name, value] : j.at("profiles").items()) profiles[name] = value;
    }
    if (j.contains("segmenter")) {
      const json& s = j.at("segmenter");
      if (s.is_string()) {
        const std::string name = s.get<std::string>();
        const auto it = profiles.find(name);
        c.segmenter = it != profiles.end() ? profile_from_json(it->second, name) : builtin_profile(name);
      } else {
        c.segmenter = profile_from_json(s, "");
      }
    }
    if (j.contains("attack")) c.attack = attack_from_json(j.at("attack"));
    if (j.contains("kinds")) {
      c.kinds.clear();
      for (const auto& k : j.at("kinds")) c.kinds.push_back(trajectory_kind_from_string(k.get<std::string>()));
    }
    if (j.contains("workers")) {
      c.workers = j.at("workers").get<int>();
    } else if (auto env = workers_from_env()) {
      c.workers = *env;
    }
    if (j.contains("out")) c.out = resolve(base_dir, j.at("out").get<std::string>());
    read(j, "seed", c.seed);
    if (j.contains("boundary_width") && !j.at("boundary_width").is_null()) {
      c.boundary_width = j.at("boundary_width").get<double>();
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json kinds = json::array();
  for (auto k : c.kinds) kinds.push_back(to_string(k));
  return {{"dataset", c.dataset.string()},
          {"segmenter", profile_to_json(c.segmenter)},
          {"attack", attack_to_json(c.attack)},
          {"kinds", kinds},
          {"workers", c.workers},
          {"out", c.out.string()},
          {"seed", c.seed},
          {"boundary_width", c.boundary_width ? json(*c.boundary_width) : json(nullptr)}};
}

std::optional<int> workers_from_env() {
  const char* v = std::getenv("CLICKSTORM_WORKERS");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) {
    throw Error(std::string("CLICKSTORM_WORKERS must be a positive integer, got '") + v + "'");
  }
  return static_cast<int>(n);
}

std::unique_ptr<Segmenter> make_segmenter(const SegmenterProfile& profile, const Sample& sample, std::uint64_t seed) {
  switch (profile.kind) {
    case SegmenterKind::blob:
      return blob_segmenter(profile.blob);
    case SegmenterKind::rugged:
      return rugged_segmenter(blob_segmenter(profile.blob), profile.noise_seed.value_or(seed), profile.amplitude);
    case SegmenterKind::oracle:
      return std::make_unique<OracleSegmenter>(sample.mask);
    case SegmenterKind::bridge:
      return std::make_unique<BridgeSegmenter>(open_endpoint(profile.endpoint), sample.image);
  }
  throw Error("unknown segmenter kind");
}

}  // namespace clickstorm
