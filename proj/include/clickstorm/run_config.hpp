#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clickstorm/attack.hpp"
#include "clickstorm/dataset.hpp"
#include "clickstorm/reference_segmenters.hpp"
#include "json.hpp"

namespace clickstorm {

enum class SegmenterKind { blob, rugged, oracle, bridge };
const char* to_string(SegmenterKind kind);
SegmenterKind segmenter_kind_from_string(const std::string& name);

struct SegmenterProfile {
  std::string name;  // model label in reports
  SegmenterKind kind = SegmenterKind::blob;
  BlobParams blob;                      // blob and rugged
  double amplitude = 2.0;               // rugged
  std::optional<std::uint64_t> noise_seed;  // rugged; the run seed when unset
  std::string endpoint;                 // bridge
  double radius = 5.0;
};

struct RunConfig {
  std::filesystem::path dataset;
  SegmenterProfile segmenter;
  AttackConfig attack;
  std::vector<TrajectoryKind> kinds{TrajectoryKind::baseline, TrajectoryKind::minimizing,
                                    TrajectoryKind::maximizing};
  int workers = 1;
  std::filesystem::path out = "clickstorm-out";
  std::uint64_t seed = 0;
  std::optional<double> boundary_width;

  ClickPolicy policy() const;
  void validate() const;
};

// Profiles available without a "profiles" section: "blob", "rugged", "oracle".
SegmenterProfile builtin_profile(const std::string& name);

// Relative paths resolve against `base_dir`. Unknown keys are rejected. "segmenter" is either an
// inline profile object or a name looked up in "profiles" and then among the built-ins.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

// Worker count from CLICKSTORM_WORKERS, if set and valid.
std::optional<int> workers_from_env();

// Builds the segmenter for one sample. The oracle needs the sample's mask; the bridge opens a
// fresh connection.
std::unique_ptr<Segmenter> make_segmenter(const SegmenterProfile& profile, const Sample& sample, std::uint64_t seed);

}  // namespace clickstorm
