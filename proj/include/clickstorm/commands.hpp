#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clickstorm/metrics.hpp"
#include "clickstorm/run_config.hpp"

namespace clickstorm {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some images or cells failed
inline constexpr int kExitConfig = 2;   // configuration or IO error

// Builds a directory next to its final location and swaps it in on commit(); an uncommitted
// staging directory is removed on destruction, leaving any previous output untouched.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path target);
  ~StagedDirectory();
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  const std::filesystem::path& path() const { return staging_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Writes report.csv, report.json, trajectories/<id>.json and run_meta.json under cfg.out.
// Failed images are logged and excluded. Throws Error on configuration or IO problems.
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);

// First-click IoU/BIoU heatmaps (<id>_iou.png, <id>_biou.png, each with a .json sidecar).
int cmd_bruteforce(const RunConfig& cfg, const std::string& image_id, std::optional<int> stride,
                   const std::filesystem::path& out_dir, std::ostream& log);

// Scores every listed click as a first click. Writes spread_clicks.csv (one row per click plus
// the baseline click) and spread_summary.csv (one row per image).
int cmd_spread(const RunConfig& cfg, const std::filesystem::path& clicks_csv, const std::filesystem::path& out_dir,
               std::ostream& log);

// One matrix CSV per group (dataset for cross_metric, metric column for cross_dataset).
int cmd_correlate(const std::vector<std::filesystem::path>& reports, CorrelationAxis axis,
                  const std::filesystem::path& out_dir, std::ostream& log);

int cmd_gen_synthetic(const std::filesystem::path& out_dir, const std::string& name, int count, int size,
                      std::uint64_t seed, std::ostream& log);

}  // namespace clickstorm
