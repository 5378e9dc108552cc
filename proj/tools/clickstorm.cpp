// clickstorm: robustness evaluation for click-based interactive segmentation.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "clickstorm/commands.hpp"

namespace fs = std::filesystem;
using namespace clickstorm;

namespace {

struct RunFlags {
  std::string config;
  std::string dataset;
  std::string segmenter;
  std::optional<int> clicks;
  std::optional<int> iterations;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> kinds;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "run configuration JSON");
  cmd->add_option("--dataset", f.dataset, "dataset manifest JSON (overrides the config)");
  cmd->add_option("--segmenter", f.segmenter, "segmenter profile name (blob, rugged, oracle or a config profile)");
  cmd->add_option("--clicks", f.clicks, "clicks per trajectory")->check(CLI::PositiveNumber);
  cmd->add_option("--iters", f.iterations, "optimizer iterations per click")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", f.workers, "worker threads (default CLICKSTORM_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "run seed");
}

// Flags are folded into the config document so they pass the same validation as file values.
RunConfig build_config(const RunFlags& f, const std::optional<std::string>& out) {
  nlohmann::json j = nlohmann::json::object();
  fs::path base = fs::current_path();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw Error("cannot read config " + f.config);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error("config " + f.config + ": " + e.what());
    }
    base = fs::absolute(f.config).parent_path();
  }
  if (!f.dataset.empty()) j["dataset"] = fs::absolute(f.dataset).string();
  if (!f.segmenter.empty()) j["segmenter"] = f.segmenter;
  if (f.clicks) j["attack"]["clicks"] = *f.clicks;
  if (f.iterations) j["attack"]["iterations"] = *f.iterations;
  if (f.workers) j["workers"] = *f.workers;
  if (f.seed) j["seed"] = *f.seed;
  if (!f.kinds.empty()) j["kinds"] = f.kinds;
  if (out) j["out"] = fs::absolute(*out).string();
  if (!j.contains("dataset")) throw Error("no dataset: pass --dataset or set it in --config");
  if (!j.contains("segmenter")) j["segmenter"] = "blob";
  RunConfig cfg = run_config_from_json(j, base);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clickstorm: adversarial click robustness evaluation for interactive segmentation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunFlags eval_flags;
  std::optional<std::string> eval_out;
  auto* eval = app.add_subcommand("evaluate", "baseline/min/max trajectories and the robustness report");
  add_run_flags(eval, eval_flags);
  eval->add_option("--kinds", eval_flags.kinds, "trajectory kinds (baseline, min, max)");
  eval->add_option("--out", eval_out, "output directory");

  RunFlags bf_flags;
  std::string bf_image;
  std::optional<int> bf_stride;
  std::string bf_out = "clickstorm-bruteforce";
  auto* bf = app.add_subcommand("bruteforce", "first-click IoU/BIoU heatmaps over a pixel grid");
  add_run_flags(bf, bf_flags);
  bf->add_option("--image", bf_image, "image id")->required();
  bf->add_option("--stride", bf_stride, "grid stride in pixels (auto when omitted)")->check(CLI::PositiveNumber);
  bf->add_option("--out", bf_out, "output directory");

  RunFlags sp_flags;
  std::string sp_clicks;
  std::string sp_out = "clickstorm-spread";
  auto* sp = app.add_subcommand("spread", "score externally supplied first clicks");
  add_run_flags(sp, sp_flags);
  sp->add_option("--clicks-file", sp_clicks, "CSV of image_id,x,y[,polarity]")->required();
  sp->add_option("--out", sp_out, "output directory");

  std::vector<std::string> co_reports;
  std::string co_axis = "cross_metric";
  std::string co_out = "clickstorm-correlate";
  auto* co = app.add_subcommand("correlate", "Spearman correlation matrices across report files");
  co->add_option("reports", co_reports, "report.csv files")->required()->expected(2, -1);
  co->add_option("--axis", co_axis, "cross_metric or cross_dataset");
  co->add_option("--out", co_out, "output directory");

  std::string gs_out;
  std::string gs_name = "synthetic";
  int gs_count = 50;
  int gs_size = 96;
  std::uint64_t gs_seed = 7;
  auto* gs = app.add_subcommand("gen-synthetic", "write a seeded synthetic dataset");
  gs->add_option("--out", gs_out, "output directory")->required();
  gs->add_option("--name", gs_name, "dataset name");
  gs->add_option("--count", gs_count, "number of images");
  gs->add_option("--size", gs_size, "side length in pixels");
  gs->add_option("--seed", gs_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*eval) return cmd_evaluate(build_config(eval_flags, eval_out), std::cerr);
    if (*bf) return cmd_bruteforce(build_config(bf_flags, std::nullopt), bf_image, bf_stride, bf_out, std::cerr);
    if (*sp) return cmd_spread(build_config(sp_flags, std::nullopt), sp_clicks, sp_out, std::cerr);
    if (*co) {
      std::vector<fs::path> paths(co_reports.begin(), co_reports.end());
      return cmd_correlate(paths, correlation_axis_from_string(co_axis), co_out, std::cerr);
    }
    if (*gs) return cmd_gen_synthetic(gs_out, gs_name, gs_count, gs_size, gs_seed, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
