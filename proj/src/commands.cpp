#include "clickstorm/commands.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "clickstorm/bruteforce.hpp"
#include "clickstorm/serialize.hpp"
#include "clickstorm/synthetic.hpp"

namespace clickstorm {

namespace fs = std::filesystem;
using nlohmann::json;

StagedDirectory::StagedDirectory(fs::path target) : target_(std::move(target)) {
  if (target_.filename().empty()) {
    target_ = target_.parent_path();
  }
  const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
  fs::create_directories(parent);
  staging_ = parent / ("." + target_.filename().string() + ".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

StagedDirectory::~StagedDirectory() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedDirectory::commit() {
  fs::path old;
  if (fs::exists(target_)) {
    old = target_;
    old += ".old-" + std::to_string(::getpid());
    fs::remove_all(old);
    fs::rename(target_, old);
  }
  fs::rename(staging_, target_);
  committed_ = true;
  if (!old.empty()) {
    fs::remove_all(old);
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    throw Error("cannot write " + path.string());
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Trajectory run_kind(Segmenter& seg, const Sample& s, TrajectoryKind kind, const RunConfig& cfg) {
  switch (kind) {
    case TrajectoryKind::baseline:
      return run_baseline_trajectory(seg, s.image, s.mask, cfg.attack.clicks, cfg.policy());
    case TrajectoryKind::minimizing:
      return run_adversarial_trajectory(seg, s.image, s.mask, Direction::minimize, cfg.attack, cfg.policy());
    case TrajectoryKind::maximizing:
      return run_adversarial_trajectory(seg, s.image, s.mask, Direction::maximize, cfg.attack, cfg.policy());
    case TrajectoryKind::external:
      break;
  }
  throw Error("external trajectories are not produced by evaluate");
}

Sample load_sample(const Dataset& ds, const std::string& image_id) {
  const auto index = ds.find(image_id);
  if (!index) {
    throw Error("image '" + image_id + "' is not in dataset '" + ds.name() + "'");
  }
  return ds.load_entry(*index);
}

}  // namespace

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_timestamp();
  const Dataset dataset = Dataset::load(cfg.dataset);
  LoadedDataset loaded = load_all(dataset);

  std::map<std::string, std::string> failures;
  for (const auto& e : loaded.errors) {
    failures[e.entry_id()] = e.what();
  }

  const std::size_t n_kinds = cfg.kinds.size();
  const std::size_t n_tasks = loaded.samples.size() * n_kinds;
  std::vector<std::optional<Trajectory>> results(n_tasks);
  std::vector<std::string> errors(n_tasks);
  parallel_for(n_tasks, cfg.workers, [&](std::size_t t) {
    const Sample& s = loaded.samples[t / n_kinds];
    const TrajectoryKind kind = cfg.kinds[t % n_kinds];
    try {
      auto seg = make_segmenter(cfg.segmenter, s, cfg.seed);
      results[t] = run_kind(*seg, s, kind, cfg);
    } catch (const std::exception& e) {
      errors[t] = std::string(to_string(kind)) + ": " + e.what();
    }
  });

  StagedDirectory out(cfg.out);
  fs::create_directories(out.path() / "trajectories");
  std::vector<ImageReport> reports;
  for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
    const Sample& s = loaded.samples[i];
    std::string error;
    std::vector<Trajectory> trajectories;
    for (std::size_t k = 0; k < n_kinds; ++k) {
      const std::size_t t = i * n_kinds + k;
      if (!errors[t].empty()) {
        error += (error.empty() ? "" : "; ") + errors[t];
      } else {
        trajectories.push_back(std::move(*results[t]));
      }
    }
    if (!error.empty()) {
      failures[s.id] = error;
      continue;
    }
    json tj = {{"id", s.id}, {"trajectories", json::array()}};
    for (const auto& t : trajectories) tj["trajectories"].push_back(to_json(t));
    write_text_file(out.path() / "trajectories" / (s.id + ".json"), tj.dump(2) + "\n");
    reports.push_back(image_report(s.id, trajectories));
  }
  for (const auto& [id, message] : failures) {
    log << "image " << id << " failed: " << message << "\n";
  }

  const std::size_t ok = reports.size();
  if (!reports.empty()) {
    const RobustnessReport report = aggregate(std::move(reports), dataset.name(), cfg.segmenter.name);
    const auto rows = score_rows(report);
    write_text_file(out.path() / "report.csv", format_report_csv(rows));
    write_text_file(out.path() / "report.json", to_json(report).dump(2) + "\n");
  }

  json failed = json::object();
  for (const auto& [id, message] : failures) failed[id] = message;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const json meta = {{"version", kVersion},
                     {"config", to_json(cfg)},
                     {"seed", cfg.seed},
                     {"started_at", started_at},
                     {"wall_time_seconds", wall},
                     {"images_total", dataset.entries().size()},
                     {"images_ok", ok},
                     {"failures", failed}};
  write_text_file(out.path() / "run_meta.json", meta.dump(2) + "\n");
  out.commit();

  log << "evaluated " << ok << "/" << dataset.entries().size() << " images of '" << dataset.name() << "' with '"
      << cfg.segmenter.name << "' -> " << cfg.out.string() << "\n";
  return failures.empty() ? kExitOk : kExitPartial;
}

int cmd_bruteforce(const RunConfig& cfg, const std::string& image_id, std::optional<int> stride,
                   const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const Dataset dataset = Dataset::load(cfg.dataset);
  const Sample sample = load_sample(dataset, image_id);
  const int step = stride ? *stride : auto_stride(sample.mask.height(), sample.mask.width());
  if (step < 1) {
    throw Error("stride must be >= 1");
  }
  const SegmenterFactory factory = [&] { return make_segmenter(cfg.segmenter, sample, cfg.seed); };
  const ProbMap empty(sample.mask.width(), sample.mask.height(), 0.0);
  const GridResult grid =
      grid_search(factory, sample.image, sample.mask, {}, empty, Polarity::positive, step, cfg.workers, cfg.policy());

  StagedDirectory out(out_dir);
  write_heatmap(grid, GridChannel::iou, out.path() / (image_id + "_iou.png"));
  write_heatmap(grid, GridChannel::biou, out.path() / (image_id + "_biou.png"));
  out.commit();

  for (const auto& f : grid.failures) {
    log << "cell " << f << "\n";
  }
  log << "grid " << grid.cols << "x" << grid.rows << " (stride " << grid.stride << ") for " << image_id << " -> "
      << out_dir.string() << "\n";
  return grid.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_spread(const RunConfig& cfg, const fs::path& clicks_csv, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const Dataset dataset = Dataset::load(cfg.dataset);
  const auto groups = load_external_clicks(clicks_csv, cfg.segmenter.radius);
  std::vector<std::string> unknown;
  for (const auto& g : groups) {
    if (!dataset.find(g.image_id)) unknown.push_back(g.image_id);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw Error("clicks reference images missing from the dataset: " + list);
  }

  struct Scored {
    Click click;
    SegmentationScores scores;
    std::string error;
  };
  struct ImageSpread {
    std::vector<Scored> clicks;
    std::optional<Scored> baseline;
    std::string error;
  };
  std::vector<ImageSpread> results(groups.size());
  const ClickPolicy policy = cfg.policy();
  parallel_for(groups.size(), cfg.workers, [&](std::size_t i) {
    ImageSpread& r = results[i];
    try {
      const Sample s = load_sample(dataset, groups[i].image_id);
      auto seg = make_segmenter(cfg.segmenter, s, cfg.seed);
      auto score = [&](const Click& c) {
        const std::vector<Click> one{c};
        return score_prediction(seg->predict({s.image, one, nullptr}), s.mask, policy);
      };
      for (const auto& c : groups[i].clicks) {
        Scored sc{c, {}, {}};
        try {
          sc.scores = score(c);
        } catch (const std::exception& e) {
          sc.error = e.what();
        }
        r.clicks.push_back(sc);
      }
      const ProbMap empty(s.mask.width(), s.mask.height(), 0.0);
      if (const auto b = baseline_click(empty, s.mask, policy)) {
        r.baseline = Scored{*b, score(*b), {}};
      }
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });

  std::string detail = "image_id,kind,index,x,y,polarity,iou,biou\n";
  std::string summary =
      "image_id,clicks,iou_min,iou_max,iou_spread,biou_min,biou_max,biou_spread,baseline_x,baseline_y,baseline_iou,"
      "baseline_biou\n";
  bool partial = false;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& r = results[i];
    const std::string& id = groups[i].image_id;
    if (!r.error.empty()) {
      log << "image " << id << " failed: " << r.error << "\n";
      partial = true;
      continue;
    }
    std::vector<double> ious;
    std::vector<double> bious;
    for (std::size_t k = 0; k < r.clicks.size(); ++k) {
      const auto& sc = r.clicks[k];
      if (!sc.error.empty()) {
        log << "image " << id << " click " << k << " failed: " << sc.error << "\n";
        partial = true;
        continue;
      }
      ious.push_back(sc.scores.iou);
      bious.push_back(sc.scores.biou);
      detail += id + ",click," + std::to_string(k) + "," + format_double(sc.click.x) + "," + format_double(sc.click.y) +
                "," + to_string(sc.click.polarity) + "," + format_double(sc.scores.iou) + "," +
                format_double(sc.scores.biou) + "\n";
    }
    if (r.baseline) {
      const auto& b = *r.baseline;
      detail += id + ",baseline,0," + format_double(b.click.x) + "," + format_double(b.click.y) + "," +
                to_string(b.click.polarity) + "," + format_double(b.scores.iou) + "," + format_double(b.scores.biou) +
                "\n";
    }
    if (ious.empty()) continue;
    const auto [imin, imax] = std::minmax_element(ious.begin(), ious.end());
    const auto [bmin, bmax] = std::minmax_element(bious.begin(), bious.end());
    summary += id + "," + std::to_string(ious.size()) + "," + format_double(*imin) + "," + format_double(*imax) + "," +
               format_double(spread(ious)) + "," + format_double(*bmin) + "," + format_double(*bmax) + "," +
               format_double(spread(bious));
    if (r.baseline) {
      summary += "," + format_double(r.baseline->click.x) + "," + format_double(r.baseline->click.y) + "," +
                 format_double(r.baseline->scores.iou) + "," + format_double(r.baseline->scores.biou) + "\n";
    } else {
      summary += ",,,,\n";
    }
  }

  StagedDirectory out(out_dir);
  write_text_file(out.path() / "spread_clicks.csv", detail);
  write_text_file(out.path() / "spread_summary.csv", summary);
  out.commit();
  log << "spread for " << groups.size() << " images -> " << out_dir.string() << "\n";
  return partial ? kExitPartial : kExitOk;
}

namespace {

std::string file_stem_for(const std::string& group) {
  std::string out;
  for (char c : group) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  }
  return out.empty() ? "group" : out;
}

}  // namespace

int cmd_correlate(const std::vector<fs::path>& reports, CorrelationAxis axis, const fs::path& out_dir,
                  std::ostream& log) {
  if (reports.size() < 2) {
    throw Error("correlate needs at least two report files");
  }
  std::vector<ScoreRow> rows;
  for (const auto& path : reports) {
    auto r = parse_report_csv(read_text_file(path));
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const auto matrices = correlation_matrix(rows, axis);
  StagedDirectory out(out_dir);
  const char* prefix = axis == CorrelationAxis::cross_metric ? "cross_metric_" : "cross_dataset_";
  for (const auto& m : matrices) {
    write_text_file(out.path() / (prefix + file_stem_for(m.group) + ".csv"), format_matrix_csv(m));
  }
  out.commit();
  log << matrices.size() << " correlation matrices -> " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_gen_synthetic(const fs::path& out_dir, const std::string& name, int count, int size, std::uint64_t seed,
                      std::ostream& log) {
  if (count < 1) {
    throw Error("gen-synthetic needs a positive image count");
  }
  const auto samples = make_synthetic_suite(count, size, seed);
  StagedDirectory out(out_dir);
  write_synthetic_dataset(out.path(), name, samples);
  out.commit();
  log << "wrote " << count << " synthetic images (" << size << "x" << size << ", seed " << seed << ") -> "
      << (out_dir / "manifest.json").string() << "\n";
  return kExitOk;
}

}  // namespace clickstorm
