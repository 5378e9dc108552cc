#include "clickstorm/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <random>

#include "clickstorm/maskops.hpp"
#include "clickstorm/png_io.hpp"
#include "json.hpp"

namespace clickstorm {

const char* to_string(SyntheticShape shape) {
  switch (shape) {
    case SyntheticShape::disk:
      return "disk";
    case SyntheticShape::ring:
      return "ring";
    case SyntheticShape::l_shape:
      return "l_shape";
    case SyntheticShape::thin_bar:
      return "thin_bar";
  }
  return "unknown";
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Irwin-Hall approximation; keeps the stream platform independent.
  double normal() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, int index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool in_rotated_rect(double x, double y, double cx, double cy, double half_len, double half_wid, double angle) {
  const double dx = x - cx;
  const double dy = y - cy;
  const double u = dx * std::cos(angle) + dy * std::sin(angle);
  const double v = -dx * std::sin(angle) + dy * std::cos(angle);
  return std::abs(u) <= half_len && std::abs(v) <= half_wid;
}

BinaryMask draw_shape(SyntheticShape shape, int size, Rng& rng) {
  BinaryMask mask(size, size, 0);
  const double s = size;
  const double cx = s * rng.uniform(0.4, 0.6);
  const double cy = s * rng.uniform(0.4, 0.6);
  switch (shape) {
    case SyntheticShape::disk: {
      const double r = s * rng.uniform(0.16, 0.28);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) mask(x, y) = std::hypot(x - cx, y - cy) <= r ? 1 : 0;
      break;
    }
    case SyntheticShape::ring: {
      const double outer = s * rng.uniform(0.3, 0.4);
      const double inner = outer - s * rng.uniform(0.15, 0.2);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double d = std::hypot(x - cx, y - cy);
          mask(x, y) = (d <= outer && d >= inner) ? 1 : 0;
        }
      break;
    }
    case SyntheticShape::l_shape: {
      const double arm = s * rng.uniform(0.4, 0.6);
      const double thick = s * rng.uniform(0.18, 0.26);
      const double x0 = cx - arm / 2;
      const double y0 = cy - arm / 2;
      const bool flip_x = rng.uniform() < 0.5;
      const bool flip_y = rng.uniform() < 0.5;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          double u = x - x0;
          double v = y - y0;
          if (flip_x) u = arm - u;
          if (flip_y) v = arm - v;
          const bool vertical = u >= 0 && u <= thick && v >= 0 && v <= arm;
          const bool horizontal = v >= arm - thick && v <= arm && u >= 0 && u <= arm;
          mask(x, y) = (vertical || horizontal) ? 1 : 0;
        }
      break;
    }
    case SyntheticShape::thin_bar: {
      const double half_len = s * rng.uniform(0.28, 0.4);
      const double half_wid = s * rng.uniform(0.08, 0.11);
      const double angle = rng.uniform(0.0, std::numbers::pi);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          mask(x, y) = in_rotated_rect(x, y, cx, cy, half_len, half_wid, angle) ? 1 : 0;
      break;
    }
  }
  if (count(mask) == 0) {
    mask(static_cast<int>(cx), static_cast<int>(cy)) = 1;
  }
  return mask;
}

}  // namespace

SyntheticSample make_synthetic_sample(int index, int size, std::uint64_t seed) {
  if (size < 8) {
    throw Error("synthetic images need at least 8 pixels per side");
  }
  Rng rng(mix_seed(seed, index));
  const auto shape = static_cast<SyntheticShape>(index % 4);
  BinaryMask mask = draw_shape(shape, size, rng);

  const double background = rng.uniform(0.2, 0.5);
  const double contrast = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.15, 0.3);
  const double object = std::clamp(background + contrast, 0.05, 0.95);
  const double ramp_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ramp = rng.uniform(0.1, 0.3);
  struct Wave {
    double kx, ky, phase, amp;
  };
  Wave waves[2];
  for (auto& w : waves) {
    const double k = 2.0 * std::numbers::pi / (size * rng.uniform(0.15, 0.4));
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w = {k * std::cos(a), k * std::sin(a), rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.02, 0.05)};
  }
  const double tint[3] = {rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04), 0.0};

  std::vector<double> rgb(static_cast<std::size_t>(size) * size * 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double v = 0.0;
      if (mask(x, y)) {
        const double u = ((x - size / 2.0) * std::cos(ramp_angle) + (y - size / 2.0) * std::sin(ramp_angle)) / size;
        v = object + ramp * u + 0.01 * rng.normal();
      } else {
        v = background + 0.015 * rng.normal();
        for (const auto& w : waves) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
      }
      const std::size_t i = (static_cast<std::size_t>(y) * size + x) * 3;
      rgb[i] = std::clamp(v + tint[0], 0.0, 1.0);
      rgb[i + 1] = std::clamp(v + tint[1], 0.0, 1.0);
      rgb[i + 2] = std::clamp(v - tint[0] - tint[1], 0.0, 1.0);
    }
  }
  char id[32];
  std::snprintf(id, sizeof(id), "syn%04d", index);
  return SyntheticSample{id, shape, Image(size, size, std::move(rgb)), std::move(mask)};
}

std::vector<SyntheticSample> make_synthetic_suite(int count, int size, std::uint64_t seed) {
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    out.push_back(make_synthetic_sample(i, size, seed));
  }
  return out;
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const std::string& name,
                                              const std::vector<SyntheticSample>& samples) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& s : samples) {
    const std::string image_rel = "images/" + s.id + ".png";
    const std::string mask_rel = "masks/" + s.id + ".png";
    write_png_rgb(dir / image_rel, to_rgb8(s.image));
    Grid<std::uint8_t> gray(s.mask.width(), s.mask.height());
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = s.mask[i] ? 255 : 0;
    write_png_gray(dir / mask_rel, gray);
    entries.push_back({{"image", image_rel}, {"mask", mask_rel}, {"id", s.id}});
  }
  const auto manifest = dir / "manifest.json";
  std::ofstream out(manifest);
  if (!out) {
    throw Error("cannot write " + manifest.string());
  }
  out << nlohmann::json{{"name", name}, {"entries", entries}}.dump(2) << '\n';
  return manifest;
}

}  // namespace clickstorm
