#include "clickstorm/maskops.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace clickstorm {

Image::Image(int width, int height, std::vector<double> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  if (width < 1 || height < 1 || rgb_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error("image data length does not match " + std::to_string(width) + "x" +
                std::to_string(height) + "x3");
  }
}

Grid<double> Image::intensity() const {
  Grid<double> out(width_, height_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (rgb_[3 * i] + rgb_[3 * i + 1] + rgb_[3 * i + 2]) / 3.0;
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional squared distance transform by the lower envelope of parabolas.
// f holds sampled costs (0 or +inf here), output d[q] = min_p (q - p)^2 + f[p].
void squared_dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) {
      continue;
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) {
      ++j;
    }
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

// Exact squared Euclidean distance to the nearest seed, separable in columns then rows.
Grid<double> squared_edt(const BinaryMask& seeds) {
  const int w = seeds.width();
  const int h = seeds.height();
  Grid<double> out(w, h, kInf);
  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  f.resize(h);
  d.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      f[y] = seeds(x, y) ? 0.0 : kInf;
    }
    squared_dt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) {
      out(x, y) = d[y];
    }
  }
  f.resize(w);
  d.resize(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f[x] = out(x, y);
    }
    squared_dt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) {
      out(x, y) = d[x];
    }
  }
  return out;
}

}  // namespace

BinaryMask binarize(const ProbMap& prob, double threshold) {
  BinaryMask out(prob.width(), prob.height());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    out[i] = prob[i] >= threshold ? 1 : 0;
  }
  return out;
}

std::size_t count(const BinaryMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(), [](std::uint8_t v) { return v != 0; }));
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool pa = a[i] != 0;
    const bool pb = b[i] != 0;
    inter += (pa && pb) ? 1 : 0;
    uni += (pa || pb) ? 1 : 0;
  }
  if (uni == 0) {
    return 1.0;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double default_boundary_width(int width, int height) {
  return std::max(1.0, 0.02 * image_diagonal(width, height));
}

BinaryMask boundary_band(const BinaryMask& mask, double width) {
  if (!(width > 0.0)) {
    throw Error("boundary width must be positive");
  }
  const DistanceMap inner = inner_distance_transform(mask);
  BinaryMask band(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    band[i] = (mask[i] != 0 && inner[i] <= width) ? 1 : 0;
  }
  return band;
}

double boundary_iou(const BinaryMask& a, const BinaryMask& b, double width) {
  require_same_shape(a, b, "boundary_iou");
  return iou(boundary_band(a, width), boundary_band(b, width));
}

double boundary_iou(const BinaryMask& a, const BinaryMask& b) {
  return boundary_iou(a, b, default_boundary_width(a.width(), a.height()));
}

DistanceMap inner_distance_transform(const BinaryMask& region) {
  const int w = region.width();
  const int h = region.height();
  // Pad with a one-pixel ring of non-region seeds.
  BinaryMask seeds(w + 2, h + 2, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      seeds(x + 1, y + 1) = region(x, y) ? 0 : 1;
    }
  }
  const Grid<double> sq = squared_edt(seeds);
  DistanceMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = region(x, y) ? std::sqrt(sq(x + 1, y + 1)) : 0.0;
    }
  }
  return out;
}

DistanceMap outer_distance_transform(const BinaryMask& region) {
  if (count(region) == 0) {
    throw Error("outer distance transform of an empty region is undefined");
  }
  Grid<double> sq = squared_edt(region);
  for (auto& v : sq.data()) {
    v = std::sqrt(v);
  }
  return sq;
}

namespace {

// Flood-fills pixels whose class (nonzero value) equals the seed's, labeling in discovery order.
Components label_classes(const Grid<std::uint8_t>& classes, Connectivity connectivity) {
  const int w = classes.width();
  const int h = classes.height();
  Components out{Grid<std::int32_t>(w, h, 0), {}};
  const bool diag = connectivity == Connectivity::eight;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t cls = classes(x, y);
      if (cls == 0 || out.labels(x, y) != 0) {
        continue;
      }
      const int label = static_cast<int>(out.components.size()) + 1;
      std::size_t area = 0;
      out.labels(x, y) = label;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        ++area;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!diag && dx != 0 && dy != 0)) {
              continue;
            }
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (classes.contains(nx, ny) && classes(nx, ny) == cls && out.labels(nx, ny) == 0) {
              out.labels(nx, ny) = label;
              queue.emplace_back(nx, ny);
            }
          }
        }
      }
      out.components.push_back(
          Component{label, area, cls == 1 ? Polarity::positive : Polarity::negative});
    }
  }
  return out;
}

}  // namespace

Components connected_components(const BinaryMask& mask, Connectivity connectivity) {
  Grid<std::uint8_t> classes(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    classes[i] = mask[i] ? 1 : 0;
  }
  return label_classes(classes, connectivity);
}

ErrorRegions error_regions(const ProbMap& pred, const BinaryMask& gt, double threshold,
                           Connectivity connectivity) {
  require_same_shape(pred, gt, "error_regions");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error("binarization threshold must lie in (0, 1)");
  }
  const int w = gt.width();
  const int h = gt.height();
  ErrorRegions out{BinaryMask(w, h), BinaryMask(w, h), {}};
  // Class 1 = false negative, class 2 = false positive.
  Grid<std::uint8_t> classes(w, h);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const bool p = pred[i] >= threshold;
    const bool g = gt[i] != 0;
    out.false_positive[i] = (p && !g) ? 1 : 0;
    out.false_negative[i] = (g && !p) ? 1 : 0;
    classes[i] = out.false_negative[i] ? 1 : (out.false_positive[i] ? 2 : 0);
  }
  out.components = label_classes(classes, connectivity);
  return out;
}

}  // namespace clickstorm
