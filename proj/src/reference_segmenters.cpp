#include "clickstorm/reference_segmenters.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "clickstorm/render.hpp"

namespace clickstorm {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) {
    throw Error("gaussian sigma must be positive");
  }
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += k[i + r];
  }
  for (auto& v : k) {
    v /= total;
  }
  return k;
}

Grid<double> gaussian_blur(const Grid<double>& in, std::span<const double> kernel) {
  const int w = in.width();
  const int h = in.height();
  const int r = static_cast<int>(kernel.size() / 2);
  Grid<double> tmp(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      const int lo = std::max(-r, -x);
      const int hi = std::min(r, w - 1 - x);
      for (int i = lo; i <= hi; ++i) {
        acc += kernel[i + r] * in(x + i, y);
      }
      tmp(x, y) = acc;
    }
  }
  Grid<double> out(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    const int lo = std::max(-r, -y);
    const int hi = std::min(r, h - 1 - y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = lo; i <= hi; ++i) {
        acc += kernel[i + r] * tmp(x, y + i);
      }
      out(x, y) = acc;
    }
  }
  return out;
}

BlobSegmenter::BlobSegmenter(BlobParams params) : params_(params), kernel_(gaussian_kernel(params.sigma)) {
  if (!(params.positive_weight > 0.0) || !(params.negative_weight > 0.0)) {
    throw Error("blob segmenter click weights must be positive");
  }
  if (!(params.affinity_tau > 0.0)) {
    throw Error("blob segmenter affinity tau must be positive");
  }
  if (!(params.sharpness > 0.0)) {
    throw Error("blob segmenter sharpness must be positive");
  }
}

namespace {

struct Affinity {
  bool active = false;
  double mass = 0.0;
  double mean = 0.0;
  Grid<double> value;
};

Affinity compute_affinity(const Grid<double>& intensity, const ProbMap& clicks, double tau) {
  Affinity a;
  double weighted = 0.0;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    a.mass += clicks[i];
    weighted += clicks[i] * intensity[i];
  }
  a.value = Grid<double>(clicks.width(), clicks.height(), 0.0);
  if (a.mass > 1e-12) {
    a.active = true;
    a.mean = weighted / a.mass;
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      const double d = intensity[i] - a.mean;
      a.value[i] = std::exp(-d * d / tau);
    }
  }
  return a;
}

// Adds d(loss)/d(click map) through the affinity mean, given d(loss)/d(affinity).
void affinity_vjp(const Affinity& a, const Grid<double>& intensity, const Grid<double>& g_value, double tau,
                  Grid<double>& g_map) {
  if (!a.active) {
    return;
  }
  double g_mean = 0.0;
  for (std::size_t i = 0; i < g_value.size(); ++i) {
    g_mean += g_value[i] * a.value[i] * 2.0 * (intensity[i] - a.mean) / tau;
  }
  for (std::size_t i = 0; i < g_map.size(); ++i) {
    g_map[i] += g_mean * (intensity[i] - a.mean) / a.mass;
  }
}

void check_request(const SegmenterRequest& request) {
  if (request.clicks.empty()) {
    throw SegmenterError("segmenter request carries no clicks");
  }
}

struct BlobForward {
  ClickMaps maps;
  Grid<double> intensity;
  Grid<double> bp;
  Grid<double> bn;
  Affinity affinity;
};

BlobForward blob_forward(const SegmenterRequest& request, const BlobParams& p, std::span<const double> kernel) {
  check_request(request);
  const Image& image = request.image;
  BlobForward f{render_clicks(request.clicks, image.height(), image.width(), p.sharpness), image.intensity(), {}, {},
                {}};
  f.bp = gaussian_blur(f.maps.positive, kernel);
  f.bn = gaussian_blur(f.maps.negative, kernel);
  f.affinity = compute_affinity(f.intensity, f.maps.positive, p.affinity_tau);
  return f;
}

}  // namespace

Grid<double> BlobSegmenter::logits(const SegmenterRequest& request) const {
  const BlobForward f = blob_forward(request, params_, kernel_);
  Grid<double> z(f.bp.width(), f.bp.height());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = params_.positive_weight * f.bp[i] - params_.negative_weight * f.bn[i] + params_.bias +
           params_.affinity_weight * f.affinity.value[i];
  }
  return z;
}

std::vector<Vec2> BlobSegmenter::logits_vjp(const SegmenterRequest& request, const Grid<double>& upstream) const {
  const BlobForward f = blob_forward(request, params_, kernel_);
  require_same_shape(f.bp, upstream, "blob segmenter vjp");
  const int w = upstream.width();
  const int h = upstream.height();
  Grid<double> g_bp(w, h);
  Grid<double> g_bn(w, h);
  Grid<double> g_aff(w, h);
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    g_bp[i] = params_.positive_weight * upstream[i];
    g_bn[i] = -params_.negative_weight * upstream[i];
    g_aff[i] = params_.affinity_weight * upstream[i];
  }
  Grid<double> g_mp = gaussian_blur(g_bp, kernel_);
  const Grid<double> g_mn = gaussian_blur(g_bn, kernel_);
  affinity_vjp(f.affinity, f.intensity, g_aff, params_.affinity_tau, g_mp);
  return render_gradient(f.maps, g_mp, g_mn);
}

std::unique_ptr<BlobSegmenter> blob_segmenter(const BlobParams& params) {
  return std::make_unique<BlobSegmenter>(params);
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; identical across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

RuggedSegmenter::RuggedSegmenter(std::shared_ptr<const DifferentiableSegmenter> base, std::uint64_t seed,
                                 double amplitude)
    : base_(std::move(base)), amplitude_(amplitude) {
  if (!base_) {
    throw Error("rugged segmenter needs a base segmenter");
  }
  if (!(amplitude >= 0.0)) {
    throw Error("rugged segmenter amplitude must be non-negative");
  }
  std::mt19937_64 rng(seed);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int j = 0; j < kWaves; ++j) {
    const double wavelength = 6.0 + 10.0 * unit_uniform(rng);
    const double angle = two_pi * unit_uniform(rng);
    const double phase = two_pi * unit_uniform(rng);
    const double k = two_pi / wavelength;
    waves_.push_back({k * std::cos(angle), k * std::sin(angle), phase});
  }
}

double RuggedSegmenter::offset(std::span<const Click> clicks) const {
  if (clicks.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto& c : clicks) {
    for (const auto& w : waves_) {
      total += std::sin(w.kx * c.x + w.ky * c.y + w.phase);
    }
  }
  return amplitude_ * total / (std::sqrt(static_cast<double>(kWaves)) * static_cast<double>(clicks.size()));
}

Grid<double> RuggedSegmenter::logits(const SegmenterRequest& request) const {
  Grid<double> z = base_->logits(request);
  if (amplitude_ == 0.0) {
    return z;
  }
  const double shift = offset(request.clicks);
  for (auto& v : z.data()) {
    v += shift;
  }
  return z;
}

std::vector<Vec2> RuggedSegmenter::logits_vjp(const SegmenterRequest& request, const Grid<double>& upstream) const {
  std::vector<Vec2> grads = base_->logits_vjp(request, upstream);
  if (amplitude_ == 0.0) {
    return grads;
  }
  double total_upstream = 0.0;
  for (double v : upstream.data()) {
    total_upstream += v;
  }
  const double scale = amplitude_ / (std::sqrt(static_cast<double>(kWaves)) * static_cast<double>(request.clicks.size()));
  for (std::size_t c = 0; c < request.clicks.size(); ++c) {
    const Click& click = request.clicks[c];
    for (const auto& w : waves_) {
      const double cs = std::cos(w.kx * click.x + w.ky * click.y + w.phase);
      grads[c].x += total_upstream * scale * cs * w.kx;
      grads[c].y += total_upstream * scale * cs * w.ky;
    }
  }
  return grads;
}

std::unique_ptr<RuggedSegmenter> rugged_segmenter(std::shared_ptr<const DifferentiableSegmenter> base,
                                                  std::uint64_t seed, double amplitude) {
  return std::make_unique<RuggedSegmenter>(std::move(base), seed, amplitude);
}

ProbMap OracleSegmenter::predict(const SegmenterRequest& request) {
  ProbMap out(gt_.width(), gt_.height(), 0.0);
  for (const auto& c : request.clicks) {
    if (c.polarity != Polarity::positive) {
      continue;
    }
    const auto pixel = snap_to_pixel(c, gt_.width(), gt_.height());
    if (pixel && gt_(pixel->first, pixel->second)) {
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = gt_[i] ? 1.0 : 0.0;
      }
      break;
    }
  }
  return out;
}

Vec2 OracleSegmenter::dice_gradient(const SegmenterRequest& request, const BinaryMask&, Direction,
                                    std::size_t active) {
  if (active >= request.clicks.size()) {
    throw SegmenterError("active click index out of range", active);
  }
  return {};
}

}  // namespace clickstorm
