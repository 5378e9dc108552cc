#include "clickstorm/render.hpp"

#include <algorithm>

namespace clickstorm {

double footprint_margin(double sharpness) {
  // sigmoid(-16) < 1.2e-7; the slope is below 1e-6 for sharpness up to 8.
  return 16.0 / sharpness;
}

double soft_disk_value(double distance, double radius, double sharpness) {
  return sigmoid(sharpness * (radius - distance));
}

Footprint render_footprint(const Click& click, int width, int height, double sharpness) {
  if (!(sharpness > 0.0)) {
    throw Error("render sharpness must be positive");
  }
  if (!(click.radius > 0.0)) {
    throw Error("click radius must be positive");
  }
  Footprint fp{click.polarity, {}};
  const double reach = click.radius + footprint_margin(sharpness);
  const int x0 = std::max(0, static_cast<int>(std::floor(click.x - reach)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(click.x + reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(click.y - reach)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(click.y + reach)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - click.x;
      const double dy = y - click.y;
      const double dist = std::hypot(dx, dy);
      if (dist > reach) {
        continue;
      }
      const double m = soft_disk_value(dist, click.radius, sharpness);
      double gx = 0.0;
      double gy = 0.0;
      if (dist > 0.0) {
        const double slope = m * (1.0 - m) * sharpness / dist;
        gx = slope * dx;
        gy = slope * dy;
      }
      fp.samples.push_back({static_cast<std::uint32_t>(y * width + x), m, gx, gy});
    }
  }
  return fp;
}

ClickMaps render_clicks(std::span<const Click> clicks, int height, int width, double sharpness) {
  ClickMaps maps{ProbMap(width, height, 0.0), ProbMap(width, height, 0.0), {}, {}, {}};
  const std::size_t n = maps.positive.size();
  maps.positive_owner.assign(n, -1);
  maps.negative_owner.assign(n, -1);
  maps.footprints.reserve(clicks.size());
  for (std::size_t c = 0; c < clicks.size(); ++c) {
    Footprint fp = render_footprint(clicks[c], width, height, sharpness);
    const bool pos = fp.polarity == Polarity::positive;
    auto& map = pos ? maps.positive : maps.negative;
    auto& owner = pos ? maps.positive_owner : maps.negative_owner;
    for (const auto& s : fp.samples) {
      if (owner[s.index] < 0 || s.value > map[s.index]) {
        map[s.index] = s.value;
        owner[s.index] = static_cast<std::int32_t>(c);
      }
    }
    maps.footprints.push_back(std::move(fp));
  }
  return maps;
}

std::vector<Vec2> render_gradient(const ClickMaps& maps, const Grid<double>& upstream_positive,
                                  const Grid<double>& upstream_negative) {
  require_same_shape(maps.positive, upstream_positive, "render_gradient");
  require_same_shape(maps.negative, upstream_negative, "render_gradient");
  std::vector<Vec2> grads(maps.footprints.size());
  for (std::size_t c = 0; c < maps.footprints.size(); ++c) {
    const auto& fp = maps.footprints[c];
    const bool pos = fp.polarity == Polarity::positive;
    const auto& owner = pos ? maps.positive_owner : maps.negative_owner;
    const auto& up = pos ? upstream_positive : upstream_negative;
    Vec2 g;
    for (const auto& s : fp.samples) {
      if (owner[s.index] != static_cast<std::int32_t>(c)) {
        continue;
      }
      g.x += up[s.index] * s.d_dx;
      g.y += up[s.index] * s.d_dy;
    }
    grads[c] = g;
  }
  return grads;
}

}  // namespace clickstorm
