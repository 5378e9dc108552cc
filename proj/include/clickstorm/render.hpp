#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clickstorm/clickgen.hpp"
#include "clickstorm/grid.hpp"

namespace clickstorm {

// Soft disks: m(p) = sigmoid(sharpness * (radius - |p - c|)).
// Same-polarity disks combine by per-pixel maximum.

struct FootprintSample {
  std::uint32_t index = 0;  // row-major pixel index
  double value = 0.0;
  double d_dx = 0.0;  // derivative with respect to the click's x
  double d_dy = 0.0;
};

struct Footprint {
  Polarity polarity = Polarity::positive;
  std::vector<FootprintSample> samples;
};

struct ClickMaps {
  ProbMap positive;
  ProbMap negative;
  std::vector<Footprint> footprints;      // one per click, in input order
  std::vector<std::int32_t> positive_owner;  // click that attains the max, -1 if none
  std::vector<std::int32_t> negative_owner;
};

// Pixels farther than radius + footprint_margin(sharpness) are not rendered (value < 1.2e-7).
double footprint_margin(double sharpness);

double soft_disk_value(double distance, double radius, double sharpness);

// Footprint of a single click, independent of other clicks.
Footprint render_footprint(const Click& click, int width, int height, double sharpness);

ClickMaps render_clicks(std::span<const Click> clicks, int height, int width, double sharpness);

// Chain rule from per-pixel map gradients to per-click (dL/dx, dL/dy). Pixels owned by another
// click of the same polarity contribute nothing.
std::vector<Vec2> render_gradient(const ClickMaps& maps, const Grid<double>& upstream_positive,
                                  const Grid<double>& upstream_negative);

}  // namespace clickstorm
