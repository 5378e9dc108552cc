#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "clickstorm/grid.hpp"

namespace clickstorm {

enum class Connectivity { four = 4, eight = 8 };

enum class Polarity { positive, negative };

struct Component {
  int label = 0;  // 1-based, matches the label raster
  std::size_t area = 0;
  Polarity polarity = Polarity::positive;
};

struct Components {
  Grid<std::int32_t> labels;  // 0 = background
  std::vector<Component> components;
};

struct ErrorRegions {
  BinaryMask false_positive;
  BinaryMask false_negative;
  // Labels over FP and FN; a component never mixes the two.
  // FN components are tagged positive (they call for a positive click), FP negative.
  Components components;
};

BinaryMask binarize(const ProbMap& prob, double threshold = 0.5);

std::size_t count(const BinaryMask& mask);

// |a & b| / |a | b|, 1.0 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

// Canonical band width: 2% of the image diagonal, at least one pixel.
double default_boundary_width(int width, int height);

// Pixels of `mask` within distance `width` of its complement (image border counts as complement).
BinaryMask boundary_band(const BinaryMask& mask, double width);

double boundary_iou(const BinaryMask& a, const BinaryMask& b, double width);
double boundary_iou(const BinaryMask& a, const BinaryMask& b);

// Distance from each region pixel to the nearest non-region pixel, where the one-pixel ring
// just outside the image counts as non-region. Zero off the region.
DistanceMap inner_distance_transform(const BinaryMask& region);

// Distance from each pixel to the nearest region pixel. Throws on an empty region.
DistanceMap outer_distance_transform(const BinaryMask& region);

// Labels in row-major discovery order.
Components connected_components(const BinaryMask& mask, Connectivity connectivity = Connectivity::eight);

ErrorRegions error_regions(const ProbMap& pred, const BinaryMask& gt, double threshold = 0.5,
                           Connectivity connectivity = Connectivity::eight);

}  // namespace clickstorm
