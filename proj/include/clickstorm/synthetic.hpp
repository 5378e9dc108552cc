#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clickstorm/grid.hpp"

namespace clickstorm {

enum class SyntheticShape { disk, ring, l_shape, thin_bar };
const char* to_string(SyntheticShape shape);

struct SyntheticSample {
  std::string id;
  SyntheticShape shape = SyntheticShape::disk;
  Image image;
  BinaryMask mask;
};

// Seeded shapes on textured backgrounds; sample i cycles through the four shape kinds.
// Identical (count, size, seed) give identical samples on every platform.
std::vector<SyntheticSample> make_synthetic_suite(int count, int size, std::uint64_t seed);
SyntheticSample make_synthetic_sample(int index, int size, std::uint64_t seed);

// Writes images/<id>.png, masks/<id>.png and manifest.json under `dir`; returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const std::string& name,
                                              const std::vector<SyntheticSample>& samples);

}  // namespace clickstorm
