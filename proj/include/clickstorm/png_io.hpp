#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "clickstorm/grid.hpp"

namespace clickstorm {

struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB
};

Grid<std::uint8_t> read_png_gray(const std::filesystem::path& path);
Rgb8Image read_png_rgb(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const Grid<std::uint8_t>& gray);
void write_png_rgb(const std::filesystem::path& path, const Rgb8Image& image);

Image to_image(const Rgb8Image& rgb);
Rgb8Image to_rgb8(const Image& image);

}  // namespace clickstorm
