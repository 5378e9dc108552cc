#include "clickstorm/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

namespace clickstorm {

namespace {

std::vector<std::uint8_t> read_with_format(const std::filesystem::path& path, std::uint32_t format, int& width,
                                           int& height) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error("cannot decode PNG " + path.string() + ": " + msg);
  }
  width = static_cast<int>(image.width);
  height = static_cast<int>(image.height);
  return buffer;
}

void write_with_format(const std::filesystem::path& path, std::uint32_t format, int width, int height,
                       const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace

Grid<std::uint8_t> read_png_gray(const std::filesystem::path& path) {
  int w = 0;
  int h = 0;
  auto data = read_with_format(path, PNG_FORMAT_GRAY, w, h);
  return Grid<std::uint8_t>(w, h, std::move(data));
}

Rgb8Image read_png_rgb(const std::filesystem::path& path) {
  Rgb8Image out;
  out.pixels = read_with_format(path, PNG_FORMAT_RGB, out.width, out.height);
  return out;
}

void write_png_gray(const std::filesystem::path& path, const Grid<std::uint8_t>& gray) {
  write_with_format(path, PNG_FORMAT_GRAY, gray.width(), gray.height(), gray.data().data());
}

void write_png_rgb(const std::filesystem::path& path, const Rgb8Image& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw Error("RGB buffer size does not match dimensions");
  }
  write_with_format(path, PNG_FORMAT_RGB, image.width, image.height, image.pixels.data());
}

Image to_image(const Rgb8Image& rgb) {
  std::vector<double> values(rgb.pixels.size());
  std::transform(rgb.pixels.begin(), rgb.pixels.end(), values.begin(), [](std::uint8_t v) { return v / 255.0; });
  return Image(rgb.width, rgb.height, std::move(values));
}

Rgb8Image to_rgb8(const Image& image) {
  Rgb8Image out{image.width(), image.height(), std::vector<std::uint8_t>(image.rgb().size())};
  std::transform(image.rgb().begin(), image.rgb().end(), out.pixels.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  return out;
}

}  // namespace clickstorm
