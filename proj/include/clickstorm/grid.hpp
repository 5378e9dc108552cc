#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace clickstorm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

// Row-major raster. Element (x, y) is column x, row y.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                  std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1 ||
        data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw Error("raster data length does not match " + std::to_string(width) + "x" +
                  std::to_string(height));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Nonzero entries are members.
using BinaryMask = Grid<std::uint8_t>;
// Values in [0, 1].
using ProbMap = Grid<double>;
// Non-negative distances in pixel units.
using DistanceMap = Grid<double>;

// H x W x 3 interleaved RGB in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::vector<double> rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<double>& rgb() const { return rgb_; }

  double channel(int x, int y, int c) const {
    return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  // Mean of the three channels.
  Grid<double> intensity() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> rgb_;
};

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                std::to_string(b.height()) + ")");
  }
}

inline double image_diagonal(int width, int height) {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

inline double sigmoid(double z) {
  return 1.0 / (1.0 + std::exp(-z));
}

}  // namespace clickstorm
