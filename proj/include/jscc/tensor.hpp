#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "jscc/error.hpp"

namespace jscc {

struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  std::size_t image_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
  }
};

/// Dense batch tensor, N x C x H x W, row-major.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{}) : shape_(s), data_(s.size(), fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  const T& at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  std::span<T> image(int n) {
    return {data_.data() + static_cast<std::size_t>(n) * shape_.image_size(), shape_.image_size()};
  }
  std::span<const T> image(int n) const {
    return {data_.data() + static_cast<std::size_t>(n) * shape_.image_size(), shape_.image_size()};
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data, new shape with identical element count.
  Tensor reshaped(Shape s) const {
    if (s.size() != data_.size())
      throw ShapeError("cannot reshape " + shape_.str() + " to " + s.str());
    Tensor t = *this;
    t.shape_ = s;
    return t;
  }

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Shape shape_{};
  std::vector<T> data_;
};

enum class PixelScale { pixel_255, unit };

inline const char* to_string(PixelScale s) { return s == PixelScale::unit ? "unit" : "pixel_255"; }

/// Images plus the value range they are expressed in.
template <typename T>
struct ImageBatch {
  Tensor<T> data;
  PixelScale scale = PixelScale::unit;

  const Shape& shape() const { return data.shape(); }
  int batch() const { return data.shape().n; }

  ImageBatch to_unit() const {
    if (scale == PixelScale::unit) return *this;
    ImageBatch out{data, PixelScale::unit};
    for (auto& v : out.data.values()) v /= T(255);
    return out;
  }
  ImageBatch to_pixel() const {
    if (scale == PixelScale::pixel_255) return *this;
    ImageBatch out{data, PixelScale::pixel_255};
    for (auto& v : out.data.values()) v *= T(255);
    return out;
  }
  /// Rounds and clamps a pixel-scale batch to 8-bit integer values.
  ImageBatch quantized() const {
    ImageBatch out = to_pixel();
    for (auto& v : out.data.values()) v = std::clamp(std::round(v), T(0), T(255));
    return out;
  }
};

template <typename T>
void require_same_shape(const ImageBatch<T>& a, const ImageBatch<T>& b, const char* what) {
  if (a.shape() != b.shape())
    throw ContractError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                        b.shape().str());
}

template <typename T>
void require_scale(const ImageBatch<T>& a, PixelScale s, const char* what) {
  if (a.scale != s)
    throw ContractError(std::string(what) + ": expected " + to_string(s) + " images, got " +
                        to_string(a.scale));
}

}  // namespace jscc
