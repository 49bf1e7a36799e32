#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library code paths they are compared against.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <unistd.h>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace jscc::test {

inline ImageBatch<double> random_unit(int n, int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBatch<double> b{Tensor<double>(Shape{n, c, h, w}), PixelScale::unit};
  for (auto& v : b.data.values()) v = u(rng);
  return b;
}

template <typename T = float>
ImageBatch<T> random_pixels(int n, int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  ImageBatch<T> b{Tensor<T>(Shape{n, c, h, w}), PixelScale::pixel_255};
  for (auto& v : b.data.values()) v = static_cast<T>(u(rng));
  return b;
}

template <typename T>
ImageBatch<T> constant_batch(Shape s, T value, PixelScale scale) {
  return {Tensor<T>(s, value), scale};
}

// Direct 2-D Gaussian window evaluated per position, general three-factor
// SSIM with explicit sqrt and C3, averaged over every window, channel and image.
inline double naive_ssim(const ImageBatch<double>& x, const ImageBatch<double>& y, double range,
                         double alpha = 1.0, double beta = 1.0, double gamma = 1.0) {
  const int win = 11;
  const double sigma = 1.5;
  std::vector<double> kern(win * win);
  double ksum = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double di = i - 5, dj = j - 5;
      kern[i * win + j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      ksum += kern[i * win + j];
    }
  for (auto& k : kern) k /= ksum;
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const double c3 = c2 / 2.0;
  const Shape s = x.shape();
  double total = 0.0;
  long count = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oy = 0; oy + win <= s.h; ++oy)
        for (int ox = 0; ox + win <= s.w; ++ox) {
          double mx = 0, my = 0;
          for (int i = 0; i < win; ++i)
            for (int j = 0; j < win; ++j) {
              mx += kern[i * win + j] * x.data.at(n, c, oy + i, ox + j);
              my += kern[i * win + j] * y.data.at(n, c, oy + i, ox + j);
            }
          double vx = 0, vy = 0, cxy = 0;
          for (int i = 0; i < win; ++i)
            for (int j = 0; j < win; ++j) {
              const double a = x.data.at(n, c, oy + i, ox + j) - mx;
              const double b = y.data.at(n, c, oy + i, ox + j) - my;
              vx += kern[i * win + j] * a * a;
              vy += kern[i * win + j] * b * b;
              cxy += kern[i * win + j] * a * b;
            }
          const double sx = std::sqrt(vx), sy = std::sqrt(vy);
          const double l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
          const double con = (2 * sx * sy + c2) / (vx + vy + c2);
          const double st = (cxy + c3) / (sx * sy + c3);
          total += std::pow(l, alpha) * std::pow(con, beta) * std::pow(st, gamma);
          ++count;
        }
  return total / static_cast<double>(count);
}

inline double naive_mse(const ImageBatch<double>& x, const ImageBatch<double>& y) {
  long double s = 0;
  for (int n = 0; n < x.shape().n; ++n)
    for (int c = 0; c < x.shape().c; ++c)
      for (int h = 0; h < x.shape().h; ++h)
        for (int w = 0; w < x.shape().w; ++w) {
          const long double d = x.data.at(n, c, h, w) - y.data.at(n, c, h, w);
          s += d * d;
        }
  return static_cast<double>(s / x.data.size());
}

inline double naive_l1(const ImageBatch<double>& x, const ImageBatch<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.data.size(); ++i) s += std::fabs(x.data[i] - y.data[i]);
  return static_cast<double>(s / x.data.size());
}

inline bool near_rel(double a, double b, double rtol, double atol = 0.0) {
  return std::fabs(a - b) <= atol + rtol * std::max(std::fabs(a), std::fabs(b));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("jscc_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace jscc::test
