#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "jscc/error.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

/// SSIM constants and window. Defaults follow the reference implementation:
/// 11x11 Gaussian window with sd 1.5, K1 = 0.01, K2 = 0.03, unit exponents.
struct SsimParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;
  int window = 11;
  double window_sigma = 1.5;

  static SsimParams for_range(double dynamic_range) {
    SsimParams p;
    p.dynamic_range = dynamic_range;
    return p;
  }

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  double c3() const { return c2() / 2.0; }
  bool simplified() const { return alpha == 1.0 && beta == 1.0 && gamma == 1.0; }

  /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
  std::vector<double> taps() const {
    std::vector<double> g(window);
    const double mid = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
      g[i] = std::exp(-((i - mid) * (i - mid)) / (2.0 * window_sigma * window_sigma));
      sum += g[i];
    }
    for (auto& v : g) v /= sum;
    return g;
  }
};

namespace detail {

// Valid-mode separable correlation of an h x w plane with `taps` on both axes.
inline std::vector<double> filter_valid(const std::vector<double>& in, int h, int w,
                                        const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += taps[t] * in[static_cast<std::size_t>(y) * w + x + t];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += taps[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

// Adjoint of filter_valid: spreads an oh x ow map back onto the h x w plane.
inline std::vector<double> filter_adjoint(const std::vector<double>& in, int h, int w,
                                          const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      const double v = in[static_cast<std::size_t>(y) * ow + x];
      for (int t = 0; t < k; ++t) tmp[static_cast<std::size_t>(y + t) * ow + x] += taps[t] * v;
    }
  std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      const double v = tmp[static_cast<std::size_t>(y) * ow + x];
      for (int t = 0; t < k; ++t) out[static_cast<std::size_t>(y) * w + x + t] += taps[t] * v;
    }
  return out;
}

}  // namespace detail

/// Mean SSIM over all valid window positions, channels and batch elements
/// (per-channel SSIM, averaged). When `grad_y` is given it receives
/// d(mean SSIM)/dy, which requires unit exponents.
template <typename T>
double ssim_value(const ImageBatch<T>& x, const ImageBatch<T>& y, const SsimParams& params,
                  Tensor<T>* grad_y = nullptr) {
  require_same_shape(x, y, "ssim");
  const Shape s = x.shape();
  if (s.h < params.window || s.w < params.window)
    throw ContractError("ssim: image " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                        " is smaller than the " + std::to_string(params.window) + "x" +
                        std::to_string(params.window) + " window");
  if (grad_y && !params.simplified())
    throw ContractError("ssim gradient is only available with unit exponents");
  const auto taps = params.taps();
  const double c1 = params.c1(), c2 = params.c2(), c3 = params.c3();
  const int oh = s.h - params.window + 1, ow = s.w - params.window + 1;
  const std::size_t positions = static_cast<std::size_t>(oh) * ow;
  const double planes = static_cast<double>(s.n) * s.c;
  const double inv_count = 1.0 / (planes * static_cast<double>(positions));
  if (grad_y) *grad_y = Tensor<T>(s);

  const std::size_t plane = s.plane();
  std::vector<double> px(plane), py(plane), pxx(plane), pyy(plane), pxy(plane);
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double a = x.data[off + i], b = y.data[off + i];
        px[i] = a;
        py[i] = b;
        pxx[i] = a * a;
        pyy[i] = b * b;
        pxy[i] = a * b;
      }
      const auto mx = detail::filter_valid(px, s.h, s.w, taps);
      const auto my = detail::filter_valid(py, s.h, s.w, taps);
      const auto exx = detail::filter_valid(pxx, s.h, s.w, taps);
      const auto eyy = detail::filter_valid(pyy, s.h, s.w, taps);
      const auto exy = detail::filter_valid(pxy, s.h, s.w, taps);

      std::vector<double> g_mu, g_eyy, g_exy;
      if (grad_y) {
        g_mu.assign(positions, 0.0);
        g_eyy.assign(positions, 0.0);
        g_exy.assign(positions, 0.0);
      }
      for (std::size_t q = 0; q < positions; ++q) {
        const double ux = mx[q], uy = my[q];
        const double vx = exx[q] - ux * ux, vy = eyy[q] - uy * uy, cxy = exy[q] - ux * uy;
        double v;
        if (params.simplified()) {
          const double a1 = 2.0 * ux * uy + c1, a2 = 2.0 * cxy + c2;
          const double b1 = ux * ux + uy * uy + c1, b2 = vx + vy + c2;
          v = (a1 * a2) / (b1 * b2);
          if (grad_y) {
            g_mu[q] = v * (2.0 * ux / a1 - 2.0 * ux / a2 - 2.0 * uy / b1 + 2.0 * uy / b2) * inv_count;
            g_exy[q] = v * (2.0 / a2) * inv_count;
            g_eyy[q] = -v / b2 * inv_count;
          }
        } else {
          const double sx = std::sqrt(std::max(vx, 0.0)), sy = std::sqrt(std::max(vy, 0.0));
          const double lum = (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
          const double con = (2.0 * sx * sy + c2) / (vx + vy + c2);
          const double str = (cxy + c3) / (sx * sy + c3);
          v = std::pow(lum, params.alpha) * std::pow(con, params.beta) * std::pow(str, params.gamma);
        }
        total += v;
      }
      if (grad_y) {
        const auto fm = detail::filter_adjoint(g_mu, s.h, s.w, taps);
        const auto fe = detail::filter_adjoint(g_eyy, s.h, s.w, taps);
        const auto fx = detail::filter_adjoint(g_exy, s.h, s.w, taps);
        for (std::size_t i = 0; i < plane; ++i)
          (*grad_y)[off + i] = static_cast<T>(fm[i] + 2.0 * py[i] * fe[i] + px[i] * fx[i]);
      }
    }
  }
  return total * inv_count;
}

/// SSIM at the dynamic range implied by the batch scale (1 or 255).
template <typename T>
double ssim_metric(const ImageBatch<T>& x, const ImageBatch<T>& y) {
  if (x.scale != y.scale) throw ContractError("ssim: scale mismatch between images");
  return ssim_value(x, y, SsimParams::for_range(x.scale == PixelScale::unit ? 1.0 : 255.0));
}

/// 10 log10(255^2 / MSE) over the whole batch; +inf when the batch is reproduced exactly.
template <typename T>
double psnr(const ImageBatch<T>& x, const ImageBatch<T>& y) {
  require_same_shape(x, y, "psnr");
  require_scale(x, PixelScale::pixel_255, "psnr");
  require_scale(y, PixelScale::pixel_255, "psnr");
  double se = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = static_cast<double>(x.data[i]) - static_cast<double>(y.data[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(x.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

/// Per-image PSNR values for a batch.
template <typename T>
std::vector<double> psnr_per_image(const ImageBatch<T>& x, const ImageBatch<T>& y) {
  require_same_shape(x, y, "psnr");
  std::vector<double> out;
  const Shape one{1, x.shape().c, x.shape().h, x.shape().w};
  for (int n = 0; n < x.batch(); ++n) {
    ImageBatch<T> a{Tensor<T>(one), x.scale}, b{Tensor<T>(one), y.scale};
    std::copy(x.data.image(n).begin(), x.data.image(n).end(), a.data.values().begin());
    std::copy(y.data.image(n).begin(), y.data.image(n).end(), b.data.values().begin());
    out.push_back(psnr(a, b));
  }
  return out;
}

/// One row of metrics.csv.
struct MetricsReport {
  std::string run_id;
  std::string method;
  std::string dataset;
  double bcr = 0.0;
  double snr_train_db = 0.0;
  double snr_test_db = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::optional<double> lpips;
  int n_images = 0;
};

}  // namespace jscc
