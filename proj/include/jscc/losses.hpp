#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "jscc/error.hpp"
#include "jscc/metrics.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

inline constexpr double kLogEpsilon = 1e-7;

/// Per-step values of every training objective; unused terms stay 0.
struct LossBundle {
  double l_mse = 0.0;
  double l_ssim = 0.0;
  double l_combined = 0.0;
  double l_gan = 0.0;
  double l_gen = 0.0;
  double l_l1 = 0.0;
  double l_disc = 0.0;

  bool finite() const {
    return std::isfinite(l_mse) && std::isfinite(l_ssim) && std::isfinite(l_combined) &&
           std::isfinite(l_gan) && std::isfinite(l_gen) && std::isfinite(l_l1) && std::isfinite(l_disc);
  }
};

namespace detail {
template <typename T>
void require_unit_pair(const ImageBatch<T>& x, const ImageBatch<T>& y, const char* what) {
  require_same_shape(x, y, what);
  require_scale(x, PixelScale::unit, what);
  require_scale(y, PixelScale::unit, what);
}

inline double clamp_prob(double p) { return std::clamp(p, kLogEpsilon, 1.0 - kLogEpsilon); }
}  // namespace detail

/// Mean squared error over every pixel and batch element. `grad` receives d/d(x_hat).
template <typename T>
double mse_loss(const ImageBatch<T>& x, const ImageBatch<T>& x_hat, Tensor<T>* grad = nullptr) {
  detail::require_unit_pair(x, x_hat, "mse_loss");
  const std::size_t n = x.data.size();
  if (grad) *grad = Tensor<T>(x.shape());
  double se = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x_hat.data[i]) - static_cast<double>(x.data[i]);
    se += d * d;
    if (grad) (*grad)[i] = static_cast<T>(2.0 * d / static_cast<double>(n));
  }
  return se / static_cast<double>(n);
}

/// Mean absolute error; the subgradient at equality is 0.
template <typename T>
double l1_loss(const ImageBatch<T>& x, const ImageBatch<T>& x_hat, Tensor<T>* grad = nullptr) {
  detail::require_unit_pair(x, x_hat, "l1_loss");
  const std::size_t n = x.data.size();
  if (grad) *grad = Tensor<T>(x.shape());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x_hat.data[i]) - static_cast<double>(x.data[i]);
    s += std::abs(d);
    if (grad) (*grad)[i] = static_cast<T>((d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / static_cast<double>(n));
  }
  return s / static_cast<double>(n);
}

/// 1 - SSIM at unit dynamic range, shared with the SSIM metric.
template <typename T>
double ssim_loss(const ImageBatch<T>& x, const ImageBatch<T>& x_hat, Tensor<T>* grad = nullptr) {
  detail::require_unit_pair(x, x_hat, "ssim_loss");
  const double s = ssim_value(x, x_hat, SsimParams::for_range(1.0), grad);
  if (grad)
    for (auto& v : grad->values()) v = -v;
  return 1.0 - s;
}

/// lambda_mse * MSE + lambda_ssim * (1 - SSIM).
template <typename T>
double combined_loss(const ImageBatch<T>& x, const ImageBatch<T>& x_hat, double lambda_mse,
                     double lambda_ssim, Tensor<T>* grad = nullptr, LossBundle* parts = nullptr) {
  if (lambda_mse < 0.0 || lambda_ssim < 0.0) throw ConfigError("loss weights must be >= 0");
  if (!(lambda_mse + lambda_ssim > 0.0)) throw ConfigError("at least one loss weight must be positive");
  Tensor<T> g_mse, g_ssim;
  const double mse = mse_loss(x, x_hat, grad ? &g_mse : nullptr);
  double ssim_term = 0.0;
  const bool need_ssim = lambda_ssim != 0.0 || parts != nullptr;
  if (need_ssim) ssim_term = ssim_loss(x, x_hat, (grad && lambda_ssim != 0.0) ? &g_ssim : nullptr);
  if (grad) {
    *grad = Tensor<T>(x.shape());
    for (std::size_t i = 0; i < grad->size(); ++i) {
      double v = lambda_mse * g_mse[i];
      if (lambda_ssim != 0.0) v += lambda_ssim * g_ssim[i];
      (*grad)[i] = static_cast<T>(v);
    }
  }
  const double total = lambda_ssim == 0.0 ? lambda_mse * mse : lambda_mse * mse + lambda_ssim * ssim_term;
  if (parts) {
    parts->l_mse = mse;
    parts->l_ssim = ssim_term;
    parts->l_combined = total;
  }
  return total;
}

/// E[log D(x)] + E[log(1 - D(G(z)))] with batch means over patch-averaged decisions.
inline double gan_loss(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw ContractError("gan_loss: empty decision batch");
  double a = 0.0, b = 0.0;
  for (double p : d_real) a += std::log(detail::clamp_prob(p));
  for (double p : d_fake) b += std::log(1.0 - detail::clamp_prob(p));
  return a / d_real.size() + b / d_fake.size();
}

inline double gan_loss(double d_real, double d_fake) {
  return gan_loss(std::span<const double>(&d_real, 1), std::span<const double>(&d_fake, 1));
}

/// Adversarial part of the generator objective: E[log(1 - D(G(z)))], or the
/// non-saturating -E[log D(G(z))]. `grad` receives d/d(d_fake_i).
inline double generator_adversarial(std::span<const double> d_fake, bool nonsaturating = false,
                                    std::vector<double>* grad = nullptr) {
  if (d_fake.empty()) throw ContractError("generator loss: empty decision batch");
  const double inv = 1.0 / static_cast<double>(d_fake.size());
  double s = 0.0;
  if (grad) grad->assign(d_fake.size(), 0.0);
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    const double p = detail::clamp_prob(d_fake[i]);
    const bool clamped = p != d_fake[i];
    if (nonsaturating) {
      s -= std::log(p);
      if (grad && !clamped) (*grad)[i] = -inv / p;
    } else {
      s += std::log(1.0 - p);
      if (grad && !clamped) (*grad)[i] = -inv / (1.0 - p);
    }
  }
  return s * inv;
}

/// Adversarial term + lambda_l1 * mean |x - x_hat|.
template <typename T>
double generator_loss(std::span<const double> d_fake, const ImageBatch<T>& x,
                      const ImageBatch<T>& x_hat, double lambda_l1, bool nonsaturating = false) {
  if (lambda_l1 < 0.0) throw ConfigError("lambda_l1 must be >= 0");
  const double adv = generator_adversarial(d_fake, nonsaturating);
  return lambda_l1 == 0.0 ? adv : adv + lambda_l1 * l1_loss(x, x_hat);
}

template <typename T>
double generator_loss(double d_fake, const ImageBatch<T>& x, const ImageBatch<T>& x_hat,
                      double lambda_l1, bool nonsaturating = false) {
  return generator_loss(std::span<const double>(&d_fake, 1), x, x_hat, lambda_l1, nonsaturating);
}

/// -(E[log D(x)] + E[log(1 - D(G(z)))]); minimizing it maximizes the GAN loss.
/// Gradients are w.r.t. each decision.
inline double discriminator_loss(std::span<const double> d_real, std::span<const double> d_fake,
                                 std::vector<double>* grad_real = nullptr,
                                 std::vector<double>* grad_fake = nullptr) {
  const double v = -gan_loss(d_real, d_fake);
  if (grad_real) {
    grad_real->assign(d_real.size(), 0.0);
    for (std::size_t i = 0; i < d_real.size(); ++i) {
      const double p = detail::clamp_prob(d_real[i]);
      if (p == d_real[i]) (*grad_real)[i] = -1.0 / (p * d_real.size());
    }
  }
  if (grad_fake) {
    grad_fake->assign(d_fake.size(), 0.0);
    for (std::size_t i = 0; i < d_fake.size(); ++i) {
      const double p = detail::clamp_prob(d_fake[i]);
      if (p == d_fake[i]) (*grad_fake)[i] = 1.0 / ((1.0 - p) * d_fake.size());
    }
  }
  return v;
}

inline double discriminator_loss(double d_real, double d_fake) {
  return discriminator_loss(std::span<const double>(&d_real, 1), std::span<const double>(&d_fake, 1));
}

}  // namespace jscc
