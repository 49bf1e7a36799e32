#pragma once

#include <cmath>
#include <cstdint>

#include "jscc/network.hpp"

namespace jscc {

/// Adam with bias correction folded into the step size.
template <typename T>
struct Adam {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::int64_t steps = 0;
  ParamStore<T> m;
  ParamStore<T> v;

  Adam() = default;
  Adam(const ParamStore<T>& params, double lr) : learning_rate(lr), m(params.zeros_like()), v(params.zeros_like()) {}

  void step(ParamStore<T>& params, const ParamStore<T>& grads) {
    ++steps;
    const double lr_t = learning_rate * std::sqrt(1.0 - std::pow(beta2, static_cast<double>(steps))) /
                        (1.0 - std::pow(beta1, static_cast<double>(steps)));
    for (std::size_t t = 0; t < params.tensors.size(); ++t) {
      auto& p = params.tensors[t];
      const auto& g = grads.tensors[t];
      auto& mt = m.tensors[t];
      auto& vt = v.tensors[t];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g[i];
        mt[i] = static_cast<T>(beta1 * mt[i] + (1.0 - beta1) * gi);
        vt[i] = static_cast<T>(beta2 * vt[i] + (1.0 - beta2) * gi * gi);
        if (lr_t != 0.0) p[i] -= static_cast<T>(lr_t * mt[i] / (std::sqrt(static_cast<double>(vt[i])) + epsilon));
      }
    }
  }
};

}  // namespace jscc
