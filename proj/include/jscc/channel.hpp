#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "jscc/error.hpp"
#include "jscc/rng.hpp"

namespace jscc {

/// Complex channel symbols; when `normalized`, sum |z_i|^2 == k * avg_power.
template <typename T>
struct ChannelSymbolVector {
  std::vector<std::complex<T>> symbols;
  double avg_power = 1.0;
  bool normalized = false;

  std::size_t size() const { return symbols.size(); }
  double energy() const {
    double e = 0.0;
    for (const auto& s : symbols) e += std::norm(std::complex<double>(s.real(), s.imag()));
    return e;
  }
};

/// First half of `v` holds real parts, second half imaginary parts.
template <typename T>
std::vector<std::complex<T>> pack_complex(std::span<const T> v) {
  if (v.size() % 2 != 0)
    throw ShapeError("pack_complex needs an even-length input, got " + std::to_string(v.size()));
  const std::size_t m = v.size() / 2;
  std::vector<std::complex<T>> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = {v[i], v[m + i]};
  return z;
}

template <typename T>
std::vector<T> unpack_real(std::span<const std::complex<T>> z) {
  const std::size_t m = z.size();
  std::vector<T> v(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    v[i] = z[i].real();
    v[m + i] = z[i].imag();
  }
  return v;
}

/// z = sqrt(k P) * z_tilde / ||z_tilde||.
template <typename T>
ChannelSymbolVector<T> power_normalize(std::span<const std::complex<T>> z_tilde, double avg_power,
                                       std::size_t k) {
  if (k != z_tilde.size())
    throw ContractError("power_normalize: k=" + std::to_string(k) + " but vector has " +
                        std::to_string(z_tilde.size()) + " symbols");
  double energy = 0.0;
  for (const auto& s : z_tilde) energy += std::norm(std::complex<double>(s.real(), s.imag()));
  if (!(energy > 0.0) || !std::isfinite(energy))
    throw NumericalError("power_normalize: symbol vector has zero or non-finite norm");
  const double scale = std::sqrt(static_cast<double>(k) * avg_power / energy);
  ChannelSymbolVector<T> out;
  out.avg_power = avg_power;
  out.normalized = true;
  out.symbols.resize(z_tilde.size());
  for (std::size_t i = 0; i < z_tilde.size(); ++i)
    out.symbols[i] = {static_cast<T>(z_tilde[i].real() * scale),
                      static_cast<T>(z_tilde[i].imag() * scale)};
  return out;
}

/// Power normalization on the paired-real representation (2k reals for k symbols).
/// Returns the applied scale sqrt(k P)/||v||.
template <typename T>
double power_normalize_real(std::span<const T> v, double avg_power, std::span<T> out) {
  if (v.size() % 2 != 0) throw ShapeError("paired-real symbol vector must have even length");
  double energy = 0.0;
  for (T x : v) energy += static_cast<double>(x) * static_cast<double>(x);
  if (!(energy > 0.0) || !std::isfinite(energy))
    throw NumericalError("power_normalize: symbol vector has zero or non-finite norm");
  const double k = static_cast<double>(v.size() / 2);
  const double scale = std::sqrt(k * avg_power / energy);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<T>(v[i] * scale);
  return scale;
}

/// Vector-Jacobian product of power_normalize_real:
/// dL/dv = s (g - v (v.g) / ||v||^2) with s = sqrt(k P)/||v||.
template <typename T>
void power_normalize_real_backward(std::span<const T> v, double scale, std::span<const T> grad_out,
                                   std::span<T> grad_in) {
  double energy = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    energy += static_cast<double>(v[i]) * v[i];
    dot += static_cast<double>(v[i]) * grad_out[i];
  }
  const double r = dot / energy;
  for (std::size_t i = 0; i < v.size(); ++i)
    grad_in[i] = static_cast<T>(scale * (grad_out[i] - v[i] * r));
}

/// Draws circularly-symmetric complex Gaussian noise: real and imaginary
/// parts each N(0, variance/2), real part drawn first for each symbol.
template <typename T>
void draw_awgn(std::span<std::complex<T>> noise, double variance, Rng& rng) {
  if (variance < 0.0 || !std::isfinite(variance))
    throw ConfigError("noise variance must be finite and >= 0");
  if (variance == 0.0) {
    for (auto& n : noise) n = {T(0), T(0)};
    return;
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  for (auto& n : noise) {
    const double re = normal(rng);
    const double im = normal(rng);
    n = {static_cast<T>(re), static_cast<T>(im)};
  }
}

/// z_hat = z + n with n ~ CN(0, variance I).
template <typename T>
ChannelSymbolVector<T> awgn_corrupt(const ChannelSymbolVector<T>& z, double variance, Rng& rng) {
  if (variance < 0.0 || !std::isfinite(variance))
    throw ConfigError("noise variance must be finite and >= 0");
  if (!z.normalized) throw ContractError("awgn_corrupt expects a power-normalized symbol vector");
  ChannelSymbolVector<T> out = z;
  if (variance == 0.0) return out;
  std::vector<std::complex<T>> noise(z.size());
  draw_awgn<T>(noise, variance, rng);
  for (std::size_t i = 0; i < out.symbols.size(); ++i) out.symbols[i] += noise[i];
  return out;
}

/// Debug dump: little-endian float32, real[0..m) then imag[0..m).
template <typename T>
void write_csym(const std::filesystem::path& path, const ChannelSymbolVector<T>& z) {
  static_assert(std::endian::native == std::endian::little, "csym writer assumes little-endian host");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& s : z.symbols) {
    const float v = static_cast<float>(s.real());
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  for (const auto& s : z.symbols) {
    const float v = static_cast<float>(s.imag());
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
}

inline ChannelSymbolVector<float> read_csym(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<float> v;
  float x;
  while (is.read(reinterpret_cast<char*>(&x), sizeof x)) v.push_back(x);
  if (v.size() % 2 != 0) throw ShapeError(path.string() + ": odd number of floats");
  ChannelSymbolVector<float> z;
  z.symbols = pack_complex<float>(v);
  return z;
}

}  // namespace jscc
