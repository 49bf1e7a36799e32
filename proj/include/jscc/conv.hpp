#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace jscc {

/// Geometry of a strided, zero-padded correlation between a "wide" plane
/// (the conv input, or the transposed-conv output) and a "narrow" plane.
/// Padding follows the "same" convention: narrow = ceil(wide / stride).
struct PatchGeometry {
  int channels = 0;  // channels of the wide plane
  int wide_h = 0, wide_w = 0;
  int narrow_h = 0, narrow_w = 0;
  int kernel = 1;
  int stride_h = 1, stride_w = 1;
  int pad_top = 0, pad_left = 0;

  static PatchGeometry same(int channels, int wide_h, int wide_w, int narrow_h, int narrow_w,
                            int kernel, int stride_h, int stride_w) {
    PatchGeometry g{channels, wide_h, wide_w, narrow_h, narrow_w, kernel, stride_h, stride_w, 0, 0};
    const int pad_h = std::max((narrow_h - 1) * stride_h + kernel - wide_h, 0);
    const int pad_w = std::max((narrow_w - 1) * stride_w + kernel - wide_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
    return g;
  }

  int rows() const { return channels * kernel * kernel; }
  int cols() const { return narrow_h * narrow_w; }
};

/// Gathers kernel patches of a C x H x W plane into a (C k k) x (narrow_h narrow_w) matrix.
template <typename T>
void im2col(const PatchGeometry& g, const T* wide, T* col) {
  const int cols = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    const T* plane = wide + static_cast<std::size_t>(c) * g.wide_h * g.wide_w;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        T* row = col + (static_cast<std::size_t>(c) * g.kernel * g.kernel + ky * g.kernel + kx) * cols;
        for (int oy = 0; oy < g.narrow_h; ++oy) {
          const int iy = oy * g.stride_h - g.pad_top + ky;
          T* dst = row + oy * g.narrow_w;
          if (iy < 0 || iy >= g.wide_h) {
            std::fill(dst, dst + g.narrow_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.wide_w;
          for (int ox = 0; ox < g.narrow_w; ++ox) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            dst[ox] = (ix >= 0 && ix < g.wide_w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters (accumulates) patch rows back into the plane.
template <typename T>
void col2im(const PatchGeometry& g, const T* col, T* wide) {
  const int cols = g.cols();
  std::fill(wide, wide + static_cast<std::size_t>(g.channels) * g.wide_h * g.wide_w, T(0));
  for (int c = 0; c < g.channels; ++c) {
    T* plane = wide + static_cast<std::size_t>(c) * g.wide_h * g.wide_w;
    for (int ky = 0; ky < g.kernel; ++ky) {
      for (int kx = 0; kx < g.kernel; ++kx) {
        const T* row =
            col + (static_cast<std::size_t>(c) * g.kernel * g.kernel + ky * g.kernel + kx) * cols;
        for (int oy = 0; oy < g.narrow_h; ++oy) {
          const int iy = oy * g.stride_h - g.pad_top + ky;
          if (iy < 0 || iy >= g.wide_h) continue;
          const T* src = row + oy * g.narrow_w;
          T* dst = plane + static_cast<std::size_t>(iy) * g.wide_w;
          for (int ox = 0; ox < g.narrow_w; ++ox) {
            const int ix = ox * g.stride_w - g.pad_left + kx;
            if (ix >= 0 && ix < g.wide_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

// Convolution: wide = input (C_in planes), narrow = output.
// weight is K_out x (C_in k k), row-major.

template <typename T>
void conv_forward(const PatchGeometry& g, int out_channels, std::span<const T> weight,
                  std::span<const T> bias, const T* input, T* output, std::vector<T>& scratch) {
  scratch.resize(static_cast<std::size_t>(g.rows()) * g.cols());
  im2col(g, input, scratch.data());
  ConstMatMap<T> w(weight.data(), out_channels, g.rows());
  ConstMatMap<T> col(scratch.data(), g.rows(), g.cols());
  MatMap<T> out(output, out_channels, g.cols());
  out.noalias() = w * col;
  for (int k = 0; k < out_channels; ++k) out.row(k).array() += bias[k];
}

/// Accumulates weight/bias gradients and writes the input gradient (if requested).
template <typename T>
void conv_backward(const PatchGeometry& g, int out_channels, std::span<const T> weight,
                   const T* input, const T* grad_output, std::span<T> grad_weight,
                   std::span<T> grad_bias, T* grad_input, std::vector<T>& scratch) {
  scratch.resize(static_cast<std::size_t>(g.rows()) * g.cols());
  im2col(g, input, scratch.data());
  ConstMatMap<T> dy(grad_output, out_channels, g.cols());
  {
    ConstMatMap<T> col(scratch.data(), g.rows(), g.cols());
    MatMap<T> dw(grad_weight.data(), out_channels, g.rows());
    dw.noalias() += dy * col.transpose();
  }
  // Plain loop: Eigen's vectorized sum depends on the row's alignment.
  for (int k = 0; k < out_channels; ++k) {
    const T* row = grad_output + static_cast<std::size_t>(k) * g.cols();
    T s = T(0);
    for (int i = 0; i < g.cols(); ++i) s += row[i];
    grad_bias[k] += s;
  }
  if (grad_input != nullptr) {
    ConstMatMap<T> w(weight.data(), out_channels, g.rows());
    MatMap<T> dcol(scratch.data(), g.rows(), g.cols());
    dcol.noalias() = w.transpose() * dy;
    col2im(g, scratch.data(), grad_input);
  }
}

// Transposed convolution: wide = output (K_out planes), narrow = input.
// weight is C_in x (K_out k k), row-major, so the layer is the adjoint of a
// convolution with that weight.

template <typename T>
void tconv_forward(const PatchGeometry& g, int in_channels, std::span<const T> weight,
                   std::span<const T> bias, const T* input, T* output, std::vector<T>& scratch) {
  scratch.resize(static_cast<std::size_t>(g.rows()) * g.cols());
  ConstMatMap<T> w(weight.data(), in_channels, g.rows());
  ConstMatMap<T> x(input, in_channels, g.cols());
  MatMap<T> col(scratch.data(), g.rows(), g.cols());
  col.noalias() = w.transpose() * x;
  col2im(g, scratch.data(), output);
  const std::size_t plane = static_cast<std::size_t>(g.wide_h) * g.wide_w;
  for (int k = 0; k < g.channels; ++k) {
    T* p = output + k * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += bias[k];
  }
}

template <typename T>
void tconv_backward(const PatchGeometry& g, int in_channels, std::span<const T> weight,
                    const T* input, const T* grad_output, std::span<T> grad_weight,
                    std::span<T> grad_bias, T* grad_input, std::vector<T>& scratch) {
  const std::size_t plane = static_cast<std::size_t>(g.wide_h) * g.wide_w;
  for (int k = 0; k < g.channels; ++k) {
    const T* p = grad_output + k * plane;
    T s = T(0);
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    grad_bias[k] += s;
  }
  scratch.resize(static_cast<std::size_t>(g.rows()) * g.cols());
  im2col(g, grad_output, scratch.data());
  ConstMatMap<T> dcol(scratch.data(), g.rows(), g.cols());
  ConstMatMap<T> x(input, in_channels, g.cols());
  MatMap<T> dw(grad_weight.data(), in_channels, g.rows());
  dw.noalias() += x * dcol.transpose();
  if (grad_input != nullptr) {
    ConstMatMap<T> w(weight.data(), in_channels, g.rows());
    MatMap<T> dx(grad_input, in_channels, g.cols());
    dx.noalias() = w * dcol;
  }
}

}  // namespace jscc
