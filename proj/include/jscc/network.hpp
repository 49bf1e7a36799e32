#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jscc/conv.hpp"
#include "jscc/error.hpp"
#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

enum class LayerKind { conv, transposed_conv };
enum class Activation { prelu, relu, leaky_relu, sigmoid, none };

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kPreluInit = 0.25;
inline constexpr double kInitStddev = 0.02;

inline const char* to_string(LayerKind k) { return k == LayerKind::conv ? "conv" : "tconv"; }

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::prelu: return "prelu";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::none: return "none";
  }
  return "?";
}

/// One (transposed) convolution: F x F x K with stride S_h x S_w.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::conv;
  int kernel = 3;
  int filters = 1;
  int stride_h = 1;
  int stride_w = 1;
  Activation activation = Activation::none;
  /// Output of this earlier layer is concatenated (channel-wise) to this layer's input.
  std::optional<std::string> skip_source;
};

struct InputShape {
  int height = 0;
  int width = 0;
  int channels = 0;
};

/// A layer with its shape chain resolved.
struct ResolvedLayer {
  int in_channels = 0;       // including concatenated skip features
  int nominal_in_channels = 0;  // from the preceding layer alone
  int skip_channels = 0;
  int skip_index = -1;
  int in_h = 0, in_w = 0;
  int out_h = 0, out_w = 0;
  int out_channels = 0;

  PatchGeometry geometry(LayerKind kind, const LayerSpec& l) const {
    if (kind == LayerKind::conv)
      return PatchGeometry::same(in_channels, in_h, in_w, out_h, out_w, l.kernel, l.stride_h,
                                 l.stride_w);
    return PatchGeometry::same(out_channels, out_h, out_w, in_h, in_w, l.kernel, l.stride_h,
                               l.stride_w);
  }
};

struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  InputShape input_shape;
  std::optional<double> pre_scale;
  std::optional<double> post_scale;

  int find_layer(const std::string& layer_name) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].name == layer_name) return static_cast<int>(i);
    return -1;
  }

  /// Walks the shape chain; throws ShapeError naming the first inconsistent layer.
  std::vector<ResolvedLayer> resolve() const {
    if (layers.empty()) throw ShapeError(name + ": network has no layers");
    if (input_shape.height < 1 || input_shape.width < 1 || input_shape.channels < 1)
      throw ShapeError(name + ": invalid input shape");
    std::vector<ResolvedLayer> out;
    out.reserve(layers.size());
    int h = input_shape.height, w = input_shape.width, c = input_shape.channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const LayerSpec& l = layers[i];
      if (l.kernel < 1 || l.filters < 1 || l.stride_h < 1 || l.stride_w < 1)
        throw ShapeError(name + "/" + l.name + ": kernel, filters and strides must be >= 1");
      ResolvedLayer r;
      r.nominal_in_channels = c;
      r.in_h = h;
      r.in_w = w;
      if (l.skip_source) {
        const int s = find_layer(*l.skip_source);
        if (s < 0 || s >= static_cast<int>(i))
          throw ShapeError(name + "/" + l.name + ": skip source '" + *l.skip_source +
                           "' is not an earlier layer");
        if (out[s].out_h != h || out[s].out_w != w)
          throw ShapeError(name + "/" + l.name + ": skip source '" + *l.skip_source +
                           "' has spatial size " + std::to_string(out[s].out_h) + "x" +
                           std::to_string(out[s].out_w) + ", layer input is " +
                           std::to_string(h) + "x" + std::to_string(w));
        r.skip_index = s;
        r.skip_channels = out[s].out_channels;
      }
      r.in_channels = c + r.skip_channels;
      if (l.kind == LayerKind::conv) {
        r.out_h = (h + l.stride_h - 1) / l.stride_h;
        r.out_w = (w + l.stride_w - 1) / l.stride_w;
      } else {
        r.out_h = h * l.stride_h;
        r.out_w = w * l.stride_w;
      }
      r.out_channels = l.filters;
      out.push_back(r);
      h = r.out_h;
      w = r.out_w;
      c = r.out_channels;
    }
    return out;
  }

  InputShape output_shape() const {
    const auto r = resolve();
    return {r.back().out_h, r.back().out_w, r.back().out_channels};
  }
};

/// Named flat parameter tensors. Gradients and optimizer moments share the layout.
template <typename T>
struct ParamStore {
  std::vector<std::string> names;
  std::vector<std::vector<T>> tensors;

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
  ParamStore zeros_like() const {
    ParamStore z;
    z.names = names;
    for (const auto& t : tensors) z.tensors.emplace_back(t.size(), T(0));
    return z;
  }
  void zero() {
    for (auto& t : tensors) std::fill(t.begin(), t.end(), T(0));
  }
  bool operator==(const ParamStore&) const = default;
};

struct LayerSlots {
  int weight = -1;
  int bias = -1;
  int alpha = -1;
};

template <typename T>
struct ForwardCache {
  std::vector<Tensor<T>> inputs;  // per layer, after skip concatenation
  std::vector<Tensor<T>> pre;     // pre-activation
  std::vector<Tensor<T>> outputs;
};

template <typename T>
class Network {
 public:
  Network() = default;

  explicit Network(NetworkSpec spec) : spec_(std::move(spec)), resolved_(spec_.resolve()) {
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      const LayerSpec& l = spec_.layers[i];
      const ResolvedLayer& r = resolved_[i];
      LayerSlots s;
      s.weight = add_tensor(l.name + "/kernel",
                            static_cast<std::size_t>(r.in_channels) * r.out_channels * l.kernel * l.kernel);
      s.bias = add_tensor(l.name + "/bias", static_cast<std::size_t>(r.out_channels));
      if (l.activation == Activation::prelu)
        s.alpha = add_tensor(l.name + "/alpha", static_cast<std::size_t>(r.out_channels));
      slots_.push_back(s);
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<ResolvedLayer>& resolved() const { return resolved_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }
  const std::vector<LayerSlots>& slots() const { return slots_; }
  std::size_t forward_calls() const { return forward_calls_; }

  /// Truncated-normal kernels (|w| <= 2 sd), zero biases, PReLU slopes at 0.25.
  void initialize(Rng& rng) {
    std::normal_distribution<double> normal(0.0, kInitStddev);
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      for (auto& v : params_.tensors[slots_[i].weight]) {
        double d;
        do d = normal(rng);
        while (std::abs(d) > 2.0 * kInitStddev);
        v = static_cast<T>(d);
      }
      std::fill(params_.tensors[slots_[i].bias].begin(), params_.tensors[slots_[i].bias].end(), T(0));
      if (slots_[i].alpha >= 0)
        std::fill(params_.tensors[slots_[i].alpha].begin(), params_.tensors[slots_[i].alpha].end(),
                  static_cast<T>(kPreluInit));
    }
  }

  Shape input_tensor_shape(int batch) const {
    return {batch, spec_.input_shape.channels, spec_.input_shape.height, spec_.input_shape.width};
  }
  Shape output_tensor_shape(int batch) const {
    const auto& r = resolved_.back();
    return {batch, r.out_channels, r.out_h, r.out_w};
  }

  /// Runs the layer chain. `input` is already in the network's working range;
  /// use forward_images for pixel-scale inputs that need the pre-scale.
  /// With `disable_skips` the concatenated skip features are replaced by zeros.
  Tensor<T> forward(const Tensor<T>& input, ForwardCache<T>* cache = nullptr,
                    bool disable_skips = false) const {
    ++forward_calls_;
    const Shape expect = input_tensor_shape(input.shape().n);
    if (input.shape() != expect)
      throw ShapeError(spec_.name + "/" + spec_.layers.front().name + ": expected input " +
                       expect.str() + ", got " + input.shape().str());
    const int batch = input.shape().n;
    ForwardCache<T> local;
    ForwardCache<T>& c = cache ? *cache : local;
    const std::size_t L = spec_.layers.size();
    c.inputs.assign(L, {});
    c.pre.assign(L, {});
    c.outputs.assign(L, {});
    std::vector<T> scratch;
    for (std::size_t i = 0; i < L; ++i) {
      const LayerSpec& l = spec_.layers[i];
      const ResolvedLayer& r = resolved_[i];
      const Tensor<T>& prev = i == 0 ? input : c.outputs[i - 1];
      Tensor<T>& in = c.inputs[i];
      if (r.skip_index >= 0) {
        in = Tensor<T>(Shape{batch, r.in_channels, r.in_h, r.in_w});
        const Tensor<T>& skip = c.outputs[r.skip_index];
        for (int n = 0; n < batch; ++n) {
          auto dst = in.image(n);
          auto a = prev.image(n);
          std::copy(a.begin(), a.end(), dst.begin());
          if (!disable_skips) {
            auto b = skip.image(n);
            std::copy(b.begin(), b.end(), dst.begin() + a.size());
          }
        }
      } else {
        in = prev;
      }
      Tensor<T>& pre = c.pre[i];
      pre = Tensor<T>(Shape{batch, r.out_channels, r.out_h, r.out_w});
      const PatchGeometry g = r.geometry(l.kind, l);
      auto weight = std::span<const T>(params_.tensors[slots_[i].weight]);
      auto bias = std::span<const T>(params_.tensors[slots_[i].bias]);
      for (int n = 0; n < batch; ++n) {
        if (l.kind == LayerKind::conv)
          conv_forward<T>(g, r.out_channels, weight, bias, in.image(n).data(), pre.image(n).data(),
                          scratch);
        else
          tconv_forward<T>(g, r.in_channels, weight, bias, in.image(n).data(),
                           pre.image(n).data(), scratch);
      }
      c.outputs[i] = pre;
      apply_activation(i, c.outputs[i]);
    }
    return c.outputs.back();
  }

  /// Pixel-scale images pass through the pre-scale; unit images skip it.
  Tensor<T> forward_images(const ImageBatch<T>& images, ForwardCache<T>* cache = nullptr) const {
    if (images.scale == PixelScale::pixel_255 && spec_.pre_scale) {
      Tensor<T> scaled = images.data;
      for (auto& v : scaled.values()) v *= static_cast<T>(*spec_.pre_scale);
      return forward(scaled, cache);
    }
    return forward(images.data, cache);
  }

  /// Backpropagates `grad_output` through a cached forward pass, accumulating
  /// parameter gradients into `grads`. Returns the gradient w.r.t. the
  /// network input when `want_input_grad` is set, else an empty tensor.
  Tensor<T> backward(const ForwardCache<T>& cache, const Tensor<T>& grad_output,
                     ParamStore<T>& grads, bool want_input_grad = true) const {
    const std::size_t L = spec_.layers.size();
    if (cache.outputs.size() != L) throw ShapeError(spec_.name + ": backward without forward cache");
    if (grad_output.shape() != cache.outputs.back().shape())
      throw ShapeError(spec_.name + ": output gradient shape " + grad_output.shape().str() +
                       " does not match output " + cache.outputs.back().shape().str());
    const int batch = grad_output.shape().n;
    std::vector<Tensor<T>> gout(L);
    gout[L - 1] = grad_output;
    Tensor<T> grad_input;
    std::vector<T> scratch;
    for (std::size_t ii = L; ii-- > 0;) {
      const LayerSpec& l = spec_.layers[ii];
      const ResolvedLayer& r = resolved_[ii];
      Tensor<T> gpre = std::move(gout[ii]);
      activation_backward(ii, cache.pre[ii], cache.outputs[ii], gpre, grads);

      const bool need_in = ii > 0 || want_input_grad;
      Tensor<T> gin;
      if (need_in) gin = Tensor<T>(cache.inputs[ii].shape());
      const PatchGeometry g = r.geometry(l.kind, l);
      auto weight = std::span<const T>(params_.tensors[slots_[ii].weight]);
      auto gw = std::span<T>(grads.tensors[slots_[ii].weight]);
      auto gb = std::span<T>(grads.tensors[slots_[ii].bias]);
      for (int n = 0; n < batch; ++n) {
        T* gi = need_in ? gin.image(n).data() : nullptr;
        if (l.kind == LayerKind::conv)
          conv_backward<T>(g, r.out_channels, weight, cache.inputs[ii].image(n).data(),
                           gpre.image(n).data(), gw, gb, gi, scratch);
        else
          tconv_backward<T>(g, r.in_channels, weight, cache.inputs[ii].image(n).data(),
                            gpre.image(n).data(), gw, gb, gi, scratch);
      }
      if (!need_in) break;

      // Split the concatenated input gradient between predecessor and skip source.
      Tensor<T> gprev(Shape{batch, r.nominal_in_channels, r.in_h, r.in_w});
      for (int n = 0; n < batch; ++n) {
        auto src = gin.image(n);
        auto dst = gprev.image(n);
        std::copy(src.begin(), src.begin() + dst.size(), dst.begin());
        if (r.skip_index >= 0) {
          Tensor<T>& gs = gout[r.skip_index];
          if (gs.empty()) gs = Tensor<T>(cache.outputs[r.skip_index].shape());
          auto sk = gs.image(n);
          for (std::size_t j = 0; j < sk.size(); ++j) sk[j] += src[dst.size() + j];
        }
      }
      if (ii == 0) {
        grad_input = std::move(gprev);
      } else if (gout[ii - 1].empty()) {
        gout[ii - 1] = std::move(gprev);
      } else {
        auto& acc = gout[ii - 1].values();
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += gprev[j];
      }
    }
    return grad_input;
  }

 private:
  int add_tensor(std::string name, std::size_t size) {
    params_.names.push_back(std::move(name));
    params_.tensors.emplace_back(size, T(0));
    return static_cast<int>(params_.tensors.size() - 1);
  }

  void apply_activation(std::size_t i, Tensor<T>& t) const {
    const Activation a = spec_.layers[i].activation;
    auto& v = t.values();
    switch (a) {
      case Activation::none: break;
      case Activation::relu:
        for (auto& x : v) x = x > T(0) ? x : T(0);
        break;
      case Activation::leaky_relu:
        for (auto& x : v) x = x > T(0) ? x : static_cast<T>(kLeakySlope) * x;
        break;
      case Activation::sigmoid:
        for (auto& x : v) x = T(1) / (T(1) + std::exp(-x));
        break;
      case Activation::prelu: {
        const auto& alpha = params_.tensors[slots_[i].alpha];
        const Shape s = t.shape();
        const std::size_t plane = s.plane();
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c) {
            T* p = t.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) p[j] = p[j] > T(0) ? p[j] : alpha[c] * p[j];
          }
        break;
      }
    }
  }

  // Converts a gradient w.r.t. the activation output into one w.r.t. its input, in place.
  void activation_backward(std::size_t i, const Tensor<T>& pre, const Tensor<T>& out,
                           Tensor<T>& g, ParamStore<T>& grads) const {
    const Activation a = spec_.layers[i].activation;
    auto& gv = g.values();
    const auto& pv = pre.values();
    const auto& ov = out.values();
    switch (a) {
      case Activation::none: break;
      case Activation::relu:
        for (std::size_t j = 0; j < gv.size(); ++j)
          if (pv[j] <= T(0)) gv[j] = T(0);
        break;
      case Activation::leaky_relu:
        for (std::size_t j = 0; j < gv.size(); ++j)
          if (pv[j] <= T(0)) gv[j] *= static_cast<T>(kLeakySlope);
        break;
      case Activation::sigmoid:
        for (std::size_t j = 0; j < gv.size(); ++j) gv[j] *= ov[j] * (T(1) - ov[j]);
        break;
      case Activation::prelu: {
        const auto& alpha = params_.tensors[slots_[i].alpha];
        auto& galpha = grads.tensors[slots_[i].alpha];
        const Shape s = g.shape();
        const std::size_t plane = s.plane();
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
              const T x = pv[off + j];
              if (x <= T(0)) {
                galpha[c] += gv[off + j] * x;
                gv[off + j] *= alpha[c];
              }
            }
          }
        break;
      }
    }
  }

  NetworkSpec spec_;
  std::vector<ResolvedLayer> resolved_;
  ParamStore<T> params_;
  std::vector<LayerSlots> slots_;
  mutable std::size_t forward_calls_ = 0;
};

/// Copies parameters across precisions (e.g. float checkpoints into a double gradient check).
template <typename To, typename From>
void copy_params(const ParamStore<From>& src, ParamStore<To>& dst) {
  if (src.tensors.size() != dst.tensors.size()) throw ShapeError("parameter layout mismatch");
  for (std::size_t i = 0; i < src.tensors.size(); ++i) {
    if (src.tensors[i].size() != dst.tensors[i].size())
      throw ShapeError("parameter '" + src.names[i] + "' size mismatch");
    for (std::size_t j = 0; j < src.tensors[i].size(); ++j)
      dst.tensors[i][j] = static_cast<To>(src.tensors[i][j]);
  }
}

}  // namespace jscc
