#pragma once

#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jscc/baseline.hpp"
#include "jscc/channel.hpp"
#include "jscc/nets.hpp"
#include "jscc/network.hpp"
#include "jscc/runspec.hpp"

namespace jscc {

enum class Method { g_unet, cgan, baseline };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::g_unet: return "g_unet";
    case Method::cgan: return "cgan";
    case Method::baseline: return "baseline";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "g_unet") return Method::g_unet;
  if (s == "cgan") return Method::cgan;
  if (s == "baseline") return Method::baseline;
  throw ConfigError("unknown method '" + s + "' (expected g_unet, cgan or baseline)");
}

/// Per-image complex noise realizations for one channel use.
template <typename T>
using ChannelNoise = std::vector<std::vector<std::complex<T>>>;

template <typename T>
ChannelNoise<T> draw_channel_noise(int batch, std::size_t symbols, double variance, Rng& rng) {
  ChannelNoise<T> noise(batch, std::vector<std::complex<T>>(symbols));
  for (auto& n : noise) draw_awgn<T>(n, variance, rng);
  return noise;
}

template <typename T>
struct PipelineCache {
  ForwardCache<T> encoder;
  ForwardCache<T> decoder;
  std::vector<std::vector<T>> flat;  // per image, pre-normalization, HWC order
  std::vector<double> scales;
};

/// Encoder -> power normalization -> AWGN -> decoder for one method.
template <typename T>
class JsccModel {
 public:
  JsccModel() = default;

  JsccModel(const RunSpec& spec, Method method, const ArchOptions& arch = {})
      : spec_(spec), method_(method) {
    if (method == Method::baseline) {
      auto [e, d] = build_baseline(spec, arch);
      encoder_ = Network<T>(std::move(e));
      decoder_ = Network<T>(std::move(d));
    } else {
      encoder_ = Network<T>(build_encoder(spec, arch));
      decoder_ = Network<T>(build_generator(spec, arch));
    }
  }

  const RunSpec& spec() const { return spec_; }
  Method method() const { return method_; }
  Network<T>& encoder() { return encoder_; }
  const Network<T>& encoder() const { return encoder_; }
  Network<T>& decoder() { return decoder_; }
  const Network<T>& decoder() const { return decoder_; }

  std::size_t symbols_per_image() const { return static_cast<std::size_t>(spec_.effective_symbols); }

  void initialize(Rng& rng) {
    encoder_.initialize(rng);
    decoder_.initialize(rng);
  }

  /// Normalized channel input z for each image of a pixel-scale batch.
  std::vector<ChannelSymbolVector<T>> encode(const ImageBatch<T>& x, PipelineCache<T>* cache = nullptr) const {
    PipelineCache<T> local;
    PipelineCache<T>& c = cache ? *cache : local;
    const Tensor<T> feat = encoder_.forward_images(x, &c.encoder);
    const int batch = feat.shape().n;
    c.flat.assign(batch, {});
    c.scales.assign(batch, 0.0);
    std::vector<ChannelSymbolVector<T>> out(batch);
    for (int n = 0; n < batch; ++n) {
      c.flat[n] = to_hwc(feat, n);
      std::vector<T> normed(c.flat[n].size());
      c.scales[n] = power_normalize_real<T>(c.flat[n], spec_.avg_power, normed);
      out[n].symbols = pack_complex<T>(normed);
      out[n].avg_power = spec_.avg_power;
      out[n].normalized = true;
    }
    return out;
  }

  /// Decoder output in unit scale for received symbols.
  ImageBatch<T> decode(const std::vector<ChannelSymbolVector<T>>& received,
                       PipelineCache<T>* cache = nullptr) const {
    const int batch = static_cast<int>(received.size());
    const auto& in = decoder_.spec().input_shape;
    Tensor<T> dec_in(Shape{batch, in.channels, in.height, in.width});
    for (int n = 0; n < batch; ++n) {
      const std::vector<T> u = unpack_real<T>(received[n].symbols);
      from_hwc(u, dec_in, n);
    }
    ForwardCache<T> local;
    Tensor<T> out = decoder_.forward(dec_in, cache ? &cache->decoder : &local);
    return {std::move(out), PixelScale::unit};
  }

  /// Full pass with a given noise realization (one vector per image).
  ImageBatch<T> forward(const ImageBatch<T>& x, const ChannelNoise<T>& noise,
                        PipelineCache<T>* cache = nullptr) const {
    auto z = encode(x, cache);
    if (noise.size() != z.size()) throw ShapeError("noise batch does not match image batch");
    for (std::size_t n = 0; n < z.size(); ++n) {
      if (noise[n].size() != z[n].size()) throw ShapeError("noise length does not match symbol count");
      for (std::size_t i = 0; i < z[n].size(); ++i) z[n].symbols[i] += noise[n][i];
    }
    return decode(z, cache);
  }

  /// Backpropagates d loss / d x_hat (unit scale) into both parameter sets.
  void backward(const PipelineCache<T>& cache, const Tensor<T>& grad_xhat, ParamStore<T>& grad_encoder,
                ParamStore<T>& grad_decoder) const {
    const Tensor<T> g_dec_in = decoder_.backward(cache.decoder, grad_xhat, grad_decoder, true);
    const int batch = g_dec_in.shape().n;
    const Shape feat_shape = encoder_.output_tensor_shape(batch);
    Tensor<T> g_feat(feat_shape);
    for (int n = 0; n < batch; ++n) {
      // pack/unpack are permutations and the additive noise has identity Jacobian.
      const std::vector<T> g_flat = to_hwc(g_dec_in, n);
      std::vector<T> g_v(g_flat.size());
      power_normalize_real_backward<T>(cache.flat[n], cache.scales[n], g_flat, g_v);
      from_hwc(g_v, g_feat, n);
    }
    encoder_.backward(cache.encoder, g_feat, grad_encoder, false);
  }

  /// Row-major H x W x C flattening of one image of a C x H x W tensor.
  static std::vector<T> to_hwc(const Tensor<T>& t, int n) {
    const Shape s = t.shape();
    std::vector<T> v(s.image_size());
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) v[(static_cast<std::size_t>(h) * s.w + w) * s.c + c] = t.at(n, c, h, w);
    return v;
  }

  static void from_hwc(std::span<const T> v, Tensor<T>& t, int n) {
    const Shape s = t.shape();
    if (v.size() != s.image_size()) throw ShapeError("symbol block does not match decoder input");
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) t.at(n, c, h, w) = v[(static_cast<std::size_t>(h) * s.w + w) * s.c + c];
  }

 private:
  RunSpec spec_;
  Method method_ = Method::g_unet;
  Network<T> encoder_;
  Network<T> decoder_;
};

}  // namespace jscc
