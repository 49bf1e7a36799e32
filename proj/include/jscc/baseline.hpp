#pragma once

#include <utility>

#include "jscc/nets.hpp"

namespace jscc {

/// No-skip symmetric autoencoder used as the ablation reference ("baseline").
/// The encoder is the regular JSCC encoder; the decoder mirrors it with five
/// transposed convolutions and no skip connections.
inline std::pair<NetworkSpec, NetworkSpec> build_baseline(const RunSpec& spec,
                                                          const ArchOptions& opt = {}) {
  NetworkSpec encoder = build_encoder(spec, opt);
  NetworkSpec decoder;
  decoder.name = "baseline_decoder";
  decoder.input_shape = {spec.encoder_out_height, spec.encoder_out_width, spec.encoder_channels};
  decoder.post_scale = 255.0;
  const int k = opt.width;
  decoder.layers = {
      {"tconv1", LayerKind::transposed_conv, 3, k, 2, 2, Activation::relu, {}},
      {"tconv2", LayerKind::transposed_conv, 3, k, 1, 1, Activation::relu, {}},
      {"tconv3", LayerKind::transposed_conv, 3, k, 1, 1, Activation::relu, {}},
      {"tconv4", LayerKind::transposed_conv, 3, k, 1, 1, Activation::relu, {}},
      {"tconv5", LayerKind::transposed_conv, 3, spec.image_channels, 1, 1, Activation::sigmoid, {}},
  };
  return {std::move(encoder), std::move(decoder)};
}

}  // namespace jscc
