#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "jscc/error.hpp"
#include "jscc/network.hpp"
#include "jscc/runspec.hpp"

namespace jscc {

struct ArchOptions {
  /// Filters in every hidden (transposed) convolution.
  int width = 64;
  /// Smallest spatial side allowed inside the generator's downsampling path.
  int min_feature_side = 4;
  /// Smallest image side accepted by the discriminator.
  int min_discriminator_side = 32;
};

/// Five convolutions; the first downsamples by two. Output: H/2 x W/2 x c.
inline NetworkSpec build_encoder(const RunSpec& spec, const ArchOptions& opt = {}) {
  if (spec.encoder_channels < 1) throw ConfigError("encoder channel count must be >= 1");
  NetworkSpec net;
  net.name = "encoder";
  net.input_shape = {spec.image_height, spec.image_width, spec.image_channels};
  net.pre_scale = 1.0 / 255.0;
  net.layers = {
      {"conv1", LayerKind::conv, 5, opt.width, 2, 2, Activation::prelu, {}},
      {"conv2", LayerKind::conv, 3, opt.width, 1, 1, Activation::prelu, {}},
      {"conv3", LayerKind::conv, 3, opt.width, 1, 1, Activation::prelu, {}},
      {"conv4", LayerKind::conv, 3, opt.width, 1, 1, Activation::prelu, {}},
      {"conv5", LayerKind::conv, 3, spec.encoder_channels, 1, 1, Activation::prelu, {}},
  };
  return net;
}

/// U-Net decoder: upsample to the source size, descend three stride-2 levels,
/// climb back with transposed convolutions fed by same-resolution skips, and
/// project to the image channels through a sigmoid. A skip_source is consumed
/// (concatenated) at the input of the layer that names it.
inline NetworkSpec build_generator(const RunSpec& spec, const ArchOptions& opt = {}) {
  const int h = spec.image_height, w = spec.image_width;
  if (h % 8 != 0 || w % 8 != 0)
    throw ConfigError("generator needs image sides divisible by 8, got " + std::to_string(h) +
                      "x" + std::to_string(w));
  if (h / 8 < opt.min_feature_side || w / 8 < opt.min_feature_side)
    throw ConfigError("generator downsampling path would fall to " + std::to_string(h / 8) + "x" +
                      std::to_string(w / 8) + ", below the " +
                      std::to_string(opt.min_feature_side) + "x" +
                      std::to_string(opt.min_feature_side) + " floor (images must be at least " +
                      std::to_string(8 * opt.min_feature_side) + " pixels per side)");
  NetworkSpec net;
  net.name = "generator";
  net.input_shape = {spec.encoder_out_height, spec.encoder_out_width, spec.encoder_channels};
  net.post_scale = 255.0;
  const int k = opt.width;
  net.layers = {
      {"tconv1", LayerKind::transposed_conv, 3, k, 2, 2, Activation::relu, {}},
      {"conv1", LayerKind::conv, 3, k, 2, 2, Activation::leaky_relu, {}},
      {"conv2", LayerKind::conv, 3, k, 2, 2, Activation::leaky_relu, {}},
      {"conv3", LayerKind::conv, 3, k, 2, 2, Activation::leaky_relu, {}},
      {"tconv2", LayerKind::transposed_conv, 3, k, 2, 2, Activation::relu, {}},
      {"tconv3", LayerKind::transposed_conv, 3, k, 2, 2, Activation::relu, "conv2"},
      {"tconv4", LayerKind::transposed_conv, 3, k, 2, 2, Activation::relu, "conv1"},
      {"tconv5", LayerKind::transposed_conv, 3, spec.image_channels, 1, 1, Activation::sigmoid,
       "tconv1"},
  };
  return net;
}

/// Patch discriminator over pixel-scale images; emits a map of per-patch
/// probabilities.
inline NetworkSpec build_discriminator(const InputShape& input, const ArchOptions& opt = {}) {
  if (input.height < opt.min_discriminator_side || input.width < opt.min_discriminator_side)
    throw ConfigError("discriminator input " + std::to_string(input.height) + "x" +
                      std::to_string(input.width) + " is smaller than " +
                      std::to_string(opt.min_discriminator_side) + "x" +
                      std::to_string(opt.min_discriminator_side));
  NetworkSpec net;
  net.name = "discriminator";
  net.input_shape = input;
  net.pre_scale = 1.0 / 255.0;
  net.layers = {
      {"conv1", LayerKind::conv, 4, 64, 2, 2, Activation::leaky_relu, {}},
      {"conv2", LayerKind::conv, 4, 128, 2, 2, Activation::leaky_relu, {}},
      {"conv3", LayerKind::conv, 4, 256, 2, 2, Activation::leaky_relu, {}},
      {"conv4", LayerKind::conv, 4, 512, 1, 1, Activation::leaky_relu, {}},
      {"conv5", LayerKind::conv, 4, 1, 1, 1, Activation::sigmoid, {}},
  };
  return net;
}

/// Mean of a patch-score map: the discriminator's final decision.
template <typename T>
T discriminator_decision(std::span<const T> score_map) {
  if (score_map.empty()) throw ShapeError("empty discriminator score map");
  T sum = T(0);
  for (T v : score_map) sum += v;
  return sum / static_cast<T>(score_map.size());
}

/// One decision per batch element.
template <typename T>
std::vector<T> discriminator_decisions(const Tensor<T>& score_maps) {
  std::vector<T> out;
  out.reserve(score_maps.shape().n);
  for (int n = 0; n < score_maps.shape().n; ++n) out.push_back(discriminator_decision(score_maps.image(n)));
  return out;
}

}  // namespace jscc
