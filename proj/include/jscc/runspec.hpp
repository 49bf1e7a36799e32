#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "jscc/error.hpp"

namespace jscc {

/// Noise variance per complex symbol for a channel SNR in dB at unit power.
inline double snr_to_noise_variance(double snr_db) {
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
  return std::pow(10.0, -snr_db / 10.0);
}

struct Dimensions {
  std::int64_t source_dim = 0;      // n
  std::int64_t channel_dim = 0;     // k = floor(r n)
  std::int64_t encoder_channels = 0;  // c
  std::int64_t effective_symbols = 0;  // c H_O W_O / 2
  double bcr_effective = 0.0;
};

/// Channel dimension and encoder width for a target bandwidth ratio.
///
/// The encoder halves each side once, so it emits H/2 x W/2 x c reals which
/// pack into c H W / 8 complex symbols. The floor on c never exceeds the
/// target budget k; the difference is reported through bcr_effective.
inline Dimensions derive_dimensions(double r, int height, int width, int channels) {
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("bcr must lie in (0, 1], got " + std::to_string(r));
  if (height <= 0 || width <= 0 || channels <= 0)
    throw ConfigError("image dimensions must be positive");
  if (height % 2 != 0 || width % 2 != 0) throw ConfigError("image height and width must be even");

  Dimensions d;
  d.source_dim = std::int64_t{height} * width * channels;
  // The epsilon absorbs representation error of ratios like 1/12.
  d.channel_dim = static_cast<std::int64_t>(std::floor(r * static_cast<double>(d.source_dim) + 1e-9));
  const std::int64_t out_pixels = std::int64_t{height / 2} * (width / 2);
  d.encoder_channels = (2 * d.channel_dim) / out_pixels;
  // Complex packing needs an even number of reals.
  if ((d.encoder_channels * out_pixels) % 2 != 0) --d.encoder_channels;
  if (d.encoder_channels < 1) {
    const std::int64_t k_min = out_pixels % 2 == 0 ? out_pixels / 2 : out_pixels;
    std::ostringstream msg;
    msg << "bcr " << r << " yields zero encoder channels for " << height << "x" << width << "x"
        << channels << "; minimum feasible bcr is " << k_min << "/" << d.source_dim << " = "
        << static_cast<double>(k_min) / static_cast<double>(d.source_dim);
    throw ConfigError(msg.str());
  }
  d.effective_symbols = d.encoder_channels * out_pixels / 2;
  d.bcr_effective = static_cast<double>(d.encoder_channels * out_pixels) /
                    static_cast<double>(2 * d.source_dim);
  return d;
}

/// One (dataset, r, gamma) configuration with all derived geometry.
struct RunSpec {
  std::string dataset_id;
  int image_height = 0;
  int image_width = 0;
  int image_channels = 3;
  double bcr_target = 0.0;
  double snr_train_db = 0.0;
  double avg_power = 1.0;
  int encoder_out_height = 0;
  int encoder_out_width = 0;
  std::int64_t source_dim = 0;
  std::int64_t channel_dim = 0;
  int encoder_channels = 0;
  std::int64_t effective_symbols = 0;
  double bcr_effective = 0.0;

  static RunSpec make(std::string dataset_id, int height, int width, int channels, double bcr,
                      double snr_train_db, double avg_power = 1.0) {
    if (!std::isfinite(snr_train_db)) throw ConfigError("snr_train_db must be finite");
    if (!(avg_power > 0.0)) throw ConfigError("average power must be positive");
    const Dimensions d = derive_dimensions(bcr, height, width, channels);
    RunSpec s;
    s.dataset_id = std::move(dataset_id);
    s.image_height = height;
    s.image_width = width;
    s.image_channels = channels;
    s.bcr_target = bcr;
    s.snr_train_db = snr_train_db;
    s.avg_power = avg_power;
    s.encoder_out_height = height / 2;
    s.encoder_out_width = width / 2;
    s.source_dim = d.source_dim;
    s.channel_dim = d.channel_dim;
    s.encoder_channels = static_cast<int>(d.encoder_channels);
    s.effective_symbols = d.effective_symbols;
    s.bcr_effective = d.bcr_effective;
    return s;
  }

  double noise_variance() const { return snr_to_noise_variance(snr_train_db); }
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 1;
  double learning_rate = 1e-3;
  double lambda_mse = 0.9;
  double lambda_ssim = 0.1;
  double lambda_l1 = 100.0;
  std::vector<double> snr_set{10.0};
  std::vector<double> bcr_set{1.0 / 12.0};
  std::uint64_t seed = 0;
  /// Use -log D(G(z)) instead of log(1 - D(G(z))) for the generator.
  bool nonsaturating_gan = false;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning_rate must be > 0");
    if (lambda_mse < 0.0 || lambda_ssim < 0.0) throw ConfigError("loss weights must be >= 0");
    if (!(lambda_mse + lambda_ssim > 0.0))
      throw ConfigError("lambda_mse + lambda_ssim must be > 0");
    if (lambda_l1 < 0.0) throw ConfigError("lambda_l1 must be >= 0");
  }
};

/// Training grid in the nesting order of the training loops: bcr outer, snr inner.
inline std::vector<std::pair<double, double>> expand_grid(const std::vector<double>& bcrs,
                                                          const std::vector<double>& snrs) {
  if (bcrs.empty()) throw ConfigError("bcr list is empty");
  if (snrs.empty()) throw ConfigError("snr list is empty");
  std::vector<std::pair<double, double>> grid;
  grid.reserve(bcrs.size() * snrs.size());
  for (double r : bcrs)
    for (double g : snrs) grid.emplace_back(r, g);
  return grid;
}

}  // namespace jscc
