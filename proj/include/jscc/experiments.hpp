#pragma once

#include <cctype>
#include <cmath>
#include <type_traits>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jscc/dataio.hpp"
#include "jscc/metrics.hpp"
#include "jscc/perceptual.hpp"
#include "jscc/pipeline.hpp"
#include "jscc/trainer.hpp"
#include "jscc/visuals.hpp"

namespace jscc {

struct EvalOptions {
  std::uint64_t seed = 0;
  /// Channel draws per image.
  int repeats = 1;
  const PerceptualModel* perceptual = nullptr;
};

struct RunKey {
  std::string method;
  std::string dataset;
  double bcr = 0.0;
  double snr_train_db = 0.0;
};

inline RunKey run_key(const LoadedModel& m) {
  return {manifest_field<std::string>(m.manifest, "method"), manifest_field<std::string>(m.manifest, "dataset"),
          manifest_field<double>(m.manifest, "bcr"), manifest_field<double>(m.manifest, "snr_train_db")};
}

inline std::string run_id(const RunKey& k) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s/%s/r%g_snr%g", k.method.c_str(), k.dataset.c_str(), k.bcr, k.snr_train_db);
  return buf;
}

/// Mean per-image PSNR/SSIM (and perceptual distance when a model is loaded)
/// over the first `n` images at the given noise variance. Noise draws come
/// from a stream fixed by the eval seed, so different SNRs and models see the
/// same standardized noise.
template <typename T>
MetricsReport evaluate_at_variance(const JsccModel<T>& model, const RunKey& key, double snr_test_db, double variance,
                                   const DatasetHandle& data, std::size_t n, const EvalOptions& opt = {}) {
  if (data.height() != model.spec().image_height || data.width() != model.spec().image_width ||
      data.channels() != model.spec().image_channels)
    throw ContractError("evaluation data geometry does not match the checkpoint");
  if (n < 1) throw ConfigError("n_eval_images must be >= 1");
  if (opt.repeats < 1) throw ConfigError("repeat count must be >= 1");
  n = std::min(n, data.size());
  Rng rng = make_rng(opt.seed, "channel/eval");
  double psnr_sum = 0.0, ssim_sum = 0.0, lpips_sum = 0.0;
  const SsimParams ssim_params = SsimParams::for_range(255.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx[1] = {i};
    const ImageBatch<T> x = data.batch<T>(idx);
    for (int r = 0; r < opt.repeats; ++r) {
      const auto noise = draw_channel_noise<T>(1, model.symbols_per_image(), variance, rng);
      const ImageBatch<T> x_hat = model.forward(x, noise).to_pixel();
      psnr_sum += psnr(x, x_hat);
      ssim_sum += ssim_value(x, x_hat, ssim_params);
      if (opt.perceptual) {
        if constexpr (std::is_same_v<T, float>) lpips_sum += opt.perceptual->distance(x, x_hat);
      }
      ++count;
    }
  }
  MetricsReport rep;
  rep.run_id = run_id(key);
  rep.method = key.method;
  rep.dataset = key.dataset;
  rep.bcr = key.bcr;
  rep.snr_train_db = key.snr_train_db;
  rep.snr_test_db = snr_test_db;
  rep.psnr_db = psnr_sum / static_cast<double>(count);
  rep.ssim = ssim_sum / static_cast<double>(count);
  if (opt.perceptual) rep.lpips = lpips_sum / static_cast<double>(count);
  rep.n_images = static_cast<int>(n);
  return rep;
}

template <typename T>
MetricsReport evaluate(const JsccModel<T>& model, const RunKey& key, double snr_test_db, const DatasetHandle& data,
                       std::size_t n, const EvalOptions& opt = {}) {
  return evaluate_at_variance(model, key, snr_test_db, snr_to_noise_variance(snr_test_db), data, n, opt);
}

/// Noiseless channel (variance 0); snr_test_db is reported as +inf.
template <typename T>
MetricsReport evaluate_noiseless(const JsccModel<T>& model, const RunKey& key, const DatasetHandle& data,
                                 std::size_t n, const EvalOptions& opt = {}) {
  return evaluate_at_variance(model, key, std::numeric_limits<double>::infinity(), 0.0, data, n, opt);
}

template <typename T>
std::vector<MetricsReport> snr_sweep(const JsccModel<T>& model, const RunKey& key,
                                     const std::vector<double>& snr_test_list, const DatasetHandle& data,
                                     std::size_t n, const EvalOptions& opt = {}) {
  if (snr_test_list.empty()) throw ConfigError("snr test list is empty");
  std::vector<MetricsReport> out;
  for (double s : snr_test_list) out.push_back(evaluate(model, key, s, data, n, opt));
  return out;
}

inline std::string sanitize(const std::string& s) {
  std::string o = s;
  for (auto& c : o)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return o;
}

/// runs/<method>/<dataset>/r<r>_snr<gamma>/
inline std::filesystem::path run_dir_for(const std::filesystem::path& runs_root, Method method,
                                         const std::string& dataset, double bcr, double snr) {
  char cell[64];
  std::snprintf(cell, sizeof cell, "r%g_snr%g", bcr, snr);
  return runs_root / to_string(method) / sanitize(dataset) / cell;
}

inline std::filesystem::path default_runs_root() {
  if (const char* env = std::getenv("JSCC_RUNS_DIR")) return env;
  return "runs";
}

struct GridOptions {
  Method method = Method::g_unet;
  std::filesystem::path runs_root = "runs";
  bool train_missing = false;
  std::size_t n_eval = 100;
  EvalOptions eval;
  TrainOptions train;
};

/// Loads the checkpoint of one (r, gamma) cell, training it first when allowed.
inline LoadedModel obtain_model(const RunSpec& spec, const TrainConfig& cfg, const DatasetHandle& train_data,
                                const GridOptions& opt) {
  const auto dir = run_dir_for(opt.runs_root, opt.method, spec.dataset_id, spec.bcr_target, spec.snr_train_db);
  if (!std::filesystem::exists(dir / "manifest.json")) {
    if (!opt.train_missing) throw MissingCheckpointError("missing checkpoint " + dir.string());
    TrainOptions t = opt.train;
    t.run_dir = dir;
    Trainer<float> trainer(spec, cfg, opt.method, train_data, t);
    trainer.run();
    trainer.save(dir);
  }
  return load_checkpoint(dir, &spec);
}

/// |train| x |test| matrix of reports: one model per training SNR, each
/// evaluated at every test SNR on the same images and noise stream.
inline std::vector<std::vector<MetricsReport>> robustness_grid(
    const std::vector<double>& snr_train_list, const std::vector<double>& snr_test_list, const RunSpec& base,
    const TrainConfig& cfg, const DatasetHandle& train_data, const DatasetHandle& test_data, const GridOptions& opt) {
  if (snr_train_list.empty() || snr_test_list.empty()) throw ConfigError("robustness grid needs non-empty SNR lists");
  if (!opt.train_missing) {
    std::string missing;
    for (double s : snr_train_list) {
      const auto dir = run_dir_for(opt.runs_root, opt.method, base.dataset_id, base.bcr_target, s);
      if (!std::filesystem::exists(dir / "manifest.json")) missing += "\n  " + dir.string();
    }
    if (!missing.empty()) throw MissingCheckpointError("missing checkpoint cells:" + missing);
  }
  std::vector<std::vector<MetricsReport>> grid;
  for (double s : snr_train_list) {
    const RunSpec spec = RunSpec::make(base.dataset_id, base.image_height, base.image_width, base.image_channels,
                                       base.bcr_target, s, base.avg_power);
    const LoadedModel lm = obtain_model(spec, cfg, train_data, opt);
    grid.push_back(snr_sweep(lm.model, run_key(lm), snr_test_list, test_data, opt.n_eval, opt.eval));
  }
  return grid;
}


struct CompareOptions {
  std::size_t n_eval = 100;
  /// Images per method row of the reconstruction grid.
  int grid_images = 8;
  /// Test SNR used for the grid row; defaults to the training SNR.
  std::optional<double> grid_snr_db;
  EvalOptions eval;
  TrainOptions train;
};

struct Comparison {
  std::vector<MetricsReport> table;
  cv::Mat grid;
};

/// Trains each method on the same data and seed, then evaluates all of them at
/// every test SNR on identical images and noise. The grid shows the originals
/// on the first row and one row of reconstructions per method.
inline Comparison compare_methods(const std::vector<std::string>& methods, const RunSpec& spec,
                                  const TrainConfig& cfg, const DatasetHandle& train_data,
                                  const DatasetHandle& test_data, const std::vector<double>& snr_test_list,
                                  const CompareOptions& opt = {}) {
  if (methods.empty()) throw ConfigError("no methods to compare");
  std::vector<Method> parsed;
  for (const auto& m : methods) parsed.push_back(parse_method(m));
  if (snr_test_list.empty()) throw ConfigError("snr test list is empty");

  Comparison out;
  const int shown = static_cast<int>(std::min<std::size_t>(opt.grid_images, test_data.size()));
  std::vector<std::size_t> idx(shown);
  for (int i = 0; i < shown; ++i) idx[i] = static_cast<std::size_t>(i);
  const ImageBatch<float> originals = test_data.batch<float>(idx);
  std::vector<ImageBatch<float>> rows{originals};
  const double grid_var = snr_to_noise_variance(opt.grid_snr_db.value_or(spec.snr_train_db));

  for (Method m : parsed) {
    TrainOptions t = opt.train;
    Trainer<float> trainer(spec, cfg, m, train_data, t);
    trainer.run();
    const RunKey key{to_string(m), spec.dataset_id, spec.bcr_target, spec.snr_train_db};
    auto reports = snr_sweep(trainer.model(), key, snr_test_list, test_data, opt.n_eval, opt.eval);
    out.table.insert(out.table.end(), reports.begin(), reports.end());
    Rng rng = make_rng(opt.eval.seed, "channel/grid");
    const auto noise = draw_channel_noise<float>(shown, trainer.model().symbols_per_image(), grid_var, rng);
    rows.push_back(trainer.model().forward(originals, noise));
  }
  out.grid = image_grid(rows);
  return out;
}

}  // namespace jscc
