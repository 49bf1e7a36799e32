#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jscc/adam.hpp"
#include "jscc/checkpoint.hpp"
#include "jscc/dataio.hpp"
#include "jscc/losses.hpp"
#include "jscc/pipeline.hpp"

namespace jscc {

/// The three sequential cGAN updates of one minibatch.
enum class CganStage { outer_mse, generator, discriminator };

struct TrainOptions {
  ArchOptions arch;
  /// cGAN only: when false, only the outer MSE update runs.
  bool adversarial_updates = true;
  /// Run directory receiving train_log.csv (and checkpoints via save()). Empty: no files.
  std::filesystem::path run_dir;
  /// Called after each cGAN sub-update; used to audit gradient routing.
  std::function<void(CganStage)> observer;
  /// Consecutive steps with mean D(x) outside [0.02, 0.98] before a stability warning.
  int collapse_window = 500;
  std::ostream* progress = nullptr;
};

struct StepRecord {
  std::int64_t step = 0;
  int epoch = 0;
  LossBundle losses;
  double d_real = 0.0;       // batch mean of patch-averaged D(x)
  double d_fake = 0.0;       // from the single forward pass, before the updates
  double d_fake_post = 0.0;  // recomputed after the generator update
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean objective per epoch (L_C, or L_C2 for cGAN)
  std::vector<StepRecord> steps;
  int collapse_warnings = 0;
};

inline std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Owns one (r, gamma) training run: parameters, optimizers, channel RNG and
/// data cursor. Implements the joint G-UNet update and the three-stage cGAN
/// update; the baseline trains with the G-UNet update on MSE alone.
template <typename T>
class Trainer {
 public:
  Trainer(const RunSpec& spec, const TrainConfig& cfg, Method method, const DatasetHandle& data,
          TrainOptions opts = {})
      : spec_(spec), cfg_(cfg), method_(method), data_(&data), opts_(std::move(opts)),
        model_(spec, method, opts_.arch) {
    cfg_.validate();
    if (method_ == Method::baseline) {
      cfg_.lambda_mse = 1.0;
      cfg_.lambda_ssim = 0.0;
    }
    check_data();
    Rng enc_rng = make_rng(cfg_.seed, "init/encoder");
    model_.encoder().initialize(enc_rng);
    Rng dec_rng = make_rng(cfg_.seed, "init/decoder");
    model_.decoder().initialize(dec_rng);
    if (method_ == Method::cgan) {
      disc_.emplace(build_discriminator({spec.image_height, spec.image_width, spec.image_channels}, opts_.arch));
      Rng d_rng = make_rng(cfg_.seed, "init/discriminator");
      disc_->initialize(d_rng);
      opt_disc_ = Adam<T>(disc_->params(), cfg_.learning_rate);
    }
    opt_enc_ = Adam<T>(model_.encoder().params(), cfg_.learning_rate);
    opt_dec_ = Adam<T>(model_.decoder().params(), cfg_.learning_rate);
    channel_rng_ = make_rng(cfg_.seed, "channel/train");
    open_log(false);
  }

  /// Resumes a run from a directory written by save().
  static Trainer resume(const std::filesystem::path& dir, const DatasetHandle& data, TrainOptions opts = {}) {
    const nlohmann::json m = read_manifest(dir);
    const RunSpec spec = spec_from_manifest(m);
    TrainConfig cfg = config_from_manifest(m);
    opts.arch.width = manifest_field<int>(m, "width");
    const Method method = parse_method(manifest_field<std::string>(m, "method"));
    if (opts.run_dir.empty()) opts.run_dir = dir;
    Trainer t(spec, cfg, method, data, Trainer::NoLog{}, std::move(opts));
    t.load_state(dir, m);
    t.open_log(true);
    return t;
  }

  const RunSpec& spec() const { return spec_; }
  const TrainConfig& config() const { return cfg_; }
  Method method() const { return method_; }
  JsccModel<T>& model() { return model_; }
  const JsccModel<T>& model() const { return model_; }
  Network<T>* discriminator() { return disc_ ? &*disc_ : nullptr; }
  std::int64_t step_count() const { return step_; }
  int epoch() const { return epoch_; }
  std::size_t cursor() const { return cursor_; }
  const std::optional<StepRecord>& last_step() const { return last_; }

  /// One minibatch update.
  StepRecord step() {
    if (cursor_ == 0) order_ = data_->epoch_order(cfg_.seed, epoch_);
    const std::size_t n = data_->size();
    const std::size_t end = std::min(n, cursor_ + static_cast<std::size_t>(cfg_.batch_size));
    std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
    const ImageBatch<T> x = data_->batch<T>(idx);

    StepRecord rec;
    rec.step = step_;
    rec.epoch = epoch_;
    if (method_ == Method::cgan)
      cgan_step(x, rec);
    else
      joint_step(x, rec);

    cursor_ = end;
    if (cursor_ >= n) {
      cursor_ = 0;
      ++epoch_;
    }
    ++step_;
    write_log(rec);
    last_ = rec;
    return rec;
  }

  /// Runs until `cfg.epochs` complete epochs have been processed.
  TrainResult run() {
    TrainResult result;
    int collapse_streak = 0;
    double acc = 0.0;
    std::size_t count = 0;
    int current = epoch_;
    while (epoch_ < cfg_.epochs) {
      const StepRecord r = step();
      result.steps.push_back(r);
      acc += method_ == Method::cgan ? r.losses.l_mse : r.losses.l_combined;
      ++count;
      if (method_ == Method::cgan) {
        if (r.d_real < 0.02 || r.d_real > 0.98) {
          if (++collapse_streak == opts_.collapse_window) {
            ++result.collapse_warnings;
            std::cerr << "warning: discriminator output D(x)=" << r.d_real << " stayed saturated for "
                      << opts_.collapse_window << " steps (step " << r.step << ")\n";
            collapse_streak = 0;
          }
        } else {
          collapse_streak = 0;
        }
      }
      if (epoch_ != current) {
        result.epoch_loss.push_back(acc / static_cast<double>(count));
        if (opts_.progress)
          *opts_.progress << to_string(method_) << " epoch " << current + 1 << "/" << cfg_.epochs
                          << " loss " << result.epoch_loss.back() << std::endl;
        acc = 0.0;
        count = 0;
        current = epoch_;
      }
    }
    return result;
  }

  /// Writes manifest.json, inference weights and the resumable training state.
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    write_params(dir / "encoder.bin", model_.encoder().params());
    write_params(dir / "decoder.bin", model_.decoder().params());
    {
      std::ofstream os(dir / "state.bin", std::ios::binary);
      auto put = [&](const ParamStore<T>& p) {
        for (const auto& t : p.tensors) os.write(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(T));
      };
      put(opt_enc_.m); put(opt_enc_.v);
      put(opt_dec_.m); put(opt_dec_.v);
      if (disc_) {
        put(disc_->params());
        put(opt_disc_.m); put(opt_disc_.v);
      }
    }
    nlohmann::json m;
    m["method"] = to_string(method_);
    m["dataset"] = spec_.dataset_id;
    m["bcr"] = spec_.bcr_target;
    m["bcr_effective"] = spec_.bcr_effective;
    m["snr_train_db"] = spec_.snr_train_db;
    m["avg_power"] = spec_.avg_power;
    m["image_height"] = spec_.image_height;
    m["image_width"] = spec_.image_width;
    m["image_channels"] = spec_.image_channels;
    m["encoder_channels"] = spec_.encoder_channels;
    m["width"] = opts_.arch.width;
    m["epoch"] = epoch_;
    m["step"] = step_;
    m["cursor"] = cursor_;
    m["seed"] = cfg_.seed;
    m["epochs"] = cfg_.epochs;
    m["batch_size"] = cfg_.batch_size;
    m["learning_rate"] = cfg_.learning_rate;
    m["lambda_mse"] = cfg_.lambda_mse;
    m["lambda_ssim"] = cfg_.lambda_ssim;
    m["lambda_l1"] = cfg_.lambda_l1;
    m["nonsaturating_gan"] = cfg_.nonsaturating_gan;
    m["adam_steps"] = {opt_enc_.steps, opt_dec_.steps, disc_ ? opt_disc_.steps : 0};
    std::ostringstream rng_state;
    rng_state << channel_rng_;
    m["rng_state"] = rng_state.str();
    nlohmann::json last = nullptr;
    if (last_) {
      last = {{"l_mse", last_->losses.l_mse},   {"l_ssim", last_->losses.l_ssim},
              {"l_combined", last_->losses.l_combined}, {"l_gen", last_->losses.l_gen},
              {"l_disc", last_->losses.l_disc}, {"l_l1", last_->losses.l_l1}};
    }
    m["metrics_last"] = last;
    std::ofstream os(dir / "manifest.json");
    os << m.dump(2) << "\n";
  }

  static RunSpec spec_from_manifest(const nlohmann::json& m) {
    return RunSpec::make(manifest_field<std::string>(m, "dataset"), manifest_field<int>(m, "image_height"),
                         manifest_field<int>(m, "image_width"), manifest_field<int>(m, "image_channels"),
                         manifest_field<double>(m, "bcr"), manifest_field<double>(m, "snr_train_db"),
                         m.value("avg_power", 1.0));
  }

  static TrainConfig config_from_manifest(const nlohmann::json& m) {
    TrainConfig c;
    c.epochs = manifest_field<int>(m, "epochs");
    c.batch_size = manifest_field<int>(m, "batch_size");
    c.learning_rate = manifest_field<double>(m, "learning_rate");
    c.lambda_mse = manifest_field<double>(m, "lambda_mse");
    c.lambda_ssim = manifest_field<double>(m, "lambda_ssim");
    c.lambda_l1 = manifest_field<double>(m, "lambda_l1");
    c.seed = manifest_field<std::uint64_t>(m, "seed");
    c.nonsaturating_gan = m.value("nonsaturating_gan", false);
    c.snr_set = {manifest_field<double>(m, "snr_train_db")};
    c.bcr_set = {manifest_field<double>(m, "bcr")};
    return c;
  }

 private:
  struct NoLog {};
  Trainer(const RunSpec& spec, const TrainConfig& cfg, Method method, const DatasetHandle& data, NoLog,
          TrainOptions opts)
      : spec_(spec), cfg_(cfg), method_(method), data_(&data), opts_(std::move(opts)),
        model_(spec, method, opts_.arch) {
    check_data();
    if (method_ == Method::cgan)
      disc_.emplace(build_discriminator({spec.image_height, spec.image_width, spec.image_channels}, opts_.arch));
  }

  void check_data() const {
    if (data_->size() == 0) throw IngestionError("training dataset is empty");
    if (data_->height() != spec_.image_height || data_->width() != spec_.image_width ||
        data_->channels() != spec_.image_channels)
      throw ContractError("dataset geometry " + std::to_string(data_->height()) + "x" +
                          std::to_string(data_->width()) + "x" + std::to_string(data_->channels()) +
                          " does not match the run's " + std::to_string(spec_.image_height) + "x" +
                          std::to_string(spec_.image_width) + "x" + std::to_string(spec_.image_channels));
  }

  void load_state(const std::filesystem::path& dir, const nlohmann::json& m) {
    read_params(dir / "encoder.bin", model_.encoder().params());
    read_params(dir / "decoder.bin", model_.decoder().params());
    opt_enc_ = Adam<T>(model_.encoder().params(), cfg_.learning_rate);
    opt_dec_ = Adam<T>(model_.decoder().params(), cfg_.learning_rate);
    if (disc_) opt_disc_ = Adam<T>(disc_->params(), cfg_.learning_rate);
    std::ifstream is(dir / "state.bin", std::ios::binary);
    if (!is) throw LoadError("missing " + (dir / "state.bin").string());
    auto get = [&](ParamStore<T>& p) {
      for (auto& t : p.tensors) is.read(reinterpret_cast<char*>(t.data()), t.size() * sizeof(T));
    };
    get(opt_enc_.m); get(opt_enc_.v);
    get(opt_dec_.m); get(opt_dec_.v);
    if (disc_) {
      get(disc_->params());
      get(opt_disc_.m); get(opt_disc_.v);
    }
    if (!is) throw LoadError((dir / "state.bin").string() + " is truncated");
    const auto steps = manifest_field<std::vector<std::int64_t>>(m, "adam_steps");
    if (steps.size() != 3) throw LoadError("manifest field 'adam_steps' must have three entries");
    opt_enc_.steps = steps[0];
    opt_dec_.steps = steps[1];
    opt_disc_.steps = steps[2];
    epoch_ = manifest_field<int>(m, "epoch");
    step_ = manifest_field<std::int64_t>(m, "step");
    cursor_ = manifest_field<std::size_t>(m, "cursor");
    std::istringstream rs(manifest_field<std::string>(m, "rng_state"));
    rs >> channel_rng_;
    if (!rs) throw LoadError("manifest field 'rng_state' is corrupt");
    if (cursor_ != 0) order_ = data_->epoch_order(cfg_.seed, epoch_);
  }

  void open_log(bool append) {
    if (opts_.run_dir.empty()) return;
    std::filesystem::create_directories(opts_.run_dir);
    const auto path = opts_.run_dir / "train_log.csv";
    const bool exists = std::filesystem::exists(path);
    log_ = std::make_shared<std::ofstream>(path, append ? std::ios::app : std::ios::trunc);
    if (!append || !exists) *log_ << "step,epoch,l_mse,l_ssim,l_combined,l_gen,l_disc,l_l1\n";
    if (method_ == Method::cgan) {
      const auto gpath = opts_.run_dir / "gan_log.csv";
      const bool gexists = std::filesystem::exists(gpath);
      gan_log_ = std::make_shared<std::ofstream>(gpath, append ? std::ios::app : std::ios::trunc);
      if (!append || !gexists) *gan_log_ << "step,d_real,d_fake,d_fake_post\n";
    }
  }

  void write_log(const StepRecord& r) {
    if (log_) {
      const auto& l = r.losses;
      *log_ << r.step << "," << r.epoch << "," << fmt_num(l.l_mse) << "," << fmt_num(l.l_ssim) << ","
            << fmt_num(l.l_combined) << "," << fmt_num(l.l_gen) << "," << fmt_num(l.l_disc) << ","
            << fmt_num(l.l_l1) << "\n";
      log_->flush();
    }
    if (gan_log_) {
      *gan_log_ << r.step << "," << fmt_num(r.d_real) << "," << fmt_num(r.d_fake) << ","
                << fmt_num(r.d_fake_post) << "\n";
      gan_log_->flush();
    }
  }

  static double grad_norm(const ParamStore<T>& g) {
    double s = 0.0;
    for (const auto& t : g.tensors)
      for (T v : t) s += static_cast<double>(v) * v;
    return std::sqrt(s);
  }

  [[noreturn]] void numerical_abort(const StepRecord& rec, const ParamStore<T>* ge, const ParamStore<T>* gd) const {
    std::ostringstream os;
    const auto& l = rec.losses;
    os << "non-finite loss at step " << rec.step << " (epoch " << rec.epoch << "): l_mse=" << l.l_mse
       << " l_ssim=" << l.l_ssim << " l_combined=" << l.l_combined << " l_gen=" << l.l_gen
       << " l_disc=" << l.l_disc << " l_l1=" << l.l_l1;
    if (ge) os << " |grad_encoder|=" << grad_norm(*ge);
    if (gd) os << " |grad_decoder|=" << grad_norm(*gd);
    throw NumericalError(os.str());
  }

  // Encode, normalize, corrupt, decode, minimize L_C jointly over encoder and decoder.
  void joint_step(const ImageBatch<T>& x, StepRecord& rec) {
    const auto noise = draw_channel_noise<T>(x.batch(), model_.symbols_per_image(), spec_.noise_variance(),
                                             channel_rng_);
    PipelineCache<T> cache;
    const ImageBatch<T> x_hat = model_.forward(x, noise, &cache);
    Tensor<T> g;
    combined_loss(x.to_unit(), x_hat, cfg_.lambda_mse, cfg_.lambda_ssim, &g, &rec.losses);
    auto ge = model_.encoder().params().zeros_like();
    auto gd = model_.decoder().params().zeros_like();
    if (!rec.losses.finite()) numerical_abort(rec, nullptr, nullptr);
    model_.backward(cache, g, ge, gd);
    if (!std::isfinite(grad_norm(ge)) || !std::isfinite(grad_norm(gd))) numerical_abort(rec, &ge, &gd);
    opt_enc_.step(model_.encoder().params(), ge);
    opt_dec_.step(model_.decoder().params(), gd);
  }

  std::vector<double> decisions(const Tensor<T>& maps) const {
    std::vector<double> d;
    for (T v : discriminator_decisions(maps)) d.push_back(static_cast<double>(v));
    return d;
  }

  // Spreads d loss / d decision_i uniformly over image i's score map.
  static Tensor<T> spread_decision_grad(const Tensor<T>& maps, const std::vector<double>& g) {
    Tensor<T> out(maps.shape());
    const double inv = 1.0 / static_cast<double>(maps.shape().image_size());
    for (int n = 0; n < maps.shape().n; ++n)
      for (auto& v : out.image(n)) v = static_cast<T>(g[n] * inv);
    return out;
  }

  // (i) encoder + generator descend MSE; (ii) generator descends the
  // adversarial + L1 loss; (iii) discriminator descends the negated GAN loss.
  // (i) and (ii) use gradients from the single forward pass; (iii) rescores
  // the generator output produced after (ii).
  void cgan_step(const ImageBatch<T>& x, StepRecord& rec) {
    Network<T>& D = *disc_;
    const auto noise = draw_channel_noise<T>(x.batch(), model_.symbols_per_image(), spec_.noise_variance(),
                                             channel_rng_);
    PipelineCache<T> cache;
    const ImageBatch<T> x_unit = x.to_unit();
    const ImageBatch<T> x_hat = model_.forward(x, noise, &cache);

    ForwardCache<T> d_real_cache, d_fake_cache;
    const Tensor<T> real_maps = D.forward_images(x, &d_real_cache);
    const Tensor<T> fake_maps = D.forward_images(x_hat, &d_fake_cache);
    const std::vector<double> d_real = decisions(real_maps);
    const std::vector<double> d_fake = decisions(fake_maps);
    rec.d_real = mean(d_real);
    rec.d_fake = mean(d_fake);

    LossBundle& l = rec.losses;
    Tensor<T> g_mse;
    l.l_mse = mse_loss(x_unit, x_hat, &g_mse);
    l.l_combined = l.l_mse;
    l.l_ssim = ssim_loss(x_unit, x_hat);
    l.l_gan = gan_loss(d_real, d_fake);
    auto ge = model_.encoder().params().zeros_like();
    auto gd_outer = model_.decoder().params().zeros_like();
    model_.backward(cache, g_mse, ge, gd_outer);

    auto gd_inner = model_.decoder().params().zeros_like();
    if (opts_.adversarial_updates) {
      std::vector<double> g_dec;
      const double adv = generator_adversarial(d_fake, cfg_.nonsaturating_gan, &g_dec);
      auto scratch = D.params().zeros_like();
      Tensor<T> g_xhat = D.backward(d_fake_cache, spread_decision_grad(fake_maps, g_dec), scratch, true);
      Tensor<T> g_l1;
      l.l_l1 = cfg_.lambda_l1 * l1_loss(x_unit, x_hat, &g_l1);
      l.l_gen = adv + l.l_l1;
      for (std::size_t i = 0; i < g_xhat.size(); ++i) g_xhat[i] += static_cast<T>(cfg_.lambda_l1) * g_l1[i];
      model_.decoder().backward(cache.decoder, g_xhat, gd_inner, false);
    } else {
      l.l_l1 = cfg_.lambda_l1 * l1_loss(x_unit, x_hat);
      l.l_gen = generator_adversarial(d_fake, cfg_.nonsaturating_gan) + l.l_l1;
    }
    if (!l.finite()) numerical_abort(rec, &ge, &gd_outer);

    opt_enc_.step(model_.encoder().params(), ge);
    opt_dec_.step(model_.decoder().params(), gd_outer);
    if (opts_.observer) opts_.observer(CganStage::outer_mse);
    if (!opts_.adversarial_updates) {
      l.l_disc = discriminator_loss(d_real, d_fake);
      rec.d_fake_post = rec.d_fake;
      return;
    }

    opt_dec_.step(model_.decoder().params(), gd_inner);
    if (opts_.observer) opts_.observer(CganStage::generator);

    // Received symbols are unchanged (encoder fixed in the inner stage); rerun the generator only.
    ForwardCache<T> g_cache;
    const Tensor<T> dec_in = cache.decoder.inputs.front();
    const ImageBatch<T> x_hat_post{model_.decoder().forward(dec_in, &g_cache), PixelScale::unit};
    ForwardCache<T> d_post_cache;
    const Tensor<T> post_maps = D.forward_images(x_hat_post, &d_post_cache);
    const std::vector<double> d_fake_post = decisions(post_maps);
    rec.d_fake_post = mean(d_fake_post);
    std::vector<double> g_real, g_fake;
    l.l_disc = discriminator_loss(d_real, d_fake_post, &g_real, &g_fake);
    auto gdisc = D.params().zeros_like();
    D.backward(d_real_cache, spread_decision_grad(real_maps, g_real), gdisc, false);
    D.backward(d_post_cache, spread_decision_grad(post_maps, g_fake), gdisc, false);
    if (!std::isfinite(l.l_disc) || !std::isfinite(grad_norm(gdisc))) numerical_abort(rec, &ge, &gd_inner);
    opt_disc_.step(D.params(), gdisc);
    if (opts_.observer) opts_.observer(CganStage::discriminator);
  }

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }

  RunSpec spec_;
  TrainConfig cfg_;
  Method method_;
  const DatasetHandle* data_;
  TrainOptions opts_;
  JsccModel<T> model_;
  std::optional<Network<T>> disc_;
  Adam<T> opt_enc_, opt_dec_, opt_disc_;
  Rng channel_rng_;
  int epoch_ = 0;
  std::size_t cursor_ = 0;
  std::int64_t step_ = 0;
  std::vector<std::size_t> order_;
  std::optional<StepRecord> last_;
  std::shared_ptr<std::ofstream> log_, gan_log_;
};

/// Trains one G-UNet run end to end and saves it to opts.run_dir when set.
template <typename T = float>
TrainResult train_g_unet(const RunSpec& spec, const TrainConfig& cfg, const DatasetHandle& data,
                         TrainOptions opts = {}) {
  Trainer<T> t(spec, cfg, Method::g_unet, data, opts);
  TrainResult r = t.run();
  if (!opts.run_dir.empty()) t.save(opts.run_dir);
  return r;
}

template <typename T = float>
TrainResult train_cgan(const RunSpec& spec, const TrainConfig& cfg, const DatasetHandle& data,
                       TrainOptions opts = {}) {
  Trainer<T> t(spec, cfg, Method::cgan, data, opts);
  TrainResult r = t.run();
  if (!opts.run_dir.empty()) t.save(opts.run_dir);
  return r;
}

/// Inference-only view of a checkpoint: encoder and decoder, never the discriminator.
struct LoadedModel {
  JsccModel<float> model;
  nlohmann::json manifest;
};

/// Loads a checkpoint for evaluation. When `expected` is given its geometry
/// must match the stored run.
inline LoadedModel load_checkpoint(const std::filesystem::path& dir, const RunSpec* expected = nullptr) {
  const nlohmann::json m = read_manifest(dir);
  const RunSpec spec = Trainer<float>::spec_from_manifest(m);
  if (expected && (expected->image_height != spec.image_height || expected->image_width != spec.image_width ||
                   expected->image_channels != spec.image_channels ||
                   expected->encoder_channels != spec.encoder_channels))
    throw LoadError("checkpoint " + dir.string() + " geometry " + std::to_string(spec.image_height) + "x" +
                    std::to_string(spec.image_width) + "x" + std::to_string(spec.image_channels) + " c=" +
                    std::to_string(spec.encoder_channels) + " does not match the requested run");
  ArchOptions arch;
  arch.width = manifest_field<int>(m, "width");
  LoadedModel lm{JsccModel<float>(spec, parse_method(manifest_field<std::string>(m, "method")), arch), m};
  read_params(dir / "encoder.bin", lm.model.encoder().params());
  read_params(dir / "decoder.bin", lm.model.decoder().params());
  return lm;
}

}  // namespace jscc
