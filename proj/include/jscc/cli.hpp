#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jscc/config.hpp"
#include "jscc/dataio.hpp"
#include "jscc/experiments.hpp"
#include "jscc/flops.hpp"
#include "jscc/perceptual.hpp"
#include "jscc/report_io.hpp"
#include "jscc/trainer.hpp"
#include "jscc/visuals.hpp"

namespace jscc {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_data = 3,
  exit_numerical = 4,
  exit_missing_checkpoint = 5,
};

namespace cli {

/// Flags shared by the verbs that build a run configuration.
struct RunFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> dataset, method;
  std::optional<int> epochs, batch_size, width;
  std::optional<double> learning_rate, lambda_mse, lambda_ssim, lambda_l1, split_fraction;
  std::optional<std::string> bcr;
  std::vector<double> snr_train;
  std::optional<std::uint64_t> seed;
  std::string data_root;

  void add_to(CLI::App& app, bool with_training = true) {
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "Config override key=value (repeatable)");
    app.add_option("--dataset", dataset, "cifar10 | cifar10-mini | synthetic-200 | synthetic:<n>@<H>x<W> | folder:<path>@<H>x<W>");
    app.add_option("--method", method, "g_unet | cgan | baseline");
    app.add_option("--bcr", bcr, "Bandwidth compression ratio, e.g. 1/12");
    app.add_option("--seed", seed, "Root seed for every random stream");
    app.add_option("--data-root", data_root, "CIFAR-10 directory (overrides JSCC_CIFAR10_ROOT)");
    app.add_option("--split-fraction", split_fraction, "Train fraction for image folders");
    app.add_option("--width", width, "Feature width of the hidden layers");
    if (with_training) {
      app.add_option("--snr-train", snr_train, "Training SNR(s) in dB")->delimiter(',');
      app.add_option("--epochs", epochs, "Training epochs");
      app.add_option("--batch-size", batch_size, "Minibatch size");
      app.add_option("--lr", learning_rate, "Adam learning rate");
      app.add_option("--lambda-mse", lambda_mse);
      app.add_option("--lambda-ssim", lambda_ssim);
      app.add_option("--lambda-l1", lambda_l1);
    }
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& kv : overrides) apply_override(c, kv);
    if (dataset) c.dataset = *dataset;
    if (method) c.method = parse_method(*method);
    if (bcr) c.train.bcr_set = {parse_ratio(*bcr)};
    if (!snr_train.empty()) c.train.snr_set = snr_train;
    if (epochs) c.train.epochs = *epochs;
    if (batch_size) c.train.batch_size = *batch_size;
    if (learning_rate) c.train.learning_rate = *learning_rate;
    if (lambda_mse) c.train.lambda_mse = *lambda_mse;
    if (lambda_ssim) c.train.lambda_ssim = *lambda_ssim;
    if (lambda_l1) c.train.lambda_l1 = *lambda_l1;
    if (seed) c.train.seed = *seed;
    c.train.validate();
    return c;
  }

  DatasetOptions data_options(std::uint64_t run_seed) const {
    DatasetOptions o;
    o.cifar_root = data_root;
    if (split_fraction) o.split_fraction = *split_fraction;
    o.seed = run_seed;
    return o;
  }

  ArchOptions arch() const {
    ArchOptions a;
    if (width) {
      if (*width < 1) throw ConfigError("--width must be >= 1");
      a.width = *width;
    }
    return a;
  }
};

inline RunSpec spec_for(const RunConfig& c, const DatasetHandle& data, double bcr, double snr) {
  return RunSpec::make(c.dataset, data.height(), data.width(), data.channels(), bcr, snr, c.avg_power);
}

inline std::filesystem::path runs_root(const std::string& flag) {
  return flag.empty() ? default_runs_root() : std::filesystem::path(flag);
}

inline std::vector<std::vector<MetricsReport>> as_rows(const std::vector<MetricsReport>& r) {
  return {r};
}

inline void write_plots(const std::filesystem::path& prefix, const std::vector<MetricsReport>& rows) {
  const auto series = collect_series(rows, PlotMetric::psnr);
  if (series.empty()) return;
  std::ofstream(prefix.string() + ".svg") << render_plot_svg(series, PlotMetric::psnr);
  write_png(prefix.string() + ".png", render_plot_png(series, PlotMetric::psnr));
}

inline void print_reports(std::ostream& out, const std::vector<MetricsReport>& rows) {
  for (const auto& r : rows) {
    out << r.run_id << " snr_test=" << fmt_num(r.snr_test_db) << " psnr=" << fmt_num(r.psnr_db)
        << " ssim=" << fmt_num(r.ssim);
    if (r.lpips) out << " lpips=" << fmt_num(*r.lpips);
    out << "\n";
  }
}

struct EvalFlags {
  std::string run;
  std::vector<double> snr_test;
  std::size_t n_eval = 100;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string lpips_weights;
  std::string out;
  std::string dataset;
  std::string data_root;

  void add_to(CLI::App& app) {
    app.add_option("--run", run, "Checkpoint directory")->required();
    app.add_option("--n-eval", n_eval, "Number of test images");
    app.add_option("--repeats", repeats, "Channel draws per image");
    app.add_option("--seed", seed, "Evaluation noise seed");
    app.add_option("--lpips-weights", lpips_weights, "Perceptual feature weights file");
    app.add_option("--out", out, "Output directory");
    app.add_option("--dataset", dataset, "Evaluation data (defaults to the checkpoint's dataset)");
    app.add_option("--data-root", data_root, "CIFAR-10 directory");
  }
};

struct EvalContext {
  LoadedModel model;
  DatasetHandle test;
  std::optional<PerceptualModel> perceptual;
  EvalOptions options;
};

inline EvalContext open_eval(const EvalFlags& f) {
  if (!std::filesystem::exists(std::filesystem::path(f.run) / "manifest.json"))
    throw MissingCheckpointError("missing checkpoint " + f.run);
  if (f.n_eval < 1) throw ConfigError("--n-eval must be >= 1");
  LoadedModel lm = load_checkpoint(f.run);
  const std::string selector = f.dataset.empty() ? manifest_field<std::string>(lm.manifest, "dataset") : f.dataset;
  DatasetOptions dopt;
  dopt.cifar_root = f.data_root;
  dopt.seed = manifest_field<std::uint64_t>(lm.manifest, "seed");
  DatasetPair data = open_dataset(selector, dopt);
  EvalContext ctx{std::move(lm), std::move(data.test), std::nullopt, {}};
  if (!f.lpips_weights.empty()) {
    ctx.perceptual = PerceptualModel::load(f.lpips_weights);
    if (!ctx.perceptual) throw ConfigError("cannot read perceptual weights " + f.lpips_weights);
  }
  ctx.options.seed = f.seed;
  ctx.options.repeats = f.repeats;
  ctx.options.perceptual = ctx.perceptual ? &*ctx.perceptual : nullptr;
  return ctx;
}

inline int run_train(const RunFlags& flags, const std::string& out_flag, const std::string& runs_flag,
                     std::ostream& out) {
  const RunConfig c = flags.resolve();
  DatasetPair data = open_dataset(c.dataset, flags.data_options(c.train.seed));
  const auto grid = expand_grid(c.train.bcr_set, c.train.snr_set);
  if (!out_flag.empty() && grid.size() != 1)
    throw ConfigError("--out names a single run directory; the config expands to " + std::to_string(grid.size()) +
                      " cells");
  for (const auto& [r, g] : grid) {
    const RunSpec spec = spec_for(c, data.train, r, g);
    const auto dir = out_flag.empty() ? run_dir_for(runs_root(runs_flag), c.method, c.dataset, r, g)
                                      : std::filesystem::path(out_flag);
    TrainOptions opts;
    opts.arch = flags.arch();
    opts.run_dir = dir;
    opts.progress = &out;
    Trainer<float> trainer(spec, c.train, c.method, data.train, opts);
    const TrainResult res = trainer.run();
    trainer.save(dir);
    const auto& last = trainer.last_step()->losses;
    out << "run " << dir.string() << "\n"
        << "final epoch loss " << fmt_num(res.epoch_loss.back()) << " (l_mse " << fmt_num(last.l_mse) << ", l_ssim "
        << fmt_num(last.l_ssim);
    if (c.method == Method::cgan)
      out << ", l_gen " << fmt_num(last.l_gen) << ", l_disc " << fmt_num(last.l_disc) << ", l_l1 "
          << fmt_num(last.l_l1);
    out << ")\n";
  }
  return exit_ok;
}

inline int run_eval(const EvalFlags& f, bool noiseless, std::ostream& out) {
  EvalContext ctx = open_eval(f);
  const RunKey key = run_key(ctx.model);
  std::vector<MetricsReport> rows;
  if (noiseless) rows.push_back(evaluate_noiseless(ctx.model.model, key, ctx.test, f.n_eval, ctx.options));
  const std::vector<double> snrs =
      f.snr_test.empty() && !noiseless ? std::vector<double>{key.snr_train_db} : f.snr_test;
  for (double s : snrs) rows.push_back(evaluate(ctx.model.model, key, s, ctx.test, f.n_eval, ctx.options));
  const std::filesystem::path dir = f.out.empty() ? std::filesystem::path(f.run) / "eval" : std::filesystem::path(f.out);
  write_metrics_csv(dir / "metrics.csv", rows);

  const int shown = static_cast<int>(std::min<std::size_t>(8, ctx.test.size()));
  std::vector<std::size_t> idx(shown);
  for (int i = 0; i < shown; ++i) idx[i] = i;
  const ImageBatch<float> originals = ctx.test.batch<float>(idx);
  Rng rng = make_rng(f.seed, "channel/grid");
  const double var = noiseless && f.snr_test.empty() ? 0.0 : snr_to_noise_variance(snrs.front());
  const auto noise = draw_channel_noise<float>(shown, ctx.model.model.symbols_per_image(), var, rng);
  write_png(dir / "reconstructions.png", image_grid({originals, ctx.model.model.forward(originals, noise)}));
  print_reports(out, rows);
  out << "wrote " << (dir / "metrics.csv").string() << "\n";
  return exit_ok;
}

inline int run_sweep(const EvalFlags& f, std::ostream& out) {
  if (f.snr_test.empty()) throw ConfigError("--snr-test needs at least one value");
  EvalContext ctx = open_eval(f);
  const auto rows = snr_sweep(ctx.model.model, run_key(ctx.model), f.snr_test, ctx.test, f.n_eval, ctx.options);
  const std::filesystem::path dir = f.out.empty() ? std::filesystem::path(f.run) / "sweep" : std::filesystem::path(f.out);
  write_metrics_csv(dir / "metrics.csv", rows);
  write_plots(dir / "psnr_vs_snr", rows);
  print_reports(out, rows);
  out << "wrote " << (dir / "metrics.csv").string() << "\n";
  return exit_ok;
}

/// Trains absent cells in child processes, at most `workers` at a time.
inline int train_cells_in_workers(const std::vector<RunSpec>& cells, const RunConfig& c, const DatasetHandle& train,
                                  const TrainOptions& base, const std::filesystem::path& root, int workers) {
  std::vector<pid_t> running;
  int status_code = exit_ok;
  auto reap = [&]() {
    int status = 0;
    const pid_t pid = ::wait(&status);
    if (pid < 0) return;
    std::erase(running, pid);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : exit_failure;
    if (code != exit_ok && status_code == exit_ok) status_code = code;
  };
  for (const RunSpec& spec : cells) {
    while (static_cast<int>(running.size()) >= workers) reap();
    std::cout.flush();
    std::cerr.flush();
    const pid_t pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      int code = exit_ok;
      try {
        TrainOptions t = base;
        t.run_dir = run_dir_for(root, c.method, c.dataset, spec.bcr_target, spec.snr_train_db);
        Trainer<float> trainer(spec, c.train, c.method, train, t);
        trainer.run();
        trainer.save(t.run_dir);
      } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = exit_numerical;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        code = exit_failure;
      }
      std::cerr.flush();
      ::_exit(code);
    }
    running.push_back(pid);
  }
  while (!running.empty()) reap();
  return status_code;
}

struct RobustnessFlags {
  std::vector<double> snr_test;
  std::size_t n_eval = 100;
  int repeats = 1;
  std::uint64_t eval_seed = 0;
  bool train_missing = false;
  int workers = 1;
  std::string out;
};

inline int run_robustness(const RunFlags& flags, const RobustnessFlags& rf, const std::string& runs_flag,
                          std::ostream& out) {
  if (rf.snr_test.empty()) throw ConfigError("--snr-test needs at least one value");
  if (rf.workers < 1) throw ConfigError("--workers must be >= 1");
  const RunConfig c = flags.resolve();
  if (c.train.bcr_set.size() != 1) throw ConfigError("robustness grids take a single bcr");
  DatasetPair data = open_dataset(c.dataset, flags.data_options(c.train.seed));
  const auto root = runs_root(runs_flag);
  const RunSpec base = spec_for(c, data.train, c.train.bcr_set.front(), c.train.snr_set.front());

  GridOptions g;
  g.method = c.method;
  g.runs_root = root;
  g.train_missing = rf.train_missing;
  g.n_eval = rf.n_eval;
  g.eval.seed = rf.eval_seed;
  g.eval.repeats = rf.repeats;
  g.train.arch = flags.arch();

  if (rf.train_missing && rf.workers > 1) {
    std::vector<RunSpec> missing;
    for (double s : c.train.snr_set)
      if (!std::filesystem::exists(run_dir_for(root, c.method, c.dataset, base.bcr_target, s) / "manifest.json"))
        missing.push_back(spec_for(c, data.train, base.bcr_target, s));
    if (const int code = train_cells_in_workers(missing, c, data.train, g.train, root, rf.workers); code != exit_ok)
      return code;
  }
  const auto grid = robustness_grid(c.train.snr_set, rf.snr_test, base, c.train, data.train, data.test, g);
  std::vector<MetricsReport> rows;
  for (const auto& row : grid) rows.insert(rows.end(), row.begin(), row.end());
  char cell[64];
  std::snprintf(cell, sizeof cell, "r%g", base.bcr_target);
  const std::filesystem::path dir =
      rf.out.empty() ? root / "robustness" / to_string(c.method) / sanitize(c.dataset) / cell : std::filesystem::path(rf.out);
  write_metrics_csv(dir / "metrics.csv", rows);
  write_plots(dir / "psnr_vs_snr", rows);
  write_png(dir / "heatmap.png", render_heatmap_png(grid, PlotMetric::psnr));
  print_reports(out, rows);
  out << "wrote " << (dir / "metrics.csv").string() << "\n";
  return exit_ok;
}

inline int run_flops(const RunFlags& flags, const std::string& out_path, std::ostream& out) {
  const RunConfig c = flags.resolve();
  int h = 0, w = 0, ch = 3;
  if (c.dataset == "cifar10" || c.dataset == "cifar10-mini" || c.dataset == "synthetic-200") {
    h = w = 32;
  } else if (const auto at = c.dataset.rfind('@'); at != std::string::npos) {
    std::tie(h, w) = parse_hw(c.dataset.substr(at + 1));
  } else {
    throw ConfigError("cannot infer image geometry from dataset '" + c.dataset + "'");
  }
  const RunSpec spec = RunSpec::make(c.dataset, h, w, ch, c.train.bcr_set.front(), c.train.snr_set.front());
  std::vector<MethodFlops> all;
  for (Method m : {Method::g_unet, Method::cgan, Method::baseline}) all.push_back(method_flops(spec, m, flags.arch()));
  const std::filesystem::path path = out_path.empty() ? std::filesystem::path("flops.csv") : std::filesystem::path(out_path);
  write_flops_csv(path, all);
  for (const auto& m : all) {
    out << to_string(m.method);
    for (const auto& n : m.networks) out << " " << n.network << "=" << n.total;
    out << " total=" << m.total << "\n";
  }
  out << "wrote " << path.string() << "\n";
  return exit_ok;
}

inline int run_plot(const std::string& metrics_path, const std::string& metric_name, const std::string& out_prefix,
                    std::ostream& out) {
  const PlotMetric metric = parse_plot_metric(metric_name);
  std::vector<MetricsReport> rows;
  try {
    rows = read_metrics_csv(metrics_path);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (rows.empty()) throw ConfigError(metrics_path + " has no rows");
  const auto series = collect_series(rows, metric);
  if (series.empty()) throw ConfigError(metrics_path + " has no finite " + metric_name + " values");
  const std::string stem = metric_name + "_vs_snr";
  std::filesystem::path prefix = out_prefix.empty() ? std::filesystem::path(metrics_path).parent_path() / stem
                                                    : std::filesystem::path(out_prefix);
  // A directory (existing, or spelled with a trailing slash) receives the default file names.
  if (!out_prefix.empty() && (prefix.filename().empty() || std::filesystem::is_directory(prefix))) prefix /= stem;
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  std::ofstream(prefix.string() + ".svg") << render_plot_svg(series, metric);
  write_png(prefix.string() + ".png", render_plot_png(series, metric));
  out << "wrote " << prefix.string() << ".svg and .png (" << series.size() << " series)\n";
  return exit_ok;
}

}  // namespace cli

/// Entry point of the jscc command line tool. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Deep joint source-channel coding: training, evaluation and reports"};
  app.require_subcommand(1);
  std::string runs_flag;
  app.add_option("--runs-dir", runs_flag, "Root of run directories (default $JSCC_RUNS_DIR or ./runs)");

  cli::RunFlags train_flags;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train one model per (bcr, snr) cell");
  train_flags.add_to(*train);
  train->add_option("--out", train_out, "Run directory (single-cell configs only)");

  cli::EvalFlags eval_flags;
  bool noiseless = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint at one or more test SNRs");
  eval_flags.add_to(*eval);
  eval->add_option("--snr-test", eval_flags.snr_test, "Test SNR(s) in dB (default: training SNR)")->delimiter(',');
  eval->add_flag("--noiseless", noiseless, "Also evaluate over a noiseless channel");

  cli::EvalFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Evaluate a checkpoint across test SNRs and plot the curve");
  sweep_flags.add_to(*sweep);
  sweep->add_option("--snr-test", sweep_flags.snr_test, "Test SNRs in dB")->delimiter(',')->required();

  cli::RunFlags rob_flags;
  cli::RobustnessFlags rob;
  auto* robust = app.add_subcommand("robustness", "Train-SNR x test-SNR grid");
  rob_flags.add_to(*robust);
  robust->add_option("--snr-test", rob.snr_test, "Test SNRs in dB")->delimiter(',')->required();
  robust->add_option("--n-eval", rob.n_eval, "Number of test images");
  robust->add_option("--repeats", rob.repeats, "Channel draws per image");
  robust->add_option("--eval-seed", rob.eval_seed, "Evaluation noise seed");
  robust->add_flag("--train-missing", rob.train_missing, "Train cells without a checkpoint");
  robust->add_option("--workers", rob.workers, "Parallel training processes for missing cells");
  robust->add_option("--out", rob.out, "Output directory");

  cli::RunFlags flops_flags;
  std::string flops_out;
  int ignored_batch = 1;
  auto* flops = app.add_subcommand("flops", "Per-layer FLOPs report for every method");
  flops_flags.add_to(*flops, false);
  flops->add_option("--snr-train", flops_flags.snr_train, "Unused by the count; accepted for symmetry");
  flops->add_option("--batch-size", ignored_batch, "Has no effect on the count");
  flops->add_option("--out", flops_out, "Output CSV path (default ./flops.csv)");

  std::string plot_metrics, plot_metric = "psnr", plot_out;
  auto* plot = app.add_subcommand("plot", "Render metrics.csv as metric-vs-SNR charts");
  plot->add_option("--metrics", plot_metrics, "metrics.csv to read")->required();
  plot->add_option("--metric", plot_metric, "psnr | ssim | lpips");
  plot->add_option("--out", plot_out, "Output directory, or a path prefix that gets .png and .svg appended");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_config;
  }

  try {
    if (*train) return cli::run_train(train_flags, train_out, runs_flag, out);
    if (*eval) return cli::run_eval(eval_flags, noiseless, out);
    if (*sweep) return cli::run_sweep(sweep_flags, out);
    if (*robust) return cli::run_robustness(rob_flags, rob, runs_flag, out);
    if (*flops) return cli::run_flops(flops_flags, flops_out, out);
    if (*plot) return cli::run_plot(plot_metrics, plot_metric, plot_out, out);
  } catch (const MissingCheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return exit_missing_checkpoint;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << "\n";
    return exit_missing_checkpoint;
  } catch (const IngestionError& e) {
    err << "error: " << e.what() << "\n";
    return exit_data;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return exit_numerical;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_failure;
}

}  // namespace jscc
