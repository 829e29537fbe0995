// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#include "pnp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "pnp/analysis.hpp"
#include "pnp/checkpoint.hpp"
#include "pnp/dataset.hpp"
#include "pnp/error.hpp"
#include "pnp/image_io.hpp"
#include "pnp/metrics.hpp"
#include "pnp/refine.hpp"
#include "pnp/rng.hpp"
#include "pnp/run_config.hpp"
#include "pnp/scene.hpp"
#include "pnp/sparsity.hpp"

namespace fs = std::filesystem;

namespace pnp {

namespace {

struct Options {
  std::string config;
  std::string checkpoint;
  std::string report;
  std::string out;
  std::string kind;
  std::size_t n = 10;
  std::optional<std::uint64_t> seed;
  std::size_t runs = 30;
};

RunConfig resolve_config(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_run_config(path);
  apply_environment(cfg);
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create directory: " + ec.message());
}

std::vector<Scene> load_scenes(const RunConfig& cfg) {
  std::vector<Scene> scenes = load_scene_set(cfg.scene_dir);
  if (scenes.empty()) throw ConfigError(cfg.scene_dir.string() + ": no scenes in manifest");
  return scenes;
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu%s", stem, i, ext);
  return buf;
}

SparseDepth observe(const RunConfig& cfg, const Tensor& depth, std::size_t index) {
  const std::uint64_t seed = mix_seed(cfg.seed, index);
  if (!cfg.lidar_preset.empty()) {
    return sample_lidar(depth, lidar_preset(cfg.lidar_preset),
                        Intrinsics::defaults(depth.height(), depth.width()), seed)
        .sparse;
  }
  const std::size_t n =
      cfg.n_samples > 0
          ? cfg.n_samples
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.01 * depth.numel())));
  return sample_uniform(depth, n, seed);
}

int cmd_gen(const Options& opt, std::ostream& out) {
  RunConfig cfg = resolve_config(opt.config);
  const std::uint64_t seed = opt.seed.value_or(cfg.seed);
  const fs::path dir = opt.out.empty() ? cfg.scene_dir : fs::path(opt.out);
  const std::vector<Scene> scenes = generate_scenes(seed, opt.n, cfg.scene);
  out << save_scene_set(dir, scenes);
  return kExitOk;
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(opt.config);
  const TrainConfig tc = cfg.training();
  tc.validate();
  const std::vector<Scene> scenes = load_scenes(cfg);
  ensure_dir(cfg.output_dir);
  const fs::path ckpt = opt.checkpoint.empty() ? cfg.output_dir / "checkpoint.pnpd"
                                               : fs::path(opt.checkpoint);

  TrainResult result = train(build_model(cfg.arch, cfg.input_mode, cfg.seed), scenes, tc);
  std::string curve = "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", e + 1, result.epoch_loss[e]);
    curve += buf;
  }
  write_text(cfg.output_dir / "train_curve.csv", curve);
  save_checkpoint(ckpt, result.model);

  if (result.diverged) {
    err << "error: training diverged: " << result.message << "\n";
    return kExitNumeric;
  }
  out << "trained " << arch_name(cfg.arch) << "/" << input_mode_name(cfg.input_mode) << " on "
      << scenes.size() << " scenes, " << result.epoch_loss.size() << " epochs";
  if (!result.epoch_loss.empty()) {
    out << ", loss " << result.epoch_loss.front() << " -> " << result.epoch_loss.back();
  }
  out << "\ncheckpoint: " << ckpt.string() << "\n";
  return kExitOk;
}

int cmd_refine(const Options& opt, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(opt.config);
  const PnPConfig pnp = cfg.pnp();
  pnp.validate();
  const Model model = load_checkpoint(opt.checkpoint);
  if (!pnp.tap.empty()) model.tap_index(pnp.tap);
  const std::vector<Scene> scenes = load_scenes(cfg);
  ensure_dir(cfg.output_dir);
  const fs::path report = opt.report.empty() ? cfg.output_dir / "report.csv" : fs::path(opt.report);
  if (report.has_parent_path()) ensure_dir(report.parent_path());

  std::vector<MetricRecord> before, after;
  std::string per_scene =
      "scene,status,n_samples,rmse_before,rmse_after,mae_before,mae_after,sparse_loss_first,"
      "sparse_loss_last\n";
  double total_samples = 0.0, total_pixels = 0.0;
  std::size_t numeric_failures = 0, unobserved = 0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& scene = scenes[i];
    const SparseDepth sparse = observe(cfg, scene.depth, i);
    const Tensor x = make_input(model.input_mode(), scene.rgb, sparse);
    const RefineResult r = refine(model, x, sparse, pnp);
    if (r.status == RefineStatus::kNumericFailure) ++numeric_failures;
    if (r.status == RefineStatus::kNoObservation) ++unobserved;

    const MetricRecord b = evaluate(r.base, scene.depth);
    const MetricRecord a = evaluate(r.depth, scene.depth);
    before.push_back(b);
    after.push_back(a);
    total_samples += static_cast<double>(sparse.count());
    total_pixels += static_cast<double>(scene.depth.numel());

    write_depth_pgm(cfg.output_dir / numbered("base", i, ".pgm"), r.base);
    write_depth_pgm(cfg.output_dir / numbered("refined", i, ".pgm"), r.depth);
    const ImprovementMap map = improvement_map(r.base, r.depth, scene.depth);
    write_file(cfg.output_dir / numbered("improvement", i, ".pgm"), map.graymap);
    write_text(cfg.output_dir / numbered("improvement", i, ".txt"), map.sidecar);

    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", i,
                  std::string(refine_status_name(r.status)).c_str(), sparse.count(), b.rmse,
                  a.rmse, b.mae, a.mae, r.trace.steps.front().sparse_loss,
                  r.trace.steps.back().sparse_loss);
    per_scene += buf;
  }
  write_text(cfg.output_dir / "per_scene.csv", per_scene);

  const MetricRecord mb = mean_record(before);
  const MetricRecord ma = mean_record(after);
  const Improvement delta = improvement(mb, ma);
  const std::size_t mean_n =
      static_cast<std::size_t>(std::llround(total_samples / static_cast<double>(scenes.size())));
  const double pct = 100.0 * total_samples / total_pixels;
  const std::string method(arch_name(model.arch()));
  const std::string table = metrics_csv_header() + "\n" +
                            metrics_csv_row(method, mean_n, pct, mb) + "\n" +
                            metrics_csv_row(method + "+pnp", mean_n, pct, ma, &delta) + "\n";
  write_text(report, table);
  out << table;

  if (unobserved > 0) err << "warning: " << unobserved << " scene(s) had no sparse observations\n";
  if (numeric_failures > 0) {
    err << "error: refinement hit non-finite values on " << numeric_failures << " scene(s)\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt.config);
  const SweepKind kind = parse_sweep_kind(opt.kind);
  const PnPConfig pnp = cfg.pnp();
  pnp.validate();
  const Model model = load_checkpoint(opt.checkpoint);
  const std::vector<Scene> scenes = load_scenes(cfg);
  ensure_dir(cfg.output_dir);
  const std::string stem = "sweep_" + std::string(sweep_kind_name(kind));
  const fs::path csv = opt.out.empty() ? cfg.output_dir / (stem + ".csv") : fs::path(opt.out);
  if (csv.has_parent_path()) ensure_dir(csv.parent_path());

  SweepSpec spec;
  spec.kind = kind;
  spec.n_samples = cfg.n_samples;
  spec.seed = cfg.seed;
  const SweepResult result = sweep(model, scenes, pnp, spec);
  write_text(csv, result.to_csv());

  std::string timing = "label,runtime_s\n";
  for (const SweepRow& row : result.rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%.6f\n", row.label.c_str(), row.runtime_s);
    timing += buf;
  }
  fs::path timing_path = csv;
  timing_path.replace_extension();
  timing_path += "_timing.csv";
  write_text(timing_path, timing);

  out << result.to_csv();
  if (kind == SweepKind::kLidar) {
    std::vector<const SweepRow*> rows;
    for (const SweepRow& row : result.rows) rows.push_back(&row);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow* a, const SweepRow* b) { return a->coverage > b->coverage; });
    out << "coverage ordering:";
    for (std::size_t i = 0; i < rows.size(); ++i) out << (i ? " > " : " ") << rows[i]->label;
    out << "\n";
  }
  return kExitOk;
}

int cmd_time(const Options& opt, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(opt.config);
  const PnPConfig pnp = cfg.pnp();
  pnp.validate();
  if (opt.runs == 0) throw ConfigError("--runs must be at least 1");
  if (opt.runs == 1) {
    err << "warning: single-run timing; wall times vary widely between runs, use --runs 30 or "
           "more for a stable mean\n";
  }
  const Model model = load_checkpoint(opt.checkpoint);
  const std::vector<Scene> scenes = load_scenes(cfg);
  ensure_dir(cfg.output_dir);
  const fs::path csv = opt.out.empty() ? cfg.output_dir / "timing.csv" : fs::path(opt.out);
  if (csv.has_parent_path()) ensure_dir(csv.parent_path());

  const SparseDepth sparse = observe(cfg, scenes.front().depth, 0);
  const Tensor x = make_input(model.input_mode(), scenes.front().rgb, sparse);
  const TimingResult t = time_inference(model, x, sparse, pnp, opt.runs);
  char buf[256];
  std::snprintf(buf, sizeof buf, "arch,iterations,runs,base_mean_s,pnp_mean_s,ratio\n%s,%zu,%zu,%.6e,%.6e,%.4f\n",
                std::string(arch_name(model.arch())).c_str(), pnp.iterations, t.runs,
                t.base_mean_s, t.pnp_mean_s, t.ratio());
  write_text(csv, buf);
  out << buf;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse-depth refinement of monocular depth networks", "pnpdepth"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* gen = app.add_subcommand("gen", "Generate synthetic RGB-D scenes");
  gen->add_option("--n", opt.n, "Number of scenes")->capture_default_str();
  gen->add_option("--seed", opt.seed, "Scene seed (default: config seed)");
  gen->add_option("--out", opt.out, "Output directory (default: config scene_dir)");
  gen->add_option("--config", opt.config, "Run configuration file");

  CLI::App* tr = app.add_subcommand("train", "Train a depth network on generated scenes");
  tr->add_option("--config", opt.config, "Run configuration file")->required();
  tr->add_option("--checkpoint", opt.checkpoint, "Checkpoint path (default: <output_dir>/checkpoint.pnpd)");

  CLI::App* ref = app.add_subcommand("refine", "Refine predictions with sparse depth");
  ref->add_option("--config", opt.config, "Run configuration file")->required();
  ref->add_option("--checkpoint", opt.checkpoint, "Trained checkpoint")->required();
  ref->add_option("--report", opt.report, "Metrics CSV (default: <output_dir>/report.csv)");

  CLI::App* sw = app.add_subcommand("sweep", "Sweep one refinement setting");
  sw->add_option("--kind", opt.kind, "iters, tap, samples or lidar")
      ->required()
      ->check(CLI::IsMember({"iters", "tap", "samples", "lidar"}));
  sw->add_option("--config", opt.config, "Run configuration file")->required();
  sw->add_option("--checkpoint", opt.checkpoint, "Trained checkpoint")->required();
  sw->add_option("--out", opt.out, "Sweep CSV (default: <output_dir>/sweep_<kind>.csv)");

  CLI::App* tm = app.add_subcommand("time", "Time base inference against refinement");
  tm->add_option("--config", opt.config, "Run configuration file")->required();
  tm->add_option("--checkpoint", opt.checkpoint, "Trained checkpoint")->required();
  tm->add_option("--runs", opt.runs, "Timed runs")->capture_default_str();
  tm->add_option("--out", opt.out, "Timing CSV (default: <output_dir>/timing.csv)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(opt, out);
    if (tr->parsed()) return cmd_train(opt, out, err);
    if (ref->parsed()) return cmd_refine(opt, out, err);
    if (sw->parsed()) return cmd_sweep(opt, out);
    if (tm->parsed()) return cmd_time(opt, out, err);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace pnp
