// SPDX-License-Identifier: Apache-2.0
//
// Subcommand implementations behind the command-line front end.  Every
// command resolves its configuration document, computes all outputs in
// memory, then writes them into the output directory (each file atomically),
// always including the resolved config as config.json.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pld/bench.hpp"
#include "pld/checks.hpp"
#include "pld/config.hpp"
#include "pld/distill.hpp"
#include "pld/error.hpp"
#include "pld/gradcheck.hpp"
#include "pld/io.hpp"
#include "pld/landscape.hpp"

namespace pld {

enum class ExitCode : int {
  ok = 0,
  runtime_error = 1,
  usage = 2,
  verification_failure = 3,
  training_failure = 4,
  io_error = 5,
};

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = "pld_out";
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"losscheck", "gradcheck", "train-teacher",
                                              "distill",   "landscape", "bench"};
  return names;
}

/// Files produced by a command, written only after the command succeeds (or
/// completes its verification with a failing verdict).
struct CommandOutput {
  std::vector<std::pair<std::string, std::string>> files;
  ExitCode code = ExitCode::ok;
};

namespace detail {

inline std::optional<json> load_config_document(const CommandOptions& opts) {
  if (!opts.config) return std::nullopt;
  const std::string text = read_file(*opts.config);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config " + opts.config->string() + " is not valid JSON: " + e.what());
  }
}

template <typename Cfg>
Cfg resolve_config(const std::optional<json>& doc) {
  Cfg cfg;
  if (doc) from_json(*doc, cfg);
  return cfg;
}

inline std::string echo(const json& j) { return j.dump(2) + "\n"; }

inline std::string pass_word(bool pass) { return pass ? "PASS" : "FAIL"; }

// -- losscheck ---------------------------------------------------------------

inline CommandOutput losscheck(LossCheckConfig cfg, const CommandOptions& opts, std::ostream& log) {
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  const auto results = run_loss_identities(cfg);
  CommandOutput out;
  std::string csv = "check,classes,temperature,instances,max_error,tolerance,pass\n";
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    csv += r.name + "," + std::to_string(r.classes) + "," + format_real(r.temperature) + "," +
           std::to_string(r.instances) + "," + format_real(r.max_error) + "," + format_real(r.tolerance) + "," +
           (r.pass ? "1" : "0") + "\n";
    log << pass_word(r.pass) << "  " << r.name << "  C=" << r.classes;
    if (r.temperature > 0.0) log << "  tau_T=" << r.temperature;
    log << "  max_error=" << r.max_error << "  tol=" << r.tolerance << "\n";
  }
  log << (all ? "all identities hold" : "IDENTITY FAILURE") << " (" << results.size() << " checks)\n";
  out.files = {{"config.json", echo(to_json(cfg))}, {"losscheck.csv", csv}};
  out.code = all ? ExitCode::ok : ExitCode::verification_failure;
  return out;
}

// -- gradcheck ---------------------------------------------------------------

struct GradVariant {
  std::string name;
  DistillLossConfig loss;
};

inline std::vector<GradVariant> gradcheck_variants(const GradCheckConfig& cfg) {
  std::vector<GradVariant> vs;
  for (LossKind kind : cfg.losses) {
    DistillLossConfig base;
    base.kind = kind;
    if (kind == LossKind::kd) {
      for (Divergence d : cfg.divergences) {
        base.divergence = d;
        vs.push_back({"kd/" + std::string(to_string(d)), base});
      }
    } else if (kind == LossKind::pld) {
      for (double t : cfg.teacher_temperatures) {
        base.teacher_temperature = t;
        vs.push_back({"pld/tau_T=" + format_real(t), base});
      }
    } else {
      vs.push_back({std::string(to_string(kind)), base});
    }
  }
  return vs;
}

inline CommandOutput gradcheck(GradCheckConfig cfg, const CommandOptions& opts, std::ostream& log) {
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  CommandOutput out;
  std::string csv = "loss,classes,batch,trials,max_rel_error,max_coord_rel_error,threshold,pass\n";
  bool all = true;
  Rng root(cfg.seed);
  for (const auto& v : gradcheck_variants(cfg)) {
    for (std::size_t c : cfg.classes) {
      for (std::size_t n : cfg.batch_sizes) {
        Rng rng = root.split();
        double worst = 0.0, worst_coord = 0.0;
        for (std::size_t k = 0; k < cfg.trials; ++k) {
          const RealMat s(n, c, normal_vector(rng, n * c, cfg.logit_scale));
          const RealMat t(n, c, normal_vector(rng, n * c, cfg.logit_scale));
          Labels y(n);
          for (auto& l : y) l = rng.uniform_index(c);
          const auto rep =
              grad_check([&](const RealMat& x) { return evaluate_loss(v.loss, x, &t, y); }, s, cfg.step);
          worst = std::max(worst, rep.max_rel_error);
          worst_coord = std::max(worst_coord, rep.max_coord_rel_error);
        }
        const bool pass = worst < cfg.threshold;
        all = all && pass;
        csv += v.name + "," + std::to_string(c) + "," + std::to_string(n) + "," + std::to_string(cfg.trials) + "," +
               format_real(worst) + "," + format_real(worst_coord) + "," + format_real(cfg.threshold) + "," +
               (pass ? "1" : "0") + "\n";
        log << pass_word(pass) << "  " << v.name << "  C=" << c << "  N=" << n << "  max_rel_error=" << worst << "\n";
      }
    }
  }
  out.files = {{"config.json", echo(to_json(cfg))}, {"gradcheck.csv", csv}};
  out.code = all ? ExitCode::ok : ExitCode::verification_failure;
  return out;
}

// -- train-teacher / distill -------------------------------------------------

inline CommandOutput train_teacher_cmd(TrainTeacherConfig cfg, const CommandOptions& opts, std::ostream& log) {
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.train.seed = cfg.seed;
  cfg.validate();
  const auto data = make_blobs(cfg.dataset);
  const DistillRun run = train_teacher(data, cfg.train);
  CommandOutput out;
  out.files = {{"config.json", echo(to_json(cfg))},
               {"metrics.csv", metrics_csv(run.epochs)},
               {"model.json", model_to_string(run.model)}};
  if (!run.epochs.empty())
    log << "teacher test top-1 after " << run.epochs.size() << " epochs: " << run.epochs.back().test_top1 << "\n";
  return out;
}

inline CommandOutput distill_cmd(DistillConfig cfg, const CommandOptions& opts, std::ostream& log) {
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.train.seed = cfg.seed;
  cfg.validate();
  if (!std::filesystem::exists(cfg.teacher_path)) throw IoError("teacher model not found: " + cfg.teacher_path);
  const MlpModel teacher = load_model(cfg.teacher_path);
  const auto data = make_blobs(cfg.dataset);
  const DistillRun run = distill_student(data, teacher, cfg.loss, cfg.train);
  CommandOutput out;
  out.files = {{"config.json", echo(to_json(cfg))},
               {"metrics.csv", metrics_csv(run.epochs)},
               {"model.json", model_to_string(run.model)}};
  if (!run.epochs.empty())
    log << "student (" << to_string(cfg.loss.kind) << ") test top-1: " << run.epochs.back().test_top1
        << "  teacher KL: " << run.epochs.back().teacher_kl << "\n";
  return out;
}

// -- landscape ---------------------------------------------------------------

inline CommandOutput landscape_cmd(LandscapeConfig cfg, const CommandOptions& opts, std::ostream& log) {
  if (opts.seed) cfg.spec.seed = *opts.seed;
  cfg.validate();
  const SlicePlane plane = make_plane(cfg.spec.classes, cfg.spec.seed);
  const SliceGrid grid = make_slice(cfg.spec, plane);
  std::string conv = "loss_kind,temperature,trials,violations\n";
  if (cfg.probe_trials > 0) {
    for (LossKind kind : cfg.spec.losses) {
      for (double t : cfg.spec.temperatures) {
        const auto v = line_convexity_probe(kind, t, cfg.spec, plane, cfg.probe_trials, cfg.spec.seed + 1);
        conv += std::string(to_string(kind)) + "," + format_real(t) + "," + std::to_string(cfg.probe_trials) + "," +
                std::to_string(v) + "\n";
        log << to_string(kind) << " T=" << t << ": " << v << " line-convexity violations in " << cfg.probe_trials
            << " triples\n";
      }
    }
  }
  CommandOutput out;
  out.files = {{"config.json", echo(to_json(cfg))}, {"landscape.csv", landscape_csv(grid)}, {"convexity.csv", conv}};
  log << grid.surfaces.size() << " surfaces of " << cfg.spec.resolution << "x" << cfg.spec.resolution << " points\n";
  return out;
}

// -- bench -------------------------------------------------------------------

inline CommandOutput bench_cmd(BenchConfig cfg, const CommandOptions& opts, std::ostream& log) {
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  const auto rows = run_bench(cfg);
  for (const auto& r : rows)
    log << to_string(r.loss) << "  N=" << r.batch << "  C=" << r.classes << "  median=" << r.median_seconds * 1e3
        << " ms\n";
  CommandOutput out;
  out.files = {{"config.json", echo(to_json(cfg))}, {"bench.csv", bench_csv(rows)}};
  return out;
}

}  // namespace detail

/// Run one subcommand; returns the process exit code.  Diagnostics go to
/// `err`, progress and reports to `log`.
inline int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    const auto doc = detail::load_config_document(opts);
    CommandOutput result;
    if (name == "losscheck") {
      result = detail::losscheck(detail::resolve_config<LossCheckConfig>(doc), opts, log);
    } else if (name == "gradcheck") {
      result = detail::gradcheck(detail::resolve_config<GradCheckConfig>(doc), opts, log);
    } else if (name == "train-teacher") {
      result = detail::train_teacher_cmd(detail::resolve_config<TrainTeacherConfig>(doc), opts, log);
    } else if (name == "distill") {
      result = detail::distill_cmd(detail::resolve_config<DistillConfig>(doc), opts, log);
    } else if (name == "landscape") {
      result = detail::landscape_cmd(detail::resolve_config<LandscapeConfig>(doc), opts, log);
    } else if (name == "bench") {
      result = detail::bench_cmd(detail::resolve_config<BenchConfig>(doc), opts, log);
    } else {
      err << "unknown command '" << name << "'\n";
      return static_cast<int>(ExitCode::usage);
    }
    for (const auto& [file, contents] : result.files) write_file_atomic(opts.out_dir / file, contents);
    return static_cast<int>(result.code);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::usage);
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return static_cast<int>(ExitCode::usage);
  } catch (const SizeLimitError& e) {
    err << "size limit: " << e.what() << "\n";
    return static_cast<int>(ExitCode::usage);
  } catch (const TrainingFailure& e) {
    err << e.what() << "\n";
    return static_cast<int>(ExitCode::training_failure);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::io_error);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::runtime_error);
  }
}

}  // namespace pld
