// SPDX-License-Identifier: Apache-2.0
//
// Run configuration documents.  One JSON object per run:
//
//   {"format_version": 1, "command": "<subcommand>", ...command fields...}
//
// Unknown fields are rejected.  Missing fields take the defaults of the
// corresponding struct; the fully resolved document (every field present) is
// what commands echo back.  Precedence: defaults < config file < flags.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pld/bench.hpp"
#include "pld/distill.hpp"
#include "pld/error.hpp"
#include "pld/landscape.hpp"
#include "pld/losses.hpp"

namespace pld {

using json = nlohmann::json;

inline constexpr int kConfigFormatVersion = 1;

/// Reads fields from a JSON object and remembers which ones it consumed.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string context) : obj_(obj), context_(std::move(context)) {
    if (!obj_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
  }

  template <typename T>
  void read(const char* key, T& dst) {
    if (!obj_.contains(key)) return;
    seen_.insert(key);
    try {
      dst = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  /// Sub-object handed to `fn(const json&, context)`.
  template <typename Fn>
  void read_object(const char* key, Fn&& fn) {
    if (!obj_.contains(key)) return;
    seen_.insert(key);
    fn(obj_.at(key), context_ + "." + key);
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& dst, Parse&& parse) {
    std::string name;
    if (!obj_.contains(key)) return;
    read(key, name);
    try {
      dst = parse(name);
    } catch (const InvalidArgument& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  template <typename Enum, typename Parse>
  void read_enum_list(const char* key, std::vector<Enum>& dst, Parse&& parse) {
    std::vector<std::string> names;
    if (!obj_.contains(key)) return;
    read(key, names);
    dst.clear();
    try {
      for (const auto& n : names) dst.push_back(parse(n));
    } catch (const InvalidArgument& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  void skip(const char* key) { seen_.insert(key); }

  /// Throws on any field that was not consumed.
  void finish() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) throw ConfigError(context_ + ": unknown field '" + item.key() + "'");
  }

 private:
  const json& obj_;
  std::string context_;
  std::set<std::string> seen_;
};

template <typename Enum>
std::vector<std::string> enum_names(const std::vector<Enum>& xs) {
  std::vector<std::string> out;
  for (auto x : xs) out.emplace_back(to_string(x));
  return out;
}

// ---------------------------------------------------------------------------
// Shared sections
// ---------------------------------------------------------------------------

inline json to_json(const BlobParams& p) {
  return {{"classes", p.classes},       {"dim", p.dim},
          {"train_per_class", p.train_per_class}, {"test_per_class", p.test_per_class},
          {"spread", p.spread},         {"center_scale", p.center_scale},
          {"noise_rate", p.noise_rate}, {"seed", p.seed}};
}

inline void from_json(const json& j, const std::string& ctx, BlobParams& p) {
  FieldReader r(j, ctx);
  r.read("classes", p.classes);
  r.read("dim", p.dim);
  r.read("train_per_class", p.train_per_class);
  r.read("test_per_class", p.test_per_class);
  r.read("spread", p.spread);
  r.read("center_scale", p.center_scale);
  r.read("noise_rate", p.noise_rate);
  r.read("seed", p.seed);
  r.finish();
}

inline json to_json(const AdamWConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},
          {"beta2", c.beta2},                 {"epsilon", c.epsilon},
          {"weight_decay", c.weight_decay}};
}

inline void from_json(const json& j, const std::string& ctx, AdamWConfig& c) {
  FieldReader r(j, ctx);
  r.read("learning_rate", c.learning_rate);
  r.read("beta1", c.beta1);
  r.read("beta2", c.beta2);
  r.read("epsilon", c.epsilon);
  r.read("weight_decay", c.weight_decay);
  r.finish();
}

inline json to_json(const DistillLossConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"ce_mix", c.ce_mix},
          {"kd_temperature", c.kd_temperature},
          {"teacher_temperature", c.teacher_temperature},
          {"dist_beta", c.dist_beta},
          {"dist_gamma", c.dist_gamma},
          {"dist_temperature", c.dist_temperature},
          {"ls_epsilon", c.ls_epsilon},
          {"divergence", to_string(c.divergence)},
          {"standardize", to_string(c.standardize)},
          {"pld_weights", to_string(c.pld_weights)}};
}

inline void from_json(const json& j, const std::string& ctx, DistillLossConfig& c) {
  FieldReader r(j, ctx);
  r.read_enum("kind", c.kind, parse_loss_kind);
  r.read("ce_mix", c.ce_mix);
  r.read("kd_temperature", c.kd_temperature);
  r.read("teacher_temperature", c.teacher_temperature);
  r.read("dist_beta", c.dist_beta);
  r.read("dist_gamma", c.dist_gamma);
  r.read("dist_temperature", c.dist_temperature);
  r.read("ls_epsilon", c.ls_epsilon);
  r.read_enum("divergence", c.divergence, parse_divergence);
  r.read_enum("standardize", c.standardize, parse_standardize);
  r.read_enum("pld_weights", c.pld_weights, parse_weight_scheme);
  r.finish();
}

/// Training fields live at the top level of the train-teacher / distill
/// documents, next to "seed".
inline void read_train_fields(FieldReader& r, TrainConfig& t) {
  r.read("hidden", t.hidden);
  r.read_object("optimizer", [&](const json& j, const std::string& ctx) { from_json(j, ctx, t.optimizer); });
  r.read("epochs", t.epochs);
  r.read("batch_size", t.batch_size);
}

inline void write_train_fields(json& j, const TrainConfig& t) {
  j["hidden"] = t.hidden;
  j["optimizer"] = to_json(t.optimizer);
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
}

// ---------------------------------------------------------------------------
// Per-command documents
// ---------------------------------------------------------------------------

struct LossCheckConfig {
  std::uint64_t seed = 0;
  std::size_t instances = 100;
  std::vector<std::size_t> classes{2, 3, 5, 10, 100};
  std::vector<std::size_t> oracle_classes{2, 3, 4, 5, 6};
  std::vector<double> teacher_temperatures{0.5, 1.0, 2.0, 4.0};
  double max_shift = 50.0;
  std::size_t convexity_triples = 1000;

  void validate() const {
    require(instances >= 1, "losscheck: instances must be >= 1");
    require(!classes.empty(), "losscheck: classes must be non-empty");
    for (auto c : classes) require(c >= 2 && c <= 1000, "losscheck: classes must be in [2, 1000]");
    for (auto c : oracle_classes)
      require(c >= 1 && c <= kMaxEnumerationClasses, "losscheck: oracle classes must be in [1, 8]");
    for (double t : teacher_temperatures) require(t > 0.0, "losscheck: temperatures must be > 0");
    require(max_shift >= 0.0, "losscheck: max_shift must be >= 0");
  }
};

struct GradCheckConfig {
  std::uint64_t seed = 0;
  std::vector<LossKind> losses{LossKind::ce,      LossKind::ls,       LossKind::kd, LossKind::dist,
                               LossKind::listmle, LossKind::plistmle, LossKind::pld};
  std::vector<Divergence> divergences{Divergence::forward_kl, Divergence::reverse_kl, Divergence::js};
  std::vector<double> teacher_temperatures{0.5, 1.0, 4.0};
  std::vector<std::size_t> classes{2, 10, 100};
  std::vector<std::size_t> batch_sizes{1, 8};
  std::size_t trials = 20;
  double step = 1e-5;
  double threshold = 1e-5;
  double logit_scale = 2.0;

  void validate() const {
    require(step > 0.0, "gradcheck: step h must be > 0");
    require(threshold > 0.0, "gradcheck: threshold must be > 0");
    require(trials >= 1, "gradcheck: trials must be >= 1");
    require(!losses.empty() && !classes.empty() && !batch_sizes.empty(), "gradcheck: empty sweep");
    for (auto c : classes) require(c >= 2, "gradcheck: classes must be >= 2");
    for (auto n : batch_sizes) require(n >= 1, "gradcheck: batch sizes must be >= 1");
    for (double t : teacher_temperatures) require(t > 0.0, "gradcheck: temperatures must be > 0");
    require(logit_scale > 0.0, "gradcheck: logit_scale must be > 0");
  }
};

struct TrainTeacherConfig {
  std::uint64_t seed = 0;
  BlobParams dataset;
  TrainConfig train = [] {
    TrainConfig t;
    t.hidden = {256, 256};
    t.epochs = 10;
    return t;
  }();

  void validate() const {
    dataset.validate();
    train.validate();
  }
};

struct DistillConfig {
  std::uint64_t seed = 0;
  BlobParams dataset;
  std::string teacher_path = "teacher/model.json";
  TrainConfig train = [] {
    TrainConfig t;
    t.hidden = {32};
    t.epochs = 20;
    return t;
  }();
  DistillLossConfig loss;

  void validate() const {
    dataset.validate();
    train.validate();
    loss.validate();
    require(!teacher_path.empty(), "distill: teacher_path must be set");
  }
};

struct LandscapeConfig {
  SliceSpec spec = [] {
    SliceSpec s;
    s.temperatures = {2.0, 1.0, 0.5, 0.1};
    return s;
  }();
  std::size_t probe_trials = 1000;

  void validate() const { spec.validate(); }
};

// -- JSON for each document -------------------------------------------------

namespace detail {

inline void read_header(FieldReader& r, const json& j, const std::string& command) {
  int version = 0;
  r.read("format_version", version);
  if (!j.contains("format_version")) throw ConfigError("config: missing format_version");
  if (version != kConfigFormatVersion)
    throw ConfigError("config: unsupported format_version " + std::to_string(version));
  std::string cmd = command;
  r.read("command", cmd);
  if (cmd != command) throw ConfigError("config: document is for '" + cmd + "', not '" + command + "'");
}

inline json header(const std::string& command) {
  return {{"format_version", kConfigFormatVersion}, {"command", command}};
}

}  // namespace detail

inline json to_json(const LossCheckConfig& c) {
  json j = detail::header("losscheck");
  j["seed"] = c.seed;
  j["instances"] = c.instances;
  j["classes"] = c.classes;
  j["oracle_classes"] = c.oracle_classes;
  j["teacher_temperatures"] = c.teacher_temperatures;
  j["max_shift"] = c.max_shift;
  j["convexity_triples"] = c.convexity_triples;
  return j;
}

inline void from_json(const json& j, LossCheckConfig& c) {
  FieldReader r(j, "losscheck");
  detail::read_header(r, j, "losscheck");
  r.read("seed", c.seed);
  r.read("instances", c.instances);
  r.read("classes", c.classes);
  r.read("oracle_classes", c.oracle_classes);
  r.read("teacher_temperatures", c.teacher_temperatures);
  r.read("max_shift", c.max_shift);
  r.read("convexity_triples", c.convexity_triples);
  r.finish();
}

inline json to_json(const GradCheckConfig& c) {
  json j = detail::header("gradcheck");
  j["seed"] = c.seed;
  j["losses"] = enum_names(c.losses);
  j["divergences"] = enum_names(c.divergences);
  j["teacher_temperatures"] = c.teacher_temperatures;
  j["classes"] = c.classes;
  j["batch_sizes"] = c.batch_sizes;
  j["trials"] = c.trials;
  j["step"] = c.step;
  j["threshold"] = c.threshold;
  j["logit_scale"] = c.logit_scale;
  return j;
}

inline void from_json(const json& j, GradCheckConfig& c) {
  FieldReader r(j, "gradcheck");
  detail::read_header(r, j, "gradcheck");
  r.read("seed", c.seed);
  r.read_enum_list("losses", c.losses, parse_loss_kind);
  r.read_enum_list("divergences", c.divergences, parse_divergence);
  r.read("teacher_temperatures", c.teacher_temperatures);
  r.read("classes", c.classes);
  r.read("batch_sizes", c.batch_sizes);
  r.read("trials", c.trials);
  r.read("step", c.step);
  r.read("threshold", c.threshold);
  r.read("logit_scale", c.logit_scale);
  r.finish();
}

inline json to_json(const TrainTeacherConfig& c) {
  json j = detail::header("train-teacher");
  j["seed"] = c.seed;
  j["dataset"] = to_json(c.dataset);
  write_train_fields(j, c.train);
  return j;
}

inline void from_json(const json& j, TrainTeacherConfig& c) {
  FieldReader r(j, "train-teacher");
  detail::read_header(r, j, "train-teacher");
  r.read("seed", c.seed);
  r.read_object("dataset", [&](const json& o, const std::string& ctx) { from_json(o, ctx, c.dataset); });
  read_train_fields(r, c.train);
  r.finish();
}

inline json to_json(const DistillConfig& c) {
  json j = detail::header("distill");
  j["seed"] = c.seed;
  j["dataset"] = to_json(c.dataset);
  j["teacher_path"] = c.teacher_path;
  write_train_fields(j, c.train);
  j["loss"] = to_json(c.loss);
  return j;
}

inline void from_json(const json& j, DistillConfig& c) {
  FieldReader r(j, "distill");
  detail::read_header(r, j, "distill");
  r.read("seed", c.seed);
  r.read_object("dataset", [&](const json& o, const std::string& ctx) { from_json(o, ctx, c.dataset); });
  r.read("teacher_path", c.teacher_path);
  read_train_fields(r, c.train);
  r.read_object("loss", [&](const json& o, const std::string& ctx) { from_json(o, ctx, c.loss); });
  r.finish();
}

inline json to_json(const LandscapeConfig& c) {
  json j = detail::header("landscape");
  j["seed"] = c.spec.seed;
  j["classes"] = c.spec.classes;
  j["resolution"] = c.spec.resolution;
  j["range_multiplier"] = c.spec.range_multiplier;
  j["temperatures"] = c.spec.temperatures;
  j["losses"] = enum_names(c.spec.losses);
  j["probe_trials"] = c.probe_trials;
  return j;
}

inline void from_json(const json& j, LandscapeConfig& c) {
  FieldReader r(j, "landscape");
  detail::read_header(r, j, "landscape");
  r.read("seed", c.spec.seed);
  r.read("classes", c.spec.classes);
  r.read("resolution", c.spec.resolution);
  r.read("range_multiplier", c.spec.range_multiplier);
  r.read("temperatures", c.spec.temperatures);
  r.read_enum_list("losses", c.spec.losses, parse_loss_kind);
  r.read("probe_trials", c.probe_trials);
  r.finish();
}

inline json to_json(const BenchConfig& c) {
  json j = detail::header("bench");
  j["seed"] = c.seed;
  j["batch_sizes"] = c.batch_sizes;
  j["classes"] = c.classes;
  j["losses"] = enum_names(c.losses);
  j["trials"] = c.trials;
  j["warmup"] = c.warmup;
  return j;
}

inline void from_json(const json& j, BenchConfig& c) {
  FieldReader r(j, "bench");
  detail::read_header(r, j, "bench");
  r.read("seed", c.seed);
  r.read("batch_sizes", c.batch_sizes);
  r.read("classes", c.classes);
  r.read_enum_list("losses", c.losses, parse_loss_kind);
  r.read("trials", c.trials);
  r.read("warmup", c.warmup);
  r.finish();
}

}  // namespace pld
