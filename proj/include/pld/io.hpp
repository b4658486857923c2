// SPDX-License-Identifier: Apache-2.0
//
// File formats: versioned model JSON, metrics / landscape / bench CSV, and
// all-or-nothing file writes.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pld/bench.hpp"
#include "pld/distill.hpp"
#include "pld/error.hpp"
#include "pld/landscape.hpp"
#include "pld/mlp.hpp"

namespace pld {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

/// Shortest-exact "%.17g" rendering; identical bytes for identical doubles.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Write `contents` to `path` via a sibling temp file and rename, so a
/// failure never leaves a partial file behind.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Model JSON
//   {"format_version": 1, "layer_sizes": [D, ..., C],
//    "layers": [{"in": D, "out": H, "weights": [row-major out x in], "bias": [...]}, ...]}
// ---------------------------------------------------------------------------

inline json model_to_json(const MlpModel& model) {
  json layers = json::array();
  for (const auto& l : model.layers())
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
  return {{"format_version", kModelFormatVersion}, {"layer_sizes", model.layer_sizes()}, {"layers", layers}};
}

inline MlpModel model_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw InvalidArgument("model: unsupported format_version " + std::to_string(version));
    std::vector<DenseLayer> layers;
    for (const auto& jl : j.at("layers")) {
      DenseLayer l;
      l.in = jl.at("in").get<std::size_t>();
      l.out = jl.at("out").get<std::size_t>();
      l.weights = jl.at("weights").get<std::vector<double>>();
      l.bias = jl.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(l));
    }
    MlpModel m = MlpModel::from_layers(std::move(layers));
    if (m.layer_sizes() != j.at("layer_sizes").get<std::vector<std::size_t>>())
      throw InvalidArgument("model: layer_sizes disagree with layers");
    return m;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model: malformed document: ") + e.what());
  }
}

inline std::string model_to_string(const MlpModel& model) { return model_to_json(model).dump(1) + "\n"; }

inline MlpModel load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string metrics_csv(const std::vector<EpochRecord>& records) {
  std::string out = "epoch,train_loss,test_top1,teacher_kl\n";
  for (const auto& r : records)
    out += std::to_string(r.epoch) + "," + format_real(r.train_loss) + "," + format_real(r.test_top1) + "," +
           format_real(r.teacher_kl) + "\n";
  return out;
}

/// One row per grid point per (loss, temperature); rows ordered by surface,
/// then alpha, then beta.
inline std::string landscape_csv(const SliceGrid& grid) {
  std::string out = "alpha,beta,loss_kind,temperature,value\n";
  const std::size_t r = grid.resolution();
  for (const auto& surf : grid.surfaces) {
    const std::string kind(to_string(surf.loss));
    const std::string temp = format_real(surf.temperature);
    for (std::size_t ia = 0; ia < r; ++ia)
      for (std::size_t ib = 0; ib < r; ++ib)
        out += format_real(grid.alphas[ia]) + "," + format_real(grid.betas[ib]) + "," + kind + "," + temp + "," +
               format_real(surf.values[ia * r + ib]) + "\n";
  }
  return out;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "loss,batch,classes,trials,median_seconds,min_seconds\n";
  for (const auto& r : rows)
    out += std::string(to_string(r.loss)) + "," + std::to_string(r.batch) + "," + std::to_string(r.classes) + "," +
           std::to_string(r.trials) + "," + format_real(r.median_seconds) + "," + format_real(r.min_seconds) + "\n";
  return out;
}

}  // namespace pld
