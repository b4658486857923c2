// SPDX-License-Identifier: Apache-2.0
//
// Wall-clock timing of batch loss + gradient evaluation.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pld/error.hpp"
#include "pld/losses.hpp"
#include "pld/numerics.hpp"

namespace pld {

struct BenchConfig {
  std::vector<std::size_t> batch_sizes{256};
  std::vector<std::size_t> classes{128, 256, 512, 1000, 1024};
  std::vector<LossKind> losses{LossKind::ce, LossKind::kd, LossKind::dist, LossKind::pld};
  std::size_t trials = 11;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;

  void validate() const {
    require(!batch_sizes.empty() && !classes.empty() && !losses.empty(), "bench: empty sweep");
    require(trials >= 1, "bench: trials must be >= 1");
    for (std::size_t n : batch_sizes) require(n >= 1, "bench: batch size must be >= 1");
    for (std::size_t c : classes) require(c >= 2, "bench: classes must be >= 2");
  }
};

struct BenchRow {
  LossKind loss = LossKind::pld;
  std::size_t batch = 0;
  std::size_t classes = 0;
  std::size_t trials = 0;
  double median_seconds = 0.0;
  double min_seconds = 0.0;
  double checksum = 0.0;  // loss value, keeps the work observable
};

inline double median(std::vector<double> xs) {
  require(!xs.empty(), "median: empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "log_log_slope: need >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "log_log_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Loss configuration each benchmarked kind runs under: the library defaults.
inline DistillLossConfig bench_loss_config(LossKind kind) {
  DistillLossConfig cfg;
  cfg.kind = kind;
  return cfg;
}

inline BenchRow bench_one(LossKind kind, std::size_t n, std::size_t c, std::size_t trials, std::size_t warmup,
                          std::uint64_t seed) {
  Rng rng(seed);
  const RealMat s(n, c, normal_vector(rng, n * c, 2.0));
  const RealMat t(n, c, normal_vector(rng, n * c, 2.0));
  Labels y(n);
  for (auto& v : y) v = rng.uniform_index(c);
  const DistillLossConfig cfg = bench_loss_config(kind);

  BenchRow row{kind, n, c, trials, 0.0, 0.0, 0.0};
  for (std::size_t w = 0; w < warmup; ++w) row.checksum = evaluate_loss(cfg, s, &t, y).loss;
  std::vector<double> times;
  times.reserve(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const LossResult r = evaluate_loss(cfg, s, &t, y);
    const auto t1 = std::chrono::steady_clock::now();
    row.checksum = r.loss;
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  row.median_seconds = median(times);
  row.min_seconds = *std::min_element(times.begin(), times.end());
  return row;
}

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<BenchRow> rows;
  for (std::size_t n : cfg.batch_sizes)
    for (std::size_t c : cfg.classes)
      for (LossKind kind : cfg.losses) rows.push_back(bench_one(kind, n, c, cfg.trials, cfg.warmup, cfg.seed));
  return rows;
}

}  // namespace pld
