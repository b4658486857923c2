// SPDX-License-Identifier: Apache-2.0
//
// Stable numerical primitives shared by every other module: validated real
// vectors and matrices, the softmax family, log-sum-exp, running
// log-cumulative-sum-exp, stable argsort, and a seeded counter-based RNG.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pld/error.hpp"

namespace pld {

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

/// Non-empty vector of finite 64-bit reals.
class RealVec {
 public:
  RealVec() = default;
  explicit RealVec(std::vector<double> values) : values_(std::move(values)) {
    require(!values_.empty(), "RealVec: empty");
    require_finite(values_, "RealVec");
  }
  RealVec(std::initializer_list<double> values) : RealVec(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> span() const noexcept { return values_; }
  operator std::span<const double>() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const RealVec&, const RealVec&) = default;

 private:
  std::vector<double> values_;
};

/// Row-major N x C matrix of finite reals.
class RealMat {
 public:
  RealMat() = default;
  RealMat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {
    require(std::isfinite(fill), "RealMat: non-finite fill");
  }
  RealMat(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    require(values_.size() == rows_ * cols_, "RealMat: values.size() != rows*cols");
    require_finite(values_, "RealMat");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return values_; }
  std::span<const double> data() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const RealMat&, const RealMat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// SplitMix64: the state is a Weyl counter advanced by the golden-ratio
/// increment, each output is a bijective mix of the counter.  Streams depend
/// only on the seed, so they are identical on every platform.
///
///   seed 1234567 -> 6457827717110365317, 3203168211198807973,
///                   9817491932198370423, 4593380528125082431, ...
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n) without modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    require(n > 0, "Rng::uniform_index: n == 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  /// Independent child stream; the parent advances by one draw.
  Rng split() noexcept { return Rng(next_u64()); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

inline std::vector<double> normal_vector(Rng& rng, std::size_t n, double stddev = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(0.0, stddev);
  return v;
}

/// log(exp(a) + exp(b)) without overflow; -inf is the identity.
inline double log_add_exp(double a, double b) noexcept {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double log_sum_exp(std::span<const double> v) {
  require(!v.empty(), "log_sum_exp: empty vector");
  require_finite(v, "log_sum_exp");
  const double m = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// out[j] = log sum_{i<=j} exp(v[i]), accumulated one element at a time.
inline void log_cumsum_exp(std::span<const double> v, std::span<double> out) {
  require(!v.empty(), "log_cumsum_exp: empty vector");
  require(out.size() == v.size(), "log_cumsum_exp: output size mismatch");
  require_finite(v, "log_cumsum_exp");
  double running = v[0];
  out[0] = running;
  for (std::size_t j = 1; j < v.size(); ++j) {
    running = log_add_exp(running, v[j]);
    out[j] = running;
  }
}

inline std::vector<double> log_cumsum_exp(std::span<const double> v) {
  std::vector<double> out(v.size());
  log_cumsum_exp(v, out);
  return out;
}

/// log softmax(v / temperature) written into out.
inline void log_softmax(std::span<const double> v, double temperature, std::span<double> out) {
  require(temperature > 0.0 && std::isfinite(temperature), "softmax: temperature must be > 0");
  require(!v.empty(), "softmax: empty vector");
  require(out.size() == v.size(), "softmax: output size mismatch");
  require_finite(v, "softmax");
  const double m = *std::max_element(v.begin(), v.end()) / temperature;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x / temperature - m);
  const double lz = m + std::log(acc);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / temperature - lz;
}

/// softmax(v / temperature) into p and its logarithm into log_p, one exp
/// per element.
inline void softmax_with_log(std::span<const double> v, double temperature, std::span<double> p,
                             std::span<double> log_p) {
  require(temperature > 0.0 && std::isfinite(temperature), "softmax: temperature must be > 0");
  require(!v.empty(), "softmax: empty vector");
  require(p.size() == v.size() && log_p.size() == v.size(), "softmax: output size mismatch");
  require_finite(v, "softmax");
  const double m = *std::max_element(v.begin(), v.end()) / temperature;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    log_p[i] = v[i] / temperature - m;
    p[i] = std::exp(log_p[i]);
    acc += p[i];
  }
  const double log_acc = std::log(acc);
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[i] /= acc;
    log_p[i] -= log_acc;
  }
}

inline void softmax(std::span<const double> v, double temperature, std::span<double> out) {
  require(temperature > 0.0 && std::isfinite(temperature), "softmax: temperature must be > 0");
  require(!v.empty(), "softmax: empty vector");
  require(out.size() == v.size(), "softmax: output size mismatch");
  require_finite(v, "softmax");
  const double m = *std::max_element(v.begin(), v.end()) / temperature;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] / temperature - m);
    acc += out[i];
  }
  for (auto& x : out) x /= acc;
}

inline std::vector<double> softmax(std::span<const double> v, double temperature = 1.0) {
  std::vector<double> out(v.size());
  softmax(v, temperature, out);
  return out;
}

inline std::vector<double> log_softmax(std::span<const double> v, double temperature = 1.0) {
  std::vector<double> out(v.size());
  log_softmax(v, temperature, out);
  return out;
}

enum class SortDirection { ascending, descending };

namespace detail {

/// Order-preserving map from a finite double to an unsigned key (-0 and +0
/// map to the same key).
inline std::uint64_t sortable_key(double x) noexcept {
  const auto bits = std::bit_cast<std::uint64_t>(x + 0.0);
  return (bits >> 63) != 0 ? ~bits : bits | (std::uint64_t{1} << 63);
}

}  // namespace detail

/// Reusable buffers for argsort_stable_into.
struct ArgsortScratch {
  std::vector<std::pair<std::uint64_t, std::size_t>> items, items_tmp;
};

inline constexpr std::size_t kRadixSortMin = 64;

/// Stable argsort into idx: equal values keep the lower original index first
/// in either direction.  Short inputs sort (key, index) pairs directly; long
/// ones use an LSD radix sort over the key bytes, skipping bytes every key
/// shares.
inline void argsort_stable_into(std::span<const double> v, SortDirection direction, std::vector<std::size_t>& idx,
                                ArgsortScratch& scratch) {
  require_finite(v, "argsort_stable");
  const std::size_t n = v.size();
  const bool descending = direction == SortDirection::descending;
  auto& items = scratch.items;
  items.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t k = detail::sortable_key(v[i]);
    items[i] = {descending ? ~k : k, i};
  }
  if (n < kRadixSortMin) {
    std::sort(items.begin(), items.end());
  } else {
    auto& tmp = scratch.items_tmp;
    tmp.resize(n);
    std::array<std::array<std::uint32_t, 256>, 8> count{};
    for (const auto& it : items)
      for (int b = 0; b < 8; ++b) ++count[b][(it.first >> (8 * b)) & 0xff];
    for (int b = 0; b < 8; ++b) {
      auto& c = count[b];
      const int shift = 8 * b;
      if (c[(items[0].first >> shift) & 0xff] == n) continue;
      std::uint32_t running = 0;
      for (auto& x : c) {
        const std::uint32_t here = x;
        x = running;
        running += here;
      }
      for (const auto& it : items) tmp[c[(it.first >> shift) & 0xff]++] = it;
      items.swap(tmp);
    }
  }
  idx.resize(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = items[i].second;
}

inline std::vector<std::size_t> argsort_stable(std::span<const double> v, SortDirection direction) {
  std::vector<std::size_t> idx;
  ArgsortScratch scratch;
  argsort_stable_into(v, direction, idx, scratch);
  return idx;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline std::size_t argmax(std::span<const double> v) {
  require(!v.empty(), "argmax: empty vector");
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace pld
