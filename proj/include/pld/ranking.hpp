// SPDX-License-Identifier: Apache-2.0
//
// Plackett-Luce permutation model over class logits.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "pld/error.hpp"
#include "pld/numerics.hpp"

namespace pld {

/// A full ranking of C classes, first pick first: order()[0] is the class
/// chosen first, order()[C-1] the class chosen last.
class Ranking {
 public:
  Ranking() = default;
  explicit Ranking(std::vector<std::size_t> order) : order_(std::move(order)) {
    require(!order_.empty(), "Ranking: empty order");
    std::vector<bool> seen(order_.size(), false);
    for (std::size_t c : order_) {
      require(c < order_.size() && !seen[c], "Ranking: order is not a permutation");
      seen[c] = true;
    }
  }
  Ranking(std::initializer_list<std::size_t> order) : Ranking(std::vector<std::size_t>(order)) {}

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t operator[](std::size_t position) const { return order_[position]; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }

  /// position_of()[c] is the position at which class c is picked.
  std::vector<std::size_t> position_of() const {
    std::vector<std::size_t> pos(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) pos[order_[k]] = k;
    return pos;
  }

  friend bool operator==(const Ranking&, const Ranking&) = default;

 private:
  std::vector<std::size_t> order_;
};

/// The label first, then every other class by descending teacher logit
/// (ties: lower class index first).
inline Ranking teacher_optimal_permutation(std::span<const double> teacher, std::size_t label) {
  require(!teacher.empty(), "teacher_optimal_permutation: empty logits");
  require(label < teacher.size(), "teacher_optimal_permutation: label out of range");
  const auto sorted = argsort_stable(teacher, SortDirection::descending);
  std::vector<std::size_t> order;
  order.reserve(teacher.size());
  order.push_back(label);
  for (std::size_t c : sorted)
    if (c != label) order.push_back(c);
  return Ranking(std::move(order));
}

/// log P_PL(pi | s) = sum_k [ s_{pi_k} - log sum_{l>=k} exp(s_{pi_l}) ].
///
/// The suffix normalisers are the prefix log-cumulative-sums of the ranking
/// read backwards (last pick first), so the whole likelihood is O(C).
inline double pl_log_likelihood(std::span<const double> s, const Ranking& pi) {
  require(s.size() == pi.size(), "pl_log_likelihood: length mismatch");
  require_finite(s, "pl_log_likelihood");
  const std::size_t n = s.size();
  std::vector<double> reversed(n);
  for (std::size_t j = 0; j < n; ++j) reversed[j] = s[pi[n - 1 - j]];
  const auto lc = log_cumsum_exp(reversed);
  double ll = 0.0;
  for (std::size_t j = 0; j < n; ++j) ll += reversed[j] - lc[j];
  return ll;
}

struct RankedProbability {
  Ranking ranking;
  double probability;
};

inline constexpr std::size_t kMaxEnumerationClasses = 8;

/// Every permutation of 0..C-1 in lexicographic order with its PL
/// probability, computed as the plain product of worth ratios
/// w_{pi_k} / sum_{l>=k} w_{pi_l}.  Guarded at C <= 8.
inline std::vector<RankedProbability> pl_enumerate(std::span<const double> s) {
  require(!s.empty(), "pl_enumerate: empty logits");
  if (s.size() > kMaxEnumerationClasses)
    throw SizeLimitError("pl_enumerate: C = " + std::to_string(s.size()) + " exceeds the limit of " +
                         std::to_string(kMaxEnumerationClasses));
  require_finite(s, "pl_enumerate");
  const double m = *std::max_element(s.begin(), s.end());
  std::vector<double> worth(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) worth[i] = std::exp(s[i] - m);

  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<RankedProbability> out;
  do {
    // Walk back to front so each suffix sum is built by addition only.
    double suffix = 0.0;
    double p = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      suffix += worth[*it];
      p *= worth[*it] / suffix;
    }
    out.push_back({Ranking(order), p});
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

}  // namespace pld
