// SPDX-License-Identifier: Apache-2.0
//
// Identity suite for the ranking losses: special-case reductions,
// translation invariance, enumeration oracle agreement, the
// ascending/descending formulations, and midpoint convexity.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pld/config.hpp"
#include "pld/losses.hpp"
#include "pld/numerics.hpp"
#include "pld/ranking.hpp"

namespace pld {

struct CheckResult {
  std::string name;
  std::size_t classes = 0;
  std::size_t instances = 0;
  double max_error = 0.0;  // worst observed deviation (or violation count)
  double tolerance = 0.0;
  bool pass = false;
  double temperature = 0.0;  // teacher temperature, 0 when not applicable
};

namespace detail {

struct Instance {
  std::vector<double> s;
  std::vector<double> t;
  std::size_t label;
};

/// Logits ~ N(0, 3^2).  Every other instance forces the label away from the
/// teacher's top class.
inline Instance draw_instance(Rng& rng, std::size_t c, std::size_t k) {
  Instance in{normal_vector(rng, c, 3.0), normal_vector(rng, c, 3.0), 0};
  in.label = rng.uniform_index(c);
  if (k % 2 == 1 && c > 1 && in.label == argmax(in.t)) in.label = (in.label + 1) % c;
  return in;
}

inline double pld_single(const Instance& in, WeightScheme scheme, double tau, std::vector<double>* grad = nullptr) {
  std::vector<double> g(grad != nullptr ? in.s.size() : 0);
  const double loss = pld_example(in.s, in.t, in.label, scheme, tau, 1.0, g);
  if (grad != nullptr) *grad = std::move(g);
  return loss;
}

}  // namespace detail

inline std::vector<CheckResult> run_loss_identities(const LossCheckConfig& cfg) {
  cfg.validate();
  std::vector<CheckResult> out;
  Rng root(cfg.seed);

  for (std::size_t c : cfg.classes) {
    Rng rng = root.split();
    CheckResult ce{"pld_onehot_equals_ce", c, cfg.instances, 0.0, 1e-10};
    CheckResult lm{"pld_uniform_equals_listmle", c, cfg.instances, 0.0, 1e-10};
    CheckResult plm{"pld_exponential_equals_plistmle", c, cfg.instances, 0.0, 1e-10};
    CheckResult asc{"ascending_equals_descending", c, cfg.instances, 0.0, 1e-10};
    CheckResult cf{"closed_form_gradient", c, cfg.instances, 0.0, 1e-10};
    CheckResult ti{"translation_invariance", c, cfg.instances, 0.0, 1e-8};
    CheckResult zs{"gradient_zero_sum", c, cfg.instances, 0.0, 1e-8};

    // Exponential schedule from its unnormalised definition.
    std::vector<double> exp_w(c);
    double exp_total = 0.0;
    for (std::size_t k = 0; k < c; ++k) exp_total += exp_w[k] = std::pow(2.0, static_cast<double>(c - 1 - k)) - 1.0;
    for (auto& w : exp_w) w /= exp_total;

    for (std::size_t k = 0; k < cfg.instances; ++k) {
      const auto in = detail::draw_instance(rng, c, k);
      const Ranking pi = teacher_optimal_permutation(in.t, in.label);

      const RealMat sm(1, c, in.s);
      const Labels y{in.label};
      const double ce_ref = ce_loss(sm, y).loss;
      ce.max_error = std::max(ce.max_error, std::abs(detail::pld_single(in, WeightScheme::onehot_first, 1.0) - ce_ref));

      const double lm_ref = -pl_log_likelihood(in.s, pi) / static_cast<double>(c);
      lm.max_error = std::max(lm.max_error, std::abs(detail::pld_single(in, WeightScheme::uniform, 1.0) - lm_ref));

      if (c >= 2) {
        const double plm_ref = weighted_listmle_direct(in.s, pi, exp_w);
        plm.max_error = std::max(
            plm.max_error, std::abs(detail::pld_single(in, WeightScheme::plistmle_exponential, 1.0) - plm_ref));
      }

      const double shift = rng.uniform(-cfg.max_shift, cfg.max_shift);
      detail::Instance shifted = in;
      for (auto& v : shifted.s) v += shift;

      for (double tau : cfg.teacher_temperatures) {
        const auto w = make_weights(in.t, pi, WeightScheme::teacher_softmax, tau);
        std::vector<double> g;
        const double fast = detail::pld_single(in, WeightScheme::teacher_softmax, tau, &g);
        asc.max_error = std::max(asc.max_error, std::abs(fast - weighted_listmle_direct(in.s, pi, w.alpha)));
        const auto closed = pld_gradient_closed_form(in.s, pi, w);
        for (std::size_t i = 0; i < c; ++i) cf.max_error = std::max(cf.max_error, std::abs(closed[i] - g[i]));
      }

      for (auto scheme : {WeightScheme::teacher_softmax, WeightScheme::uniform, WeightScheme::plistmle_exponential}) {
        std::vector<double> g;
        const double base = detail::pld_single(in, scheme, 1.0, &g);
        const double moved = detail::pld_single(shifted, scheme, 1.0);
        ti.max_error = std::max(ti.max_error, std::abs(moved - base));
        double sum = 0.0;
        for (double v : g) sum += v;
        zs.max_error = std::max(zs.max_error, std::abs(sum));
      }
    }
    for (auto* r : {&ce, &lm, &plm, &asc, &cf, &ti, &zs}) {
      r->pass = r->max_error <= r->tolerance;
      out.push_back(*r);
    }
  }

  for (std::size_t c : cfg.oracle_classes) {
    Rng rng = root.split();
    CheckResult norm{"enumeration_sums_to_one", c, cfg.instances, 0.0, 1e-9};
    CheckResult match{"likelihood_matches_enumeration", c, cfg.instances, 0.0, 1e-10};
    CheckResult nll{"listmle_matches_enumeration_nll", c, cfg.instances, 0.0, 1e-9};
    for (std::size_t k = 0; k < cfg.instances; ++k) {
      const auto in = detail::draw_instance(rng, c, k);
      const auto table = pl_enumerate(in.s);
      double total = 0.0;
      for (const auto& e : table) {
        total += e.probability;
        match.max_error = std::max(match.max_error, std::abs(std::exp(pl_log_likelihood(in.s, e.ranking)) - e.probability));
      }
      norm.max_error = std::max(norm.max_error, std::abs(total - 1.0));
      const Ranking pi = teacher_optimal_permutation(in.t, in.label);
      const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.ranking == pi; });
      nll.max_error = std::max(nll.max_error, std::abs(-pl_log_likelihood(in.s, pi) + std::log(it->probability)));
    }
    for (auto* r : {&norm, &match, &nll}) {
      r->pass = r->max_error <= r->tolerance;
      out.push_back(*r);
    }
  }

  if (cfg.convexity_triples > 0) {
    for (std::size_t c : cfg.classes) {
      for (double tau : cfg.teacher_temperatures) {
        Rng rng = root.split();
        CheckResult cv{"pld_midpoint_convexity_violations", c, cfg.convexity_triples, 0.0, 0.0};
        for (std::size_t k = 0; k < cfg.convexity_triples; ++k) {
          auto a = detail::draw_instance(rng, c, k);
          const auto s2 = normal_vector(rng, c, 3.0);
          const double lam = rng.uniform();
          auto b = a;
          b.s = s2;
          auto m = a;
          for (std::size_t i = 0; i < c; ++i) m.s[i] = lam * a.s[i] + (1.0 - lam) * s2[i];
          const double lhs = detail::pld_single(m, WeightScheme::teacher_softmax, tau);
          const double rhs = lam * detail::pld_single(a, WeightScheme::teacher_softmax, tau) +
                             (1.0 - lam) * detail::pld_single(b, WeightScheme::teacher_softmax, tau);
          if (lhs > rhs + 1e-9) cv.max_error += 1.0;
        }
        cv.pass = cv.max_error == 0.0;
        cv.temperature = tau;
        out.push_back(cv);
      }
    }
  }
  return out;
}

}  // namespace pld
