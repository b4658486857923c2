// SPDX-License-Identifier: Apache-2.0
//
// Loss kernels with analytic gradients with respect to student logits.
// Every kernel returns the batch-mean loss and the N x C gradient of that
// mean.  Batches are reduced sequentially in row order, so results are
// bitwise reproducible.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pld/error.hpp"
#include "pld/numerics.hpp"
#include "pld/ranking.hpp"

namespace pld {

using Labels = std::vector<std::size_t>;

struct LossResult {
  double loss = 0.0;
  RealMat grad;
};

// ---------------------------------------------------------------------------
// Position weights
// ---------------------------------------------------------------------------

enum class WeightScheme { teacher_softmax, uniform, plistmle_exponential, onehot_first };

struct PositionWeights {
  std::vector<double> alpha;  // first-pick-first
  WeightScheme scheme = WeightScheme::teacher_softmax;
};

/// Normalised P-ListMLE schedule (2^{C-k} - 1) / (2^C - C - 1), k = 1..C.
/// Numerator and denominator are both scaled by 2^-C so nothing overflows;
/// 2^-C underflows harmlessly to zero for very large C.
inline void plistmle_exponential_weights(std::span<double> alpha) {
  require(alpha.size() >= 2, "plistmle weights need C >= 2");
  const int c = static_cast<int>(alpha.size());
  const double tail = std::ldexp(1.0, -c);
  const double denom = 1.0 - static_cast<double>(alpha.size() + 1) * tail;
  for (int k = 0; k < c; ++k) alpha[k] = (std::ldexp(1.0, -1 - k) - tail) / denom;
}

inline std::vector<double> plistmle_exponential_weights(std::size_t classes) {
  std::vector<double> alpha(classes);
  plistmle_exponential_weights(alpha);
  return alpha;
}

/// Position weights for the ranking `order` (first pick first) written into
/// alpha; q is scratch for the teacher softmax.
inline void fill_weights(std::span<const double> teacher, std::span<const std::size_t> order, WeightScheme scheme,
                         double teacher_temperature, std::span<double> alpha, std::vector<double>& q) {
  const std::size_t c = order.size();
  require(teacher.size() == c && alpha.size() == c, "make_weights: teacher length != ranking length");
  switch (scheme) {
    case WeightScheme::teacher_softmax:
      require(teacher_temperature > 0.0 && std::isfinite(teacher_temperature),
              "make_weights: teacher temperature must be > 0");
      q.resize(c);
      softmax(teacher, teacher_temperature, q);
      for (std::size_t k = 0; k < c; ++k) alpha[k] = q[order[k]];
      break;
    case WeightScheme::uniform:
      std::fill(alpha.begin(), alpha.end(), 1.0 / static_cast<double>(c));
      break;
    case WeightScheme::plistmle_exponential:
      plistmle_exponential_weights(alpha);
      break;
    case WeightScheme::onehot_first:
      std::fill(alpha.begin(), alpha.end(), 0.0);
      alpha[0] = 1.0;
      break;
  }
}

inline PositionWeights make_weights(std::span<const double> teacher, const Ranking& pi, WeightScheme scheme,
                                    double teacher_temperature = 1.0) {
  PositionWeights w{std::vector<double>(pi.size(), 0.0), scheme};
  std::vector<double> q;
  fill_weights(teacher, pi.order(), scheme, teacher_temperature, w.alpha, q);
  return w;
}

// ---------------------------------------------------------------------------
// Shape checks
// ---------------------------------------------------------------------------

namespace detail {

inline void check_labels(const RealMat& s, std::span<const std::size_t> labels) {
  require(s.rows() >= 1 && s.cols() >= 1, "loss: empty logit batch");
  require(labels.size() == s.rows(), "loss: labels.size() != batch size");
  for (std::size_t y : labels) require(y < s.cols(), "loss: label out of range");
}

inline void check_pair(const RealMat& s, const RealMat& t) {
  require(s.rows() == t.rows() && s.cols() == t.cols(), "loss: student/teacher shape mismatch");
}

/// grad wrt z of f(softmax(z)) given p = softmax(z) and g = df/dp.
inline void softmax_backward(std::span<const double> p, std::span<const double> g, double scale,
                             std::span<double> out) {
  const double pg = dot(p, g);
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = scale * p[i] * (g[i] - pg);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cross-entropy and label smoothing
// ---------------------------------------------------------------------------

inline LossResult ce_loss(const RealMat& s, std::span<const std::size_t> labels) {
  detail::check_labels(s, labels);
  const std::size_t n = s.rows(), c = s.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossResult out{0.0, RealMat(n, c)};
  std::vector<double> p(c);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = s.row(i);
    out.loss += log_sum_exp(row) - row[labels[i]];
    softmax(row, 1.0, p);
    auto g = out.grad.row(i);
    for (std::size_t j = 0; j < c; ++j) g[j] = p[j] * inv_n;
    g[labels[i]] -= inv_n;
  }
  out.loss *= inv_n;
  return out;
}

/// Cross-entropy against (1 - eps) * onehot(y) + eps / C.
inline LossResult ls_loss(const RealMat& s, std::span<const std::size_t> labels, double epsilon) {
  detail::check_labels(s, labels);
  require(epsilon >= 0.0 && epsilon < 1.0, "ls_loss: epsilon must be in [0, 1)");
  const std::size_t n = s.rows(), c = s.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double off = epsilon / static_cast<double>(c);
  LossResult out{0.0, RealMat(n, c)};
  std::vector<double> p(c);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = s.row(i);
    double target_dot = 0.0;
    for (std::size_t j = 0; j < c; ++j) target_dot += off * row[j];
    target_dot += (1.0 - epsilon) * row[labels[i]];
    out.loss += log_sum_exp(row) - target_dot;
    softmax(row, 1.0, p);
    auto g = out.grad.row(i);
    for (std::size_t j = 0; j < c; ++j) g[j] = (p[j] - off) * inv_n;
    g[labels[i]] -= (1.0 - epsilon) * inv_n;
  }
  out.loss *= inv_n;
  return out;
}

// ---------------------------------------------------------------------------
// Temperature-scaled KD with a choice of divergence
// ---------------------------------------------------------------------------

enum class Divergence { forward_kl, reverse_kl, js };

/// alpha * CE(s, y) + (1 - alpha) * tau^2 * D(q^T, q^S) with
///   forward-kl: KL(q^T || q^S)
///   reverse-kl: KL(q^S || q^T)
///   js:         (KL(q^T || m) + KL(q^S || m)) / 2,  m = (q^T + q^S) / 2
inline LossResult kd_loss(const RealMat& s, const RealMat& t, std::span<const std::size_t> labels, double alpha,
                          double tau, Divergence divergence) {
  detail::check_labels(s, labels);
  detail::check_pair(s, t);
  require(alpha >= 0.0 && alpha <= 1.0, "kd_loss: alpha must be in [0, 1]");
  require(tau > 0.0 && std::isfinite(tau), "kd_loss: tau must be > 0");
  const std::size_t n = s.rows(), c = s.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double kd_scale = (1.0 - alpha) * tau * tau;
  LossResult out{0.0, RealMat(n, c)};
  std::vector<double> ls(c), lt(c), ps(c), pt(c), work(c), gdiv(c), p1(c);

  for (std::size_t i = 0; i < n; ++i) {
    const auto srow = s.row(i);
    const auto trow = t.row(i);
    softmax_with_log(srow, tau, ps, ls);
    softmax_with_log(trow, tau, pt, lt);

    double div = 0.0;
    switch (divergence) {
      case Divergence::forward_kl:
        for (std::size_t j = 0; j < c; ++j) {
          div += pt[j] * (lt[j] - ls[j]);
          gdiv[j] = (ps[j] - pt[j]) / tau;
        }
        break;
      case Divergence::reverse_kl:
        for (std::size_t j = 0; j < c; ++j) {
          work[j] = ls[j] - lt[j];
          div += ps[j] * work[j];
        }
        detail::softmax_backward(ps, work, 1.0 / tau, gdiv);
        break;
      case Divergence::js:
        for (std::size_t j = 0; j < c; ++j) {
          const double lm = log_add_exp(ls[j], lt[j]) - std::numbers::ln2;
          div += 0.5 * (pt[j] * (lt[j] - lm) + ps[j] * (ls[j] - lm));
          work[j] = 0.5 * (ls[j] - lm);  // d JS / d q^S_j
        }
        detail::softmax_backward(ps, work, 1.0 / tau, gdiv);
        break;
    }

    double ce = 0.0;
    if (alpha > 0.0) {
      ce = log_sum_exp(srow) - srow[labels[i]];
      softmax(srow, 1.0, p1);
    }
    out.loss += alpha * ce + kd_scale * div;
    auto g = out.grad.row(i);
    for (std::size_t j = 0; j < c; ++j) g[j] = kd_scale * gdiv[j] * inv_n;
    if (alpha > 0.0) {
      for (std::size_t j = 0; j < c; ++j) g[j] += alpha * p1[j] * inv_n;
      g[labels[i]] -= alpha * inv_n;
    }
  }
  out.loss *= inv_n;
  return out;
}

/// Mean over examples of KL(softmax(t) || softmax(s)).
inline double student_teacher_kl(const RealMat& s, const RealMat& t) {
  detail::check_pair(s, t);
  require(s.rows() >= 1, "student_teacher_kl: empty batch");
  const std::size_t c = s.cols();
  std::vector<double> ls(c), lt(c);
  double total = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    log_softmax(s.row(i), 1.0, ls);
    log_softmax(t.row(i), 1.0, lt);
    double kl = 0.0;
    for (std::size_t j = 0; j < c; ++j) kl += std::exp(lt[j]) * (lt[j] - ls[j]);
    total += std::max(kl, 0.0);
  }
  return total / static_cast<double>(s.rows());
}

// ---------------------------------------------------------------------------
// DIST: Pearson-correlation matching of probability rows and columns
// ---------------------------------------------------------------------------

inline constexpr double kPearsonEps = 1e-8;

/// Pearson correlation u.v / (|u| |v| + eps) of centred a and b, and its
/// gradient with respect to a (written into grad_a).
inline double pearson_with_grad(std::span<const double> a, std::span<const double> b, std::span<double> grad_a) {
  const std::size_t m = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(m);
  mb /= static_cast<double>(m);
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double u = a[i] - ma, v = b[i] - mb;
    uv += u * v;
    uu += u * u;
    vv += v * v;
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  const double d = nu * nv + kPearsonEps;
  const double r = uv / d;
  // d r / d a = v / d - uv * |v| / (d^2 |u|) * u   (u, v already centred)
  const double coef_u = nu > 0.0 ? uv * nv / (d * d * nu) : 0.0;
  for (std::size_t i = 0; i < m; ++i) grad_a[i] = (b[i] - mb) / d - coef_u * (a[i] - ma);
  return r;
}

/// alpha * CE + beta * mean_rows(1 - pearson) + gamma * mean_cols(1 - pearson)
/// on probabilities at temperature tau.
inline LossResult dist_loss(const RealMat& s, const RealMat& t, std::span<const std::size_t> labels, double alpha,
                            double beta, double gamma, double tau) {
  detail::check_labels(s, labels);
  detail::check_pair(s, t);
  require(s.cols() >= 2, "dist_loss: needs C >= 2");
  require(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0, "dist_loss: weights must be nonnegative");
  require(tau > 0.0 && std::isfinite(tau), "dist_loss: tau must be > 0");
  require(gamma == 0.0 || s.rows() >= 2, "dist_loss: intra-class term needs a batch of N >= 2");
  const std::size_t n = s.rows(), c = s.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_c = 1.0 / static_cast<double>(c);

  RealMat ps(n, c), pt(n, c), gp(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    softmax(s.row(i), tau, ps.row(i));
    softmax(t.row(i), tau, pt.row(i));
  }

  double inter = 0.0;
  std::vector<double> gr(c);
  if (beta > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      inter += 1.0 - pearson_with_grad(ps.row(i), pt.row(i), gr);
      auto g = gp.row(i);
      for (std::size_t j = 0; j < c; ++j) g[j] -= beta * inv_n * gr[j];
    }
    inter *= inv_n;
  }

  double intra = 0.0;
  if (gamma > 0.0) {
    std::vector<double> col_s(n), col_t(n), gc(n);
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        col_s[i] = ps(i, j);
        col_t[i] = pt(i, j);
      }
      intra += 1.0 - pearson_with_grad(col_s, col_t, gc);
      for (std::size_t i = 0; i < n; ++i) gp(i, j) -= gamma * inv_c * gc[i];
    }
    intra *= inv_c;
  }

  LossResult out{beta * inter + gamma * intra, RealMat(n, c)};
  for (std::size_t i = 0; i < n; ++i) detail::softmax_backward(ps.row(i), gp.row(i), 1.0 / tau, out.grad.row(i));
  if (alpha > 0.0) {
    const auto ce = ce_loss(s, labels);
    out.loss += alpha * ce.loss;
    for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad.data()[k] += alpha * ce.grad.data()[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plackett-Luce distillation
// ---------------------------------------------------------------------------

/// Gradient of sum_k alpha_k [ -s_{pi_k} + log sum_{l>=k} exp(s_{pi_l}) ].
///
/// For the class at position m,
///   dL/ds_{pi_m} = exp(s_{pi_m}) * sum_{k<=m} alpha_k / Z_k  -  alpha_m,
/// with Z_k the suffix normaliser at position k.  The running sum over k is
/// kept in log space so no exp of a raw logit is ever formed.
inline std::vector<double> pld_gradient_closed_form(std::span<const double> s, const Ranking& pi,
                                                    const PositionWeights& weights) {
  const std::size_t c = pi.size();
  require(s.size() == c && weights.alpha.size() == c, "pld_gradient_closed_form: length mismatch");
  require_finite(s, "pld_gradient_closed_form");
  // log Z_k for every position, from one reversed log-cumsum pass.
  std::vector<double> reversed(c), log_z(c);
  for (std::size_t j = 0; j < c; ++j) reversed[j] = s[pi[c - 1 - j]];
  const auto lc = log_cumsum_exp(reversed);
  for (std::size_t k = 0; k < c; ++k) log_z[k] = lc[c - 1 - k];

  std::vector<double> grad(c);
  double log_running = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < c; ++m) {
    const double a = weights.alpha[m];
    if (a > 0.0) log_running = log_add_exp(log_running, std::log(a) - log_z[m]);
    grad[pi[m]] = std::exp(s[pi[m]] + log_running) - a;
  }
  return grad;
}

/// Reference evaluation of the weighted ranking loss straight from the
/// descending-suffix definition: one full log-sum-exp per position, O(C^2).
inline double weighted_listmle_direct(std::span<const double> s, const Ranking& pi, std::span<const double> alpha) {
  const std::size_t c = pi.size();
  require(s.size() == c && alpha.size() == c, "weighted_listmle_direct: length mismatch");
  double loss = 0.0;
  std::vector<double> suffix;
  for (std::size_t k = 0; k < c; ++k) {
    suffix.clear();
    for (std::size_t l = k; l < c; ++l) suffix.push_back(s[pi[l]]);
    loss += alpha[k] * (-s[pi[k]] + log_sum_exp(suffix));
  }
  return loss;
}

namespace detail {

/// Rows whose student logits span at most this range are evaluated with
/// max-shifted exponentials; wider rows fall back to log space.
inline constexpr double kLinearRange = 600.0;

}  // namespace detail

namespace detail {

struct PldScratch {
  ArgsortScratch sort;
  std::vector<std::size_t> sorted, pi;
  std::vector<double> q, alpha, sp, w, cum, e;
};

inline PldScratch& pld_scratch() {
  thread_local PldScratch scratch;
  return scratch;
}

}  // namespace detail

/// Single-example weighted PL loss in ascending order: the ranking is read
/// last-pick-first so the suffix normalisers become a prefix
/// log-cumulative-sum-exp.  Writes scale * dL/ds into grad (may be empty to
/// skip the gradient) and returns the unscaled loss.
inline double pld_example(std::span<const double> s, std::span<const double> t, std::size_t label,
                          WeightScheme scheme, double teacher_temperature, double scale, std::span<double> grad) {
  const std::size_t c = s.size();
  require(c >= 1 && t.size() == c, "pld_example: student/teacher length mismatch");
  require(label < c, "pld_example: label out of range");
  require(grad.empty() || grad.size() == c, "pld_example: gradient length mismatch");
  require_finite(s, "pld_example");
  auto& ws = detail::pld_scratch();

  // Teacher-optimal permutation: the label, then descending teacher logits.
  argsort_stable_into(t, SortDirection::descending, ws.sorted, ws.sort);
  ws.pi.resize(c);
  ws.pi[0] = label;
  for (std::size_t k = 1; std::size_t cls : ws.sorted)
    if (cls != label) ws.pi[k++] = cls;
  ws.alpha.resize(c);
  fill_weights(t, ws.pi, scheme, teacher_temperature, ws.alpha, ws.q);

  auto& sp = ws.sp;
  auto& w = ws.w;
  auto& lc = ws.cum;
  sp.resize(c);
  w.resize(c);
  lc.resize(c);
  for (std::size_t j = 0; j < c; ++j) {
    sp[j] = s[ws.pi[c - 1 - j]];
    w[j] = ws.alpha[c - 1 - j];
  }
  const auto [lo, hi] = std::minmax_element(sp.begin(), sp.end());
  const double top = *hi;
  double loss = 0.0;

  if (top - *lo <= detail::kLinearRange) {
    // e_j = exp(sp_j - top) and lc holds the running sums S_j, all >= e^-600.
    auto& e = ws.e;
    e.resize(c);
    double running = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      e[j] = std::exp(sp[j] - top);
      running += e[j];
      lc[j] = running;
      loss += w[j] * (std::log(running) - (sp[j] - top));
    }
    if (!grad.empty()) {
      // d/d sp_i = e_i * sum_{j>=i} w_j / S_j - w_i.
      double tail = 0.0;
      for (std::size_t i = c; i-- > 0;) {
        tail += w[i] / lc[i];
        grad[ws.pi[c - 1 - i]] = scale * (e[i] * tail - w[i]);
      }
    }
    return loss;
  }

  log_cumsum_exp(sp, lc);
  for (std::size_t j = 0; j < c; ++j) loss += w[j] * (lc[j] - sp[j]);
  if (!grad.empty()) {
    // Backward through the log-cumsum: d/d sp_i = sum_{j>=i} w_j exp(sp_i - lc_j) - w_i.
    double log_tail = -std::numeric_limits<double>::infinity();
    for (std::size_t i = c; i-- > 0;) {
      if (w[i] > 0.0) log_tail = log_add_exp(log_tail, std::log(w[i]) - lc[i]);
      grad[ws.pi[c - 1 - i]] = scale * (std::exp(sp[i] + log_tail) - w[i]);
    }
  }
  return loss;
}

inline LossResult pld_loss(const RealMat& s, const RealMat& t, std::span<const std::size_t> labels,
                           double teacher_temperature = 1.0, WeightScheme scheme = WeightScheme::teacher_softmax) {
  detail::check_labels(s, labels);
  detail::check_pair(s, t);
  require(teacher_temperature > 0.0 && std::isfinite(teacher_temperature), "pld_loss: teacher temperature must be > 0");
  const std::size_t n = s.rows(), c = s.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossResult out{0.0, RealMat(n, c)};
  for (std::size_t i = 0; i < n; ++i)
    out.loss += pld_example(s.row(i), t.row(i), labels[i], scheme, teacher_temperature, inv_n, out.grad.row(i));
  out.loss *= inv_n;
  return out;
}

/// Unweighted ranking loss scaled by 1/C (uniform position weights).
inline LossResult listmle_loss(const RealMat& s, const RealMat& t, std::span<const std::size_t> labels) {
  return pld_loss(s, t, labels, 1.0, WeightScheme::uniform);
}

inline LossResult plistmle_loss(const RealMat& s, const RealMat& t, std::span<const std::size_t> labels) {
  return pld_loss(s, t, labels, 1.0, WeightScheme::plistmle_exponential);
}

// ---------------------------------------------------------------------------
// Logit standardisation
// ---------------------------------------------------------------------------

inline constexpr double kStandardizeEps = 1e-8;

enum class Standardize { none, both, teacher_only };

/// Per-row z-score (x - mean) / (population std + eps).
inline RealMat standardize_logits(const RealMat& x) {
  require(x.cols() >= 2, "standardize_logits: needs C >= 2");
  const std::size_t c = x.cols();
  RealMat z(x.rows(), c);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(c));
    auto out = z.row(i);
    for (std::size_t j = 0; j < c; ++j) out[j] = (row[j] - mean) / (sd + kStandardizeEps);
  }
  return z;
}

/// Pull a gradient with respect to standardize_logits(x) back to x.
inline RealMat standardize_backward(const RealMat& x, const RealMat& grad_z) {
  require(x.rows() == grad_z.rows() && x.cols() == grad_z.cols(), "standardize_backward: shape mismatch");
  const std::size_t c = x.cols();
  const double cd = static_cast<double>(c);
  RealMat gx(x.rows(), c);
  std::vector<double> u(c);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const auto g = grad_z.row(i);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= cd;
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      u[j] = row[j] - mean;
      var += u[j] * u[j];
    }
    const double sd = std::sqrt(var / cd);
    const double d = sd + kStandardizeEps;
    double gmean = 0.0;
    for (double v : g) gmean += v;
    gmean /= cd;
    const double gu = dot(g, u);
    const double coef = sd > 0.0 ? gu / (d * d * cd * sd) : 0.0;
    auto out = gx.row(i);
    for (std::size_t j = 0; j < c; ++j) out[j] = (g[j] - gmean) / d - coef * u[j];
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Configured loss
// ---------------------------------------------------------------------------

enum class LossKind { ce, ls, kd, dist, listmle, plistmle, pld };

struct DistillLossConfig {
  LossKind kind = LossKind::pld;
  double ce_mix = 0.1;               // alpha for kd / dist
  double kd_temperature = 2.0;       // tau for kd
  double teacher_temperature = 1.0;  // tau_T for pld weights
  double dist_beta = 0.45;
  double dist_gamma = 0.45;
  double dist_temperature = 1.0;
  double ls_epsilon = 0.1;
  Divergence divergence = Divergence::forward_kl;
  Standardize standardize = Standardize::none;
  WeightScheme pld_weights = WeightScheme::teacher_softmax;

  void validate() const {
    require(ce_mix >= 0.0 && ce_mix <= 1.0, "loss config: ce_mix must be in [0, 1]");
    require(kd_temperature > 0.0, "loss config: kd_temperature must be > 0");
    require(teacher_temperature > 0.0, "loss config: teacher_temperature must be > 0");
    require(dist_temperature > 0.0, "loss config: dist_temperature must be > 0");
    require(dist_beta >= 0.0 && dist_gamma >= 0.0, "loss config: dist weights must be >= 0");
    require(ls_epsilon >= 0.0 && ls_epsilon < 1.0, "loss config: ls_epsilon must be in [0, 1)");
  }
};

inline bool needs_teacher(LossKind kind) noexcept { return kind != LossKind::ce && kind != LossKind::ls; }

/// Evaluate the configured loss, applying logit standardisation upstream and
/// chaining its gradient when the student logits are standardised.
/// `teacher` may be null only for ce and ls.
inline LossResult evaluate_loss(const DistillLossConfig& cfg, const RealMat& s, const RealMat* teacher,
                                std::span<const std::size_t> labels) {
  require(teacher != nullptr || !needs_teacher(cfg.kind), "evaluate_loss: loss kind needs teacher logits");
  const bool std_student = cfg.standardize == Standardize::both;
  const bool std_teacher = cfg.standardize != Standardize::none && teacher != nullptr;
  const RealMat s_in = std_student ? standardize_logits(s) : RealMat();
  const RealMat t_in = std_teacher ? standardize_logits(*teacher) : RealMat();
  const RealMat& sx = std_student ? s_in : s;
  const RealMat* tx = std_teacher ? &t_in : teacher;

  LossResult r;
  switch (cfg.kind) {
    case LossKind::ce: r = ce_loss(sx, labels); break;
    case LossKind::ls: r = ls_loss(sx, labels, cfg.ls_epsilon); break;
    case LossKind::kd: r = kd_loss(sx, *tx, labels, cfg.ce_mix, cfg.kd_temperature, cfg.divergence); break;
    case LossKind::dist:
      r = dist_loss(sx, *tx, labels, cfg.ce_mix, cfg.dist_beta, sx.rows() >= 2 ? cfg.dist_gamma : 0.0,
                    cfg.dist_temperature);
      break;
    case LossKind::listmle: r = listmle_loss(sx, *tx, labels); break;
    case LossKind::plistmle: r = plistmle_loss(sx, *tx, labels); break;
    case LossKind::pld: r = pld_loss(sx, *tx, labels, cfg.teacher_temperature, cfg.pld_weights); break;
  }
  if (std_student) r.grad = standardize_backward(s, r.grad);
  return r;
}

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::ce: return "ce";
    case LossKind::ls: return "ls";
    case LossKind::kd: return "kd";
    case LossKind::dist: return "dist";
    case LossKind::listmle: return "listmle";
    case LossKind::plistmle: return "plistmle";
    case LossKind::pld: return "pld";
  }
  return "?";
}

inline std::string_view to_string(Divergence d) {
  switch (d) {
    case Divergence::forward_kl: return "forward-kl";
    case Divergence::reverse_kl: return "reverse-kl";
    case Divergence::js: return "js";
  }
  return "?";
}

inline std::string_view to_string(Standardize s) {
  switch (s) {
    case Standardize::none: return "none";
    case Standardize::both: return "both";
    case Standardize::teacher_only: return "teacher-only";
  }
  return "?";
}

inline std::string_view to_string(WeightScheme w) {
  switch (w) {
    case WeightScheme::teacher_softmax: return "teacher-softmax";
    case WeightScheme::uniform: return "uniform";
    case WeightScheme::plistmle_exponential: return "plistmle-exponential";
    case WeightScheme::onehot_first: return "onehot-first";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view s) {
  for (auto k : {LossKind::ce, LossKind::ls, LossKind::kd, LossKind::dist, LossKind::listmle, LossKind::plistmle,
                 LossKind::pld})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown loss kind '" + std::string(s) + "'");
}

inline Divergence parse_divergence(std::string_view s) {
  for (auto d : {Divergence::forward_kl, Divergence::reverse_kl, Divergence::js})
    if (to_string(d) == s) return d;
  throw InvalidArgument("unknown divergence '" + std::string(s) + "'");
}

inline Standardize parse_standardize(std::string_view s) {
  for (auto m : {Standardize::none, Standardize::both, Standardize::teacher_only})
    if (to_string(m) == s) return m;
  throw InvalidArgument("unknown standardize mode '" + std::string(s) + "'");
}

inline WeightScheme parse_weight_scheme(std::string_view s) {
  for (auto w : {WeightScheme::teacher_softmax, WeightScheme::uniform, WeightScheme::plistmle_exponential,
                 WeightScheme::onehot_first})
    if (to_string(w) == s) return w;
  throw InvalidArgument("unknown weight scheme '" + std::string(s) + "'");
}

}  // namespace pld
