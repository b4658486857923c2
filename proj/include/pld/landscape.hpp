// SPDX-License-Identifier: Apache-2.0
//
// Two-dimensional loss slices in logit space:
//   s(a, b) = t + a d1 + b d2,   (a, b) in [-m |t|, m |t|]^2
// with t a random unit teacher vector and d1, d2 random orthonormal
// directions.  Also line-convexity probes along the slice plane.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pld/error.hpp"
#include "pld/losses.hpp"
#include "pld/numerics.hpp"

namespace pld {

struct SliceSpec {
  std::size_t classes = 100;
  std::size_t resolution = 41;
  double range_multiplier = 5.0;
  std::vector<double> temperatures{1.0};
  std::vector<LossKind> losses{LossKind::pld, LossKind::kd, LossKind::dist};
  std::uint64_t seed = 0;

  void validate() const {
    require(classes >= 2, "slice: need V >= 2");
    require(resolution >= 3, "slice: need R >= 3");
    require(range_multiplier > 0.0 && std::isfinite(range_multiplier), "slice: range multiplier must be > 0");
    require(!temperatures.empty() && !losses.empty(), "slice: need at least one loss and one temperature");
    for (double t : temperatures) require(t > 0.0 && std::isfinite(t), "slice: temperatures must be > 0");
  }
};

/// The teacher vector, its top class, and the two slice directions.
struct SlicePlane {
  std::vector<double> teacher;
  std::vector<double> d1;
  std::vector<double> d2;
  std::size_t label = 0;
};

struct SliceSurface {
  LossKind loss = LossKind::pld;
  double temperature = 1.0;
  std::vector<double> values;  // R x R, alpha index major

  friend bool operator==(const SliceSurface&, const SliceSurface&) = default;
};

struct SliceGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<SliceSurface> surfaces;

  std::size_t resolution() const noexcept { return alphas.size(); }
  double value(std::size_t surface, std::size_t ia, std::size_t ib) const {
    return surfaces[surface].values[ia * alphas.size() + ib];
  }

  friend bool operator==(const SliceGrid&, const SliceGrid&) = default;
};

inline constexpr int kMaxDirectionDraws = 8;

namespace detail {

inline void subtract_projection(std::vector<double>& v, const std::vector<double>& unit) {
  const double p = dot(v, unit);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * unit[i];
}

/// Random unit vector orthogonal to every vector in `basis` (two
/// Gram-Schmidt passes).  Re-draws when the residual is degenerate.
inline std::vector<double> draw_orthonormal(Rng& rng, std::size_t n, const std::vector<std::vector<double>>& basis) {
  for (int attempt = 0; attempt < kMaxDirectionDraws; ++attempt) {
    std::vector<double> v = normal_vector(rng, n);
    const double raw = norm2(v);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) subtract_projection(v, b);
    const double len = norm2(v);
    if (!(len > 1e-6 * raw) || len == 0.0) continue;
    for (auto& x : v) x /= len;
    return v;
  }
  throw ConstructionError("slice: Gram-Schmidt degenerate after " + std::to_string(kMaxDirectionDraws) + " draws");
}

}  // namespace detail

inline SlicePlane make_plane(std::size_t classes, std::uint64_t seed) {
  require(classes >= 2, "slice: need V >= 2");
  Rng rng(seed);
  SlicePlane plane;
  plane.teacher = normal_vector(rng, classes);
  const double tn = norm2(plane.teacher);
  if (!(tn > 0.0)) throw ConstructionError("slice: zero teacher vector");
  for (auto& x : plane.teacher) x /= tn;
  plane.label = argmax(plane.teacher);
  plane.d1 = detail::draw_orthonormal(rng, classes, {});
  plane.d2 = detail::draw_orthonormal(rng, classes, {plane.d1});
  return plane;
}

inline std::vector<double> slice_point(const SlicePlane& plane, double a, double b) {
  std::vector<double> s(plane.teacher.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = plane.teacher[i] + a * plane.d1[i] + b * plane.d2[i];
  return s;
}

/// Loss of a single logit row against the plane's teacher.  Conventions:
/// label = argmax(t); kd is pure forward KL at tau = T (no CE term); dist is
/// the inter-class term only (beta = 1, gamma = 0, tau = T); pld uses
/// teacher-softmax weights at tau_T = T.
inline double slice_loss(LossKind kind, double temperature, const SlicePlane& plane, std::span<const double> s) {
  const std::size_t c = plane.teacher.size();
  const RealMat sm(1, c, std::vector<double>(s.begin(), s.end()));
  const RealMat tm(1, c, plane.teacher);
  const Labels y{plane.label};
  switch (kind) {
    case LossKind::ce: return ce_loss(sm, y).loss;
    case LossKind::ls: return ls_loss(sm, y, 0.1).loss;
    case LossKind::kd: return kd_loss(sm, tm, y, 0.0, temperature, Divergence::forward_kl).loss;
    case LossKind::dist: return dist_loss(sm, tm, y, 0.0, 1.0, 0.0, temperature).loss;
    case LossKind::listmle: return listmle_loss(sm, tm, y).loss;
    case LossKind::plistmle: return plistmle_loss(sm, tm, y).loss;
    case LossKind::pld: return pld_loss(sm, tm, y, temperature).loss;
  }
  return 0.0;
}

inline double slice_loss(LossKind kind, double temperature, const SlicePlane& plane, double a, double b) {
  return slice_loss(kind, temperature, plane, slice_point(plane, a, b));
}

inline std::vector<double> slice_coordinates(const SliceSpec& spec) {
  // |t| == 1, so the half-width is the range multiplier itself.
  const double half = spec.range_multiplier;
  const std::size_t r = spec.resolution;
  std::vector<double> xs(r, 0.0);
  // Fill the lower half and mirror it, so the grid is exactly symmetric and
  // an odd resolution puts 0 on the grid.
  for (std::size_t i = 0; i < r / 2; ++i) {
    xs[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(r - 1);
    xs[r - 1 - i] = -xs[i];
  }
  return xs;
}

inline SliceGrid make_slice(const SliceSpec& spec, const SlicePlane& plane) {
  spec.validate();
  require(plane.teacher.size() == spec.classes, "slice: plane dimension does not match spec");
  SliceGrid grid;
  grid.alphas = slice_coordinates(spec);
  grid.betas = grid.alphas;
  const std::size_t r = spec.resolution;
  for (LossKind kind : spec.losses) {
    for (double temp : spec.temperatures) {
      SliceSurface surf{kind, temp, std::vector<double>(r * r)};
      for (std::size_t ia = 0; ia < r; ++ia)
        for (std::size_t ib = 0; ib < r; ++ib)
          surf.values[ia * r + ib] = slice_loss(kind, temp, plane, grid.alphas[ia], grid.betas[ib]);
      require(all_finite(surf.values), "slice: non-finite loss value");
      grid.surfaces.push_back(std::move(surf));
    }
  }
  return grid;
}

inline SliceGrid make_slice(const SliceSpec& spec) {
  spec.validate();
  return make_slice(spec, make_plane(spec.classes, spec.seed));
}

/// PLD surfaces at each temperature over one shared plane.
inline SliceGrid temperature_sweep(SliceSpec spec, std::vector<double> temperatures = {2.0, 1.0, 0.5, 0.1}) {
  spec.temperatures = std::move(temperatures);
  spec.losses = {LossKind::pld};
  return make_slice(spec);
}

/// L(lam p + (1 - lam) q) - (lam L(p) + (1 - lam) L(q)) on the slice plane.
/// Positive values are convexity violations.
inline double convexity_gap(LossKind kind, double temperature, const SlicePlane& plane, double pa, double pb,
                            double qa, double qb, double lam) {
  const double ma = lam * pa + (1.0 - lam) * qa;
  const double mb = lam * pb + (1.0 - lam) * qb;
  const double lp = slice_loss(kind, temperature, plane, pa, pb);
  const double lq = slice_loss(kind, temperature, plane, qa, qb);
  const double lm = slice_loss(kind, temperature, plane, ma, mb);
  return lm - (lam * lp + (1.0 - lam) * lq);
}

/// Count sampled triples (p, q, lam) on the slice square with
/// L(lam p + (1 - lam) q) > lam L(p) + (1 - lam) L(q) + tolerance.
inline std::size_t line_convexity_probe(LossKind kind, double temperature, const SliceSpec& spec,
                                        const SlicePlane& plane, std::size_t trials, std::uint64_t seed,
                                        double tolerance = 1e-9) {
  spec.validate();
  require(trials >= 1, "line_convexity_probe: trials must be >= 1");
  Rng rng(seed);
  const double half = spec.range_multiplier;
  std::size_t violations = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    const double pa = rng.uniform(-half, half), pb = rng.uniform(-half, half);
    const double qa = rng.uniform(-half, half), qb = rng.uniform(-half, half);
    const double lam = rng.uniform();
    if (convexity_gap(kind, temperature, plane, pa, pb, qa, qb, lam) > tolerance) ++violations;
  }
  return violations;
}

}  // namespace pld
