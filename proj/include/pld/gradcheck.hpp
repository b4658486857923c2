// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pld/error.hpp"
#include "pld/losses.hpp"
#include "pld/numerics.hpp"

namespace pld {

struct GradCheckReport {
  /// max_i |a_i - n_i| / max(|a|_inf, |n|_inf, floor)
  double max_rel_error = 0.0;
  /// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor); diagnostic only, it is
  /// dominated by difference roundoff on coordinates below ~1e-5.
  double max_coord_rel_error = 0.0;
  std::size_t worst_index = 0;  // flat row-major index into the logits
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central finite differences (f(s + h e_i) - f(s - h e_i)) / 2h against the
/// analytic gradient for every coordinate of `s`.  Errors are measured
/// relative to the gradient's largest component, floored at `floor`.
///
/// `loss_fn` maps a RealMat of logits to a LossResult.
template <typename LossFn>
GradCheckReport grad_check(LossFn&& loss_fn, const RealMat& s, double h = 1e-5, double floor = 1e-8) {
  require(h > 0.0 && std::isfinite(h), "grad_check: step h must be > 0");
  require(floor > 0.0, "grad_check: floor must be > 0");
  const LossResult base = loss_fn(s);
  require(base.grad.rows() == s.rows() && base.grad.cols() == s.cols(), "grad_check: gradient shape mismatch");

  std::vector<double> numeric(s.size());
  RealMat probe = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s.data()[i];
    probe.data()[i] = x + h;
    const double fp = loss_fn(probe).loss;
    probe.data()[i] = x - h;
    const double fm = loss_fn(probe).loss;
    probe.data()[i] = x;
    numeric[i] = (fp - fm) / (2.0 * h);
  }

  double scale = floor;
  for (std::size_t i = 0; i < s.size(); ++i)
    scale = std::max({scale, std::abs(base.grad.data()[i]), std::abs(numeric[i])});

  GradCheckReport report;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double a = base.grad.data()[i];
    const double diff = std::abs(a - numeric[i]);
    const double err = diff / scale;
    const double coord_err = diff / std::max({std::abs(a), std::abs(numeric[i]), floor});
    report.max_coord_rel_error = std::max(report.max_coord_rel_error, coord_err);
    if (i == 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
      report.analytic = a;
      report.numeric = numeric[i];
    }
  }
  return report;
}

}  // namespace pld
