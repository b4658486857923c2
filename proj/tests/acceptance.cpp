// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.  Reference values come from tests/oracles.hpp.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pld/pld.hpp"

namespace fs = std::filesystem;
using namespace pld;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> flat(const RealMat& m) { return m.values(); }

double loss_of(const DistillLossConfig& cfg, std::size_t n, std::size_t c, const std::vector<double>& s,
               const RealMat& t, const Labels& y) {
  return evaluate_loss(cfg, RealMat(n, c, s), &t, y).loss;
}

std::vector<double> pld_alpha(const std::vector<double>& t, const std::vector<std::size_t>& order, double tau) {
  const auto q = oracle::softmax(t, tau);
  std::vector<double> alpha(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) alpha[k] = q[order[k]];
  return alpha;
}

// -- 1 -----------------------------------------------------------------------

Verdict gradient_fidelity() {
  struct Variant {
    std::string name;
    DistillLossConfig cfg;
  };
  std::vector<Variant> variants;
  auto add = [&](std::string name, LossKind kind, Divergence div = Divergence::forward_kl) {
    DistillLossConfig cfg;
    cfg.kind = kind;
    cfg.divergence = div;
    variants.push_back({std::move(name), cfg});
  };
  add("ce", LossKind::ce);
  add("ls", LossKind::ls);
  add("kd/forward-kl", LossKind::kd, Divergence::forward_kl);
  add("kd/reverse-kl", LossKind::kd, Divergence::reverse_kl);
  add("kd/js", LossKind::kd, Divergence::js);
  add("dist", LossKind::dist);
  add("listmle", LossKind::listmle);
  add("plistmle", LossKind::plistmle);
  add("pld", LossKind::pld);

  double worst = 0.0;
  std::string worst_name;
  Rng rng(101);
  for (const auto& var : variants) {
    for (std::size_t c : {2u, 10u, 100u}) {
      for (std::size_t n : {1u, 8u}) {
        for (int trial = 0; trial < 20; ++trial) {
          const auto s = normal_vector(rng, n * c, 2.0);
          const RealMat t(n, c, normal_vector(rng, n * c, 2.0));
          Labels y(n);
          for (auto& l : y) l = rng.uniform_index(c);
          const auto r = evaluate_loss(var.cfg, RealMat(n, c, s), &t, y);
          const auto fd = oracle::central_difference(
              [&](const std::vector<double>& x) { return loss_of(var.cfg, n, c, x, t, y); }, s);
          const double err = oracle::normwise_error(flat(r.grad), fd);
          if (err > worst) {
            worst = err;
            worst_name = var.name + " C=" + std::to_string(c) + " N=" + std::to_string(n);
          }
        }
      }
    }
  }

  // Closed form against the batch kernel at every sweep temperature.
  double worst_closed = 0.0;
  for (double tau : {0.5, 1.0, 2.0, 4.0}) {
    for (std::size_t c : {2u, 10u, 100u}) {
      for (std::size_t n : {1u, 8u}) {
        for (int trial = 0; trial < 20; ++trial) {
          const RealMat s(n, c, normal_vector(rng, n * c, 2.0));
          const RealMat t(n, c, normal_vector(rng, n * c, 2.0));
          Labels y(n);
          for (auto& l : y) l = rng.uniform_index(c);
          const auto r = pld_loss(s, t, y, tau);
          for (std::size_t i = 0; i < n; ++i) {
            const auto pi = teacher_optimal_permutation(t.row(i), y[i]);
            const auto closed =
                pld_gradient_closed_form(s.row(i), pi, make_weights(t.row(i), pi, WeightScheme::teacher_softmax, tau));
            for (std::size_t j = 0; j < c; ++j)
              worst_closed = std::max(worst_closed, std::abs(closed[j] / static_cast<double>(n) - r.grad(i, j)));
          }
        }
      }
    }
  }
  Verdict v;
  v.pass = worst < 1e-5 && worst_closed <= 1e-10;
  v.detail = "max normwise FD error " + fmt("%.2e", worst) + " (" + worst_name + "), closed form vs kernel " +
             fmt("%.2e", worst_closed);
  return v;
}

// -- 2 -----------------------------------------------------------------------

Verdict pl_normalization() {
  Rng rng(202);
  double worst_sum = 0.0, worst_ll = 0.0, worst_oracle = 0.0;
  for (std::size_t c = 2; c <= 6; ++c) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto s = normal_vector(rng, c, 3.0);
      const auto all = pl_enumerate(s);
      long double total = 0.0L;
      for (const auto& rp : all) {
        total += rp.probability;
        worst_ll = std::max(worst_ll, std::abs(std::exp(pl_log_likelihood(s, rp.ranking)) - rp.probability));
        worst_oracle = std::max(worst_oracle, std::abs(oracle::pl_probability(s, rp.ranking.order()) - rp.probability));
      }
      worst_sum = std::max(worst_sum, static_cast<double>(std::abs(total - 1.0L)));
    }
  }
  Verdict v;
  v.pass = worst_sum <= 1e-9 && worst_ll <= 1e-10 && worst_oracle <= 1e-10;
  v.detail = "|sum - 1| " + fmt("%.2e", worst_sum) + ", likelihood vs enumeration " + fmt("%.2e", worst_ll) +
             ", enumeration vs oracle " + fmt("%.2e", worst_oracle);
  return v;
}

// -- 3 -----------------------------------------------------------------------

Verdict reductions() {
  Rng rng(303);
  double ce = 0.0, listmle = 0.0, plistmle = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 2 + rng.uniform_index(99);
    const auto s = normal_vector(rng, c, 3.0);
    const auto t = normal_vector(rng, c, 3.0);
    const std::size_t y = rng.uniform_index(c);
    const RealMat sm(1, c, s), tm(1, c, t);
    const Labels ys{y};
    const auto order = oracle::teacher_order(t, y);

    const double ce_ref = oracle::lse(s, 0, c) - s[y];
    ce = std::max(ce, std::abs(pld_loss(sm, tm, ys, 1.0, WeightScheme::onehot_first).loss - ce_ref));

    const double nll = oracle::weighted_pl_loss(s, order, std::vector<double>(c, 1.0));
    listmle = std::max(listmle, std::abs(pld_loss(sm, tm, ys, 1.0, WeightScheme::uniform).loss -
                                         nll / static_cast<double>(c)));

    const double direct = oracle::weighted_pl_loss(s, order, oracle::plistmle_weights_logspace(c));
    plistmle = std::max(plistmle, std::abs(pld_loss(sm, tm, ys, 1.0, WeightScheme::plistmle_exponential).loss - direct));
  }
  Verdict v;
  v.pass = ce <= 1e-10 && listmle <= 1e-10 && plistmle <= 1e-10;
  v.detail = "onehot vs CE " + fmt("%.2e", ce) + ", uniform vs ListMLE/C " + fmt("%.2e", listmle) +
             ", exponential vs P-ListMLE " + fmt("%.2e", plistmle);
  return v;
}

// -- 4 -----------------------------------------------------------------------

Verdict translation_and_zero_sum() {
  Rng rng(404);
  double shift = 0.0, zero_sum = 0.0;
  for (auto scheme : {WeightScheme::teacher_softmax, WeightScheme::uniform, WeightScheme::plistmle_exponential}) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t c = 2 + rng.uniform_index(99);
      auto s = normal_vector(rng, c, 3.0);
      const RealMat tm(1, c, normal_vector(rng, c, 3.0));
      const Labels ys{rng.uniform_index(c)};
      const double k = rng.uniform(-50.0, 50.0);
      const auto base = pld_loss(RealMat(1, c, s), tm, ys, 1.0, scheme);
      for (auto& x : s) x += k;
      const auto moved = pld_loss(RealMat(1, c, s), tm, ys, 1.0, scheme);
      shift = std::max(shift, std::abs(moved.loss - base.loss));
      long double sum = 0.0L;
      for (double g : base.grad.values()) sum += g;
      zero_sum = std::max(zero_sum, static_cast<double>(std::abs(sum)));
    }
  }
  Verdict v;
  v.pass = shift < 1e-8 && zero_sum < 1e-8;
  v.detail = "max |L(s+c) - L(s)| " + fmt("%.2e", shift) + ", max |sum grad| " + fmt("%.2e", zero_sum);
  return v;
}

// -- 5 -----------------------------------------------------------------------

Verdict convexity() {
  Rng rng(505);
  std::size_t violations = 0, triples = 0;
  double worst = -INFINITY;
  for (std::size_t c : {2u, 10u, 100u}) {
    for (double tau : {0.5, 1.0, 2.0, 4.0}) {
      for (int trial = 0; trial < 1000; ++trial) {
        const auto a = normal_vector(rng, c, 3.0);
        const auto b = normal_vector(rng, c, 3.0);
        const RealMat tm(1, c, normal_vector(rng, c, 3.0));
        const Labels ys{rng.uniform_index(c)};
        std::vector<double> m(c);
        for (std::size_t i = 0; i < c; ++i) m[i] = 0.5 * (a[i] + b[i]);
        auto f = [&](const std::vector<double>& x) { return pld_loss(RealMat(1, c, x), tm, ys, tau).loss; };
        const double gap = f(m) - 0.5 * (f(a) + f(b));
        worst = std::max(worst, gap);
        violations += gap > 1e-9 ? 1 : 0;
        ++triples;
      }
    }
  }
  Verdict v;
  v.pass = violations == 0;
  v.detail = std::to_string(violations) + " violations in " + std::to_string(triples) +
             " triples, max midpoint gap " + fmt("%.2e", worst);
  return v;
}

// -- 6 -----------------------------------------------------------------------

Verdict ascending_equals_descending() {
  Rng rng(606);
  double worst = 0.0;
  int off_top = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + rng.uniform_index(99);
    const auto s = normal_vector(rng, c, 3.0);
    const auto t = normal_vector(rng, c, 3.0);
    std::size_t y = rng.uniform_index(c);
    if (trial % 2 == 1 && y == argmax(t)) y = (y + 1) % c;
    off_top += y != argmax(t) ? 1 : 0;
    const double tau = std::array{0.5, 1.0, 2.0, 4.0}[rng.uniform_index(4)];
    const auto order = oracle::teacher_order(t, y);
    const double direct = oracle::weighted_pl_loss(s, order, pld_alpha(t, order, tau));
    const double ascending = pld_loss(RealMat(1, c, s), RealMat(1, c, t), Labels{y}, tau).loss;
    worst = std::max(worst, std::abs(ascending - direct));
  }
  Verdict v;
  v.pass = worst <= 1e-10 && off_top >= 100;
  v.detail = "max |ascending - descending| " + fmt("%.2e", worst) + ", " + std::to_string(off_top) +
             "/200 instances with teacher top-1 != y";
  return v;
}

// -- 7 -----------------------------------------------------------------------

Verdict landscape_structure() {
  SliceSpec spec;  // V = 100, R = 41, seed 0
  Verdict v;
  const auto plane = make_plane(spec.classes, spec.seed);
  const auto sweep = temperature_sweep(spec);
  const std::size_t r = sweep.resolution(), mid = r / 2;

  bool corners = true;
  for (std::size_t k = 0; k < sweep.surfaces.size(); ++k) {
    const double tt = sweep.surfaces[k].temperature;
    if (tt != 2.0 && tt != 1.0) continue;
    const double origin = sweep.value(k, mid, mid);
    for (auto [ia, ib] : {std::pair{std::size_t{0}, std::size_t{0}}, {0, r - 1}, {r - 1, 0}, {r - 1, r - 1}})
      corners = corners && origin <= sweep.value(k, ia, ib);
  }

  std::size_t violations = 0;
  for (double tt : {2.0, 1.0, 0.5, 0.1}) violations += line_convexity_probe(LossKind::pld, tt, spec, plane, 1000, 7);

  // Every grid is rebuilt from the one plane with the reference loss.
  double shared = 0.0;
  for (const auto& surf : sweep.surfaces) {
    const auto order = oracle::teacher_order(plane.teacher, plane.label);
    const auto alpha = pld_alpha(plane.teacher, order, surf.temperature);
    for (std::size_t ia = 0; ia < r; ia += 4) {
      for (std::size_t ib = 0; ib < r; ib += 4) {
        std::vector<double> s(spec.classes);
        for (std::size_t i = 0; i < s.size(); ++i)
          s[i] = plane.teacher[i] + sweep.alphas[ia] * plane.d1[i] + sweep.betas[ib] * plane.d2[i];
        shared = std::max(shared, std::abs(surf.values[ia * r + ib] - oracle::weighted_pl_loss(s, order, alpha)));
      }
    }
  }
  const bool four = sweep.surfaces.size() == 4 && sweep.surfaces[0].values != sweep.surfaces[3].values;
  v.pass = corners && violations == 0 && four && shared <= 1e-10;
  v.detail = std::string("origin <= corners at T=2,1: ") + (corners ? "yes" : "no") + ", " +
             std::to_string(violations) + " line-convexity violations in 4000 probes, " +
             std::to_string(sweep.surfaces.size()) + " grids, max deviation from shared-plane reference " +
             fmt("%.2e", shared);
  return v;
}

// -- 8 -----------------------------------------------------------------------

Verdict distillation_sanity() {
  double ce_sum = 0.0, pld_sum = 0.0, trajectory = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainTeacherConfig tcfg;
    tcfg.dataset.seed = seed;
    tcfg.train.seed = seed;
    const auto data = make_blobs(tcfg.dataset);
    const auto teacher = train_teacher(data, tcfg.train).model;

    DistillConfig scfg;
    scfg.train.seed = seed;
    DistillLossConfig ce;
    ce.kind = LossKind::ce;
    DistillLossConfig pld;
    pld.kind = LossKind::pld;
    DistillLossConfig onehot = pld;
    onehot.pld_weights = WeightScheme::onehot_first;

    const auto a = distill_student(data, teacher, ce, scfg.train);
    const auto b = distill_student(data, teacher, pld, scfg.train);
    const auto c = distill_student(data, teacher, onehot, scfg.train);
    ce_sum += a.epochs.back().test_top1;
    pld_sum += b.epochs.back().test_top1;
    if (a.step_losses.size() != c.step_losses.size()) return {false, "onehot trajectory length differs"};
    for (std::size_t i = 0; i < a.step_losses.size(); ++i)
      trajectory = std::max(trajectory, std::abs(a.step_losses[i] - c.step_losses[i]));
    per_seed += " " + fmt("%+.2f", 100.0 * (b.epochs.back().test_top1 - a.epochs.back().test_top1));
  }
  const double ce_mean = ce_sum / 5.0, pld_mean = pld_sum / 5.0;
  Verdict v;
  v.pass = pld_mean >= ce_mean - 0.005 && trajectory <= 1e-8;
  v.detail = "mean top-1 CE " + fmt("%.4f", ce_mean) + ", PLD " + fmt("%.4f", pld_mean) + " (per-seed pp:" +
             per_seed + "), onehot trajectory max diff " + fmt("%.2e", trajectory);
  return v;
}

// -- 9 -----------------------------------------------------------------------

Verdict runtime_claim() {
  const auto kd = bench_one(LossKind::kd, 256, 1000, 11, 3, 0);
  const auto pld = bench_one(LossKind::pld, 256, 1000, 11, 3, 0);
  const double ratio = pld.median_seconds / kd.median_seconds;

  std::vector<double> lx, ly;
  for (std::size_t c : {128u, 256u, 512u, 1024u}) {
    lx.push_back(std::log(static_cast<double>(c)));
    ly.push_back(std::log(bench_one(LossKind::pld, 256, c, 11, 3, 0).median_seconds));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4.0, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  Verdict v;
  v.pass = ratio <= 2.0 && slope < 1.5;
  v.detail = "N=256 C=1000 median PLD " + fmt("%.2f", pld.median_seconds * 1e3) + " ms vs KD " +
             fmt("%.2f", kd.median_seconds * 1e3) + " ms (ratio " + fmt("%.2f", ratio) + "), log-log exponent " +
             fmt("%.3f", slope);
  return v;
}

// -- 10 ----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Drops the timing columns (median_seconds, min_seconds) from bench.csv.
std::string strip_timings(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::size_t cut = 0;
    for (int field = 0; field < 4 && cut != std::string::npos; ++field) cut = line.find(',', cut + (field > 0));
    out += line.substr(0, cut) + "\n";
  }
  return out;
}

Verdict rerun_determinism(const fs::path& root) {
  fs::remove_all(root);
  fs::create_directories(root);
  const json blobs = {{"classes", 5}, {"dim", 8}, {"train_per_class", 60}, {"test_per_class", 30}, {"seed", 4}};
  const std::string teacher = (root / "teacher" / "model.json").string();
  struct Run {
    std::string command;
    std::string label;
    json config;
  };
  std::vector<Run> runs{
      {"losscheck", "losscheck", {{"format_version", 1}, {"command", "losscheck"}}},
      {"gradcheck", "gradcheck", {{"format_version", 1}, {"command", "gradcheck"}, {"classes", {2, 10}}}},
      {"train-teacher", "teacher",
       {{"format_version", 1}, {"command", "train-teacher"}, {"dataset", blobs}, {"hidden", {32}}, {"epochs", 3}}},
      {"landscape", "landscape", {{"format_version", 1}, {"command", "landscape"}}},
      {"bench", "bench",
       {{"format_version", 1}, {"command", "bench"}, {"batch_sizes", {8}}, {"classes", {16, 32}}, {"trials", 3}}},
  };
  for (const char* kind : {"ce", "ls", "kd", "dist", "listmle", "plistmle", "pld"})
    runs.push_back({"distill", std::string("distill-") + kind,
                    {{"format_version", 1},
                     {"command", "distill"},
                     {"dataset", blobs},
                     {"teacher_path", teacher},
                     {"epochs", 3},
                     {"loss", {{"kind", kind}}}}});

  std::ostringstream log, err;
  std::size_t compared = 0;
  for (const auto& run : runs) {
    const fs::path cfg = root / (run.label + ".json");
    std::ofstream(cfg) << run.config.dump();
    const fs::path first = run.label == "teacher" ? root / "teacher" : root / (run.label + "_a");
    const fs::path second = root / (run.label + "_b");
    if (run_command(run.command, {cfg, std::nullopt, first}, log, err) != 0)
      return {false, run.label + " failed: " + err.str()};
    if (run_command(run.command, {first / "config.json", std::nullopt, second}, log, err) != 0)
      return {false, run.label + " rerun failed: " + err.str()};
    for (const auto& entry : fs::directory_iterator(first)) {
      const auto name = entry.path().filename();
      std::string a = slurp(entry.path()), b = slurp(second / name);
      if (name == "bench.csv") {
        a = strip_timings(a);
        b = strip_timings(b);
      }
      if (a != b) return {false, run.label + "/" + name.string() + " differs on rerun"};
      ++compared;
    }
  }
  fs::remove_all(root);
  return {true, std::to_string(compared) + " output files byte-identical across " + std::to_string(runs.size()) +
                    " commands (bench timing columns excluded)"};
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "pld_acceptance";
  struct Criterion {
    int id;
    std::string name;
    double budget_seconds;  // 0: no runtime bound
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient fidelity", 30.0, gradient_fidelity},
      {2, "PL normalization", 10.0, pl_normalization},
      {3, "reduction identities", 0.0, reductions},
      {4, "translation invariance and zero-sum gradient", 0.0, translation_and_zero_sum},
      {5, "midpoint convexity", 0.0, convexity},
      {6, "ascending vs descending evaluation", 0.0, ascending_equals_descending},
      {7, "landscape structure", 60.0, landscape_structure},
      {8, "desk-scale distillation", 300.0, distillation_sanity},
      {9, "runtime scaling", 0.0, runtime_claim},
      {10, "rerun determinism", 0.0, [&] { return rerun_determinism(scratch); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0.0 && secs >= c.budget_seconds) {
      v.pass = false;
      v.detail += "; over the " + fmt("%.0f", c.budget_seconds) + " s budget";
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
