// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale distillation pipeline: synthetic Gaussian-blob data, teacher
// training with cross-entropy, and student training under any configured
// loss against a frozen teacher.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pld/error.hpp"
#include "pld/losses.hpp"
#include "pld/mlp.hpp"
#include "pld/numerics.hpp"

namespace pld {

struct BlobParams {
  std::size_t classes = 10;
  std::size_t dim = 16;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 200;
  double spread = 1.0;        // per-coordinate std of each cluster
  double center_scale = 1.0;  // per-coordinate std of the cluster centres
  double noise_rate = 0.1;    // fraction of labels reassigned uniformly over all classes
  std::uint64_t seed = 0;

  void validate() const {
    require(classes >= 2, "make_blobs: need C >= 2");
    require(dim >= 2, "make_blobs: need D >= 2");
    require(train_per_class >= 1, "make_blobs: need at least one training point per class");
    require(spread >= 0.0 && std::isfinite(spread), "make_blobs: spread must be >= 0");
    require(center_scale > 0.0 && std::isfinite(center_scale), "make_blobs: center_scale must be > 0");
    require(noise_rate >= 0.0 && noise_rate < 1.0, "make_blobs: noise rate must be in [0, 1)");
  }
};

struct SyntheticDataset {
  BlobParams params;
  RealMat centers;  // C x D
  RealMat train_x;
  Labels train_y;
  RealMat test_x;
  Labels test_y;

  std::size_t classes() const noexcept { return params.classes; }
  std::size_t dim() const noexcept { return params.dim; }
};

namespace detail {

inline void draw_split(const RealMat& centers, std::size_t per_class, double spread, double noise_rate, Rng& rng,
                       RealMat& x, Labels& y) {
  const std::size_t c = centers.rows(), d = centers.cols();
  const std::size_t n = c * per_class;
  std::vector<double> values(n * d);
  y.assign(n, 0);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t p = 0; p < per_class; ++p) {
      const std::size_t i = k * per_class + p;
      y[i] = k;
      for (std::size_t j = 0; j < d; ++j) values[i * d + j] = centers(k, j) + spread * rng.normal();
    }
  }
  x = RealMat(n, d, std::move(values));
  // Reassign exactly round(noise_rate * n) labels, chosen without replacement.
  const auto flips = static_cast<std::size_t>(std::llround(noise_rate * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(idx);
  for (std::size_t f = 0; f < flips; ++f) y[idx[f]] = rng.uniform_index(c);
}

}  // namespace detail

/// Gaussian clusters around normally drawn centres; train and test points are
/// drawn independently from the same clusters.  Deterministic per seed.
inline SyntheticDataset make_blobs(const BlobParams& params) {
  params.validate();
  Rng rng(params.seed);
  SyntheticDataset ds;
  ds.params = params;
  ds.centers = RealMat(params.classes, params.dim, normal_vector(rng, params.classes * params.dim, params.center_scale));
  Rng train_rng = rng.split();
  Rng test_rng = rng.split();
  detail::draw_split(ds.centers, params.train_per_class, params.spread, params.noise_rate, train_rng, ds.train_x,
                     ds.train_y);
  if (params.test_per_class > 0)
    detail::draw_split(ds.centers, params.test_per_class, params.spread, params.noise_rate, test_rng, ds.test_x,
                       ds.test_y);
  return ds;
}

inline SyntheticDataset make_blobs(std::size_t classes, std::size_t dim, std::size_t per_class, double spread,
                                   double noise_rate, std::uint64_t seed) {
  BlobParams p;
  p.classes = classes;
  p.dim = dim;
  p.train_per_class = per_class;
  p.test_per_class = per_class;
  p.spread = spread;
  p.noise_rate = noise_rate;
  p.seed = seed;
  return make_blobs(p);
}

inline double top1_accuracy(const RealMat& logits, std::span<const std::size_t> labels) {
  require(logits.rows() == labels.size(), "top1_accuracy: size mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) hits += argmax(logits.row(i)) == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::vector<std::size_t> hidden;  // hidden widths; input and output come from the data
  AdamWConfig optimizer;
  int epochs = 20;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const {
    optimizer.validate();
    require(epochs >= 0, "train: epochs must be >= 0");
    require(batch_size >= 1, "train: batch size must be >= 1");
    for (std::size_t h : hidden) require(h >= 1, "train: zero-width hidden layer");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_top1 = 0.0;
  double teacher_kl = 0.0;  // 0 when there is no teacher

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct DistillRun {
  DistillLossConfig loss;
  TrainConfig train;
  std::vector<EpochRecord> epochs;
  std::vector<double> step_losses;
  MlpModel model;
};

/// Shared training loop.  The seed splits into an initialisation stream and
/// a shuffling stream, so runs that differ only in the loss see the same
/// initial weights and the same batch order.
inline DistillRun train_model(const SyntheticDataset& data, const DistillLossConfig& loss_cfg, const MlpModel* teacher,
                              const TrainConfig& cfg) {
  cfg.validate();
  loss_cfg.validate();
  require(data.train_x.rows() > 0, "train: empty training set");
  require(teacher != nullptr || !needs_teacher(loss_cfg.kind), "train: loss kind needs a teacher");
  if (teacher != nullptr) {
    require(teacher->input_dim() == data.dim(), "distill: teacher input dimension does not match data");
    require(teacher->output_dim() == data.classes(), "distill: teacher logit dimension does not match classes");
  }

  std::vector<std::size_t> sizes{data.dim()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(data.classes());

  Rng root(cfg.seed);
  Rng init_rng = root.split();
  Rng shuffle_rng = root.split();

  DistillRun run;
  run.loss = loss_cfg;
  run.train = cfg;
  run.model = MlpModel::init_uniform(sizes, init_rng);

  const std::size_t n = data.train_x.rows(), d = data.dim(), c = data.classes();
  RealMat teacher_train, teacher_test;
  if (teacher != nullptr) {
    teacher_train = teacher->forward(data.train_x);
    if (data.test_x.rows() > 0) teacher_test = teacher->forward(data.test_x);
  }

  AdamWState opt_state;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      RealMat xb(b, d), tb(teacher != nullptr ? b : 0, c);
      Labels yb(b);
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(data.train_x.row(src).begin(), d, xb.row(r).begin());
        yb[r] = data.train_y[src];
        if (teacher != nullptr) std::copy_n(teacher_train.row(src).begin(), c, tb.row(r).begin());
      }
      const ForwardCache cache = run.model.forward_cached(xb);
      if (!all_finite(cache.logits.data())) throw TrainingFailure(epoch, "non-finite student logits");
      const LossResult lr = evaluate_loss(loss_cfg, cache.logits, teacher != nullptr ? &tb : nullptr, yb);
      if (!std::isfinite(lr.loss) || !all_finite(lr.grad.data())) throw TrainingFailure(epoch, "non-finite loss");
      run.step_losses.push_back(lr.loss);
      epoch_loss += lr.loss;
      ++steps;
      step_optimizer(run.model, backward(run.model, cache, lr.grad), opt_state, cfg.optimizer);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(steps);
    if (data.test_x.rows() > 0) {
      const RealMat test_logits = run.model.forward(data.test_x);
      rec.test_top1 = top1_accuracy(test_logits, data.test_y);
      if (teacher != nullptr) rec.teacher_kl = student_teacher_kl(test_logits, teacher_test);
    }
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.teacher_kl))
      throw TrainingFailure(epoch, "non-finite epoch metrics");
    run.epochs.push_back(rec);
  }
  return run;
}

/// Cross-entropy training without a teacher.
inline DistillRun train_teacher(const SyntheticDataset& data, const TrainConfig& cfg) {
  DistillLossConfig ce;
  ce.kind = LossKind::ce;
  return train_model(data, ce, nullptr, cfg);
}

/// Student training against a frozen teacher under `loss_cfg`.
inline DistillRun distill_student(const SyntheticDataset& data, const MlpModel& teacher,
                                  const DistillLossConfig& loss_cfg, const TrainConfig& cfg) {
  return train_model(data, loss_cfg, &teacher, cfg);
}

}  // namespace pld
