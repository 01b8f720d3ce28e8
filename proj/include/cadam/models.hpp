#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "cadam/errors.hpp"
#include "cadam/rng.hpp"

namespace cadam {

enum class ModelKind { Linear, Logistic, Mlp };
enum class LossKind { Squared, LogLoss };
enum class DriftKind { None, SuddenFlip, RotatingWeights };

// Synthetic click stream: sparse binary features, labels drawn from a hidden
// logistic model whose weight vector drifts on a schedule; a configurable
// fraction of negative labels is flipped to positive after the fact.
struct ClickStreamSpec {
  std::int64_t n_steps = 2000;
  std::int64_t batch_size = 64;
  std::int64_t feature_dim = 32;
  std::int64_t sparsity = 4;   // active features per example
  double base_logit = -2.0;    // offset on w*(t).x; negatives dominate
  DriftKind drift = DriftKind::None;
  std::int64_t drift_period = 500;  // SuddenFlip: steps between sign flips
  double drift_rate = 0.0;          // RotatingWeights: radians per step
  double label_noise_rate = 0.0;    // applied to negative training labels
  std::uint64_t seed = 0;
};

struct ModelTask {
  ModelKind model = ModelKind::Logistic;
  std::int64_t hidden_width = 8;  // MLP only
  ClickStreamSpec stream;
  LossKind loss = LossKind::LogLoss;

  std::int64_t feature_dim() const { return stream.feature_dim; }
};

struct Example {
  std::vector<std::int32_t> indices;  // sorted active features, value 1.0
};

struct Batch {
  std::vector<Example> examples;
  std::vector<int> clean_labels;
  std::vector<int> noisy_labels;
  std::vector<double> true_weights;  // w*(t) behind this batch
};

inline std::size_t param_count(const ModelTask& task) {
  if (task.feature_dim() < 1)
    throw std::invalid_argument("param_count: feature_dim must be >= 1");
  const auto d = static_cast<std::size_t>(task.feature_dim());
  if (task.model != ModelKind::Mlp) return d;
  if (task.hidden_width < 1)
    throw std::invalid_argument("param_count: hidden_width must be >= 1");
  const auto h = static_cast<std::size_t>(task.hidden_width);
  return h * d + 2 * h + 1;  // W1, b1, w2, b2
}

inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

inline double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

namespace detail {

inline constexpr std::uint64_t kWeightsTag = 0x77656967ull;  // base weights
inline constexpr std::uint64_t kBatchTag = 0x62617463ull;    // per-step data

}  // namespace detail

// Label-generating weights at step t. The base vector is drawn once from the
// stream seed; drift flips its sign every drift_period steps or rotates
// consecutive coordinate pairs by drift_rate * t.
inline std::vector<double> true_weights(const ClickStreamSpec& spec,
                                        std::int64_t t) {
  const auto d = static_cast<std::size_t>(spec.feature_dim);
  Rng rng(derive_seed(spec.seed, detail::kWeightsTag));
  std::vector<double> w(d);
  const double scale = 2.0 / std::sqrt(static_cast<double>(spec.sparsity));
  for (double& wi : w) wi = scale * rng.normal();

  switch (spec.drift) {
    case DriftKind::None:
      break;
    case DriftKind::SuddenFlip:
      if (spec.drift_period < 1)
        throw std::invalid_argument("true_weights: drift_period must be >= 1");
      if ((t / spec.drift_period) % 2 == 1)
        for (double& wi : w) wi = -wi;
      break;
    case DriftKind::RotatingWeights: {
      const double angle = spec.drift_rate * static_cast<double>(t);
      const double c = std::cos(angle), s = std::sin(angle);
      for (std::size_t i = 0; i + 1 < d; i += 2) {
        const double a = w[i], b = w[i + 1];
        w[i] = c * a - s * b;
        w[i + 1] = s * a + c * b;
      }
      break;
    }
  }
  return w;
}

// Batch for step t, deterministic per (spec.seed, t) and independent of call
// order, so every optimizer arm of a comparison sees the same data.
inline Batch next_batch(const ClickStreamSpec& spec, std::int64_t t) {
  if (t >= spec.n_steps)
    throw exhausted_error("next_batch: stream exhausted at step " +
                          std::to_string(t));
  if (spec.batch_size < 1 || spec.sparsity < 1 ||
      spec.sparsity > spec.feature_dim)
    throw std::invalid_argument("next_batch: malformed stream spec");

  const auto d = static_cast<std::size_t>(spec.feature_dim);
  const auto k = static_cast<std::size_t>(spec.sparsity);
  Batch batch;
  batch.true_weights = true_weights(spec, t);
  Rng rng(derive_seed(spec.seed, detail::kBatchTag,
                      static_cast<std::uint64_t>(t)));

  batch.examples.reserve(static_cast<std::size_t>(spec.batch_size));
  for (std::int64_t b = 0; b < spec.batch_size; ++b) {
    // Floyd's sampling: k distinct feature indices, O(k) per example
    Example ex;
    ex.indices.reserve(k);
    for (std::size_t j = d - k; j < d; ++j) {
      const auto r = static_cast<std::int32_t>(rng.below(j + 1));
      bool dup = false;
      for (std::int32_t seen : ex.indices) dup = dup || seen == r;
      ex.indices.push_back(dup ? static_cast<std::int32_t>(j) : r);
    }
    std::sort(ex.indices.begin(), ex.indices.end());

    double logit = spec.base_logit;
    for (std::int32_t i : ex.indices)
      logit += batch.true_weights[static_cast<std::size_t>(i)];
    const int clean = rng.uniform01() < sigmoid(logit) ? 1 : 0;
    const double flip = rng.uniform01();  // always drawn, used for negatives
    const int noisy =
        (clean == 0 && flip < spec.label_noise_rate) ? 1 : clean;

    batch.examples.push_back(std::move(ex));
    batch.clean_labels.push_back(clean);
    batch.noisy_labels.push_back(noisy);
  }
  return batch;
}

struct ModelEval {
  double mean_loss = 0.0;
  std::vector<double> grad;    // mean gradient, dense
  std::vector<double> scores;  // pre-threshold prediction per example
};

namespace detail {

inline double loss_and_dscore(LossKind loss, double score, double label,
                              double& dscore) {
  if (loss == LossKind::LogLoss) {
    dscore = sigmoid(score) - label;
    return softplus(score) - label * score;
  }
  dscore = 2.0 * (score - label);
  const double diff = score - label;
  return diff * diff;
}

}  // namespace detail

// Exact mean loss and mean gradient over the batch, plus per-example scores
// (logits) evaluated at the given parameters. Labels are passed explicitly:
// training uses the noisy set, reference scoring the clean one.
inline ModelEval model_loss_grad(const ModelTask& task,
                                 std::span<const double> params,
                                 const std::vector<Example>& examples,
                                 std::span<const int> labels) {
  if (examples.empty())
    throw std::invalid_argument("model_loss_grad: empty batch");
  if (labels.size() != examples.size())
    throw dimension_error("model_loss_grad: labels/examples mismatch");
  if (params.size() != param_count(task))
    throw dimension_error("model_loss_grad: parameter count mismatch");

  const auto n = examples.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  ModelEval out;
  out.grad.assign(params.size(), 0.0);
  out.scores.reserve(n);

  if (task.model != ModelKind::Mlp) {
    for (std::size_t e = 0; e < n; ++e) {
      double score = 0.0;
      for (std::int32_t i : examples[e].indices)
        score += params[static_cast<std::size_t>(i)];
      out.scores.push_back(score);
      double dscore = 0.0;
      out.mean_loss += detail::loss_and_dscore(
          task.loss, score, static_cast<double>(labels[e]), dscore);
      for (std::int32_t i : examples[e].indices)
        out.grad[static_cast<std::size_t>(i)] += inv_n * dscore;
    }
    out.mean_loss *= inv_n;
    return out;
  }

  // one hidden tanh layer: params = [W1 (h x d row-major), b1, w2, b2]
  const auto d = static_cast<std::size_t>(task.feature_dim());
  const auto h = static_cast<std::size_t>(task.hidden_width);
  const auto w1 = params.subspan(0, h * d);
  const auto b1 = params.subspan(h * d, h);
  const auto w2 = params.subspan(h * d + h, h);
  const double b2 = params[h * d + 2 * h];
  auto g_w1 = std::span<double>(out.grad).subspan(0, h * d);
  auto g_b1 = std::span<double>(out.grad).subspan(h * d, h);
  auto g_w2 = std::span<double>(out.grad).subspan(h * d + h, h);
  double& g_b2 = out.grad[h * d + 2 * h];

  std::vector<double> hidden(h);
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t j = 0; j < h; ++j) {
      double z = b1[j];
      for (std::int32_t i : examples[e].indices)
        z += w1[j * d + static_cast<std::size_t>(i)];
      hidden[j] = std::tanh(z);
    }
    double score = b2;
    for (std::size_t j = 0; j < h; ++j) score += w2[j] * hidden[j];
    out.scores.push_back(score);

    double dscore = 0.0;
    out.mean_loss += detail::loss_and_dscore(
        task.loss, score, static_cast<double>(labels[e]), dscore);
    dscore *= inv_n;
    g_b2 += dscore;
    for (std::size_t j = 0; j < h; ++j) {
      g_w2[j] += dscore * hidden[j];
      const double dz = dscore * w2[j] * (1.0 - hidden[j] * hidden[j]);
      g_b1[j] += dz;
      for (std::int32_t i : examples[e].indices)
        g_w1[j * d + static_cast<std::size_t>(i)] += dz;
    }
  }
  out.mean_loss *= inv_n;
  return out;
}

// Mann-Whitney AUC: probability that a random positive outscores a random
// negative, ties counted one half. Rank-based, O(n log n).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw dimension_error("auc: scores/labels length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw undefined_auc_error("auc: needs at least one of each class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t idx = i; idx < j; ++idx)
      if (labels[order[idx]] != 0) rank_sum_pos += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) /
         (np * static_cast<double>(n_neg));
}

}  // namespace cadam
