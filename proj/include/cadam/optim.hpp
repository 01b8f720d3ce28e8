#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cadam/errors.hpp"
#include "cadam/hyperparams.hpp"

namespace cadam {

// Per-parameter optimizer state. All buffers share the parameter dimension.
// m doubles as the SGDM velocity; v holds whichever squared-gradient
// accumulator the algorithm uses; aux is AdaDelta's squared-delta average.
struct OptimState {
  std::int64_t step = 0;              // completed updates
  std::vector<double> m;              // first moment
  std::vector<double> v;              // second-moment-style accumulator
  std::vector<double> v_max;          // running max of corrected v
  std::vector<double> aux;            // AdaDelta squared-delta accumulator
  std::vector<std::int64_t> touched;  // per-dimension update counts (sparse)

  std::size_t dim() const { return m.size(); }
};

// Diagnostics for one update. Alignment counts the dimensions where the
// freshly updated momentum agrees in sign with the incoming gradient
// (m_t[i] * g_t[i] > 0), before any masking. Sparse updates count only the
// touched dimensions.
struct StepReport {
  std::int64_t aligned_count = 0;
  std::int64_t total_count = 0;
  double alignment_ratio = 0.0;
  double masked_fraction = 0.0;
  double step_norm = 0.0;  // L2 norm of the applied parameter delta
};

// Gradient restricted to the dimensions that received signal this step.
struct SparseGrad {
  std::vector<std::int64_t> indices;  // strictly increasing, unique
  std::vector<double> values;
};

inline OptimState init_state(std::size_t dim, const HyperParams& hp) {
  hp.validate();
  if (dim == 0) throw dimension_error("init_state: dim must be >= 1");
  OptimState s;
  s.m.assign(dim, 0.0);
  s.v.assign(dim, 0.0);
  s.v_max.assign(dim, 0.0);
  s.aux.assign(dim, 0.0);
  s.touched.assign(dim, 0);
  return s;
}

// Fraction of dimensions with m[i] * g[i] > 0. Strict inequality: zero
// products (zero gradient or zero momentum) do not count as aligned.
inline double alignment_ratio(std::span<const double> m,
                              std::span<const double> g) {
  if (m.size() != g.size())
    throw dimension_error("alignment_ratio: length mismatch");
  if (m.empty()) throw dimension_error("alignment_ratio: empty input");
  std::int64_t aligned = 0;
  for (std::size_t i = 0; i < m.size(); ++i) aligned += (m[i] * g[i] > 0.0);
  return static_cast<double>(aligned) / static_cast<double>(m.size());
}

inline SparseGrad sparse_from_dense(std::span<const double> grad) {
  SparseGrad s;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (grad[i] != 0.0) {
      s.indices.push_back(static_cast<std::int64_t>(i));
      s.values.push_back(grad[i]);
    }
  }
  return s;
}

namespace detail {

// Step-scalars for one dimension. For dense updates the correction count is
// the global step; sparse updates substitute the per-dimension touch count.
struct StepScalars {
  double alpha_t;
  double beta1_t;
  double bc1;  // 1 - beta1^k
  double bc2;  // 1 - beta2^k
};

inline StepScalars step_scalars(const HyperParams& hp, std::int64_t k) {
  StepScalars s;
  s.alpha_t = lr_at(hp, k);
  s.beta1_t = beta1_at(hp, k);
  s.bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(k));
  s.bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(k));
  return s;
}

// One dimension of one optimizer update. Returns the new parameter value;
// `aligned` reports the post-update sign agreement m_t * g_t > 0. The
// confidence algorithms return the parameter unchanged when the products is
// non-positive, while m and v still follow their recurrences. Weight decay
// is decoupled for AdamW and for the confidence algorithms (the mask pauses
// only the adaptive step, and the confidence signal stays the pure
// gradient); every other algorithm folds decay into the gradient.
inline double update_dim(const HyperParams& hp, const StepScalars& k,
                         double param, double g, double& m, double& v,
                         double& v_max, double& aux, bool& aligned) {
  const Algorithm alg = hp.algorithm;
  if (hp.weight_decay != 0.0) {
    if (alg == Algorithm::AdamW || uses_confidence_mask(alg))
      param -= k.alpha_t * hp.weight_decay * param;
    else
      g += hp.weight_decay * param;
  }

  switch (alg) {
    case Algorithm::Sgd:
      aligned = m * g > 0.0;
      return param - k.alpha_t * g;
    case Algorithm::Sgdm:
      m = hp.momentum * m + g;
      aligned = m * g > 0.0;
      return param - k.alpha_t * m;
    case Algorithm::AdaGrad:
      v += g * g;
      aligned = m * g > 0.0;
      return param - k.alpha_t * g / (std::sqrt(v) + hp.epsilon);
    case Algorithm::AdaDelta: {
      v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
      const double delta =
          std::sqrt(aux + hp.epsilon) / std::sqrt(v + hp.epsilon) * g;
      aux = hp.beta2 * aux + (1.0 - hp.beta2) * delta * delta;
      aligned = m * g > 0.0;
      return param - k.alpha_t * delta;
    }
    case Algorithm::RmsProp:
      v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
      aligned = m * g > 0.0;
      return param - k.alpha_t * g / (std::sqrt(v) + hp.epsilon);
    default:
      break;  // moment-estimate family below
  }

  m = k.beta1_t * m + (1.0 - k.beta1_t) * g;
  if (alg == Algorithm::AdaBelief) {
    const double r = g - m;
    v = hp.beta2 * v + (1.0 - hp.beta2) * r * r;
  } else {
    v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
  }
  const double m_hat = m / k.bc1;
  const double v_hat = v / k.bc2;
  v_max = uses_max_correction(alg) ? std::max(v_max, v_hat) : v_hat;
  aligned = m * g > 0.0;
  if (uses_confidence_mask(alg) && !aligned) return param;  // paused
  return param - k.alpha_t * m_hat / (std::sqrt(v_max) + hp.epsilon);
}

}  // namespace detail

// One full-vector update. Throws before touching any state: a non-finite
// gradient entry or a length mismatch leaves state and params unmodified.
inline StepReport dense_step(OptimState& state, std::vector<double>& params,
                             std::span<const double> grad,
                             const HyperParams& hp) {
  hp.validate();
  const std::size_t d = state.dim();
  if (d == 0 || state.v.size() != d || state.v_max.size() != d ||
      state.aux.size() != d)
    throw dimension_error("dense_step: malformed state");
  if (params.size() != d || grad.size() != d)
    throw dimension_error("dense_step: length mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw nonfinite_error("dense_step: non-finite gradient entry");

  const std::int64_t t = state.step + 1;
  const detail::StepScalars k = detail::step_scalars(hp, t);

  StepReport rep;
  rep.total_count = static_cast<std::int64_t>(d);
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    bool aligned = false;
    const double np =
        detail::update_dim(hp, k, params[i], grad[i], state.m[i], state.v[i],
                           state.v_max[i], state.aux[i], aligned);
    const double delta = np - params[i];
    sq += delta * delta;
    rep.aligned_count += aligned;
    params[i] = np;
  }
  state.step = t;
  rep.alignment_ratio =
      static_cast<double>(rep.aligned_count) / static_cast<double>(d);
  rep.masked_fraction = 1.0 - rep.alignment_ratio;
  rep.step_norm = std::sqrt(sq);
  return rep;
}

// Update restricted to the listed dimensions; everything else (state and
// parameters) stays bit-identical. Bias correction uses the per-dimension
// touch count by default, so a long-untouched row behaves as freshly
// started; SparseCorrection::GlobalStep mirrors the dense rule instead.
// An empty gradient is a no-op (counters unchanged).
inline StepReport sparse_step(OptimState& state, std::vector<double>& params,
                              const SparseGrad& grad, const HyperParams& hp) {
  hp.validate();
  const std::size_t d = state.dim();
  if (d == 0 || params.size() != d)
    throw dimension_error("sparse_step: length mismatch");
  if (grad.indices.size() != grad.values.size())
    throw dimension_error("sparse_step: indices/values length mismatch");
  std::int64_t prev = -1;
  for (std::size_t j = 0; j < grad.indices.size(); ++j) {
    const std::int64_t idx = grad.indices[j];
    if (idx <= prev)
      throw index_error("sparse_step: indices must be strictly increasing");
    if (idx < 0 || idx >= static_cast<std::int64_t>(d))
      throw index_error("sparse_step: index out of range");
    prev = idx;
    if (!std::isfinite(grad.values[j]))
      throw nonfinite_error("sparse_step: non-finite gradient entry");
  }

  StepReport rep;
  if (grad.indices.empty()) return rep;

  const std::int64_t t = state.step + 1;
  rep.total_count = static_cast<std::int64_t>(grad.indices.size());
  double sq = 0.0;
  for (std::size_t j = 0; j < grad.indices.size(); ++j) {
    const auto i = static_cast<std::size_t>(grad.indices[j]);
    const std::int64_t count =
        hp.sparse_correction == SparseCorrection::GlobalStep
            ? t
            : state.touched[i] + 1;
    const detail::StepScalars k = detail::step_scalars(hp, count);
    bool aligned = false;
    const double np =
        detail::update_dim(hp, k, params[i], grad.values[j], state.m[i],
                           state.v[i], state.v_max[i], state.aux[i], aligned);
    const double delta = np - params[i];
    sq += delta * delta;
    rep.aligned_count += aligned;
    params[i] = np;
    state.touched[i] += 1;
  }
  state.step = t;
  rep.alignment_ratio = static_cast<double>(rep.aligned_count) /
                        static_cast<double>(rep.total_count);
  rep.masked_fraction = 1.0 - rep.alignment_ratio;
  rep.step_norm = std::sqrt(sq);
  return rep;
}

}  // namespace cadam
