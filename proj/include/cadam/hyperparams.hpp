#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cadam/errors.hpp"

namespace cadam {

enum class Algorithm {
  Sgd,
  Sgdm,
  AdaGrad,
  AdaDelta,
  RmsProp,
  Adam,
  AdamW,
  AmsGrad,
  AdaBelief,
  CAdam,
  CAmsGrad,
};

inline constexpr std::array<Algorithm, 11> kAllAlgorithms = {
    Algorithm::Sgd,      Algorithm::Sgdm,     Algorithm::AdaGrad,
    Algorithm::AdaDelta, Algorithm::RmsProp,  Algorithm::Adam,
    Algorithm::AdamW,    Algorithm::AmsGrad,  Algorithm::AdaBelief,
    Algorithm::CAdam,    Algorithm::CAmsGrad,
};

enum class LrSchedule { Constant, InvSqrt };

// Counter used for sparse bias correction: per-dimension update counts make
// a long-untouched row behave as freshly started; GlobalStep mirrors the
// dense rule and is kept for A/B comparison.
enum class SparseCorrection { PerDimension, GlobalStep };

struct HyperParams {
  Algorithm algorithm = Algorithm::Adam;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lambda = 1.0;  // beta1_t = beta1 * lambda^(t-1)
  LrSchedule lr_schedule = LrSchedule::Constant;
  double weight_decay = 0.0;
  double momentum = 0.9;  // SGDM velocity coefficient
  SparseCorrection sparse_correction = SparseCorrection::PerDimension;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0))
      throw std::invalid_argument("beta1 must be in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0))
      throw std::invalid_argument("beta2 must be in [0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(lambda > 0.0 && lambda <= 1.0))
      throw std::invalid_argument("lambda must be in (0,1]");
    if (!(weight_decay >= 0.0))
      throw std::invalid_argument("weight_decay must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("momentum must be in [0,1)");
  }
};

// Algorithms that zero the update where momentum and gradient disagree.
inline constexpr bool uses_confidence_mask(Algorithm a) {
  return a == Algorithm::CAdam || a == Algorithm::CAmsGrad;
}

// Algorithms that keep the running max of the corrected second moment.
inline constexpr bool uses_max_correction(Algorithm a) {
  return a == Algorithm::AmsGrad || a == Algorithm::CAmsGrad;
}

// Algorithms following the moment-estimate update family (EMA m and v with
// bias correction).
inline constexpr bool is_adam_family(Algorithm a) {
  switch (a) {
    case Algorithm::Adam:
    case Algorithm::AdamW:
    case Algorithm::AmsGrad:
    case Algorithm::AdaBelief:
    case Algorithm::CAdam:
    case Algorithm::CAmsGrad:
      return true;
    default:
      return false;
  }
}

inline constexpr std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Sgd: return "sgd";
    case Algorithm::Sgdm: return "sgdm";
    case Algorithm::AdaGrad: return "adagrad";
    case Algorithm::AdaDelta: return "adadelta";
    case Algorithm::RmsProp: return "rmsprop";
    case Algorithm::Adam: return "adam";
    case Algorithm::AdamW: return "adamw";
    case Algorithm::AmsGrad: return "amsgrad";
    case Algorithm::AdaBelief: return "adabelief";
    case Algorithm::CAdam: return "cadam";
    case Algorithm::CAmsGrad: return "camsgrad";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms)
    if (name == algorithm_name(a)) return a;
  return std::nullopt;
}

inline constexpr double default_lr(Algorithm a) {
  switch (a) {
    case Algorithm::Sgd: return 0.1;
    case Algorithm::Sgdm: return 0.05;
    case Algorithm::AdaGrad: return 0.1;
    case Algorithm::AdaDelta: return 1.0;
    case Algorithm::RmsProp: return 0.01;
    default: return 1e-3;  // moment-estimate family
  }
}

// Fully-populated defaults per algorithm (second-moment decay and epsilon
// follow each method's customary setting).
inline HyperParams defaults_for(Algorithm a) {
  HyperParams hp;
  hp.algorithm = a;
  hp.alpha = default_lr(a);
  switch (a) {
    case Algorithm::AdaDelta:
      hp.beta2 = 0.9;  // accumulator decay rho
      hp.epsilon = 1e-6;
      break;
    case Algorithm::RmsProp:
      hp.beta2 = 0.99;
      break;
    case Algorithm::AdaGrad:
      hp.epsilon = 1e-10;
      break;
    default:
      break;
  }
  return hp;
}

// The customary search grid around an algorithm's default learning rate.
inline std::vector<double> default_lr_grid(Algorithm a) {
  const double lr = default_lr(a);
  return {lr / 5.0, lr / 2.0, lr, 2.0 * lr, 5.0 * lr};
}

// Learning rate at step t (1-based).
inline double lr_at(const HyperParams& hp, std::int64_t t) {
  if (hp.lr_schedule == LrSchedule::InvSqrt)
    return hp.alpha / std::sqrt(static_cast<double>(t));
  return hp.alpha;
}

// First-moment decay at step t (1-based): beta1 * lambda^(t-1).
inline double beta1_at(const HyperParams& hp, std::int64_t t) {
  if (hp.lambda == 1.0) return hp.beta1;
  return hp.beta1 * std::pow(hp.lambda, static_cast<double>(t - 1));
}

}  // namespace cadam
