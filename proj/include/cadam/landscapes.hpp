#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "cadam/errors.hpp"
#include "cadam/rng.hpp"

namespace cadam {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

enum class Norm { L1, L2 };
enum class Schedule { Sudden, Linear, Sinusoidal };

// Scalar loss whose minimum x*(t) moves over time.
struct MovingMinSpec {
  Norm norm = Norm::L1;
  Schedule schedule = Schedule::Sudden;
  std::int64_t period = 40;  // steps per cycle
};

// Minimum position at step t: Sudden alternates between 0 and 1 every
// period, Linear drifts at constant speed, Sinusoidal oscillates in [-1,1].
inline double x_star(const MovingMinSpec& spec, std::int64_t t) {
  if (spec.period < 1)
    throw std::invalid_argument("x_star: period must be >= 1");
  const double T = static_cast<double>(spec.period);
  switch (spec.schedule) {
    case Schedule::Sudden:
      return static_cast<double>((t / spec.period) % 2);
    case Schedule::Linear:
      return static_cast<double>(t) / T;
    case Schedule::Sinusoidal:
      return std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / T);
  }
  return 0.0;
}

struct LossGrad1 {
  double loss;
  double grad;
};

// L1 subgradient at the kink is 0, so the iterate is a fixed point exactly
// at the optimum.
inline LossGrad1 moving_loss_grad(const MovingMinSpec& spec, double x,
                                  std::int64_t t) {
  const double diff = x - x_star(spec, t);
  if (spec.norm == Norm::L1) return {std::abs(diff), sign(diff)};
  return {diff * diff, 2.0 * diff};
}

enum class LandscapeId { SepL1, InsepL1, InsepL2, Rosenbrock };

struct Landscape2D {
  LandscapeId id = LandscapeId::SepL1;
  double a = 1.0;    // Rosenbrock
  double b = 100.0;  // Rosenbrock
};

struct LossGrad2 {
  double loss;
  std::array<double, 2> grad;
};

inline LossGrad2 eval2d(const Landscape2D& ls, double x, double y) {
  switch (ls.id) {
    case LandscapeId::SepL1:
      return {std::abs(x) + std::abs(y), {sign(x), sign(y)}};
    case LandscapeId::InsepL1: {
      const double s = x + y, d = x - y;
      return {std::abs(s) + std::abs(d) / 10.0,
              {sign(s) + sign(d) / 10.0, sign(s) - sign(d) / 10.0}};
    }
    case LandscapeId::InsepL2: {
      const double s = x + y, d = x - y;
      return {s * s + d * d / 10.0, {2.0 * s + d / 5.0, 2.0 * s - d / 5.0}};
    }
    case LandscapeId::Rosenbrock: {
      const double t1 = ls.a - x, t2 = y - x * x;
      return {t1 * t1 + ls.b * t2 * t2,
              {-2.0 * t1 - 4.0 * ls.b * x * t2, 2.0 * ls.b * t2}};
    }
  }
  return {0.0, {0.0, 0.0}};
}

inline std::array<double, 2> minimum(const Landscape2D& ls) {
  if (ls.id == LandscapeId::Rosenbrock) return {ls.a, ls.a * ls.a};
  return {0.0, 0.0};
}

// Customary starting point for trajectory runs.
inline std::array<double, 2> default_start(const Landscape2D& ls) {
  if (ls.id == LandscapeId::Rosenbrock) return {-1.2, 1.0};
  return {1.5, 1.5};
}

enum class NoiseKind { UniformScale };

// Gradient corruption: each dimension independently keeps its value with
// probability 1-p, otherwise is multiplied by a fresh U(-1,1) draw.
struct NoiseSpec {
  double p = 0.5;
  NoiseKind kind = NoiseKind::UniformScale;
  std::uint64_t seed = 0;
};

// Consumes exactly two draws per dimension (decision, then scale) in
// dimension-major order, so the stream position never depends on p or on
// which optimizer consumes the result.
inline std::vector<double> corrupt_grad(std::span<const double> grad,
                                        const NoiseSpec& spec, Rng& rng) {
  std::vector<double> out(grad.begin(), grad.end());
  for (double& g : out) {
    const double decide = rng.uniform01();
    const double scale = rng.uniform(-1.0, 1.0);
    if (decide < spec.p) g *= scale;
  }
  return out;
}

// Stream of convex scalar losses f_t(x) = a_t * |x - c_t| with coefficients
// drawn once per step from the scenario seed.
struct ConvexAbsStream {
  double slope_lo = 0.5;
  double slope_hi = 1.5;
  double center_lo = -1.0;
  double center_hi = 1.0;
};

inline LossGrad1 abs_loss_grad(double slope, double center, double x) {
  const double diff = x - center;
  return {slope * std::abs(diff), slope * sign(diff)};
}

}  // namespace cadam
