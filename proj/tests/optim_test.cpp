#include "cadam/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "cadam/rng.hpp"

using namespace cadam;

namespace {

std::vector<double> quadratic_descent(Algorithm alg, int max_steps) {
  const HyperParams hp = defaults_for(alg);
  OptimState state = init_state(1, hp);
  std::vector<double> params = {1.0};
  std::vector<double> path;
  for (int t = 0; t < max_steps; ++t) {
    const std::vector<double> grad = {2.0 * params[0]};
    dense_step(state, params, grad, hp);
    path.push_back(params[0]);
  }
  return path;
}

}  // namespace

TEST(HyperParams, ValidationRejectsBadKnobs) {
  HyperParams hp;
  EXPECT_NO_THROW(hp.validate());
  hp.beta1 = 1.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = HyperParams{};
  hp.alpha = 0.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = HyperParams{};
  hp.epsilon = 0.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);
  hp = HyperParams{};
  hp.lambda = 0.0;
  EXPECT_THROW(hp.validate(), std::invalid_argument);

  EXPECT_EQ(parse_algorithm("camsgrad"), Algorithm::CAmsGrad);
  EXPECT_FALSE(parse_algorithm("adamx").has_value());
  EXPECT_EQ(algorithm_name(Algorithm::AdaBelief), "adabelief");
}

TEST(InitState, ZeroesEverything) {
  const HyperParams hp;
  const OptimState s = init_state(3, hp);
  EXPECT_EQ(s.step, 0);
  EXPECT_EQ(s.m, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(s.v, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(s.v_max, (std::vector<double>{0.0, 0.0, 0.0}));

  const OptimState s1 = init_state(1, defaults_for(Algorithm::CAdam));
  EXPECT_EQ(s1.v_max, (std::vector<double>{0.0}));

  EXPECT_THROW(init_state(0, hp), dimension_error);
}

// Hand evaluation of the first step with a unit gradient: m1 = (1-b1)*g and
// the correction denominator is also (1-b1), so m_hat = 1 and v_hat = 1
// exactly; the applied delta is -alpha / (1 + eps).
TEST(DenseStep, AdamFirstStepMatchesHandDerivation) {
  const HyperParams hp;  // adam defaults
  OptimState state = init_state(1, hp);
  std::vector<double> params = {0.0};
  const StepReport rep =
      dense_step(state, params, std::vector<double>{1.0}, hp);

  EXPECT_DOUBLE_EQ(state.m[0], 0.1);
  EXPECT_NEAR(state.v[0], 0.001, 1e-15);
  const double expected = -hp.alpha / (1.0 + hp.epsilon);
  EXPECT_NEAR(params[0], expected, 1e-12);
  EXPECT_DOUBLE_EQ(rep.step_norm, std::abs(params[0]));
  EXPECT_EQ(rep.aligned_count, 1);
  EXPECT_DOUBLE_EQ(rep.masked_fraction, 0.0);

  // CAdam agrees on the first step: m1 * g1 = 0.1 > 0
  HyperParams chp = hp;
  chp.algorithm = Algorithm::CAdam;
  OptimState cstate = init_state(1, chp);
  std::vector<double> cparams = {0.0};
  dense_step(cstate, cparams, std::vector<double>{1.0}, chp);
  EXPECT_EQ(cparams[0], params[0]);
}

TEST(DenseStep, OpposingGradientPausesCAdamButNotAdam) {
  HyperParams hp;
  hp.algorithm = Algorithm::CAdam;
  OptimState state = init_state(1, hp);
  std::vector<double> params = {0.0};
  for (int i = 0; i < 5; ++i)
    dense_step(state, params, std::vector<double>{1.0}, hp);

  // momentum is strongly positive; a small opposing gradient keeps m > 0
  const double before = params[0];
  const StepReport rep =
      dense_step(state, params, std::vector<double>{-0.01}, hp);
  ASSERT_GT(state.m[0], 0.0);
  EXPECT_EQ(params[0], before);  // bit-identical pause
  EXPECT_EQ(rep.aligned_count, 0);

  // Adam moves on the same history
  HyperParams ahp = hp;
  ahp.algorithm = Algorithm::Adam;
  OptimState astate = init_state(1, ahp);
  std::vector<double> aparams = {0.0};
  for (int i = 0; i < 5; ++i)
    dense_step(astate, aparams, std::vector<double>{1.0}, ahp);
  const double abefore = aparams[0];
  dense_step(astate, aparams, std::vector<double>{-0.01}, ahp);
  EXPECT_NE(aparams[0], abefore);
}

TEST(DenseStep, ZeroGradientDimensionIsMasked) {
  HyperParams hp;
  hp.algorithm = Algorithm::CAdam;
  OptimState state = init_state(2, hp);
  std::vector<double> params = {3.0, 0.0};
  dense_step(state, params, std::vector<double>{0.0, 1.0}, hp);
  EXPECT_EQ(params[0], 3.0);  // 0 * 0 = 0 <= 0: no update
  EXPECT_EQ(state.m[0], 0.0);
  EXPECT_NE(params[1], 0.0);
}

TEST(DenseStep, NonFiniteGradientLeavesStateUntouched) {
  const HyperParams hp;
  OptimState state = init_state(2, hp);
  std::vector<double> params = {1.0, 2.0};
  dense_step(state, params, std::vector<double>{0.5, 0.5}, hp);
  const OptimState snapshot = state;
  const std::vector<double> before = params;

  const std::vector<double> bad = {0.1, std::nan("")};
  EXPECT_THROW(dense_step(state, params, bad, hp), nonfinite_error);
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.step, snapshot.step);
  EXPECT_EQ(state.m, snapshot.m);
  EXPECT_EQ(state.v, snapshot.v);

  std::vector<double> short_grad = {1.0};
  EXPECT_THROW(dense_step(state, params, short_grad, hp), dimension_error);
}

TEST(DenseStep, MaskEqualsPauseProperty) {
  // randomized fixtures: masked dimensions keep their parameter bits while
  // m and v still follow the recurrences
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    HyperParams hp;
    hp.algorithm = trial % 2 ? Algorithm::CAdam : Algorithm::CAmsGrad;
    const std::size_t d = 1 + rng.below(8);
    OptimState state = init_state(d, hp);
    std::vector<double> params(d), grad(d);
    for (std::size_t i = 0; i < d; ++i) params[i] = rng.uniform(-2.0, 2.0);

    for (int step = 0; step < 10; ++step) {
      for (std::size_t i = 0; i < d; ++i) grad[i] = rng.uniform(-1.0, 1.0);
      const std::vector<double> before = params;
      const OptimState prev = state;
      dense_step(state, params, grad, hp);
      for (std::size_t i = 0; i < d; ++i) {
        const double expected_m =
            hp.beta1 * prev.m[i] + (1.0 - hp.beta1) * grad[i];
        EXPECT_DOUBLE_EQ(state.m[i], expected_m);
        if (state.m[i] * grad[i] <= 0.0) {
          EXPECT_EQ(params[i], before[i]) << "dim " << i << " not paused";
        }
      }
    }
  }
}

TEST(DenseStep, AdamEquivalenceUnderPersistentAlignment) {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t d = 16;
    HyperParams adam;
    HyperParams cadam;
    cadam.algorithm = Algorithm::CAdam;
    OptimState sa = init_state(d, adam);
    OptimState sc = init_state(d, cadam);
    std::vector<double> pa(d, 0.5), pc(d, 0.5), grad(d);
    std::vector<double> sign(d);
    for (auto& s : sign) s = rng.uniform01() < 0.5 ? -1.0 : 1.0;

    for (int step = 0; step < 100; ++step) {
      for (std::size_t i = 0; i < d; ++i)
        grad[i] = sign[i] * rng.uniform(0.05, 1.0);  // never zero
      dense_step(sa, pa, grad, adam);
      dense_step(sc, pc, grad, cadam);
      for (std::size_t i = 0; i < d; ++i)
        ASSERT_NEAR(pa[i], pc[i], 1e-12);
    }
  }
}

TEST(DenseStep, MaxCorrectionIsMonotone) {
  Rng rng(7);
  HyperParams hp;
  hp.algorithm = Algorithm::CAmsGrad;
  const std::size_t d = 4;
  OptimState state = init_state(d, hp);
  std::vector<double> params(d, 1.0), grad(d);
  std::vector<double> prev_max(d, 0.0);
  for (int step = 0; step < 300; ++step) {
    for (auto& g : grad) g = rng.uniform(-3.0, 3.0);
    dense_step(state, params, grad, hp);
    for (std::size_t i = 0; i < d; ++i) {
      EXPECT_GE(state.v_max[i], prev_max[i]);
      EXPECT_GE(state.v[i], 0.0);
    }
    prev_max = state.v_max;
  }
}

TEST(DenseStep, BiasCorrectionConvergesToConstantGradient) {
  const double g = 0.7;
  HyperParams hp;
  OptimState state = init_state(1, hp);
  std::vector<double> params = {0.0};
  const int steps = static_cast<int>(10.0 / (1.0 - hp.beta2));
  for (int t = 0; t < steps; ++t)
    dense_step(state, params, std::vector<double>{g}, hp);
  const double bc1 = 1.0 - std::pow(hp.beta1, state.step);
  const double bc2 = 1.0 - std::pow(hp.beta2, state.step);
  EXPECT_NEAR(state.m[0] / bc1, g, 1e-6);
  EXPECT_NEAR(state.v[0] / bc2, g * g, 1e-6);
}

TEST(DenseStep, DeterministicForIdenticalInputs) {
  Rng rng(5);
  HyperParams hp;
  hp.algorithm = Algorithm::CAmsGrad;
  OptimState s1 = init_state(6, hp);
  std::vector<double> p1(6);
  for (auto& p : p1) p = rng.uniform(-1.0, 1.0);
  OptimState s2 = s1;
  std::vector<double> p2 = p1;

  std::vector<double> grad(6);
  for (auto& g : grad) g = rng.uniform(-1.0, 1.0);
  dense_step(s1, p1, grad, hp);
  dense_step(s2, p2, grad, hp);
  EXPECT_EQ(0, std::memcmp(p1.data(), p2.data(), p1.size() * sizeof(double)));
  EXPECT_EQ(0, std::memcmp(s1.m.data(), s2.m.data(), 6 * sizeof(double)));
  EXPECT_EQ(0,
            std::memcmp(s1.v_max.data(), s2.v_max.data(), 6 * sizeof(double)));
}

TEST(DenseStep, EveryAlgorithmDescendsTheQuadratic) {
  for (Algorithm alg : kAllAlgorithms) {
    const auto path = quadratic_descent(alg, 10000);
    double best = 1.0;
    for (double x : path) best = std::min(best, std::abs(x));
    EXPECT_LT(best, 0.1) << "algorithm " << algorithm_name(alg);
  }
}

TEST(DenseStep, LrScheduleAndMomentumDecay) {
  HyperParams hp;
  hp.lr_schedule = LrSchedule::InvSqrt;
  hp.lambda = 0.9;
  hp.alpha = 1.0;
  EXPECT_DOUBLE_EQ(lr_at(hp, 4), 0.5);
  EXPECT_DOUBLE_EQ(beta1_at(hp, 1), 0.9);
  EXPECT_DOUBLE_EQ(beta1_at(hp, 2), 0.9 * 0.9);
}

TEST(DenseStep, WeightDecayVariants) {
  // AdamW: decoupled decay shrinks the parameter even with zero gradient
  HyperParams w;
  w.algorithm = Algorithm::AdamW;
  w.alpha = 0.1;
  w.weight_decay = 0.1;
  OptimState sw = init_state(1, w);
  std::vector<double> pw = {1.0};
  dense_step(sw, pw, std::vector<double>{0.0}, w);
  EXPECT_DOUBLE_EQ(pw[0], 0.99);
  EXPECT_EQ(sw.m[0], 0.0);

  // Adam couples decay into the gradient: moments move
  HyperParams a;
  a.alpha = 0.1;
  a.weight_decay = 0.1;
  OptimState sa = init_state(1, a);
  std::vector<double> pa = {1.0};
  dense_step(sa, pa, std::vector<double>{0.0}, a);
  EXPECT_NE(sa.m[0], 0.0);
  EXPECT_LT(pa[0], 0.99);

  // confidence mask never pauses the decay
  HyperParams c;
  c.algorithm = Algorithm::CAdam;
  c.alpha = 0.1;
  c.weight_decay = 0.1;
  OptimState scs = init_state(1, c);
  std::vector<double> pc = {1.0};
  dense_step(scs, pc, std::vector<double>{1.0}, c);   // aligned step
  const double before = pc[0];
  dense_step(scs, pc, std::vector<double>{-1e-6}, c);  // masked step
  EXPECT_DOUBLE_EQ(pc[0], before * (1.0 - c.alpha * c.weight_decay));
}

TEST(DenseStep, AdaBeliefTracksGradientDeviation) {
  HyperParams hp;
  hp.algorithm = Algorithm::AdaBelief;
  OptimState state = init_state(1, hp);
  std::vector<double> params = {0.0};
  dense_step(state, params, std::vector<double>{1.0}, hp);
  const double m1 = (1.0 - hp.beta1) * 1.0;
  const double expected_v = (1.0 - hp.beta2) * (1.0 - m1) * (1.0 - m1);
  EXPECT_DOUBLE_EQ(state.v[0], expected_v);
}

TEST(AlignmentRatio, CountsStrictlyPositiveProducts) {
  EXPECT_DOUBLE_EQ(
      alignment_ratio(std::vector<double>{1.0, -1.0}, std::vector<double>{1.0, 1.0}),
      0.5);
  EXPECT_DOUBLE_EQ(
      alignment_ratio(std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}),
      0.0);
  EXPECT_DOUBLE_EQ(alignment_ratio(std::vector<double>{2.0, 3.0, -1.0},
                                   std::vector<double>{1.0, 1.0, -1.0}),
                   1.0);
  EXPECT_THROW(alignment_ratio(std::vector<double>{}, std::vector<double>{}),
               dimension_error);
  EXPECT_THROW(alignment_ratio(std::vector<double>{1.0},
                               std::vector<double>{1.0, 2.0}),
               dimension_error);
}

TEST(SparseStep, TouchesOnlyListedDimensions) {
  HyperParams hp;
  hp.algorithm = Algorithm::CAdam;
  const std::size_t d = 1000000;
  OptimState state = init_state(d, hp);
  std::vector<double> params(d, 1.0);

  SparseGrad grad;
  grad.indices = {3, 500000, 999999};
  grad.values = {1.0, -2.0, 0.5};
  const StepReport rep = sparse_step(state, params, grad, hp);
  EXPECT_EQ(rep.total_count, 3);

  std::size_t changed_state = 0, changed_params = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (state.m[i] != 0.0 || state.v[i] != 0.0 || state.touched[i] != 0)
      ++changed_state;
    if (params[i] != 1.0) ++changed_params;
  }
  EXPECT_EQ(changed_state, 3u);
  EXPECT_EQ(changed_params, 3u);  // first touch always aligns: m1*g = (1-b1)g^2
}

TEST(SparseStep, MatchesDenseWhenEveryDimensionIsTouched) {
  Rng rng(21);
  for (Algorithm alg : {Algorithm::Adam, Algorithm::CAdam,
                        Algorithm::CAmsGrad, Algorithm::AdaBelief}) {
    HyperParams hp;
    hp.algorithm = alg;
    const std::size_t d = 5;
    OptimState sd = init_state(d, hp);
    OptimState ss = init_state(d, hp);
    std::vector<double> pd(d, 0.3), ps(d, 0.3);

    for (int step = 0; step < 40; ++step) {
      std::vector<double> grad(d);
      SparseGrad sgrad;
      for (std::size_t i = 0; i < d; ++i) {
        grad[i] = rng.uniform(-1.0, 1.0);
        if (grad[i] == 0.0) grad[i] = 0.25;
        sgrad.indices.push_back(static_cast<std::int64_t>(i));
        sgrad.values.push_back(grad[i]);
      }
      dense_step(sd, pd, grad, hp);
      sparse_step(ss, ps, sgrad, hp);
      for (std::size_t i = 0; i < d; ++i) ASSERT_NEAR(pd[i], ps[i], 1e-12);
      sgrad.indices.clear();
      sgrad.values.clear();
    }
    EXPECT_EQ(sd.step, ss.step);
  }
}

TEST(SparseStep, EmptyGradientIsANoOp) {
  HyperParams hp;
  OptimState state = init_state(4, hp);
  std::vector<double> params(4, 2.0);
  sparse_step(state, params, SparseGrad{}, hp);
  EXPECT_EQ(state.step, 0);
  EXPECT_EQ(state.touched, (std::vector<std::int64_t>{0, 0, 0, 0}));
  EXPECT_EQ(params, (std::vector<double>{2.0, 2.0, 2.0, 2.0}));
}

TEST(SparseStep, RejectsBadIndices) {
  HyperParams hp;
  OptimState state = init_state(4, hp);
  std::vector<double> params(4, 0.0);

  SparseGrad dup;
  dup.indices = {1, 1};
  dup.values = {0.5, 0.5};
  EXPECT_THROW(sparse_step(state, params, dup, hp), index_error);

  SparseGrad oob;
  oob.indices = {4};
  oob.values = {0.5};
  EXPECT_THROW(sparse_step(state, params, oob, hp), index_error);

  SparseGrad unsorted;
  unsorted.indices = {2, 0};
  unsorted.values = {0.5, 0.5};
  EXPECT_THROW(sparse_step(state, params, unsorted, hp), index_error);
}

TEST(SparseStep, PerDimensionCountersRestartUntouchedRows) {
  HyperParams hp;
  hp.algorithm = Algorithm::Adam;
  OptimState state = init_state(3, hp);
  std::vector<double> params(3, 1.0);

  SparseGrad g0;
  g0.indices = {0};
  g0.values = {1.0};
  for (int i = 0; i < 5; ++i) sparse_step(state, params, g0, hp);
  EXPECT_EQ(state.touched[0], 5);
  EXPECT_EQ(state.touched[2], 0);
  EXPECT_EQ(params[1], 1.0);
  EXPECT_EQ(params[2], 1.0);

  // a first touch of dim 2 behaves like step one: full bias correction
  SparseGrad g2;
  g2.indices = {2};
  g2.values = {1.0};
  sparse_step(state, params, g2, hp);
  const double expected = 1.0 - hp.alpha / (1.0 + hp.epsilon);
  EXPECT_NEAR(params[2], expected, 1e-12);
}

TEST(SparseFromDense, KeepsOnlyNonZeroEntries) {
  const std::vector<double> g = {0.0, 1.5, 0.0, -2.0};
  const SparseGrad s = sparse_from_dense(g);
  EXPECT_EQ(s.indices, (std::vector<std::int64_t>{1, 3}));
  EXPECT_EQ(s.values, (std::vector<double>{1.5, -2.0}));
}
