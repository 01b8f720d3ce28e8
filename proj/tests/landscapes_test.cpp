#include "cadam/landscapes.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cadam;

namespace {

// central finite differences, the independent oracle for analytic gradients
template <class F>
double fd(F&& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST(XStar, MatchesTheScheduleDefinitions) {
  MovingMinSpec sudden{Norm::L1, Schedule::Sudden, 40};
  EXPECT_DOUBLE_EQ(x_star(sudden, 39), 0.0);
  EXPECT_DOUBLE_EQ(x_star(sudden, 40), 1.0);
  EXPECT_DOUBLE_EQ(x_star(sudden, 79), 1.0);
  EXPECT_DOUBLE_EQ(x_star(sudden, 80), 0.0);

  MovingMinSpec linear{Norm::L1, Schedule::Linear, 100};
  EXPECT_DOUBLE_EQ(x_star(linear, 50), 0.5);

  MovingMinSpec sinus{Norm::L1, Schedule::Sinusoidal, 4};
  EXPECT_DOUBLE_EQ(x_star(sinus, 1), std::sin(std::numbers::pi / 2.0));
  EXPECT_DOUBLE_EQ(x_star(sinus, 1), 1.0);
}

TEST(XStar, ScheduleShapeProperties) {
  MovingMinSpec sudden{Norm::L1, Schedule::Sudden, 7};
  MovingMinSpec linear{Norm::L1, Schedule::Linear, 13};
  MovingMinSpec sinus{Norm::L1, Schedule::Sinusoidal, 9};
  for (std::int64_t t = 0; t < 200; ++t) {
    EXPECT_DOUBLE_EQ(x_star(sudden, t), x_star(sudden, t + 2 * 7));
    EXPECT_DOUBLE_EQ(x_star(linear, t), static_cast<double>(t) / 13.0);
    EXPECT_LE(std::abs(x_star(sinus, t)), 1.0);
  }
}

TEST(MovingLoss, ValuesAndSubgradients) {
  MovingMinSpec l2{Norm::L2, Schedule::Linear, 100};
  const auto q = moving_loss_grad(l2, 1.5, 50);  // x* = 0.5
  EXPECT_DOUBLE_EQ(q.loss, 1.0);
  EXPECT_DOUBLE_EQ(q.grad, 2.0);

  MovingMinSpec l1{Norm::L1, Schedule::Sudden, 40};
  const auto at_kink = moving_loss_grad(l1, 1.0, 40);  // x* = 1
  EXPECT_DOUBLE_EQ(at_kink.loss, 0.0);
  EXPECT_DOUBLE_EQ(at_kink.grad, 0.0);

  const auto after_jump = moving_loss_grad(l1, 0.0, 40);
  EXPECT_DOUBLE_EQ(after_jump.loss, 1.0);
  EXPECT_DOUBLE_EQ(after_jump.grad, -1.0);
}

TEST(Eval2d, KnownPoints) {
  const auto sep = eval2d(Landscape2D{LandscapeId::SepL1}, 1.0, -2.0);
  EXPECT_DOUBLE_EQ(sep.loss, 3.0);
  EXPECT_DOUBLE_EQ(sep.grad[0], 1.0);
  EXPECT_DOUBLE_EQ(sep.grad[1], -1.0);

  const auto rb = eval2d(Landscape2D{LandscapeId::Rosenbrock}, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(rb.loss, 0.0);
  EXPECT_DOUBLE_EQ(rb.grad[0], 0.0);
  EXPECT_DOUBLE_EQ(rb.grad[1], 0.0);

  const auto il2 = eval2d(Landscape2D{LandscapeId::InsepL2}, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(il2.loss, 4.0);
  EXPECT_DOUBLE_EQ(il2.grad[0], 4.0);
  EXPECT_DOUBLE_EQ(il2.grad[1], 4.0);
}

TEST(Eval2d, MinimaAreWhereTheyShouldBe) {
  for (LandscapeId id : {LandscapeId::SepL1, LandscapeId::InsepL1,
                         LandscapeId::InsepL2, LandscapeId::Rosenbrock}) {
    const Landscape2D ls{id};
    const auto opt = minimum(ls);
    EXPECT_DOUBLE_EQ(eval2d(ls, opt[0], opt[1]).loss, 0.0);
  }
}

TEST(Eval2d, GradientsMatchFiniteDifferences) {
  Rng rng(42);
  for (LandscapeId id : {LandscapeId::SepL1, LandscapeId::InsepL1,
                         LandscapeId::InsepL2, LandscapeId::Rosenbrock}) {
    const Landscape2D ls{id};
    int checked = 0;
    while (checked < 100) {
      const double x = rng.uniform(-2.0, 2.0);
      const double y = rng.uniform(-2.0, 2.0);
      // keep away from the L1 kinks
      if (std::min({std::abs(x), std::abs(y), std::abs(x + y),
                    std::abs(x - y)}) < 1e-2)
        continue;
      ++checked;
      const auto lg = eval2d(ls, x, y);
      const double gx = fd([&](double u) { return eval2d(ls, u, y).loss; }, x);
      const double gy = fd([&](double u) { return eval2d(ls, x, u).loss; }, y);
      EXPECT_NEAR(lg.grad[0], gx, 1e-4);
      EXPECT_NEAR(lg.grad[1], gy, 1e-4);
    }
  }
}

TEST(MovingLoss, GradientsMatchFiniteDifferences) {
  Rng rng(43);
  for (Norm norm : {Norm::L1, Norm::L2}) {
    MovingMinSpec spec{norm, Schedule::Sinusoidal, 17};
    int checked = 0;
    while (checked < 100) {
      const std::int64_t t = static_cast<std::int64_t>(rng.below(200));
      const double x = rng.uniform(-2.0, 2.0);
      if (std::abs(x - x_star(spec, t)) < 1e-2) continue;
      ++checked;
      const auto lg = moving_loss_grad(spec, x, t);
      const double g =
          fd([&](double u) { return moving_loss_grad(spec, u, t).loss; }, x);
      EXPECT_NEAR(lg.grad, g, 1e-4);
    }
  }
}

TEST(CorruptGrad, NoNoiseIsIdentity) {
  NoiseSpec spec;
  spec.p = 0.0;
  Rng rng(1);
  const std::vector<double> in = {1.0, -2.0, 3.0};
  EXPECT_EQ(corrupt_grad(in, spec, rng), in);
}

TEST(CorruptGrad, FullNoiseShrinksEveryEntry) {
  NoiseSpec spec;
  spec.p = 1.0;
  Rng rng(2);
  const std::vector<double> in = {1.0, -2.0, 3.0, -4.0};
  const auto out = corrupt_grad(in, spec, rng);
  for (std::size_t i = 0; i < in.size(); ++i)
    EXPECT_LE(std::abs(out[i]), std::abs(in[i]));
}

TEST(CorruptGrad, CorruptedFractionConcentratesAroundP) {
  NoiseSpec spec;
  spec.p = 0.5;
  Rng rng(3);
  const std::vector<double> in(100000, 1.0);
  const auto out = corrupt_grad(in, spec, rng);
  std::size_t corrupted = 0;
  for (std::size_t i = 0; i < in.size(); ++i) corrupted += out[i] != 1.0;
  const double frac = static_cast<double>(corrupted) / in.size();
  EXPECT_GE(frac, 0.49);
  EXPECT_LE(frac, 0.51);
}

TEST(CorruptGrad, SameSeedSameCorruption) {
  NoiseSpec spec;
  spec.p = 0.5;
  const std::vector<double> in = {0.5, -0.25, 2.0, 1.0, -1.0};
  Rng a(77), b(77);
  const auto out_a = corrupt_grad(in, spec, a);
  const auto out_b = corrupt_grad(in, spec, b);
  EXPECT_EQ(out_a, out_b);

  // the stream position is independent of p, so arms that only differ in
  // what they do with the result stay in lockstep
  Rng c(77);
  NoiseSpec zero = spec;
  zero.p = 0.0;
  corrupt_grad(in, zero, c);
  const auto out_c = corrupt_grad(in, spec, c);
  Rng d(77);
  corrupt_grad(in, spec, d);
  const auto out_d = corrupt_grad(in, spec, d);
  EXPECT_EQ(out_c, out_d);
}

TEST(ConvexAbs, LossAndGradient) {
  const auto lg = abs_loss_grad(2.0, 0.5, 1.5);
  EXPECT_DOUBLE_EQ(lg.loss, 2.0);
  EXPECT_DOUBLE_EQ(lg.grad, 2.0);
  const auto at_center = abs_loss_grad(2.0, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(at_center.loss, 0.0);
  EXPECT_DOUBLE_EQ(at_center.grad, 0.0);
}
