#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hlip/gait.hpp"
#include "oracles.hpp"

using namespace hlip;
using oracle::Rational;

TEST(Bezier, PartitionOfUnity) {
  for (std::size_t m = 1; m <= 10; ++m)
    for (int i = 0; i <= 100; ++i) {
      const double t = i / 100.0;
      double sum = 0.0;
      for (std::size_t k = 0; k <= m; ++k) sum += bernstein_basis(m, k, t);
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Bezier, HorizontalMidpointExact) {
  EXPECT_EQ(bezier_eval(horizontal_profile(), 0.5), 0.6875);
  const std::vector<Rational> c{0, 0, 1, 1, 1};
  EXPECT_TRUE(oracle::bezier_rational(c, Rational(1, 2)) == Rational(11, 16));
}

TEST(Bezier, MatchesRationalBernsteinSum) {
  const std::vector<Rational> c{Rational(0), Rational(3, 20), Rational(3, 20), Rational(3, 20), Rational(3, 20),
                                Rational(0), Rational(-1, 50)};
  BezierCurve curve;
  for (const Rational& r : c) curve.coeffs.push_back(r.value());
  for (int i = 0; i <= 16; ++i) {
    const Rational t(i, 16);
    EXPECT_NEAR(bezier_eval(curve, t.value()), oracle::bezier_rational(c, t).value(), 1e-15);
  }
  EXPECT_NEAR(swing_vertical_sample(0.0, GaitParams{}).value, 0.0, 0.0);
  EXPECT_NEAR(bezier_eval(vertical_profile(0.15, -0.02), 0.5), oracle::ref::kSwingMid, 1e-15);
}

TEST(Bezier, EndpointsAndHull) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    BezierCurve c;
    const int n = 2 + trial % 7;
    for (int i = 0; i < n; ++i) c.coeffs.push_back(u(rng));
    EXPECT_DOUBLE_EQ(bezier_eval(c, 0.0), c.coeffs.front());
    EXPECT_DOUBLE_EQ(bezier_eval(c, 1.0), c.coeffs.back());
    const double lo = *std::min_element(c.coeffs.begin(), c.coeffs.end());
    const double hi = *std::max_element(c.coeffs.begin(), c.coeffs.end());
    for (int i = 0; i <= 50; ++i) {
      const double v = bezier_eval(c, i / 50.0);
      EXPECT_GE(v, lo - 1e-14);
      EXPECT_LE(v, hi + 1e-14);
    }
    // endpoint derivatives
    const double m = static_cast<double>(c.degree());
    EXPECT_NEAR(bezier_derivative(c, 0.0), m * (c.coeffs[1] - c.coeffs[0]), 1e-12);
    EXPECT_NEAR(bezier_derivative(c, 1.0), m * (c.coeffs[n - 1] - c.coeffs[n - 2]), 1e-12);
  }
}

TEST(Bezier, DerivativesMatchFiniteDifferences) {
  const BezierCurve c = vertical_profile(0.15, -0.02);
  const double h = 1e-5;
  for (double t = 0.1; t < 0.95; t += 0.1) {
    const double fd1 = (bezier_eval(c, t + h) - bezier_eval(c, t - h)) / (2 * h);
    const double fd2 = (bezier_eval(c, t + h) - 2 * bezier_eval(c, t) + bezier_eval(c, t - h)) / (h * h);
    EXPECT_NEAR(bezier_derivative(c, t), fd1, 1e-8);
    EXPECT_NEAR(bezier_second_derivative(c, t), fd2, 1e-4);
  }
}

TEST(Bezier, Errors) {
  try {
    bezier_eval({{1.0}}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParams);
  }
  try {
    bezier_eval(horizontal_profile(), 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
  }
  try {
    swing_horizontal(0.31, 0.0, 0.2, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
  }
}

TEST(Gait, HorizontalSwingEnds) {
  EXPECT_DOUBLE_EQ(swing_horizontal(0.0, -0.1, 0.3, 0.3), -0.1);
  EXPECT_DOUBLE_EQ(swing_horizontal(0.3, -0.1, 0.3, 0.3), 0.3);
  // flat start and end: zero rate at both ends
  EXPECT_NEAR(swing_horizontal_sample(0.0, -0.1, 0.3, 0.3).rate, 0.0, 1e-15);
  EXPECT_NEAR(swing_horizontal_sample(0.3, -0.1, 0.3, 0.3).rate, 0.0, 1e-12);
  EXPECT_NEAR(com_height_target(0.15, 0.9, 1.0, 0.3), 0.9 + 0.1 * 0.6875, 1e-15);
}

TEST(Gait, VerticalCrossingAtTouchdown) {
  const GaitParams g;
  const double s = vertical_crossing(g);
  EXPECT_GT(s, 0.5);
  EXPECT_LT(s, 1.0);
  EXPECT_NEAR(bezier_eval(vertical_profile(g), s), 0.0, 1e-14);
  EXPECT_NEAR(swing_vertical(g.t_ssp, g), 0.0, 1e-13);
  EXPECT_GT(swing_vertical(0.5 * g.t_ssp, g), 0.0);
  GaitParams flat = g;
  flat.z_sw_neg = 0.0;
  EXPECT_EQ(vertical_crossing(flat), 1.0);
  EXPECT_NEAR(swing_vertical(flat.t_ssp, flat), 0.0, 1e-15);
}

TEST(Gait, LateSwingKeepsDescending) {
  const GaitParams g;
  const double span = vertical_clock(g);
  const Sample a = swing_vertical_sample(span + 0.05, g);
  const Sample b = swing_vertical_sample(span + 0.10, g);
  EXPECT_LE(a.rate, -kMinDescentRate);
  EXPECT_LT(b.value, a.value);
  EXPECT_NEAR(swing_vertical_sample(span, g).value, g.z_sw_neg, 1e-14);
}

TEST(Gait, Validation) {
  GaitParams g;
  EXPECT_TRUE(g.valid());
  EXPECT_NEAR(g.t_dsp(), 0.05, 1e-15);
  g.t_ssp = 0.4;
  EXPECT_FALSE(g.valid());
  g = GaitParams{};
  g.z_sw_neg = 0.01;
  EXPECT_THROW(g.validate(), Error);
}

TEST(Gait, OutputTargetsPhases) {
  const GaitParams g;
  StepStart start;
  start.swing = {-0.2, -0.2, 0.0};
  start.z_com = 0.97;
  const Eigen::Vector2d u(0.3, -0.2);
  const OutputTargets dsp = output_targets(0.02, Phase::DSP, start, u, g);
  EXPECT_EQ(dsp.swing_des, start.swing);
  EXPECT_EQ(dsp.z_com_des, start.z_com);
  const OutputTargets t0 = output_targets(0.0, Phase::SSP, start, u, g);
  EXPECT_NEAR((t0.swing_des - start.swing).norm(), 0.0, 1e-15);
  const OutputTargets end = output_targets(g.t_ssp, Phase::SSP, start, u, g);
  EXPECT_NEAR(end.swing_des.x(), 0.3, 1e-15);
  EXPECT_NEAR(end.swing_des.y(), -0.2, 1e-15);
  EXPECT_NEAR(end.swing_des.z(), 0.0, 1e-13);
  EXPECT_NEAR(end.z_com_des, g.z0, 1e-15);
  const OutputTargets late = output_targets(g.t_ssp + 0.02, Phase::SSP, start, u, g);
  EXPECT_EQ(late.swing_rate.x(), 0.0);
  EXPECT_LT(late.swing_rate.z(), 0.0);
  EXPECT_LT(late.swing_des.z(), 0.0);
}
