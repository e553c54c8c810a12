#include <random>

#include <gtest/gtest.h>

#include "hlip/vel_approx.hpp"

using namespace hlip;

namespace {
ModelParams params() { return {1.0, 9.81, 0.3, 0.05}; }
}  // namespace

TEST(VelApprox, ExactOnHlip) {
  const ModelParams p = params();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const PlanarState x0{0.3 * u(rng), u(rng)};
    const double t = 0.01 + 0.28 * 0.5 * (u(rng) + 1.0);
    const PlanarState xt = ssp_flow(x0, t, p);
    const VelocityEstimate est = estimate_velocity(x0.p, xt.p, t, p);
    EXPECT_NEAR(est.v0_tilde, x0.v, 1e-10);
    EXPECT_NEAR(est.vt_tilde, xt.v, 1e-10);
    EXPECT_NEAR(est.v_minus_tilde, ssp_flow(x0, p.t_ssp, p).v, 1e-10);
  }
}

TEST(VelApprox, IllConditionedNearStart) {
  try {
    velocity_from_positions(0.0, 0.0, 0.001, params());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IllConditioned);
  }
  EXPECT_NO_THROW(velocity_from_positions(0.0, 0.0, 0.001, params(), 0.0005));
}

TEST(VelApprox, PredictAfterSspEndIsIdentity) {
  EXPECT_DOUBLE_EQ(predict_preimpact(0.1, 0.4, 0.35, params()), 0.4);
}

TEST(VelApprox, NoiseSensitivityShrinksWithTime) {
  // a position error of 1 mm maps to a velocity error of roughly 1 mm / t
  const ModelParams p = params();
  const double e_early = std::abs(velocity_from_positions(0.0, 1e-3, 0.01, p).vt);
  const double e_late = std::abs(velocity_from_positions(0.0, 1e-3, 0.2, p).vt);
  EXPECT_GT(e_early, e_late);
}
