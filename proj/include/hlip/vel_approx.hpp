#pragma once

// Horizontal velocity from two SSP position samples, inverted through the H-LIP flow.

#include <cmath>
#include <string>

#include "hlip/error.hpp"
#include "hlip/hlip_core.hpp"

namespace hlip {

/// Below this the (1,2) entry of the flow matrix is ~t and the inversion amplifies noise.
inline constexpr double kVelocityMinTime = 0.005;

struct VelocityEstimate {
  double v0_tilde = 0.0;
  double vt_tilde = 0.0;
  double v_minus_tilde = 0.0;
};

struct VelocityPair {
  double v0 = 0.0;
  double vt = 0.0;
};

/// p0 at SSP start and pt after t seconds in the same stance frame.
inline VelocityPair velocity_from_positions(double p0, double pt, double t, const ModelParams& params,
                                            double t_min = kVelocityMinTime) {
  if (!(t >= t_min)) {
    throw Error(ErrorCode::IllConditioned, "velocity inversion needs t >= " + std::to_string(t_min));
  }
  const Eigen::Matrix2d at = ssp_transition_matrix(natural_frequency(params), t);
  const double a11 = at(0, 0);
  const double a12 = at(0, 1);
  const double a21 = at(1, 0);
  const double a22 = at(1, 1);
  return {(-a11 * p0 + pt) / a12, (a21 - a11 * a22 / a12) * p0 + (a22 / a12) * pt};
}

/// Velocity after flowing (pt, vt) over the remaining SSP time.
inline double predict_preimpact(double pt, double vt_tilde, double t, const ModelParams& params) {
  const double remaining = std::max(params.t_ssp - t, 0.0);
  return ssp_flow({pt, vt_tilde}, remaining, params).v;
}

inline VelocityEstimate estimate_velocity(double p0, double pt, double t, const ModelParams& params) {
  const VelocityPair pair = velocity_from_positions(p0, pt, t, params);
  return {pair.v0, pair.vt, predict_preimpact(pt, pair.vt, t, params)};
}

}  // namespace hlip
