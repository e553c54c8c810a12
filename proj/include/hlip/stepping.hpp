#pragma once

// Step-size feedback on the S2S dynamics: deadbeat gain synthesis, orbit
// stabilization of the H-LIP itself, and H-LIP stepping for a robot.

#include <algorithm>
#include <cmath>
#include <complex>

#include "hlip/hlip_core.hpp"
#include "hlip/orbit.hpp"

namespace hlip {

/// Spectral radius of a real 2x2 matrix from its characteristic polynomial.
inline double spectral_radius(const Eigen::Matrix2d& m) {
  const double half_trace = 0.5 * m.trace();
  const double det = m.determinant();
  const double disc = half_trace * half_trace - det;
  if (disc < 0.0) return std::sqrt(std::max(det, 0.0));
  const double root = std::sqrt(disc);
  return std::max(std::abs(half_trace + root), std::abs(half_trace - root));
}

inline double inf_norm(const Eigen::Matrix2d& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

/// Row gain K in u = u_ref + K (x - x_ref); units [1, s].
struct SteppingGain {
  Eigen::RowVector2d k{1.0, 0.0};

  /// Accepts an externally computed gain only if it stabilizes the S2S pair.
  static SteppingGain validated(const Eigen::RowVector2d& k, const S2SMatrices& mats, double tol = 1e-9) {
    const Eigen::Matrix2d closed = mats.a + mats.b * k;
    const double rho = spectral_radius(closed);
    if (!(rho < 1.0 - tol)) {
      throw Error(ErrorCode::UnstableMatrix, "gain leaves spectral radius " + std::to_string(rho));
    }
    return SteppingGain{k};
  }
};

/// e = x_robot - x_hlip
using ErrorState = Eigen::Vector2d;

inline Eigen::Matrix2d closed_loop(const S2SMatrices& mats, const SteppingGain& gain) {
  return mats.a + mats.b * gain.k;
}

/// Relative nilpotency residual of a closed-loop matrix, ||M^2|| / max(1, ||M||^2).
inline double nilpotency_residual(const Eigen::Matrix2d& m) {
  const double scale = std::max(1.0, inf_norm(m) * inf_norm(m));
  return inf_norm(m * m) / scale;
}

inline SteppingGain deadbeat_gain(const ModelParams& params) {
  params.validate();
  const double lambda = natural_frequency(params);
  const double coth = 1.0 / std::tanh(params.t_ssp * lambda);
  return SteppingGain{Eigen::RowVector2d(1.0, params.t_dsp + coth / lambda)};
}

/// Controllability matrix [B, AB].
inline Eigen::Matrix2d controllability_matrix(const S2SMatrices& mats) {
  Eigen::Matrix2d c;
  c.col(0) = mats.b;
  c.col(1) = mats.a * mats.b;
  return c;
}

inline double hlip_stepping(const PlanarState& x_robot, const PlanarState& x_hlip, double u_hlip,
                            const SteppingGain& gain) {
  return u_hlip + gain.k.dot(x_robot.vec() - x_hlip.vec());
}

inline double stabilize_p1(const PlanarState& x, const P1Orbit& orbit, const SteppingGain& gain) {
  return hlip_stepping(x, orbit.x_star, orbit.u_star, gain);
}

inline double stabilize_p2(const PlanarState& x, const P2Orbit& orbit, Leg stance, const SteppingGain& gain) {
  return hlip_stepping(x, orbit.x_star(stance), orbit.u_star(stance), gain);
}

inline double stabilize(const PlanarState& x, const PlaneOrbit& orbit, Leg stance, const SteppingGain& gain) {
  const OrbitTarget target = orbit_target(orbit, stance);
  return hlip_stepping(x, target.x_star, target.u_star, gain);
}

/// Deadbeat P1 stabilization written out: p + p* + T_DSP v + coth(lambda T_SSP)(v - v*)/lambda.
inline double deadbeat_p1_closed_form(const PlanarState& x, const P1Orbit& orbit, const ModelParams& params) {
  const double lambda = natural_frequency(params);
  const double coth = 1.0 / std::tanh(params.t_ssp * lambda);
  return x.p + orbit.x_star.p + params.t_dsp * x.v + coth * (x.v - orbit.x_star.v) / lambda;
}

inline double capture_point(const PlanarState& x, const ModelParams& params) {
  return x.p + x.v / natural_frequency(params);
}

}  // namespace hlip
