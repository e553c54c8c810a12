#pragma once

// Hybrid linear inverted pendulum: continuous flows, the SSP-/SSP+ transition
// and the resulting linear step-to-step map.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "hlip/error.hpp"

namespace hlip {

inline constexpr double kDefaultGravity = 9.81;

/// Physical and timing parameters shared by both planes of the model.
struct ModelParams {
  double z0 = 1.0;                ///< COM height [m]
  double g = kDefaultGravity;     ///< gravity [m/s^2]
  double t_ssp = 0.3;             ///< single-support duration [s]
  double t_dsp = 0.05;            ///< double-support duration [s]

  double step_duration() const { return t_ssp + t_dsp; }

  bool valid() const {
    return std::isfinite(z0) && std::isfinite(g) && std::isfinite(t_ssp) && std::isfinite(t_dsp) &&
           z0 > 0.0 && g > 0.0 && t_ssp > 0.0 && t_dsp >= 0.0;
  }

  void validate() const {
    if (!valid()) {
      throw Error(ErrorCode::InvalidParams,
                  "z0=" + std::to_string(z0) + " g=" + std::to_string(g) + " T_SSP=" +
                      std::to_string(t_ssp) + " T_DSP=" + std::to_string(t_dsp));
    }
  }

  bool operator==(const ModelParams&) const = default;
};

/// Horizontal COM state in one plane, position measured from the stance foot.
/// Whether it is a pre-impact or mid-flow state is up to the call site.
struct PlanarState {
  double p = 0.0;
  double v = 0.0;

  Eigen::Vector2d vec() const { return {p, v}; }
  static PlanarState from(const Eigen::Vector2d& x) { return {x(0), x(1)}; }

  bool operator==(const PlanarState&) const = default;
};

/// x_{k+1} = a x_k + b u_k on pre-impact states.
struct S2SMatrices {
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b{-1.0, 0.0};
};

inline double natural_frequency(const ModelParams& params) {
  if (!(params.z0 > 0.0) || !(params.g > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "natural frequency needs z0 > 0 and g > 0");
  }
  return std::sqrt(params.g / params.z0);
}

/// exp(A_SSP t) for the SSP dynamics p'' = lambda^2 p.
/// Double-precision cosh/sinh overflow once lambda*t exceeds roughly 700.
inline Eigen::Matrix2d ssp_transition_matrix(double lambda, double t) {
  const double c = std::cosh(lambda * t);
  const double s = std::sinh(lambda * t);
  Eigen::Matrix2d m;
  m << c, s / lambda, lambda * s, c;
  return m;
}

inline PlanarState ssp_flow(const PlanarState& x, double t, const ModelParams& params) {
  const double lambda = natural_frequency(params);
  return PlanarState::from(ssp_transition_matrix(lambda, t) * x.vec());
}

inline PlanarState dsp_flow(const PlanarState& x, double t) { return {x.p + x.v * t, x.v}; }

/// Collapses DSP and the foot switch into one jump from SSP- to the next SSP+.
inline PlanarState impact_transition(const PlanarState& x_minus, double u, const ModelParams& params) {
  return {x_minus.p + x_minus.v * params.t_dsp - u, x_minus.v};
}

inline S2SMatrices s2s_matrices(const ModelParams& params) {
  params.validate();
  const double lambda = natural_frequency(params);
  const double c = std::cosh(lambda * params.t_ssp);
  const double s = std::sinh(lambda * params.t_ssp);
  S2SMatrices m;
  m.a << c, params.t_dsp * c + s / lambda, lambda * s, params.t_dsp * lambda * s + c;
  m.b << -c, -lambda * s;
  return m;
}

inline PlanarState s2s_step(const PlanarState& x, double u, const S2SMatrices& mats) {
  return PlanarState::from(mats.a * x.vec() + mats.b * u);
}

inline double orbital_energy(const PlanarState& x, const ModelParams& params) {
  const double lambda = natural_frequency(params);
  return x.v * x.v - lambda * lambda * x.p * x.p;
}

}  // namespace hlip
