#pragma once

// Closed-form period-1 / period-2 walking orbits of the H-LIP and their 3D
// composition from two orthogonal planes.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "hlip/hlip_core.hpp"

namespace hlip {

enum class Leg { Left, Right };

inline Leg other(Leg leg) { return leg == Leg::Left ? Leg::Right : Leg::Left; }
inline const char* to_string(Leg leg) { return leg == Leg::Left ? "L" : "R"; }

struct OrbitalSlopes {
  double sigma1 = 0.0;  ///< P1 slope, lambda * coth(lambda T_SSP / 2)
  double sigma2 = 0.0;  ///< P2 slope, lambda * tanh(lambda T_SSP / 2)
};

inline OrbitalSlopes orbital_slopes(const ModelParams& params) {
  params.validate();
  const double lambda = natural_frequency(params);
  const double half = 0.5 * lambda * params.t_ssp;
  return {lambda / std::tanh(half), lambda * std::tanh(half)};
}

struct P1Orbit {
  double u_star = 0.0;
  PlanarState x_star;  ///< pre-impact state
  double v_des = 0.0;
  double sigma1 = 0.0;
};

struct P2Orbit {
  double u_star_left = 0.0;
  double u_star_right = 0.0;
  PlanarState x_star_left;
  PlanarState x_star_right;
  double d2 = 0.0;
  double sigma2 = 0.0;
  double v_des = 0.0;

  const PlanarState& x_star(Leg stance) const { return stance == Leg::Left ? x_star_left : x_star_right; }
  double u_star(Leg stance) const { return stance == Leg::Left ? u_star_left : u_star_right; }
};

inline P1Orbit p1_orbit(double v_des, const ModelParams& params) {
  const OrbitalSlopes slopes = orbital_slopes(params);
  const double travel = v_des * params.step_duration();
  const double p_star = travel / (2.0 + params.t_dsp * slopes.sigma1);
  return {travel, {p_star, slopes.sigma1 * p_star}, v_des, slopes.sigma1};
}

/// Offset of the P2 orbital lines for a net velocity; independent of the step split.
inline double p2_line_offset(double v_des, const ModelParams& params) {
  const OrbitalSlopes slopes = orbital_slopes(params);
  const double lambda = natural_frequency(params);
  const double sech = 1.0 / std::cosh(0.5 * lambda * params.t_ssp);
  return lambda * lambda * sech * sech * params.step_duration() * v_des /
         (lambda * lambda * params.t_dsp + 2.0 * slopes.sigma2);
}

/// The P2 orbit is fixed by the net velocity and the left-stance step size.
inline P2Orbit p2_orbit(double v_des, double u_star_left, const ModelParams& params) {
  const OrbitalSlopes slopes = orbital_slopes(params);
  P2Orbit orbit;
  orbit.v_des = v_des;
  orbit.sigma2 = slopes.sigma2;
  orbit.d2 = p2_line_offset(v_des, params);
  orbit.u_star_left = u_star_left;
  orbit.u_star_right = 2.0 * v_des * params.step_duration() - u_star_left;
  const auto boundary = [&](double u) {
    const double p = (u - params.t_dsp * orbit.d2) / (2.0 + params.t_dsp * slopes.sigma2);
    return PlanarState{p, slopes.sigma2 * p + orbit.d2};
  };
  orbit.x_star_left = boundary(orbit.u_star_left);
  orbit.x_star_right = boundary(orbit.u_star_right);
  return orbit;
}

/// Boundary state of the P1 orbit that the P2 lines with offset d2 describe when u_L = u_R.
inline PlanarState p2_equivalent_p1_state(double d2, const ModelParams& params) {
  const OrbitalSlopes slopes = orbital_slopes(params);
  const double lambda = natural_frequency(params);
  const double p = d2 * std::sinh(params.t_ssp * lambda) / (2.0 * lambda);
  return {p, slopes.sigma2 * p + d2};
}

/// Per-leg offsets on the extended P1 lines: the final state of each leg lies on
/// v = sigma1 (p + d). For a symmetric orbit right == -left.
struct D1Offsets {
  double left = 0.0;
  double right = 0.0;
};

inline D1Offsets p2_d1_offset(const P2Orbit& orbit, const ModelParams& params) {
  const double sigma1 = orbital_slopes(params).sigma1;
  return {orbit.x_star_left.v / sigma1 - orbit.x_star_left.p,
          orbit.x_star_right.v / sigma1 - orbit.x_star_right.p};
}

/// Step size that closes an orbit from a boundary state (u = 2 p^- + T_DSP v^-).
inline double orbit_step_size(const PlanarState& x_minus, const ModelParams& params) {
  return 2.0 * x_minus.p + params.t_dsp * x_minus.v;
}

// ---------------------------------------------------------------------------
// 3D composition

using PlaneOrbit = std::variant<P1Orbit, P2Orbit>;

enum class CompositionKind { SP1_CP1, SP1_CP2, SP2_CP1, SP2_CP2 };

inline constexpr std::array<CompositionKind, 4> kAllCompositions = {
    CompositionKind::SP1_CP1, CompositionKind::SP1_CP2, CompositionKind::SP2_CP1, CompositionKind::SP2_CP2};

inline const char* to_string(CompositionKind kind) {
  switch (kind) {
    case CompositionKind::SP1_CP1: return "sP1-cP1";
    case CompositionKind::SP1_CP2: return "sP1-cP2";
    case CompositionKind::SP2_CP1: return "sP2-cP1";
    case CompositionKind::SP2_CP2: return "sP2-cP2";
  }
  return "?";
}

inline CompositionKind parse_composition(std::string_view label) {
  for (CompositionKind kind : kAllCompositions) {
    if (label == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::InvalidKind, "unknown orbit composition '" + std::string(label) + "'");
}

inline bool sagittal_is_p2(CompositionKind kind) {
  return kind == CompositionKind::SP2_CP1 || kind == CompositionKind::SP2_CP2;
}
inline bool coronal_is_p2(CompositionKind kind) {
  return kind == CompositionKind::SP1_CP2 || kind == CompositionKind::SP2_CP2;
}

struct OrbitComposition {
  PlaneOrbit sagittal;
  PlaneOrbit coronal;
  CompositionKind kind = CompositionKind::SP1_CP2;
  ModelParams params;
};

/// Builds both planar orbits on shared timing and height.
/// u_star_left_x only matters for a sagittal P2 orbit; it defaults to the
/// even split v_x T, which is the P1-equivalent P2 orbit.
inline OrbitComposition compose_3d(double v_des_x, double v_des_y, CompositionKind kind,
                                   std::optional<double> u_star_left_y, const ModelParams& params,
                                   std::optional<double> u_star_left_x = std::nullopt) {
  params.validate();
  OrbitComposition out;
  out.kind = kind;
  out.params = params;
  if (sagittal_is_p2(kind)) {
    out.sagittal = p2_orbit(v_des_x, u_star_left_x.value_or(v_des_x * params.step_duration()), params);
  } else {
    out.sagittal = p1_orbit(v_des_x, params);
  }
  if (coronal_is_p2(kind)) {
    if (!u_star_left_y) {
      throw Error(ErrorCode::InvalidParams, "a coronal P2 orbit needs the left-stance step width");
    }
    out.coronal = p2_orbit(v_des_y, *u_star_left_y, params);
  } else {
    out.coronal = p1_orbit(v_des_y, params);
  }
  return out;
}

/// Desired pre-impact state and step size of a planar orbit for the given stance leg.
struct OrbitTarget {
  PlanarState x_star;
  double u_star = 0.0;
};

inline OrbitTarget orbit_target(const PlaneOrbit& orbit, Leg stance) {
  if (const auto* p1 = std::get_if<P1Orbit>(&orbit)) return {p1->x_star, p1->u_star};
  const auto& p2 = std::get<P2Orbit>(orbit);
  return {p2.x_star(stance), p2.u_star(stance)};
}

}  // namespace hlip
