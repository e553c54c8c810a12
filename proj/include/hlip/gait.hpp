#pragma once

// Bezier output trajectories for the swing foot and COM height.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlip/error.hpp"
#include "hlip/hlip_core.hpp"

namespace hlip {

struct BezierCurve {
  std::vector<double> coeffs;

  std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

inline double bernstein_basis(std::size_t m, std::size_t k, double t_bar) {
  if (k > m) return 0.0;
  return binomial(m, k) * std::pow(t_bar, static_cast<double>(k)) * std::pow(1.0 - t_bar, static_cast<double>(m - k));
}

namespace detail {

inline void check_curve(const BezierCurve& curve) {
  if (curve.coeffs.size() < 2) throw Error(ErrorCode::InvalidParams, "Bezier curve needs degree >= 1");
}

inline void check_unit(double t_bar) {
  if (!(t_bar >= 0.0 && t_bar <= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "Bezier parameter " + std::to_string(t_bar) + " outside [0, 1]");
  }
}

// de Casteljau on an arbitrary coefficient list.
inline double casteljau(std::vector<double> b, double t) {
  for (std::size_t r = 1; r < b.size(); ++r)
    for (std::size_t i = 0; i + r < b.size(); ++i) b[i] = (1.0 - t) * b[i] + t * b[i + 1];
  return b.front();
}

inline std::vector<double> forward_differences(const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) d.push_back(b[i + 1] - b[i]);
  return d;
}

}  // namespace detail

inline double bezier_eval(const BezierCurve& curve, double t_bar) {
  detail::check_curve(curve);
  detail::check_unit(t_bar);
  if (t_bar == 0.0) return curve.coeffs.front();
  if (t_bar == 1.0) return curve.coeffs.back();
  return detail::casteljau(curve.coeffs, t_bar);
}

/// d/dt_bar of the curve.
inline double bezier_derivative(const BezierCurve& curve, double t_bar) {
  detail::check_curve(curve);
  detail::check_unit(t_bar);
  const auto m = static_cast<double>(curve.degree());
  return m * detail::casteljau(detail::forward_differences(curve.coeffs), t_bar);
}

/// d^2/dt_bar^2 of the curve; zero for degree 1.
inline double bezier_second_derivative(const BezierCurve& curve, double t_bar) {
  detail::check_curve(curve);
  detail::check_unit(t_bar);
  if (curve.degree() < 2) return 0.0;
  const auto m = static_cast<double>(curve.degree());
  const auto d2 = detail::forward_differences(detail::forward_differences(curve.coeffs));
  return m * (m - 1.0) * detail::casteljau(d2, t_bar);
}

// ---------------------------------------------------------------------------
// Gait

struct GaitParams {
  double z0 = 1.0;
  double t = 0.35;  ///< step duration T
  double t_ssp = 0.3;
  double z_sw_max = 0.15;
  double z_sw_neg = -0.02;
  double u_star_left_y = -0.2;

  double t_dsp() const { return t - t_ssp; }

  ModelParams model(double g = kDefaultGravity) const { return {z0, g, t_ssp, t_dsp()}; }

  bool valid() const {
    return std::isfinite(z0) && std::isfinite(t) && std::isfinite(t_ssp) && std::isfinite(z_sw_max) &&
           std::isfinite(z_sw_neg) && std::isfinite(u_star_left_y) && z0 > 0.0 && t_ssp > 0.0 && t_ssp <= t &&
           z_sw_max > 0.0 && z_sw_neg <= 0.0;
  }

  void validate() const {
    if (!valid()) throw Error(ErrorCode::InvalidParams, "gait parameters out of range");
  }

  bool operator==(const GaitParams&) const = default;
};

/// Horizontal blend profile [0, 0, 1, 1, 1].
inline BezierCurve horizontal_profile() { return {{0.0, 0.0, 1.0, 1.0, 1.0}}; }

/// Swing height profile [0, zmax, zmax, zmax, zmax, 0, zneg].
inline BezierCurve vertical_profile(double z_sw_max, double z_sw_neg) {
  return {{0.0, z_sw_max, z_sw_max, z_sw_max, z_sw_max, 0.0, z_sw_neg}};
}

inline BezierCurve vertical_profile(const GaitParams& gait) { return vertical_profile(gait.z_sw_max, gait.z_sw_neg); }

/// Value and time derivatives of a scalar trajectory.
struct Sample {
  double value = 0.0;
  double rate = 0.0;
  double accel = 0.0;
};

namespace detail {

inline void check_ssp_time(double t, double t_ssp) {
  if (!(t >= 0.0 && t <= t_ssp * (1.0 + 1e-12))) {
    throw Error(ErrorCode::OutOfRange, "time " + std::to_string(t) + " outside [0, T_SSP]");
  }
}

inline Sample blend(double t, double start, double end, double t_ssp) {
  check_ssp_time(t, t_ssp);
  const BezierCurve bh = horizontal_profile();
  const double s = std::min(t / t_ssp, 1.0);
  const double b = bezier_eval(bh, s);
  const double db = bezier_derivative(bh, s) / t_ssp;
  const double ddb = bezier_second_derivative(bh, s) / (t_ssp * t_ssp);
  return {(1.0 - b) * start + b * end, (end - start) * db, (end - start) * ddb};
}

}  // namespace detail

inline Sample swing_horizontal_sample(double t, double x_sw_plus, double u_des, double t_ssp) {
  return detail::blend(t, x_sw_plus, u_des, t_ssp);
}

inline double swing_horizontal(double t, double x_sw_plus, double u_des, double t_ssp) {
  return swing_horizontal_sample(t, x_sw_plus, u_des, t_ssp).value;
}

inline Sample com_height_sample(double t, double z_plus, double z0, double t_ssp) {
  return detail::blend(t, z_plus, z0, t_ssp);
}

inline double com_height_target(double t, double z_plus, double z0, double t_ssp) {
  return com_height_sample(t, z_plus, z0, t_ssp).value;
}

/// Normalized time in (0.5, 1] where the swing height profile returns to zero.
inline double vertical_crossing(const GaitParams& gait) {
  if (gait.z_sw_neg == 0.0) return 1.0;
  const BezierCurve bv = vertical_profile(gait);
  double lo = 0.5;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bezier_eval(bv, mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Time span over which the swing height profile is laid out so that its
/// zero crossing falls at T_SSP.
inline double vertical_clock(const GaitParams& gait) { return gait.t_ssp / vertical_crossing(gait); }

/// Minimum descent rate used once the profile is exhausted, so a late foot still strikes.
inline constexpr double kMinDescentRate = 0.5;

inline Sample swing_vertical_sample(double t, const GaitParams& gait) {
  if (!(t >= 0.0)) throw Error(ErrorCode::OutOfRange, "negative swing time");
  const BezierCurve bv = vertical_profile(gait);
  const double span = vertical_clock(gait);
  if (t <= span) {
    const double s = t / span;
    return {bezier_eval(bv, s), bezier_derivative(bv, s) / span, bezier_second_derivative(bv, s) / (span * span)};
  }
  const double rate = std::min(bezier_derivative(bv, 1.0) / span, -kMinDescentRate);
  return {gait.z_sw_neg + rate * (t - span), rate, 0.0};
}

inline double swing_vertical(double t, const GaitParams& gait) { return swing_vertical_sample(t, gait).value; }

// ---------------------------------------------------------------------------
// Output targets

enum class Phase { SSP, DSP };

inline const char* to_string(Phase phase) { return phase == Phase::SSP ? "SSP" : "DSP"; }

/// Actual outputs captured at the start of the current phase, expressed
/// relative to the stance foot (z relative to the stance foot's terrain).
struct StepStart {
  Eigen::Vector3d swing = Eigen::Vector3d::Zero();
  double z_com = 1.0;
  /// Landing terrain height relative to the stance foot, for the swing z target.
  double landing_height = 0.0;
};

struct OutputTargets {
  double z_com_des = 0.0;
  double z_com_rate = 0.0;
  double z_com_accel = 0.0;
  Eigen::Vector3d swing_des = Eigen::Vector3d::Zero();
  Eigen::Vector3d swing_rate = Eigen::Vector3d::Zero();
  Eigen::Vector3d swing_accel = Eigen::Vector3d::Zero();
};

/// t is the phase clock. Swing targets hold the snapshot in DSP; in SSP the
/// horizontal clock saturates at T_SSP while the vertical one keeps running.
inline OutputTargets output_targets(double t, Phase phase, const StepStart& start, const Eigen::Vector2d& u_des,
                                    const GaitParams& gait) {
  OutputTargets out;
  if (phase == Phase::DSP) {
    out.z_com_des = start.z_com;
    out.swing_des = start.swing;
    return out;
  }
  const double th = std::clamp(t, 0.0, gait.t_ssp);
  const Sample z = com_height_sample(th, start.z_com, gait.z0, gait.t_ssp);
  const Sample sx = swing_horizontal_sample(th, start.swing.x(), u_des.x(), gait.t_ssp);
  const Sample sy = swing_horizontal_sample(th, start.swing.y(), u_des.y(), gait.t_ssp);
  const Sample ground = detail::blend(th, start.swing.z(), start.landing_height, gait.t_ssp);
  const Sample lift = swing_vertical_sample(std::max(t, 0.0), gait);
  const bool saturated = t >= gait.t_ssp;
  out.z_com_des = z.value;
  out.z_com_rate = saturated ? 0.0 : z.rate;
  out.z_com_accel = saturated ? 0.0 : z.accel;
  out.swing_des = {sx.value, sy.value, ground.value + lift.value};
  if (!saturated) {
    out.swing_rate = {sx.rate, sy.rate, ground.rate + lift.rate};
    out.swing_accel = {sx.accel, sy.accel, ground.accel + lift.accel};
  } else {
    out.swing_rate = {0.0, 0.0, lift.rate};
    out.swing_accel = {0.0, 0.0, lift.accel};
  }
  return out;
}

}  // namespace hlip
