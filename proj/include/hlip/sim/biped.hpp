#pragma once

// Point-mass biped with telescoping massless legs: the plant the stepping
// controller is exercised on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hlip/error.hpp"
#include "hlip/gait.hpp"
#include "hlip/hlip_core.hpp"
#include "hlip/orbit.hpp"

namespace hlip::sim {

using Eigen::Vector2d;
using Eigen::Vector3d;

struct Tracking {
  double omega_n = 40.0;
  double zeta = 1.0;

  bool operator==(const Tracking&) const = default;
};

struct TerrainPatch {
  double x_min = 0.0;
  double x_max = 0.0;
  double height = 0.0;

  bool operator==(const TerrainPatch&) const = default;
};

/// Piecewise-constant ground height along x; later patches win, 0 elsewhere.
struct Terrain {
  std::vector<TerrainPatch> patches;

  double height_at(double x) const {
    double h = 0.0;
    for (const TerrainPatch& p : patches)
      if (x >= p.x_min && x < p.x_max) h = p.height;
    return h;
  }

  bool operator==(const Terrain&) const = default;
};

struct PushEvent {
  double start_time = 0.0;
  double duration = 0.1;
  Vector2d force = Vector2d::Zero();

  /// Length of [t, t + h) covered by the push.
  double overlap(double t, double h) const {
    const double lo = std::max(t, start_time);
    const double hi = std::min(t + h, start_time + duration);
    return std::max(0.0, hi - lo);
  }

  bool active_at(double t) const { return t >= start_time && t < start_time + duration; }

  bool operator==(const PushEvent&) const = default;
};

struct SimConfig {
  double mass = 30.0;
  GaitParams gait;
  double g = kDefaultGravity;
  double dt = 0.001;
  Tracking height_tracking{40.0, 1.0};
  Tracking swing_tracking{60.0, 1.0};
  double impact_velocity_loss = 0.02;
  double u_min = -0.6;
  double u_max = 0.6;
  Terrain terrain;
  std::uint64_t rng_seed = 0;
  double sensor_noise_std = 0.0;
  double leg_reach = 0.6;
  /// Vertical COM and swing foot follow their targets exactly.
  bool ideal_tracking = false;

  ModelParams params() const { return gait.model(g); }
  Vector2d step_limits() const { return {u_min, u_max}; }

  void validate() const {
    gait.validate();
    const bool ok = mass > 0.0 && dt > 0.0 && g >= 0.0 && impact_velocity_loss >= 0.0 &&
                    impact_velocity_loss < 1.0 && u_min < u_max && sensor_noise_std >= 0.0 && leg_reach > 0.0 &&
                    height_tracking.omega_n > 0.0 && swing_tracking.omega_n > 0.0;
    if (!ok) throw Error(ErrorCode::InvalidParams, "simulator configuration out of range");
  }

  bool operator==(const SimConfig&) const = default;
};

struct RobotState {
  Vector3d com_pos{0.0, 0.0, 1.0};
  Vector3d com_vel = Vector3d::Zero();
  Vector3d stance_foot = Vector3d::Zero();
  Vector3d swing_foot = Vector3d::Zero();
  Vector3d swing_foot_vel = Vector3d::Zero();
  Phase phase = Phase::SSP;
  double phase_clock = 0.0;
  Leg stance_leg = Leg::Left;
  int step_index = 0;
  double time = 0.0;
  bool fell = false;

  /// Horizontal COM state in one plane relative to the stance foot (0 = x, 1 = y).
  PlanarState plane(int axis) const { return {com_pos(axis) - stance_foot(axis), com_vel(axis)}; }

  Vector2d relative_com() const { return (com_pos - stance_foot).head<2>(); }

  bool operator==(const RobotState&) const = default;
};

enum class SimEvent { None, Impact, Liftoff, FellOver };

inline const char* to_string(SimEvent event) {
  switch (event) {
    case SimEvent::None: return "none";
    case SimEvent::Impact: return "impact";
    case SimEvent::Liftoff: return "liftoff";
    case SimEvent::FellOver: return "fell-over";
  }
  return "?";
}

struct StepOutcome {
  RobotState state;
  SimEvent event = SimEvent::None;
  /// State at the impact instant before the impact map; set for impacts.
  RobotState pre_impact;
  double applied_dt = 0.0;
};

/// Standing start: single support on the left foot, right foot beside it.
inline RobotState initial_state(const SimConfig& config, double half_width = 0.1) {
  RobotState s;
  const double ground = config.terrain.height_at(0.0);
  s.stance_foot = {0.0, half_width, ground};
  s.swing_foot = {0.0, -half_width, ground};
  s.com_pos = {0.0, 0.0, ground + config.gait.z0};
  return s;
}

inline double mechanical_energy(const RobotState& s, const SimConfig& config) {
  return 0.5 * config.mass * s.com_vel.squaredNorm() + config.mass * config.g * s.com_pos.z();
}

/// Falling-over test on a state (COM too low or too far from the stance foot).
inline bool fell_over(const RobotState& s, const SimConfig& config) {
  const double z_rel = s.com_pos.z() - s.stance_foot.z();
  return !(z_rel >= 0.3 * config.gait.z0) || !(s.relative_com().norm() <= 1.5 * config.leg_reach);
}

namespace detail {

// COM pos, COM vel, swing pos, swing vel.
using Dyn = Eigen::Matrix<double, 12, 1>;

inline Dyn pack(const RobotState& s) {
  Dyn x;
  x << s.com_pos, s.com_vel, s.swing_foot, s.swing_foot_vel;
  return x;
}

inline void unpack(const Dyn& x, RobotState& s) {
  s.com_pos = x.segment<3>(0);
  s.com_vel = x.segment<3>(3);
  s.swing_foot = x.segment<3>(6);
  s.swing_foot_vel = x.segment<3>(9);
}

// Quadratic extrapolation of the targets over one tick.
struct Reference {
  double z = 0.0, dz = 0.0, ddz = 0.0;
  Vector3d sw = Vector3d::Zero(), dsw = Vector3d::Zero(), ddsw = Vector3d::Zero();

  double z_at(double tau) const { return z + dz * tau + 0.5 * ddz * tau * tau; }
  double dz_at(double tau) const { return dz + ddz * tau; }
  Vector3d sw_at(double tau) const { return sw + dsw * tau + 0.5 * ddsw * tau * tau; }
  Vector3d dsw_at(double tau) const { return dsw + ddsw * tau; }
};

inline Reference world_reference(const RobotState& s, const OutputTargets& t) {
  Reference r;
  r.z = s.stance_foot.z() + t.z_com_des;
  r.dz = t.z_com_rate;
  r.ddz = t.z_com_accel;
  r.sw = s.stance_foot + t.swing_des;
  r.dsw = t.swing_rate;
  r.ddsw = t.swing_accel;
  return r;
}

inline double track(double x, double dx, double ref, double dref, double ddref, const Tracking& k) {
  return ddref + 2.0 * k.zeta * k.omega_n * (dref - dx) + k.omega_n * k.omega_n * (ref - x);
}

struct Context {
  const SimConfig* config = nullptr;
  Phase phase = Phase::SSP;
  Vector3d stance = Vector3d::Zero();
  Reference ref;
  Vector2d accel_push = Vector2d::Zero();
};

inline Dyn derivative(const Dyn& x, double tau, const Context& c) {
  const SimConfig& cfg = *c.config;
  Dyn d = Dyn::Zero();
  d.segment<3>(0) = x.segment<3>(3);

  double z = x(2);
  double ddz;
  if (cfg.ideal_tracking) {
    z = c.ref.z_at(tau);
    ddz = c.ref.ddz;
  } else {
    ddz = track(x(2), x(5), c.ref.z_at(tau), c.ref.dz_at(tau), c.ref.ddz, cfg.height_tracking);
  }
  d(5) = ddz;
  if (c.phase == Phase::SSP) {
    const double z_rel = z - c.stance.z();
    const double gain = (cfg.g + ddz) / z_rel;
    d(3) = gain * (x(0) - c.stance.x()) + c.accel_push.x();
    d(4) = gain * (x(1) - c.stance.y()) + c.accel_push.y();
    d.segment<3>(6) = x.segment<3>(9);
    if (!cfg.ideal_tracking) {
      const Vector3d ref = c.ref.sw_at(tau);
      const Vector3d dref = c.ref.dsw_at(tau);
      for (int i = 0; i < 3; ++i)
        d(9 + i) = track(x(6 + i), x(9 + i), ref(i), dref(i), c.ref.ddsw(i), cfg.swing_tracking);
    } else {
      d.segment<3>(9) = c.ref.ddsw;
    }
  } else {
    d(3) = c.accel_push.x();
    d(4) = c.accel_push.y();
  }
  return d;
}

inline Dyn rk4(const Dyn& x, double h, const Context& c) {
  const Dyn k1 = derivative(x, 0.0, c);
  const Dyn k2 = derivative(x + 0.5 * h * k1, 0.5 * h, c);
  const Dyn k3 = derivative(x + 0.5 * h * k2, 0.5 * h, c);
  const Dyn k4 = derivative(x + h * k3, h, c);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline RobotState integrate(const RobotState& s, double h, const Context& c) {
  RobotState out = s;
  unpack(rk4(pack(s), h, c), out);
  if (c.config->ideal_tracking) {
    out.com_pos.z() = c.ref.z_at(h);
    out.com_vel.z() = c.ref.dz_at(h);
    if (c.phase == Phase::SSP) {
      out.swing_foot = c.ref.sw_at(h);
      out.swing_foot_vel = c.ref.dsw_at(h);
    }
  }
  if (c.phase == Phase::DSP) out.swing_foot_vel.setZero();
  out.time = s.time + h;
  out.phase_clock = s.phase_clock + h;
  return out;
}

inline double ground_gap(const RobotState& s, const Terrain& terrain) {
  return s.swing_foot.z() - terrain.height_at(s.swing_foot.x());
}

}  // namespace detail

/// Swing strike detection between consecutive SSP states. Returns the
/// fraction of the interval at which the foot reaches the ground, or a
/// negative value when there is no strike.
inline double detect_impact(const RobotState& prev, const RobotState& next, const SimConfig& config) {
  if (prev.phase != Phase::SSP || next.phase_clock < 0.25 * config.gait.t_ssp) return -1.0;
  const double g0 = detail::ground_gap(prev, config.terrain);
  const double g1 = detail::ground_gap(next, config.terrain);
  if (g1 > 0.0) return -1.0;
  if (g0 <= 0.0) return 0.0;
  return g0 / (g0 - g1);
}

/// Plastic strike: feet swap roles, the new swing foot comes to rest and the
/// horizontal COM velocity loses a fixed fraction.
inline RobotState apply_impact(const RobotState& s, const SimConfig& config) {
  RobotState out = s;
  Vector3d landing = s.swing_foot;
  landing.z() = config.terrain.height_at(landing.x());
  out.swing_foot = s.stance_foot;
  out.stance_foot = landing;
  out.swing_foot_vel.setZero();
  out.com_vel.head<2>() *= (1.0 - config.impact_velocity_loss);
  out.stance_leg = other(s.stance_leg);
  out.step_index = s.step_index + 1;
  out.phase_clock = 0.0;
  out.phase = config.gait.t_dsp() > 0.0 ? Phase::DSP : Phase::SSP;
  return out;
}

inline RobotState apply_liftoff(const RobotState& s) {
  RobotState out = s;
  out.phase = Phase::SSP;
  out.phase_clock = 0.0;
  out.swing_foot_vel.setZero();
  return out;
}

/// Advances by config.dt, or less when a phase event falls inside the tick;
/// the returned state is then the post-event state at the event time.
inline StepOutcome sim_step(const RobotState& state, const SimConfig& config, const OutputTargets& targets,
                            std::span<const PushEvent> pushes) {
  StepOutcome out;
  if (state.fell) {
    out.state = state;
    out.event = SimEvent::FellOver;
    return out;
  }
  double h = config.dt;
  const double t_dsp = config.gait.t_dsp();
  if (state.phase == Phase::DSP) h = std::min(h, std::max(t_dsp - state.phase_clock, 0.0));

  detail::Context ctx;
  ctx.config = &config;
  ctx.phase = state.phase;
  ctx.stance = state.stance_foot;
  ctx.ref = detail::world_reference(state, targets);
  const auto set_push = [&](double span) {
    ctx.accel_push.setZero();
    if (span <= 0.0) return;
    for (const PushEvent& p : pushes) ctx.accel_push += p.force * (p.overlap(state.time, span) / span) / config.mass;
  };
  set_push(h);

  RobotState next = h > 0.0 ? detail::integrate(state, h, ctx) : state;
  out.applied_dt = h;

  if (state.phase == Phase::DSP) {
    if (next.phase_clock >= t_dsp - 1e-12) {
      out.state = apply_liftoff(next);
      out.event = SimEvent::Liftoff;
    } else {
      out.state = next;
    }
  } else {
    const double f = detect_impact(state, next, config);
    if (f >= 0.0) {
      const double hf = f * h;
      set_push(hf);
      RobotState at = hf > 0.0 ? detail::integrate(state, hf, ctx) : state;
      at.swing_foot.z() = config.terrain.height_at(at.swing_foot.x());
      out.pre_impact = at;
      out.state = apply_impact(at, config);
      out.event = SimEvent::Impact;
      out.applied_dt = hf;
    } else {
      out.state = next;
    }
  }
  if (fell_over(out.state, config)) {
    out.state.fell = true;
    out.event = SimEvent::FellOver;
  }
  return out;
}

}  // namespace hlip::sim
