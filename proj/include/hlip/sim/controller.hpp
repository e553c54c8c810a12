#pragma once

// H-LIP stepping controller for the point-mass biped.

#include <algorithm>
#include <array>
#include <optional>
#include <random>
#include <string_view>

#include "hlip/orbit.hpp"
#include "hlip/sim/biped.hpp"
#include "hlip/stepping.hpp"
#include "hlip/vel_approx.hpp"

namespace hlip::sim {

enum class EstimatorMode { Truth, Hlip };

inline const char* to_string(EstimatorMode mode) { return mode == EstimatorMode::Truth ? "truth" : "hlip"; }

inline EstimatorMode parse_estimator(std::string_view name) {
  if (name == "truth") return EstimatorMode::Truth;
  if (name == "hlip") return EstimatorMode::Hlip;
  throw Error(ErrorCode::InvalidKind, "unknown estimator '" + std::string(name) + "'");
}

inline constexpr int kSagittal = 0;
inline constexpr int kCoronal = 1;

struct PlaneStep {
  PlanarState x;      ///< true pre-impact state
  PlanarState x_hat;  ///< what the controller used
  Vector2d delta_x = Vector2d::Zero();
  double u = 0.0;           ///< step size commanded at the pre-impact state
  double u_realized = 0.0;  ///< landed foot offset
  PlanarState x_hlip;
  double u_hlip = 0.0;
  Vector2d error = Vector2d::Zero();
  /// x_{k+1} - A x_k - B u_k, known once the next step lands.
  std::optional<Vector2d> w;
};

struct StepRecord {
  int step_index = 0;
  double time = 0.0;
  Leg stance = Leg::Left;
  ModelParams params;
  Vector2d v_des = Vector2d::Zero();
  std::array<PlaneStep, 2> planes;
  double t_ssp_actual = 0.0;
  double t_dsp_actual = 0.0;
  bool clamped = false;
  bool push_active = false;

  PlaneStep& sagittal() { return planes[kSagittal]; }
  PlaneStep& coronal() { return planes[kCoronal]; }
  const PlaneStep& sagittal() const { return planes[kSagittal]; }
  const PlaneStep& coronal() const { return planes[kCoronal]; }
};

struct ControlOutput {
  OutputTargets targets;
  Vector2d u_des = Vector2d::Zero();
  std::array<PlanarState, 2> x_hat_now;    ///< current state as the controller sees it
  std::array<PlanarState, 2> x_hat_minus;  ///< predicted pre-impact state per plane
  std::array<Vector2d, 2> error{Vector2d::Zero(), Vector2d::Zero()};
  bool clamped = false;
};

class SteppingController {
 public:
  SteppingController(const SimConfig& config, CompositionKind kind, EstimatorMode estimator,
                     std::optional<double> u_star_left_x = std::nullopt)
      : config_(config), kind_(kind), estimator_(estimator), u_star_left_x_(u_star_left_x), rng_(config.rng_seed) {
    config_.validate();
    rebuild();
  }

  /// H-LIP starts where the robot would be at the end of its current SSP.
  void reset(const RobotState& s, const Vector2d& v_des) {
    const double remaining = std::max(config_.gait.t_ssp - s.phase_clock, 0.0);
    orbits_ = compose(v_des);
    for (int axis = 0; axis < 2; ++axis) {
      x_hlip_[axis] = ssp_flow(s.plane(axis), remaining, params_);
      u_hlip_[axis] = stabilize(x_hlip_[axis], orbit(axis), s.stance_leg, gain_);
      held_v_[axis] = x_hlip_[axis].v;
    }
    snapshot(s);
    if (s.phase == Phase::SSP) start_estimator(s);
    last_.u_des = {u_hlip_[0], u_hlip_[1]};
  }

  const SimConfig& config() const { return config_; }
  const ModelParams& params() const { return params_; }
  const S2SMatrices& matrices() const { return mats_; }
  const SteppingGain& gain() const { return gain_; }
  CompositionKind kind() const { return kind_; }
  EstimatorMode estimator() const { return estimator_; }
  const PlanarState& x_hlip(int axis) const { return x_hlip_[axis]; }
  double u_hlip(int axis) const { return u_hlip_[axis]; }
  const PlaneOrbit& orbit(int axis) const { return axis == kSagittal ? orbits_.sagittal : orbits_.coronal; }
  const ControlOutput& last_output() const { return last_; }

  /// Queues gait parameters to take over at the next impact.
  void request_gait(const GaitParams& gait) {
    gait.validate();
    pending_gait_ = gait;
  }

  bool has_pending_gait() const { return pending_gait_.has_value(); }

  ControlOutput tick(const RobotState& s) {
    ControlOutput out = last_;
    if (s.phase == Phase::SSP) {
      for (int axis = 0; axis < 2; ++axis) predict(s, axis, out.x_hat_now[axis], out.x_hat_minus[axis]);
      out.clamped = false;
      for (int axis = 0; axis < 2; ++axis) {
        const double raw = hlip_stepping(out.x_hat_minus[axis], x_hlip_[axis], u_hlip_[axis], gain_);
        out.u_des(axis) = clamp_step(raw, out.clamped);
        out.error[axis] = out.x_hat_minus[axis].vec() - x_hlip_[axis].vec();
      }
      StepStart start = start_;
      const double landing_x = s.stance_foot.x() + out.u_des.x();
      start.landing_height = config_.terrain.height_at(landing_x) - s.stance_foot.z();
      out.targets = output_targets(s.phase_clock, Phase::SSP, start, out.u_des, config_.gait);
    } else {
      out.targets = output_targets(s.phase_clock, Phase::DSP, start_, out.u_des, config_.gait);
    }
    last_ = out;
    return out;
  }

  /// Builds the record for the step that just landed and advances the H-LIP
  /// references. Any queued gait change is applied after the record is formed.
  StepRecord on_impact(const RobotState& pre, const RobotState& post, const Vector2d& v_des) {
    StepRecord rec;
    rec.step_index = pre.step_index;
    rec.time = pre.time;
    rec.stance = pre.stance_leg;
    rec.params = params_;
    rec.v_des = v_des;
    rec.t_ssp_actual = pre.phase_clock;
    for (int axis = 0; axis < 2; ++axis) {
      PlaneStep& ps = rec.planes[axis];
      ps.x = pre.plane(axis);
      ps.x_hat = measured_preimpact(pre, axis);
      ps.delta_x = ps.x_hat.vec() - ps.x.vec();
      ps.x_hlip = x_hlip_[axis];
      ps.u_hlip = u_hlip_[axis];
      ps.u = clamp_step(hlip_stepping(ps.x_hat, x_hlip_[axis], u_hlip_[axis], gain_), rec.clamped);
      ps.u_realized = post.stance_foot(axis) - pre.stance_foot(axis);
      ps.error = ps.x.vec() - x_hlip_[axis].vec();
    }

    std::array<PlanarState, 2> next;
    for (int axis = 0; axis < 2; ++axis) next[axis] = s2s_step(x_hlip_[axis], u_hlip_[axis], mats_);
    if (pending_gait_) {
      config_.gait = *pending_gait_;
      pending_gait_.reset();
      rebuild();
    }
    orbits_ = compose(v_des);
    for (int axis = 0; axis < 2; ++axis) {
      x_hlip_[axis] = next[axis];
      u_hlip_[axis] = stabilize(x_hlip_[axis], orbit(axis), post.stance_leg, gain_);
    }
    snapshot(post);
    if (post.phase == Phase::SSP) start_estimator(post);
    return rec;
  }

  void on_liftoff(const RobotState& s) {
    snapshot(s);
    start_estimator(s);
  }

 private:
  void rebuild() {
    params_ = config_.params();
    params_.validate();
    mats_ = s2s_matrices(params_);
    gain_ = deadbeat_gain(params_);
  }

  OrbitComposition compose(const Vector2d& v_des) const {
    return compose_3d(v_des.x(), v_des.y(), kind_, config_.gait.u_star_left_y, params_, u_star_left_x_);
  }

  double clamp_step(double u, bool& clamped) const {
    const double c = std::clamp(u, config_.u_min, config_.u_max);
    if (c != u) clamped = true;
    return c;
  }

  void snapshot(const RobotState& s) {
    start_.swing = s.swing_foot - s.stance_foot;
    start_.z_com = s.com_pos.z() - s.stance_foot.z();
    start_.landing_height = 0.0;
  }

  double measure(const RobotState& s, int axis) {
    const double p = s.plane(axis).p;
    if (config_.sensor_noise_std <= 0.0) return p;
    return p + std::normal_distribution<double>(0.0, config_.sensor_noise_std)(rng_);
  }

  void start_estimator(const RobotState& s) {
    if (estimator_ != EstimatorMode::Hlip) return;
    for (int axis = 0; axis < 2; ++axis) p0_[axis] = measure(s, axis);
  }

  // Velocity estimate with the current measured position, held below t_min.
  PlanarState estimate_now(const RobotState& s, int axis) {
    const double pt = measure(s, axis);
    if (s.phase == Phase::SSP && s.phase_clock >= kVelocityMinTime) {
      held_v_[axis] = velocity_from_positions(p0_[axis], pt, s.phase_clock, params_).vt;
    }
    return {pt, held_v_[axis]};
  }

  void predict(const RobotState& s, int axis, PlanarState& now, PlanarState& minus) {
    const double remaining = std::max(config_.gait.t_ssp - s.phase_clock, 0.0);
    now = estimator_ == EstimatorMode::Truth ? s.plane(axis) : estimate_now(s, axis);
    minus = {ssp_flow(now, remaining, params_).p, predict_preimpact(now.p, now.v, s.phase_clock, params_)};
  }

  PlanarState measured_preimpact(const RobotState& pre, int axis) {
    if (estimator_ == EstimatorMode::Truth) return pre.plane(axis);
    return estimate_now(pre, axis);
  }

  SimConfig config_;
  CompositionKind kind_;
  EstimatorMode estimator_;
  std::optional<double> u_star_left_x_;
  std::mt19937_64 rng_;
  ModelParams params_;
  S2SMatrices mats_;
  SteppingGain gain_;
  OrbitComposition orbits_;
  std::array<PlanarState, 2> x_hlip_;
  std::array<double, 2> u_hlip_{0.0, 0.0};
  std::array<double, 2> p0_{0.0, 0.0};
  std::array<double, 2> held_v_{0.0, 0.0};
  StepStart start_;
  std::optional<GaitParams> pending_gait_;
  ControlOutput last_;
};

}  // namespace hlip::sim
