#pragma once

// Closed-loop episodes: scenario description, tick-by-tick walker and the
// per-step series used for disturbance analysis.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "hlip/polytope.hpp"
#include "hlip/sim/controller.hpp"

namespace hlip::sim {

struct VelocityPoint {
  double t = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  bool operator==(const VelocityPoint&) const = default;
};

/// Breakpoints interpolated linearly, held constant outside their span.
struct VelocityProfile {
  std::vector<VelocityPoint> points;

  Vector2d at(double t) const {
    if (points.empty()) return Vector2d::Zero();
    if (t <= points.front().t) return {points.front().vx, points.front().vy};
    for (std::size_t i = 1; i < points.size(); ++i) {
      const VelocityPoint& a = points[i - 1];
      const VelocityPoint& b = points[i];
      if (t <= b.t) {
        const double span = b.t - a.t;
        const double s = span > 0.0 ? (t - a.t) / span : 1.0;
        return {a.vx + s * (b.vx - a.vx), a.vy + s * (b.vy - a.vy)};
      }
    }
    return {points.back().vx, points.back().vy};
  }

  double last_breakpoint() const { return points.empty() ? 0.0 : points.back().t; }

  static VelocityProfile constant(double vx, double vy = 0.0) { return {{{0.0, vx, vy}}}; }

  static VelocityProfile ramp(double vx, double t_ramp, double vy = 0.0) {
    return {{{0.0, 0.0, 0.0}, {t_ramp, vx, vy}}};
  }

  bool operator==(const VelocityProfile&) const = default;
};

struct Scenario {
  SimConfig sim;
  CompositionKind composition = CompositionKind::SP1_CP2;
  std::optional<double> u_star_left_x;
  VelocityProfile velocity;
  std::vector<PushEvent> pushes;
  double duration = 10.0;
  EstimatorMode estimator = EstimatorMode::Truth;

  void validate() const {
    sim.validate();
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw Error(ErrorCode::InvalidParams, "negative duration");
    for (const PushEvent& p : pushes)
      if (!(p.duration > 0.0)) throw Error(ErrorCode::InvalidParams, "push duration must be positive");
    for (std::size_t i = 1; i < velocity.points.size(); ++i)
      if (velocity.points[i].t < velocity.points[i - 1].t)
        throw Error(ErrorCode::InvalidParams, "velocity breakpoints must be time ordered");
  }
};

struct TrajectoryRow {
  double time = 0.0;
  Phase phase = Phase::SSP;
  Leg stance = Leg::Left;
  Vector3d com_pos = Vector3d::Zero();
  Vector3d com_vel = Vector3d::Zero();
  Vector3d swing = Vector3d::Zero();
  Vector2d u_des = Vector2d::Zero();
  std::array<PlanarState, 2> hlip;
  std::array<Vector2d, 2> error{Vector2d::Zero(), Vector2d::Zero()};
  bool clamped = false;
  bool push_active = false;
  bool impact = false;
  bool fell = false;
};

struct TickResult {
  SimEvent event = SimEvent::None;
  ControlOutput control;
  /// Set when a step landed; that record's residual is still open.
  std::optional<StepRecord> landed;
};

class Walker {
 public:
  Walker(const SimConfig& config, CompositionKind kind, EstimatorMode estimator, std::vector<PushEvent> pushes = {},
         std::optional<double> u_star_left_x = std::nullopt, const Vector2d& v_des0 = Vector2d::Zero())
      : controller_(config, kind, estimator, u_star_left_x), pushes_(std::move(pushes)), v_des_(v_des0) {
    state_ = initial_state(config);
    controller_.reset(state_, v_des_);
  }

  const RobotState& state() const { return state_; }
  const SteppingController& controller() const { return controller_; }
  const SimConfig& config() const { return controller_.config(); }
  const std::vector<StepRecord>& records() const { return records_; }
  const Vector2d& v_des() const { return v_des_; }

  void set_velocity(const Vector2d& v) { v_des_ = v; }
  void request_gait(const GaitParams& gait) { controller_.request_gait(gait); }
  void add_push(const PushEvent& push) { pushes_.push_back(push); }

  bool push_active() const {
    return std::any_of(pushes_.begin(), pushes_.end(), [&](const PushEvent& p) { return p.active_at(state_.time); });
  }

  TickResult tick() {
    TickResult out;
    out.control = controller_.tick(state_);
    const StepOutcome step = sim_step(state_, controller_.config(), out.control.targets, pushes_);
    out.event = step.event;
    switch (step.event) {
      case SimEvent::Impact: {
        StepRecord rec = controller_.on_impact(step.pre_impact, step.state, v_des_);
        rec.t_dsp_actual = dsp_duration_;
        close_previous(rec);
        records_.push_back(rec);
        out.landed = rec;
        break;
      }
      case SimEvent::Liftoff:
        dsp_duration_ = state_.phase_clock + step.applied_dt;
        controller_.on_liftoff(step.state);
        break;
      case SimEvent::FellOver:
      case SimEvent::None: break;
    }
    state_ = step.state;
    return out;
  }

  TrajectoryRow row(const TickResult& tick) const {
    TrajectoryRow r;
    r.time = state_.time;
    r.phase = state_.phase;
    r.stance = state_.stance_leg;
    r.com_pos = state_.com_pos;
    r.com_vel = state_.com_vel;
    r.swing = state_.swing_foot;
    r.u_des = tick.control.u_des;
    for (int axis = 0; axis < 2; ++axis) {
      r.hlip[axis] = controller_.x_hlip(axis);
      r.error[axis] = tick.control.error[axis];
    }
    r.clamped = tick.control.clamped;
    r.push_active = push_active();
    r.impact = tick.event == SimEvent::Impact;
    r.fell = state_.fell;
    return r;
  }

 private:
  void close_previous(const StepRecord& next) {
    if (records_.empty()) return;
    StepRecord& prev = records_.back();
    if (prev.step_index + 1 != next.step_index) return;
    const S2SMatrices mats = s2s_matrices(prev.params);
    for (int axis = 0; axis < 2; ++axis) {
      PlaneStep& ps = prev.planes[axis];
      ps.w = next.planes[axis].x.vec() - mats.a * ps.x.vec() - mats.b * ps.u;
    }
    prev.push_active = std::any_of(pushes_.begin(), pushes_.end(), [&](const PushEvent& p) {
      return p.overlap(prev.time, next.time - prev.time) > 0.0;
    });
  }

  SteppingController controller_;
  std::vector<PushEvent> pushes_;
  Vector2d v_des_;
  RobotState state_;
  std::vector<StepRecord> records_;
  double dsp_duration_ = 0.0;
};

struct RunOptions {
  bool keep_trajectory = true;
};

struct RunResult {
  std::vector<TrajectoryRow> trajectory;
  std::vector<StepRecord> records;
  bool fell = false;
  double end_time = 0.0;
};

inline RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {}) {
  scenario.validate();
  Walker walker(scenario.sim, scenario.composition, scenario.estimator, scenario.pushes, scenario.u_star_left_x,
                scenario.velocity.at(0.0));
  RunResult out;
  while (walker.state().time < scenario.duration - 1e-12 && !walker.state().fell) {
    walker.set_velocity(scenario.velocity.at(walker.state().time));
    const TickResult tick = walker.tick();
    if (options.keep_trajectory) out.trajectory.push_back(walker.row(tick));
  }
  out.records = walker.records();
  out.fell = walker.state().fell;
  out.end_time = walker.state().time;
  return out;
}

/// Triples (x_k, u_k, x_{k+1}) from consecutive records of one plane.
inline std::vector<StepTriple> extract_preimpact_series(const std::vector<StepRecord>& records, int plane) {
  if (plane != kSagittal && plane != kCoronal) throw Error(ErrorCode::InvalidParams, "plane must be 0 or 1");
  if (records.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two step records");
  std::vector<StepTriple> out;
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    if (records[i].step_index + 1 != records[i + 1].step_index) continue;
    const PlaneStep& a = records[i].planes[plane];
    const PlaneStep& b = records[i + 1].planes[plane];
    out.push_back({a.x, a.u, b.x, a.delta_x});
  }
  return out;
}

struct PlaneSummary {
  double mean_velocity = 0.0;  ///< mean pre-impact velocity over the steady window
  double max_error = 0.0;      ///< max |e| over all steps
  std::size_t steady_steps = 0;
};

struct RunSummary {
  std::array<PlaneSummary, 2> planes;
  bool fell = false;
  std::size_t steps = 0;
  std::size_t clamped_steps = 0;
  double end_time = 0.0;
};

/// Steady window: steps landing at least settle seconds after the last velocity breakpoint.
inline RunSummary summarize(const RunResult& run, const Scenario& scenario, double settle = 2.0) {
  RunSummary s;
  s.fell = run.fell;
  s.steps = run.records.size();
  s.end_time = run.end_time;
  const double from = scenario.velocity.last_breakpoint() + settle;
  for (const StepRecord& r : run.records) {
    if (r.clamped) ++s.clamped_steps;
    for (int axis = 0; axis < 2; ++axis) {
      PlaneSummary& p = s.planes[axis];
      p.max_error = std::max(p.max_error, r.planes[axis].error.norm());
      if (r.time >= from) {
        p.mean_velocity += r.planes[axis].x.v;
        ++p.steady_steps;
      }
    }
  }
  for (PlaneSummary& p : s.planes)
    if (p.steady_steps > 0) p.mean_velocity /= static_cast<double>(p.steady_steps);
  return s;
}

}  // namespace hlip::sim
