#pragma once

// Interactive simulation session: command handling, telemetry frames and the
// rolling invariant-set estimate. Transport lives elsewhere.

#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hlip/io/json_io.hpp"
#include "hlip/sim/analysis.hpp"

namespace hlip::service {

using nlohmann::json;

using sim::Vector2d;
using sim::Vector3d;
struct ParamRange {
  const char* name;
  double lo;
  double hi;
};

/// Live-tunable gait parameters. Step width is signed: the right foot lands to the right of the left one.
inline constexpr ParamRange kParamRanges[] = {
    {"T", 0.3, 0.5},
    {"z0", 0.5, 1.0},
    {"z_sw_max", 0.04, 0.25},
    {"u_star_L_y", -0.45, -0.08},
};

inline const ParamRange* find_param(const std::string& name) {
  for (const ParamRange& r : kParamRanges)
    if (name == r.name) return &r;
  return nullptr;
}

inline constexpr double kMaxPushForce = 2000.0;
inline constexpr double kMaxPushDuration = 2.0;
inline constexpr double kMaxCommandSpeed = 3.0;

struct SetVelocity {
  double vx = 0.0;
  double vy = 0.0;
};
struct SetParam {
  std::string name;
  double value = 0.0;
};
struct Push {
  double fx = 0.0;
  double fy = 0.0;
  double duration = 0.1;
};
struct Reset {};
struct Pause {};
struct Resume {};

using Command = std::variant<SetVelocity, SetParam, Push, Reset, Pause, Resume>;

inline const char* command_name(const Command& c) {
  static constexpr const char* names[] = {"set_velocity", "set_param", "push", "reset", "pause", "resume"};
  return names[c.index()];
}

namespace detail {

[[noreturn]] inline void violation(const std::string& what) { throw Error(ErrorCode::Parse, what); }

inline double field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) violation(std::string("missing numeric field '") + key + "'");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) violation(std::string("non-finite '") + key + "'");
  return v;
}

inline void only(const json& j, std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = it.key() == "type";
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) violation("unexpected field '" + it.key() + "'");
  }
}

}  // namespace detail

/// Protocol-level decoding. Malformed input throws a parse error; value
/// ranges are checked later by the session.
inline Command parse_command(const json& j) {
  using namespace detail;
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) violation("command needs a string 'type'");
  const std::string type = j.at("type").get<std::string>();
  if (type == "set_velocity") {
    only(j, {"vx", "vy", "heading"});
    return SetVelocity{field(j, "vx"), field(j, "vy")};
  }
  if (type == "set_param") {
    only(j, {"name", "value"});
    if (!j.contains("name") || !j.at("name").is_string()) violation("set_param needs a string 'name'");
    return SetParam{j.at("name").get<std::string>(), field(j, "value")};
  }
  if (type == "push") {
    only(j, {"fx", "fy", "duration"});
    return Push{field(j, "fx"), field(j, "fy"), field(j, "duration")};
  }
  if (type == "reset" || type == "pause" || type == "resume") {
    only(j, {});
    if (type == "reset") return Reset{};
    if (type == "pause") return Pause{};
    return Resume{};
  }
  violation("unknown command type '" + type + "'");
}

inline Command parse_command_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return parse_command(j);
}

struct CommandResult {
  bool ok = true;
  std::string message;

  json to_json(const Command& c) const {
    if (ok) return {{"type", "ack"}, {"command", command_name(c)}};
    return {{"type", "error"}, {"command", command_name(c)}, {"message", message}};
  }
};

struct SessionConfig {
  sim::Scenario scenario;
  double velocity_time_constant = 0.5;
  std::size_t footprint_capacity = 32;
  std::size_t invariant_window = 50;
  std::size_t invariant_refresh = 10;
};

struct Footprint {
  Vector2d position = Vector2d::Zero();
  Leg leg = Leg::Left;
};

class SimSession {
 public:
  explicit SimSession(SessionConfig config) : config_(std::move(config)) { restart(); }

  CommandResult apply(const Command& command) {
    return std::visit([&](const auto& c) { return handle(c); }, command);
  }

  /// One simulator tick; does nothing while paused or after a fall.
  void tick() {
    if (paused_ || walker_->state().fell) return;
    const double dt = walker_->config().dt;
    const double alpha = 1.0 - std::exp(-dt / config_.velocity_time_constant);
    v_filtered_ += alpha * (v_command_ - v_filtered_);
    walker_->set_velocity(v_filtered_);
    const sim::TickResult t = walker_->tick();
    last_control_ = t.control;
    flags_.clamp = flags_.clamp || t.control.clamped;
    if (t.event == sim::SimEvent::Impact && t.landed) on_step(*t.landed);
  }

  /// Runs ticks until simulated time advances by span seconds.
  void advance(double span) {
    const double target = walker_->state().time + span;
    while (!paused_ && !walker_->state().fell && walker_->state().time < target - 1e-12) tick();
  }

  double time() const { return walker_->state().time; }
  bool paused() const { return paused_; }
  bool fell() const { return walker_->state().fell; }
  const sim::Walker& walker() const { return *walker_; }
  const GaitParams& commanded_gait() const { return gait_; }
  const Vector2d& velocity_command() const { return v_command_; }
  const Vector2d& velocity_filtered() const { return v_filtered_; }
  const std::optional<sim::InvariantReport>& invariant(int plane) const { return invariant_[plane]; }
  std::size_t frames_emitted() const { return frame_seq_; }

  /// Telemetry frame; consumes the one-shot event flags.
  json telemetry() {
    const sim::RobotState& s = walker_->state();
    const sim::SteppingController& ctrl = walker_->controller();
    json planes;
    for (int axis = 0; axis < 2; ++axis) {
      const char* key = axis == sim::kSagittal ? "x" : "y";
      planes[key] = {{"p_r", s.plane(axis).p},
                     {"v_tilde", last_control_.x_hat_now[axis].v},
                     {"v_r", s.plane(axis).v},
                     {"hlip_p", ctrl.x_hlip(axis).p},
                     {"hlip_v", ctrl.x_hlip(axis).v},
                     {"e", io::detail::pair(last_control_.error[axis])},
                     {"u_des", last_control_.u_des(axis)}};
      if (last_step_) planes[key]["e_step"] = io::detail::pair(last_step_->planes[axis].error);
      planes[key]["e_in_set"] = in_set_[axis];
    }
    json footprints = json::array();
    for (const Footprint& f : footprints_)
      footprints.push_back({{"x", f.position.x()}, {"y", f.position.y()}, {"leg", to_string(f.leg)}});
    json sets = nullptr;
    if (invariant_[0] && invariant_[1]) {
      sets = {{"x", io::polytope_to_json(invariant_[0]->e)},
              {"y", io::polytope_to_json(invariant_[1]->e)},
              {"w_x", io::polytope_to_json(invariant_[0]->w)},
              {"w_y", io::polytope_to_json(invariant_[1]->w)},
              {"step_index", invariant_step_}};
    }
    json frame = {{"type", "telemetry"},
                  {"seq", frame_seq_++},
                  {"time", s.time},
                  {"phase", to_string(s.phase)},
                  {"stance", to_string(s.stance_leg)},
                  {"step_index", s.step_index},
                  {"planes", planes},
                  {"com_pos", vec3(s.com_pos)},
                  {"com_vel", vec3(s.com_vel)},
                  {"feet", {{"stance", vec3(s.stance_foot)}, {"swing", vec3(s.swing_foot)}}},
                  {"footprints", footprints},
                  {"gait", gait_json(gait_)},
                  {"gait_active", gait_json(walker_->config().gait)},
                  {"v_cmd", io::detail::pair(v_command_)},
                  {"v_des", io::detail::pair(v_filtered_)},
                  {"invariant_sets", sets},
                  {"paused", paused_},
                  {"events",
                   {{"impact", flags_.impact},
                    {"clamp", flags_.clamp},
                    {"push_active", walker_->push_active()},
                    {"fell_over", s.fell}}}};
    flags_ = {};
    return frame;
  }

  json health() const {
    json ranges;
    for (const ParamRange& r : kParamRanges) ranges[r.name] = {r.lo, r.hi};
    return {{"status", walker_->state().fell ? "fell_over" : (paused_ ? "paused" : "running")},
            {"time", time()},
            {"step_index", walker_->state().step_index},
            {"paused", paused_},
            {"fell_over", walker_->state().fell},
            {"param_ranges", ranges}};
  }

 private:
  struct Flags {
    bool impact = false;
    bool clamp = false;
  };

  static json vec3(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

  static json gait_json(const GaitParams& g) {
    return {{"T", g.t}, {"T_SSP", g.t_ssp}, {"z0", g.z0}, {"z_sw_max", g.z_sw_max}, {"z_sw_neg", g.z_sw_neg},
            {"u_star_L_y", g.u_star_left_y}};
  }

  void restart() {
    const sim::Scenario& sc = config_.scenario;
    sc.validate();
    gait_ = sc.sim.gait;
    v_command_ = sc.velocity.at(0.0);
    v_filtered_ = v_command_;
    walker_.emplace(sc.sim, sc.composition, sc.estimator, sc.pushes, sc.u_star_left_x, v_filtered_);
    last_control_ = walker_->controller().last_output();
    footprints_.clear();
    window_.clear();
    invariant_[0].reset();
    invariant_[1].reset();
    in_set_[0] = in_set_[1] = false;
    last_step_.reset();
    steps_since_refresh_ = 0;
    flags_ = {};
  }

  CommandResult handle(const SetVelocity& c) {
    if (std::abs(c.vx) > kMaxCommandSpeed || std::abs(c.vy) > kMaxCommandSpeed)
      return {false, "velocity outside +/-" + std::to_string(kMaxCommandSpeed) + " m/s"};
    v_command_ = {c.vx, c.vy};
    return {};
  }

  CommandResult handle(const SetParam& c) {
    const ParamRange* range = find_param(c.name);
    if (!range) return {false, "unknown parameter '" + c.name + "'"};
    if (!(c.value >= range->lo && c.value <= range->hi))
      return {false, c.name + " outside [" + std::to_string(range->lo) + ", " + std::to_string(range->hi) + "]"};
    GaitParams g = gait_;
    if (c.name == "T") {
      const double t_dsp = gait_.t_dsp();
      g.t = c.value;
      g.t_ssp = c.value - t_dsp;
    } else if (c.name == "z0") {
      g.z0 = c.value;
    } else if (c.name == "z_sw_max") {
      g.z_sw_max = c.value;
    } else {
      g.u_star_left_y = c.value;
    }
    if (!g.valid()) return {false, "resulting gait is invalid"};
    gait_ = g;
    walker_->request_gait(g);
    return {};
  }

  CommandResult handle(const Push& c) {
    if (!(Vector2d(c.fx, c.fy).norm() <= kMaxPushForce)) return {false, "push force too large"};
    if (!(c.duration > 0.0 && c.duration <= kMaxPushDuration)) return {false, "push duration out of range"};
    walker_->add_push({time(), c.duration, {c.fx, c.fy}});
    return {};
  }

  CommandResult handle(const Reset&) {
    restart();
    return {};
  }

  CommandResult handle(const Pause&) {
    paused_ = true;
    return {};
  }

  CommandResult handle(const Resume&) {
    paused_ = false;
    return {};
  }

  void on_step(const sim::StepRecord& landed) {
    flags_.impact = true;
    footprints_.push_back({walker_->state().stance_foot.head<2>(), walker_->state().stance_leg});
    while (footprints_.size() > config_.footprint_capacity) footprints_.pop_front();

    // Window of consecutive, push-free steps under one parameter set; the
    // newest entry is still open.
    const auto& all = walker_->records();
    if (!window_.empty() && all.size() >= 2 && window_.back().step_index == all[all.size() - 2].step_index)
      window_.back() = all[all.size() - 2];
    const bool reset_window = !window_.empty() && (window_.back().push_active ||
                                                   !(window_.back().params == landed.params) ||
                                                   window_.back().step_index + 1 != landed.step_index);
    if (reset_window) window_.clear();
    window_.push_back(landed);
    while (window_.size() > config_.invariant_window + 1) window_.pop_front();
    last_step_ = landed;

    if (++steps_since_refresh_ >= config_.invariant_refresh && window_.size() >= 3) {
      steps_since_refresh_ = 0;
      refresh_invariant();
    }
    for (int axis = 0; axis < 2; ++axis)
      in_set_[axis] = invariant_[axis] && contains(invariant_[axis]->e, landed.planes[axis].error,
                                                   sim::containment_tol(invariant_[axis]->e));
  }

  void refresh_invariant() {
    const std::vector<sim::StepRecord> records(window_.begin(), window_.end());
    for (int axis = 0; axis < 2; ++axis) {
      try {
        invariant_[axis] = sim::invariant_report(records, axis, 0);
      } catch (const Error&) {
        invariant_[axis].reset();
      }
    }
    invariant_step_ = walker_->state().step_index;
  }

  SessionConfig config_;
  std::optional<sim::Walker> walker_;
  GaitParams gait_;
  Vector2d v_command_ = Vector2d::Zero();
  Vector2d v_filtered_ = Vector2d::Zero();
  bool paused_ = false;
  sim::ControlOutput last_control_;
  std::deque<Footprint> footprints_;
  std::deque<sim::StepRecord> window_;
  std::array<std::optional<sim::InvariantReport>, 2> invariant_;
  std::array<bool, 2> in_set_{false, false};
  std::optional<sim::StepRecord> last_step_;
  std::size_t steps_since_refresh_ = 0;
  int invariant_step_ = 0;
  std::size_t frame_seq_ = 0;
  Flags flags_;
};

}  // namespace hlip::service
