#pragma once

// JSON forms of scenarios, step records and polygons.

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlip/polytope.hpp"
#include "hlip/sim/scenario.hpp"

namespace hlip::io {

using nlohmann::json;

inline constexpr int kScenarioSchemaVersion = 1;

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorCode::Parse, what); }

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) fail("unknown key '" + it.key() + "' in " + where);
  }
}

inline double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

inline const json& object(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_object()) fail(std::string("'") + key + "' must be an object");
  return v;
}

inline Eigen::Vector2d pair(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) fail(what + " must be [a, b]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline json pair(double a, double b) { return json::array({a, b}); }
inline json pair(const Eigen::Vector2d& v) { return pair(v.x(), v.y()); }
inline json pair(const PlanarState& x) { return pair(x.p, x.v); }

inline PlanarState state(const json& v, const std::string& what) { return PlanarState::from(pair(v, what)); }

inline sim::Tracking tracking(const json& obj, const char* key, sim::Tracking fallback) {
  if (!obj.contains(key)) return fallback;
  const json& t = object(obj, key);
  reject_unknown(t, {"omega_n", "zeta"}, key);
  return {number(t, "omega_n", fallback.omega_n), number(t, "zeta", fallback.zeta)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario

inline sim::Scenario scenario_from_json(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) fail("scenario must be a JSON object");
  reject_unknown(doc,
                 {"schema_version", "name", "g", "gait", "composition", "velocity_profile", "pushes", "terrain",
                  "duration", "seed", "estimator", "sim"},
                 "scenario");
  if (!doc.contains("schema_version") || !doc.at("schema_version").is_number_integer() ||
      doc.at("schema_version").get<int>() != kScenarioSchemaVersion) {
    fail("schema_version must be " + std::to_string(kScenarioSchemaVersion));
  }
  sim::Scenario sc;
  sc.sim.g = number(doc, "g", sc.sim.g);
  if (doc.contains("gait")) {
    const json& g = object(doc, "gait");
    reject_unknown(g, {"z0", "T", "T_SSP", "z_sw_max", "z_sw_neg", "u_star_L_y", "u_star_L_x"}, "gait");
    GaitParams& gait = sc.sim.gait;
    gait.z0 = number(g, "z0", gait.z0);
    gait.t = number(g, "T", gait.t);
    gait.t_ssp = number(g, "T_SSP", gait.t_ssp);
    gait.z_sw_max = number(g, "z_sw_max", gait.z_sw_max);
    gait.z_sw_neg = number(g, "z_sw_neg", gait.z_sw_neg);
    gait.u_star_left_y = number(g, "u_star_L_y", gait.u_star_left_y);
    if (g.contains("u_star_L_x")) sc.u_star_left_x = number(g, "u_star_L_x", 0.0);
  }
  if (doc.contains("composition")) {
    if (!doc.at("composition").is_string()) fail("'composition' must be a string");
    try {
      sc.composition = parse_composition(doc.at("composition").get<std::string>());
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  if (doc.contains("velocity_profile")) {
    const json& vp = doc.at("velocity_profile");
    if (!vp.is_array()) fail("'velocity_profile' must be an array");
    for (const json& row : vp) {
      if (!row.is_array() || row.size() != 3) fail("velocity breakpoints are [t, vx, vy]");
      for (const json& x : row)
        if (!x.is_number()) fail("velocity breakpoints must be numeric");
      sc.velocity.points.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
    }
  }
  if (doc.contains("pushes")) {
    if (!doc.at("pushes").is_array()) fail("'pushes' must be an array");
    for (const json& p : doc.at("pushes")) {
      if (!p.is_object()) fail("push entries must be objects");
      reject_unknown(p, {"start_time", "duration", "force"}, "push");
      if (!p.contains("force")) fail("push needs a force");
      sc.pushes.push_back({number(p, "start_time", 0.0), number(p, "duration", 0.1), pair(p.at("force"), "force")});
    }
  }
  if (doc.contains("terrain")) {
    if (!doc.at("terrain").is_array()) fail("'terrain' must be an array");
    for (const json& t : doc.at("terrain")) {
      if (!t.is_object()) fail("terrain entries must be objects");
      reject_unknown(t, {"x_min", "x_max", "height"}, "terrain");
      sc.sim.terrain.patches.push_back({number(t, "x_min", 0.0), number(t, "x_max", 0.0), number(t, "height", 0.0)});
    }
  }
  sc.duration = number(doc, "duration", sc.duration);
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) fail("'seed' must be a non-negative integer");
    sc.sim.rng_seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("estimator")) {
    if (!doc.at("estimator").is_string()) fail("'estimator' must be a string");
    try {
      sc.estimator = sim::parse_estimator(doc.at("estimator").get<std::string>());
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  if (doc.contains("sim")) {
    const json& s = object(doc, "sim");
    reject_unknown(s,
                   {"mass", "dt", "height_tracking", "swing_tracking", "impact_velocity_loss", "step_size_limits",
                    "sensor_noise_std", "leg_reach", "ideal_tracking"},
                   "sim");
    sc.sim.mass = number(s, "mass", sc.sim.mass);
    sc.sim.dt = number(s, "dt", sc.sim.dt);
    sc.sim.height_tracking = tracking(s, "height_tracking", sc.sim.height_tracking);
    sc.sim.swing_tracking = tracking(s, "swing_tracking", sc.sim.swing_tracking);
    sc.sim.impact_velocity_loss = number(s, "impact_velocity_loss", sc.sim.impact_velocity_loss);
    if (s.contains("step_size_limits")) {
      const Eigen::Vector2d lim = pair(s.at("step_size_limits"), "step_size_limits");
      sc.sim.u_min = lim.x();
      sc.sim.u_max = lim.y();
    }
    sc.sim.sensor_noise_std = number(s, "sensor_noise_std", sc.sim.sensor_noise_std);
    sc.sim.leg_reach = number(s, "leg_reach", sc.sim.leg_reach);
    if (s.contains("ideal_tracking")) {
      if (!s.at("ideal_tracking").is_boolean()) fail("'ideal_tracking' must be a boolean");
      sc.sim.ideal_tracking = s.at("ideal_tracking").get<bool>();
    }
  }
  try {
    sc.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  return sc;
}

inline json scenario_to_json(const sim::Scenario& sc) {
  using detail::pair;
  json doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["g"] = sc.sim.g;
  const GaitParams& g = sc.sim.gait;
  doc["gait"] = {{"z0", g.z0}, {"T", g.t}, {"T_SSP", g.t_ssp}, {"z_sw_max", g.z_sw_max},
                 {"z_sw_neg", g.z_sw_neg}, {"u_star_L_y", g.u_star_left_y}};
  if (sc.u_star_left_x) doc["gait"]["u_star_L_x"] = *sc.u_star_left_x;
  doc["composition"] = to_string(sc.composition);
  doc["velocity_profile"] = json::array();
  for (const sim::VelocityPoint& p : sc.velocity.points) doc["velocity_profile"].push_back({p.t, p.vx, p.vy});
  doc["pushes"] = json::array();
  for (const sim::PushEvent& p : sc.pushes)
    doc["pushes"].push_back({{"start_time", p.start_time}, {"duration", p.duration}, {"force", pair(p.force)}});
  doc["terrain"] = json::array();
  for (const sim::TerrainPatch& t : sc.sim.terrain.patches)
    doc["terrain"].push_back({{"x_min", t.x_min}, {"x_max", t.x_max}, {"height", t.height}});
  doc["duration"] = sc.duration;
  doc["seed"] = sc.sim.rng_seed;
  doc["estimator"] = sim::to_string(sc.estimator);
  const sim::SimConfig& s = sc.sim;
  doc["sim"] = {{"mass", s.mass},
                {"dt", s.dt},
                {"height_tracking", {{"omega_n", s.height_tracking.omega_n}, {"zeta", s.height_tracking.zeta}}},
                {"swing_tracking", {{"omega_n", s.swing_tracking.omega_n}, {"zeta", s.swing_tracking.zeta}}},
                {"impact_velocity_loss", s.impact_velocity_loss},
                {"step_size_limits", pair(s.u_min, s.u_max)},
                {"sensor_noise_std", s.sensor_noise_std},
                {"leg_reach", s.leg_reach},
                {"ideal_tracking", s.ideal_tracking}};
  return doc;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, where + ": " + e.what());
  }
}

inline sim::Scenario load_scenario(const std::string& path) {
  const json doc = parse_json(read_file(path), path);
  try {
    return scenario_from_json(doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Step records

inline json params_to_json(const ModelParams& p) {
  return {{"z0", p.z0}, {"g", p.g}, {"T_SSP", p.t_ssp}, {"T_DSP", p.t_dsp}};
}

inline ModelParams params_from_json(const json& j) {
  ModelParams p;
  p.z0 = detail::number(j, "z0", p.z0);
  p.g = detail::number(j, "g", p.g);
  p.t_ssp = detail::number(j, "T_SSP", p.t_ssp);
  p.t_dsp = detail::number(j, "T_DSP", p.t_dsp);
  return p;
}

inline json plane_to_json(const sim::PlaneStep& s) {
  using detail::pair;
  json j = {{"x", pair(s.x)},           {"x_hat", pair(s.x_hat)}, {"delta_x", pair(s.delta_x)},
            {"u", s.u},                 {"u_realized", s.u_realized}, {"x_hlip", pair(s.x_hlip)},
            {"u_hlip", s.u_hlip},       {"error", pair(s.error)}};
  j["w"] = s.w ? pair(*s.w) : json(nullptr);
  return j;
}

inline sim::PlaneStep plane_from_json(const json& j) {
  using detail::pair;
  using detail::state;
  sim::PlaneStep s;
  s.x = state(j.at("x"), "x");
  s.x_hat = state(j.at("x_hat"), "x_hat");
  s.delta_x = pair(j.at("delta_x"), "delta_x");
  s.u = j.at("u").get<double>();
  s.u_realized = j.at("u_realized").get<double>();
  s.x_hlip = state(j.at("x_hlip"), "x_hlip");
  s.u_hlip = j.at("u_hlip").get<double>();
  s.error = pair(j.at("error"), "error");
  if (j.contains("w") && !j.at("w").is_null()) s.w = pair(j.at("w"), "w");
  return s;
}

inline json record_to_json(const sim::StepRecord& r) {
  return {{"step_index", r.step_index},
          {"time", r.time},
          {"stance", to_string(r.stance)},
          {"params", params_to_json(r.params)},
          {"v_des", detail::pair(r.v_des)},
          {"t_ssp_actual", r.t_ssp_actual},
          {"t_dsp_actual", r.t_dsp_actual},
          {"clamped", r.clamped},
          {"push_active", r.push_active},
          {"sagittal", plane_to_json(r.sagittal())},
          {"coronal", plane_to_json(r.coronal())}};
}

inline sim::StepRecord record_from_json(const json& j) {
  sim::StepRecord r;
  r.step_index = j.at("step_index").get<int>();
  r.time = j.at("time").get<double>();
  const std::string stance = j.at("stance").get<std::string>();
  if (stance != "L" && stance != "R") detail::fail("stance must be L or R");
  r.stance = stance == "L" ? Leg::Left : Leg::Right;
  r.params = params_from_json(j.at("params"));
  r.v_des = detail::pair(j.at("v_des"), "v_des");
  r.t_ssp_actual = j.at("t_ssp_actual").get<double>();
  r.t_dsp_actual = j.at("t_dsp_actual").get<double>();
  r.clamped = j.at("clamped").get<bool>();
  r.push_active = j.at("push_active").get<bool>();
  r.sagittal() = plane_from_json(j.at("sagittal"));
  r.coronal() = plane_from_json(j.at("coronal"));
  return r;
}

inline void write_records(std::ostream& out, const std::vector<sim::StepRecord>& records) {
  for (const sim::StepRecord& r : records) out << record_to_json(r).dump() << '\n';
}

inline std::vector<sim::StepRecord> read_records(std::istream& in, const std::string& where = "records") {
  std::vector<sim::StepRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string at = where + ":" + std::to_string(lineno);
    try {
      out.push_back(record_from_json(parse_json(line, at)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, at + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<sim::StepRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "'");
  return read_records(in, path);
}

// ---------------------------------------------------------------------------
// Polygons: CCW array of [x, y]

inline json polytope_to_json(const Polytope2& p) {
  json arr = json::array();
  for (const Eigen::Vector2d& v : p.vertices()) arr.push_back(detail::pair(v));
  return arr;
}

inline Polytope2 polytope_from_json(const json& arr) {
  if (!arr.is_array()) detail::fail("polytope must be an array of [x, y]");
  std::vector<Eigen::Vector2d> pts;
  for (const json& v : arr) pts.push_back(detail::pair(v, "vertex"));
  if (pts.empty()) return {};
  return convex_hull(pts);
}

}  // namespace hlip::io
