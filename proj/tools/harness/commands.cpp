#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "hlip/io/csv_log.hpp"
#include "hlip/io/json_io.hpp"
#include "hlip/sim/analysis.hpp"

namespace hlip::harness {

namespace {

using nlohmann::json;

std::string fmt_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x == 0.0 ? 0.0 : x);
  return buf;
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Parse:
    case ErrorCode::EmptyInput:
    case ErrorCode::InsufficientData:
    case ErrorCode::InvalidKind: return kParseError;
    case ErrorCode::InvalidParams:
    case ErrorCode::OutOfRange: return kUsage;
    case ErrorCode::NotDeadbeat:
    case ErrorCode::UnstableMatrix:
    case ErrorCode::NoConvergence:
    case ErrorCode::IllConditioned: return kNumerical;
  }
  return kNumerical;
}

struct OrbitArgs {
  double v_des = 0.0;
  double z0 = 1.0;
  double t_ssp = 0.3;
  double t_dsp = 0.05;
  double g = kDefaultGravity;
  bool p2 = false;
  std::optional<double> u_star_left;
};

int cmd_orbit(const OrbitArgs& a, std::ostream& out) {
  const ModelParams params{a.z0, a.g, a.t_ssp, a.t_dsp};
  params.validate();
  if (a.p2 && !a.u_star_left) throw Error(ErrorCode::InvalidParams, "--p2 requires --u-star-l");
  const OrbitalSlopes slopes = orbital_slopes(params);
  const SteppingGain gain = deadbeat_gain(params);
  out << "orbit,leg,v_des,u_star,p_star,v_star,sigma1,sigma2,d2,k_p,k_v\n";
  const auto row = [&](const char* kind, const char* leg, double u, const PlanarState& x, double d2) {
    out << kind << ',' << leg << ',' << fmt_num(a.v_des) << ',' << fmt_num(u) << ',' << fmt_num(x.p) << ','
        << fmt_num(x.v) << ',' << fmt_num(slopes.sigma1) << ',' << fmt_num(slopes.sigma2) << ',' << fmt_num(d2) << ','
        << fmt_num(gain.k(0)) << ',' << fmt_num(gain.k(1)) << '\n';
  };
  if (a.p2) {
    const P2Orbit o = p2_orbit(a.v_des, *a.u_star_left, params);
    row("P2", "L", o.u_star_left, o.x_star_left, o.d2);
    row("P2", "R", o.u_star_right, o.x_star_right, o.d2);
  } else {
    const P1Orbit o = p1_orbit(a.v_des, params);
    row("P1", "-", o.u_star, o.x_star, p2_line_offset(a.v_des, params));
  }
  return kOk;
}

json summary_json(const sim::RunSummary& s) {
  return {{"fell", s.fell},
          {"end_time", s.end_time},
          {"steps", s.steps},
          {"clamped_steps", s.clamped_steps},
          {"mean_velocity", {s.planes[0].mean_velocity, s.planes[1].mean_velocity}},
          {"max_error", {s.planes[0].max_error, s.planes[1].max_error}},
          {"steady_steps", s.planes[0].steady_steps}};
}

struct SimulateArgs {
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> estimator;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  sim::Scenario sc = io::load_scenario(a.scenario);
  if (a.seed) sc.sim.rng_seed = *a.seed;
  if (a.estimator) sc.estimator = sim::parse_estimator(*a.estimator);
  std::filesystem::create_directories(a.out_dir);
  spdlog::info("simulating {} for {} s", a.scenario, sc.duration);
  const sim::RunResult run = sim::run_scenario(sc);
  const std::filesystem::path dir(a.out_dir);
  {
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
    io::write_trajectory(csv, run.trajectory);
  }
  {
    std::ofstream jsonl(dir / "steps.jsonl", std::ios::binary);
    io::write_records(jsonl, run.records);
  }
  if (run.fell) spdlog::warn("fell over at t = {:.3f} s", run.end_time);
  out << summary_json(sim::summarize(run, sc)).dump() << '\n';
  return kOk;
}

struct InvariantArgs {
  std::string records;
  std::string plane = "x";
  std::optional<std::string> out_file;
  int from_step = 5;
};

int cmd_invariant(const InvariantArgs& a, std::ostream& out) {
  const std::vector<sim::StepRecord> records = io::load_records(a.records);
  const int plane = a.plane == "x" ? sim::kSagittal : sim::kCoronal;
  const sim::InvariantReport rep = sim::invariant_report(records, plane, a.from_step);
  const json sets = {{"W", io::polytope_to_json(rep.w)}, {"E", io::polytope_to_json(rep.e)}};
  if (a.out_file) {
    std::ofstream f(*a.out_file, std::ios::binary);
    f << sets.dump(2) << '\n';
  }
  json report = sets;
  report["plane"] = a.plane;
  report["from_step"] = a.from_step;
  report["checked"] = rep.checked;
  report["contained"] = rep.contained;
  report["fraction"] = rep.fraction();
  report["w_diameter"] = rep.w.diameter();
  report["e_diameter"] = rep.e.diameter();
  out << report.dump() << '\n';
  return kOk;
}

struct SweepArgs {
  std::string grid;
  std::optional<std::string> scenario;
  unsigned jobs = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const std::vector<double> grid = parse_grid(a.grid);
  const sim::Scenario base = a.scenario ? io::load_scenario(*a.scenario) : forward_walk_scenario();
  const unsigned jobs = a.jobs > 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  const std::vector<SweepRow> rows = run_sweep(base, grid, jobs);
  out << "index,v_target,fell,clamped_steps,mean_vx,tracking_error,max_error_x,max_error_y\n";
  for (const SweepRow& r : rows) {
    out << r.index << ',' << fmt_num(r.v_target) << ',' << int(r.fell) << ',' << r.clamped_steps << ','
        << fmt_num(r.mean_vx) << ',' << fmt_num(r.tracking_error) << ',' << fmt_num(r.max_error_x) << ','
        << fmt_num(r.max_error_y) << '\n';
  }
  return kOk;
}

}  // namespace

sim::Scenario forward_walk_scenario() {
  sim::Scenario sc;
  sc.velocity = sim::VelocityProfile::ramp(1.0, 3.0);
  sc.duration = 10.0;
  return sc;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find(':', pos);
    const std::string item = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidParams, "bad grid '" + text + "', expected a:b:step");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() == 1) return {parts[0]};
  if (parts.size() != 3) throw Error(ErrorCode::InvalidParams, "grid must be a:b:step or a single value");
  const double a = parts[0];
  const double b = parts[1];
  const double step = parts[2];
  if (!(step > 0.0) || b < a) throw Error(ErrorCode::InvalidParams, "grid needs a <= b and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  if (n > 100000) throw Error(ErrorCode::InvalidParams, "grid too large");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = a + static_cast<double>(i) * step;
    out.push_back(std::abs(v) < 1e-12 ? 0.0 : v);
  }
  return out;
}

std::vector<SweepRow> run_sweep(const sim::Scenario& base, const std::vector<double>& grid, unsigned jobs) {
  std::vector<SweepRow> rows(grid.size());
  const double ramp = base.velocity.last_breakpoint() > 0.0 ? base.velocity.last_breakpoint() : 3.0;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      sim::Scenario sc = base;
      sc.velocity = sim::VelocityProfile::ramp(grid[i], ramp);
      const sim::RunResult run = sim::run_scenario(sc, {false});
      const sim::RunSummary s = sim::summarize(run, sc);
      SweepRow& r = rows[i];
      r.index = i;
      r.v_target = grid[i];
      r.fell = s.fell;
      r.clamped_steps = s.clamped_steps;
      r.mean_vx = s.planes[0].mean_velocity;
      const double diff = std::abs(r.mean_vx - grid[i]);
      r.tracking_error = std::abs(grid[i]) > 1e-9 ? diff / std::abs(grid[i]) : diff;
      r.max_error_x = s.planes[0].max_error;
      r.max_error_y = s.planes[1].max_error;
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(grid.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  return rows;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"H-LIP walking toolkit"};
  app.require_subcommand(1);

  OrbitArgs orbit;
  double u_star_left = 0.0;
  auto* orbit_cmd = app.add_subcommand("orbit", "closed-form orbit and deadbeat gain");
  orbit_cmd->add_option("--v-des", orbit.v_des, "desired velocity [m/s]")->required();
  orbit_cmd->add_option("--z0", orbit.z0, "COM height [m]");
  orbit_cmd->add_option("--t-ssp", orbit.t_ssp, "single support duration [s]");
  orbit_cmd->add_option("--t-dsp", orbit.t_dsp, "double support duration [s]");
  orbit_cmd->add_option("--g", orbit.g, "gravity [m/s^2]");
  orbit_cmd->add_flag("--p2", orbit.p2, "period-2 orbit");
  auto* u_opt = orbit_cmd->add_option("--u-star-l", u_star_left, "left-stance step size for P2 [m]");

  SimulateArgs simulate;
  std::uint64_t seed = 0;
  std::string estimator;
  auto* sim_cmd = app.add_subcommand("simulate", "run a scenario and write logs");
  sim_cmd->add_option("--scenario", simulate.scenario, "scenario JSON")->required();
  sim_cmd->add_option("--out", simulate.out_dir, "output directory")->required();
  auto* seed_opt = sim_cmd->add_option("--seed", seed, "override the scenario seed");
  auto* est_opt = sim_cmd->add_option("--estimator", estimator, "truth or hlip")->check(CLI::IsMember({"truth", "hlip"}));

  InvariantArgs invariant;
  std::string inv_out;
  auto* inv_cmd = app.add_subcommand("invariant", "disturbance and error invariant sets from step records");
  inv_cmd->add_option("--records", invariant.records, "steps.jsonl from simulate")->required();
  inv_cmd->add_option("--plane", invariant.plane, "x or y")->check(CLI::IsMember({"x", "y"}));
  auto* inv_out_opt = inv_cmd->add_option("--out", inv_out, "write W and E as JSON");
  inv_cmd->add_option("--from-step", invariant.from_step, "first step checked for containment");

  SweepArgs sweep;
  std::string sweep_scenario;
  auto* sweep_cmd = app.add_subcommand("sweep", "velocity tracking over a grid of targets");
  sweep_cmd->add_option("--grid", sweep.grid, "a:b:step")->required();
  auto* sweep_sc = sweep_cmd->add_option("--scenario", sweep_scenario, "base scenario JSON");
  sweep_cmd->add_option("--jobs", sweep.jobs, "worker threads");

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (orbit_cmd->parsed()) {
      if (*u_opt) orbit.u_star_left = u_star_left;
      if (orbit.p2 && !orbit.u_star_left) {
        err << "orbit: --p2 requires --u-star-l\n";
        return kUsage;
      }
      return cmd_orbit(orbit, out);
    }
    if (sim_cmd->parsed()) {
      if (*seed_opt) simulate.seed = seed;
      if (*est_opt) simulate.estimator = estimator;
      return cmd_simulate(simulate, out);
    }
    if (inv_cmd->parsed()) {
      if (*inv_out_opt) invariant.out_file = inv_out;
      return cmd_invariant(invariant, out);
    }
    if (sweep_cmd->parsed()) {
      if (*sweep_sc) sweep.scenario = sweep_scenario;
      return cmd_sweep(sweep, out);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace hlip::harness
