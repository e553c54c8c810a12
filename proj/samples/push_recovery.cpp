// Pushes a robot that is stepping in place and reports how long the error
// state stays outside the undisturbed invariant set.

#include <cstdio>
#include <cstdlib>

#include "hlip/hlip.hpp"

using namespace hlip;

int main(int argc, char** argv) {
  const double force = argc > 1 ? std::atof(argv[1]) : 60.0;

  sim::Scenario sc;
  sc.estimator = sim::EstimatorMode::Hlip;
  sc.sim.sensor_noise_std = 1e-3;
  sc.duration = 20.0;
  const sim::RunResult quiet = sim::run_scenario(sc, {false});
  const std::vector<sim::StepRecord> settled(quiet.records.begin() + 5, quiet.records.end());
  const std::array<Polytope2, 2> e = {sim::invariant_report(settled, 0, 0).e, sim::invariant_report(settled, 1, 0).e};

  const double t_push = 6.0;
  sc.pushes.push_back({t_push, 0.1, {force, 0.0}});
  sc.duration = 12.0;
  const sim::RunResult run = sim::run_scenario(sc, {false});
  for (const sim::StepRecord& r : run.records) {
    if (r.time < t_push - 0.5) continue;
    const Vec2& ex = r.sagittal().error;
    const bool in = contains(e[0], ex, sim::containment_tol(e[0]));
    std::printf("step %3d  t %6.3f  vx %7.3f  e_x (%7.4f, %7.4f) %s%s\n", r.step_index, r.time, r.sagittal().x.v, ex.x(),
                ex.y(), in ? "in" : "OUT", r.clamped ? " clamped" : "");
  }
  if (run.fell) {
    std::printf("fell over at t = %.3f s\n", run.end_time);
    return 0;
  }
  const sim::RecoveryReport rep = sim::push_recovery(run.records, e, t_push);
  if (!rep.ejected)
    std::printf("%.0f N push stayed inside E\n", force);
  else
    std::printf("%.0f N push: outside E for %d steps\n", force, rep.steps_outside());
  return 0;
}
