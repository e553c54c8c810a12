#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "hlip/sim/scenario.hpp"

namespace hlip::harness {

enum ExitCode : int { kOk = 0, kUsage = 2, kParseError = 3, kNumerical = 4 };

/// Forward-walking run: ramp to 1 m/s over 3 s, 10 s total, default gait.
sim::Scenario forward_walk_scenario();

std::vector<double> parse_grid(const std::string& text);

struct SweepRow {
  std::size_t index = 0;
  double v_target = 0.0;
  bool fell = false;
  std::size_t clamped_steps = 0;
  double mean_vx = 0.0;
  double tracking_error = 0.0;  ///< relative, absolute when the target is 0
  double max_error_x = 0.0;
  double max_error_y = 0.0;
};

std::vector<SweepRow> run_sweep(const sim::Scenario& base, const std::vector<double>& grid, unsigned jobs);

/// argv[0] is the program name; all output goes to out / err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hlip::harness
