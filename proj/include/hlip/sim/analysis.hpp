#pragma once

// Disturbance and error-invariant sets measured from step records.

#include <vector>

#include "hlip/polytope.hpp"
#include "hlip/sim/scenario.hpp"

namespace hlip::sim {

/// Residual samples w_k + B K delta_x_k of one plane; the offset term vanishes
/// when the controller saw the true state.
inline std::vector<Vec2> residual_samples(const std::vector<StepRecord>& records, int plane,
                                          bool skip_pushed = false) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i + 1 < records.size(); ++i) {
    const StepRecord& a = records[i];
    const StepRecord& b = records[i + 1];
    if (a.step_index + 1 != b.step_index) continue;
    if (skip_pushed && a.push_active) continue;
    const S2SMatrices mats = s2s_matrices(a.params);
    const SteppingGain gain = deadbeat_gain(a.params);
    const StepTriple t{a.planes[plane].x, a.planes[plane].u, b.planes[plane].x, a.planes[plane].delta_x};
    out.push_back(s2s_residual(t, mats) + mats.b * gain.k.dot(t.delta_x));
  }
  return out;
}

struct InvariantReport {
  Polytope2 w;
  Polytope2 e;
  std::size_t checked = 0;
  std::size_t contained = 0;

  double fraction() const { return checked == 0 ? 1.0 : static_cast<double>(contained) / static_cast<double>(checked); }
};

inline double containment_tol(const Polytope2& e) { return 1e-9 * (1.0 + e.support_radius()); }

inline InvariantReport invariant_report(const std::vector<StepRecord>& records, int plane, int from_step = 5) {
  if (records.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least two step records");
  for (const StepRecord& r : records)
    if (!(r.params == records.front().params))
      throw Error(ErrorCode::InvalidParams, "records mix model parameters");
  const std::vector<Vec2> samples = residual_samples(records, plane);
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "no consecutive step pairs");
  const ModelParams& params = records.front().params;
  InvariantReport out;
  out.w = convex_hull(samples);
  out.e = deadbeat_invariant_set(out.w, s2s_matrices(params), deadbeat_gain(params));
  const double tol = containment_tol(out.e);
  for (const StepRecord& r : records) {
    if (r.step_index < from_step) continue;
    ++out.checked;
    if (contains(out.e, r.planes[plane].error, tol)) ++out.contained;
  }
  return out;
}

struct RecoveryReport {
  bool ejected = false;
  int exit_step = -1;     ///< first step at or after the push with e outside E
  int reentry_step = -1;  ///< first later step with e back inside, -1 if never

  /// Steps spent outside; -1 if e never came back.
  int steps_outside() const { return reentry_step < 0 ? -1 : reentry_step - exit_step; }
};

/// Watches both planes of the error against per-plane sets E after a push
/// starting at push_time.
inline RecoveryReport push_recovery(const std::vector<StepRecord>& records, const std::array<Polytope2, 2>& e,
                                    double push_time) {
  RecoveryReport out;
  for (const StepRecord& r : records) {
    if (r.time < push_time) continue;
    bool inside = true;
    for (int axis = 0; axis < 2; ++axis)
      inside = inside && contains(e[axis], r.planes[axis].error, containment_tol(e[axis]));
    if (!out.ejected && !inside) {
      out.ejected = true;
      out.exit_step = r.step_index;
    } else if (out.ejected && inside) {
      out.reentry_step = r.step_index;
      break;
    }
  }
  return out;
}

}  // namespace hlip::sim
