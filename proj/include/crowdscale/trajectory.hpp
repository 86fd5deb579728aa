#pragma once

#include <limits>
#include <string>
#include <vector>

namespace crowdscale {

/// Time-stamped snapshots produced by a solver, plus run diagnostics. The
/// snapshots always include the initial state and the state at final time
/// (or at the abort point).
template <class State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> snapshots;

  bool aborted = false;
  std::string abort_reason;
  bool cfl_reduced = false;

  /// 2 max{Lip(v_d), N Lip(K)} when the kernel admits it, NaN otherwise.
  double xi_n = std::numeric_limits<double>::quiet_NaN();
  /// Lip(v) T e^{Lip(v) T} with Lip(v) = Lip(v_d) + N Lip(K); the continuum
  /// structure-preservation bound asks for < 1. Reported, never enforced.
  double structure_factor = std::numeric_limits<double>::quiet_NaN();

  const State& initial() const { return snapshots.front(); }
  const State& final_state() const { return snapshots.back(); }
};

}  // namespace crowdscale
