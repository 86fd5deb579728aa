#pragma once

#include <optional>

namespace crowdscale {

/// Solver parameters shared by the particle, characteristics and finite
/// volume integrators. When dt is absent, solvers derive
/// min(0.01, 0.1 / xi^N) from the model's own Lipschitz scale, falling back
/// to 0.01 for kernels outside the Lipschitz theory.
struct SimConfig {
  std::optional<double> dt;
  double t_final = 1.0;
  int rk_order = 4;
  int snapshot_stride = 1;   // record every `stride` accepted steps
  int points_per_bump = 0;   // characteristics cloud; 0 -> 16 * d
  int quadrature_order = 8;  // per axis, bump-quadrature velocities
};

}  // namespace crowdscale
