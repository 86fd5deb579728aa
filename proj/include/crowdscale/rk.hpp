#pragma once

#include <vector>

#include "crowdscale/util.hpp"
#include "crowdscale/vec.hpp"

namespace crowdscale {

/// Scratch buffers for the explicit Runge-Kutta steppers, reused across
/// steps so the hot loop does not allocate.
template <int D>
struct RkWorkspace {
  std::vector<Vec<D>> k1, k2, k3, k4, stage;

  void resize(std::size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    stage.resize(n);
  }
};

/// One fixed step of the explicit RK scheme of the given order (1 = Euler,
/// 2 = midpoint, 4 = classic) on a system of point states. `rhs(t, x, out)`
/// fills the derivative of every point.
template <int D, class Rhs>
void rk_step(int order, double t, double dt, std::vector<Vec<D>>& x, Rhs&& rhs,
             RkWorkspace<D>& ws) {
  const std::size_t n = x.size();
  ws.resize(n);
  switch (order) {
    case 1: {
      rhs(t, x, ws.k1);
      for (std::size_t i = 0; i < n; ++i) x[i] += dt * ws.k1[i];
      return;
    }
    case 2: {
      rhs(t, x, ws.k1);
      for (std::size_t i = 0; i < n; ++i)
        ws.stage[i] = x[i] + (0.5 * dt) * ws.k1[i];
      rhs(t + 0.5 * dt, ws.stage, ws.k2);
      for (std::size_t i = 0; i < n; ++i) x[i] += dt * ws.k2[i];
      return;
    }
    case 4: {
      rhs(t, x, ws.k1);
      for (std::size_t i = 0; i < n; ++i)
        ws.stage[i] = x[i] + (0.5 * dt) * ws.k1[i];
      rhs(t + 0.5 * dt, ws.stage, ws.k2);
      for (std::size_t i = 0; i < n; ++i)
        ws.stage[i] = x[i] + (0.5 * dt) * ws.k2[i];
      rhs(t + 0.5 * dt, ws.stage, ws.k3);
      for (std::size_t i = 0; i < n; ++i) ws.stage[i] = x[i] + dt * ws.k3[i];
      rhs(t + dt, ws.stage, ws.k4);
      for (std::size_t i = 0; i < n; ++i)
        x[i] += (dt / 6.0) *
                (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
      return;
    }
    default:
      throw std::invalid_argument("integrator order must be 1, 2 or 4");
  }
}

}  // namespace crowdscale
