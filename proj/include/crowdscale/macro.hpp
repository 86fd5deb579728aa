#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "crowdscale/cloud.hpp"
#include "crowdscale/config.hpp"
#include "crowdscale/desired_velocity.hpp"
#include "crowdscale/domain.hpp"
#include "crowdscale/kernel.hpp"
#include "crowdscale/measure.hpp"
#include "crowdscale/micro.hpp"
#include "crowdscale/quadrature.hpp"
#include "crowdscale/rk.hpp"
#include "crowdscale/trajectory.hpp"

namespace crowdscale {

namespace detail {

/// Nonlocal term of the measure velocity for a periodic grid density:
/// cells are visited in forward-gap order and both periodic images of a cell
/// are probed (a frontal kernel only ever sees the forward one). The fixed
/// visiting order makes face velocities of a uniform state bit-identical.
inline double grid_interaction(const GridDensity1D& g, double x,
                               const ScaledKernel<1>& k) {
  const double length = g.length;
  require(k.support_radius() < length,
          "kernel support radius >= grid length (ill-posed image sum)");
  const int m = g.cells();
  const double dx = g.dx();
  const double radius = k.support_radius();
  const int j_start = static_cast<int>(std::floor(x / dx - 0.5)) + 1;
  KahanSum acc;
  for (int t = 0; t < m; ++t) {
    const int j = ((j_start + t) % m + m) % m;
    double gap = std::fmod(g.cell_center(j) - x, length);
    if (gap < 0.0) gap += length;
    double kv = 0.0;
    if (gap <= radius) kv += k.value1d(gap);
    if (gap - length >= -radius) kv += k.value1d(gap - length);
    acc.add(kv * g.cell_averages[j] * dx);
  }
  return acc.value();
}

/// Nonlocal term against a bump measure by per-bump ball quadrature with
/// `order` nodes per axis. Bumps with no support overlap are skipped.
template <int D>
Vec<D> bump_interaction(const BumpMeasure<D>& m, const Vec<D>& x,
                        const ScaledKernel<D>& k, const Domain<D>& dom,
                        int order) {
  require(order >= 1, "quadrature order must be >= 1");
  static_assert(D <= 2, "bump quadrature velocities exist for d = 1, 2");
  const double z = profile_normalization<D>(m.profile);
  const double r = m.radius;
  const double reach = k.support_radius() + r;
  KahanVec<D> acc;
  if constexpr (D == 1) {
    const GaussRule& rule = gauss_legendre(order);
    for (const auto& c : m.centers) {
      if (norm(dom.gap(x, c)) > reach && !dom.is_periodic()) continue;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = rule.nodes[i];
        const double f = m.profile.shape(std::abs(u)) / z;
        if (f <= 0.0) continue;
        acc.add(rule.weights[i] * f * k(dom.gap(x, c + vec1(r * u))));
      }
    }
  } else {
    const GaussRule& rad = gauss_legendre(order);
    const int n_ang = std::max(order, 4);
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (const auto& c : m.centers) {
      if (norm(x - c) > reach) continue;
      for (int i = 0; i < order; ++i) {
        const double s = 0.5 * (rad.nodes[i] + 1.0);
        const double f = m.profile.shape(s) / z;
        if (f <= 0.0) continue;
        const double ws = 0.5 * rad.weights[i] * (two_pi / n_ang) * f * s;
        for (int j = 0; j < n_ang; ++j) {
          const double th = two_pi * (j + 0.5) / n_ang;
          const Vec<2> y = c + r * s * vec2(std::cos(th), std::sin(th));
          acc.add(ws * k(y - x));
        }
      }
    }
  }
  return acc.value();
}

}  // namespace detail

/// v[mu](x) = v_d(x) - integral of K(y - x) d mu(y). Atomic measures reduce
/// to the particle interaction sum, bump measures to per-bump quadrature,
/// grids to a midpoint cell sum with periodic images.
template <int D>
Vec<D> macro_velocity(const CrowdMeasure<D>& m, const Vec<D>& x,
                      const DesiredVelocity<D>& vd, const ScaledKernel<D>& k,
                      const Domain<D>& dom = Domain<D>::free(),
                      int quad_order = 8) {
  return std::visit(
      [&](const auto& v) -> Vec<D> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AtomicMeasure<D>>) {
          check_periodic_support(k, dom);
          return vd(x) - interaction_sum(v.positions, nullptr, x, k, dom);
        } else if constexpr (std::is_same_v<T, BumpMeasure<D>>) {
          if constexpr (D <= 2) {
            check_periodic_support(k, dom);
            return vd(x) - detail::bump_interaction(v, x, k, dom, quad_order);
          } else {
            throw std::invalid_argument(
                "bump-quadrature velocities exist for d = 1, 2 only");
          }
        } else {
          if constexpr (D == 1) {
            return vd(x) - vec1(detail::grid_interaction(v, x[0], k));
          } else {
            throw std::invalid_argument("grid densities are one-dimensional");
          }
        }
      },
      m);
}

/// Velocity induced by a weighted cloud (the characteristics solver's own
/// state).
template <int D>
Vec<D> cloud_velocity(const QuadratureCloud<D>& c, const Vec<D>& x,
                      const DesiredVelocity<D>& vd, const ScaledKernel<D>& k,
                      const Domain<D>& dom) {
  return vd(x) - interaction_sum(c.points, c.weights.data(), x, k, dom);
}

template <int D>
struct CloudState {
  double time = 0.0;
  QuadratureCloud<D> cloud;
};

/// Transport solver along characteristics: the bump measure is discretized
/// into a quadrature cloud and all points advance together under the
/// self-consistent velocity field evaluated against the current cloud.
/// Snapshots are the weighted point clouds.
template <int D>
Trajectory<CloudState<D>> integrate_characteristics(const BumpMeasure<D>& m0,
                                                    const DesiredVelocity<D>& vd,
                                                    const ScaledKernel<D>& k,
                                                    const Domain<D>& dom,
                                                    const SimConfig& cfg) {
  static_assert(D <= 2, "characteristics solver covers d = 1, 2");
  check_periodic_support(k, dom);
  require(cfg.t_final > 0.0, "final time must be positive");
  const double lip_k = k.lipschitz();  // rejects non-Lipschitz kernels
  const int n = m0.count();

  Trajectory<CloudState<D>> out;
  out.xi_n = 2.0 * std::max(vd.lipschitz(), n * lip_k);
  {
    const double lv = vd.lipschitz() + n * lip_k;
    out.structure_factor = lv * cfg.t_final * std::exp(lv * cfg.t_final);
  }
  const double dt = cfg.dt ? *cfg.dt : detail::default_dt(out.xi_n);
  require(dt > 0.0 && cfg.t_final >= dt, "need 0 < dt <= t_final");

  CloudState<D> s;
  s.cloud = discretize_bumps(
      m0, cfg.points_per_bump > 0 ? cfg.points_per_bump : 16 * D);
  for (auto& p : s.cloud.points) p = dom.wrap(p);
  out.times.push_back(s.time);
  out.snapshots.push_back(s);

  const std::vector<double>& w = s.cloud.weights;
  auto rhs = [&](double, const std::vector<Vec<D>>& xs,
                 std::vector<Vec<D>>& dx) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      dx[i] = vd(xs[i]) - interaction_sum(xs, w.data(), xs[i], k, dom);
  };

  RkWorkspace<D> ws;
  const detail::StepSchedule sched(0.0, cfg.t_final, dt);
  CloudState<D> prev = s;
  for (long step = 1; step <= sched.n_steps; ++step) {
    const double target = sched.target(step);
    rk_step(cfg.rk_order, s.time, target - s.time, s.cloud.points, rhs, ws);
    s.time = target;
    bool ok = true;
    for (const auto& p : s.cloud.points) ok = ok && is_finite(p);
    if (!ok) {
      out.aborted = true;
      out.abort_reason = "non-finite cloud point at t = " + format_double(s.time);
      if (out.times.back() != prev.time) {
        out.times.push_back(prev.time);
        out.snapshots.push_back(prev);
      }
      break;
    }
    for (auto& p : s.cloud.points) p = dom.wrap(p);
    if (step % cfg.snapshot_stride == 0 || step == sched.n_steps) {
      out.times.push_back(s.time);
      out.snapshots.push_back(s);
    }
    prev = s;
  }
  return out;
}

struct FVState {
  double time = 0.0;
  GridDensity1D grid;
};

/// Periodic first-order finite volume solver for the nonlocal conservation
/// law: explicit conservative update with upwind flux
/// F_{i+1/2} = v_{i+1/2} (rho_i if v > 0 else rho_{i+1}), face velocities
/// recomputed from the current density every step. The time step is capped
/// at 0.9 dx / max|v| each step; reductions are recorded, a cell average
/// below -1e-12 aborts.
inline Trajectory<FVState> integrate_fv(const FVState& s0,
                                        const DesiredVelocity<1>& vd,
                                        const ScaledKernel<1>& k,
                                        const SimConfig& cfg) {
  require(cfg.t_final > 0.0, "final time must be positive");
  const int m = s0.grid.cells();
  require(m >= 2, "finite volume grid needs at least two cells");
  require(k.support_radius() < s0.grid.length,
          "kernel support radius >= grid length (ill-posed image sum)");

  Trajectory<FVState> out;
  const auto& base = k.base();
  if (!base.discontinuous_at_zero && base.is_lipschitz()) {
    const double n_mass = total_mass(s0.grid);
    out.xi_n = 2.0 * std::max(vd.lipschitz(), n_mass * k.lipschitz());
    const double lv = vd.lipschitz() + n_mass * k.lipschitz();
    out.structure_factor = lv * cfg.t_final * std::exp(lv * cfg.t_final);
  }
  const double dt_base = cfg.dt ? *cfg.dt : detail::default_dt(out.xi_n);
  require(dt_base > 0.0, "time step must be positive");

  FVState s = s0;
  out.times.push_back(s.time);
  out.snapshots.push_back(s);

  const double dx = s.grid.dx();
  std::vector<double> face_v(static_cast<std::size_t>(m));
  std::vector<double> flux(static_cast<std::size_t>(m));
  FVState prev = s;
  const double t_end = s0.time + cfg.t_final;
  long step = 0;
  while (s.time < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
    double vmax = 0.0;
    for (int i = 0; i < m; ++i) {
      const double x = i * dx;  // face i sits between cells i-1 and i
      face_v[static_cast<std::size_t>(i)] =
          vd(vec1(x))[0] - detail::grid_interaction(s.grid, x, k);
      vmax = std::max(vmax, std::abs(face_v[static_cast<std::size_t>(i)]));
    }
    double h = std::min(dt_base, t_end - s.time);
    if (vmax > 0.0 && h > 0.9 * dx / vmax) {
      h = 0.9 * dx / vmax;
      out.cfl_reduced = true;
    }
    for (int i = 0; i < m; ++i) {
      const double v = face_v[static_cast<std::size_t>(i)];
      const double up = v > 0.0 ? s.grid.cell_averages[static_cast<std::size_t>(
                                      (i + m - 1) % m)]
                                : s.grid.cell_averages[static_cast<std::size_t>(i)];
      flux[static_cast<std::size_t>(i)] = v * up;
    }
    bool ok = true;
    for (int i = 0; i < m; ++i) {
      double& rho = s.grid.cell_averages[static_cast<std::size_t>(i)];
      rho -= (h / dx) * (flux[static_cast<std::size_t>((i + 1) % m)] -
                         flux[static_cast<std::size_t>(i)]);
      ok = ok && std::isfinite(rho) && rho > -1e-12;
    }
    s.time += h;
    ++step;
    if (!ok) {
      out.aborted = true;
      out.abort_reason =
          "negative or non-finite cell average at t = " + format_double(s.time);
      if (out.times.back() != prev.time) {
        out.times.push_back(prev.time);
        out.snapshots.push_back(prev);
      }
      break;
    }
    const bool last =
        !(s.time < t_end - 1e-14 * std::max(1.0, std::abs(t_end)));
    if (step % cfg.snapshot_stride == 0 || last) {
      out.times.push_back(s.time);
      out.snapshots.push_back(s);
    }
    prev = s;
  }
  return out;
}

/// Speed of the uniform density rho = N / L on the periodic corridor:
/// v = v_d - (N / L) * integral_0^L K(z) dz (quadrature tolerance 1e-10).
inline double uniform_equilibrium_speed(int n, double length, double v_d,
                                        const ScaledKernel<1>& k) {
  require(n >= 0, "agent count must be >= 0");
  require(length > 0.0, "domain length must be positive");
  if (n == 0) return v_d;
  const double hi = std::min(k.support_radius(), length);
  const double integral =
      adaptive_integrate([&](double z) { return k.value1d(z); }, 0.0, hi, 1e-10);
  return v_d - (n / length) * integral;
}

/// Re(sigma_k) = -(2 pi k / L) (N / L) integral_0^L K(z) sin(2 pi k z / L) dz
/// for the linearization around the uniform density; even in k.
inline double macro_mode_growth_rate(int n, double length, int mode,
                                     const ScaledKernel<1>& k) {
  const double two_pi = 2.0 * 3.14159265358979323846;
  const double hi = std::min(k.support_radius(), length);
  const double integral = adaptive_integrate(
      [&](double z) { return k.value1d(z) * std::sin(two_pi * mode * z / length); },
      0.0, hi, 1e-10);
  return -(two_pi * mode / length) * (n / length) * integral;
}

inline std::vector<double> macro_stability_spectrum(int n, double length,
                                                    const ScaledKernel<1>& k,
                                                    int k_max) {
  require(k_max >= 1, "need at least one mode");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max));
  for (int mode = 1; mode <= k_max; ++mode)
    out.push_back(macro_mode_growth_rate(n, length, mode, k));
  return out;
}

/// Cell averages of a bump measure on the periodic interval [0, L); the
/// supports must sit inside the interval. Averages are rescaled so the grid
/// carries exactly the bump mass.
inline GridDensity1D grid_from_bumps(const BumpMeasure<1>& b, double length,
                                     int cells) {
  require(cells >= 2, "need at least two cells");
  for (const auto& c : b.centers)
    require(c[0] - b.radius >= 0.0 && c[0] + b.radius <= length,
            "bump support leaves [0, L); shift the centers first");
  GridDensity1D g;
  g.length = length;
  g.cell_averages.resize(static_cast<std::size_t>(cells));
  const double dx = length / cells;
  for (int i = 0; i < cells; ++i) {
    const double lo = i * dx, hi = (i + 1) * dx;
    g.cell_averages[static_cast<std::size_t>(i)] =
        adaptive_integrate([&](double x) { return b.density(vec1(x)); }, lo, hi,
                           1e-12) /
        dx;
  }
  const double mass = total_mass(g);
  const double target = static_cast<double>(b.count());
  if (mass > 0.0) {
    const double f = target / mass;
    for (auto& a : g.cell_averages) a *= f;
  }
  return g;
}

}  // namespace crowdscale
