#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "crowdscale/cloud.hpp"
#include "crowdscale/config.hpp"
#include "crowdscale/desired_velocity.hpp"
#include "crowdscale/domain.hpp"
#include "crowdscale/kernel.hpp"
#include "crowdscale/macro.hpp"
#include "crowdscale/micro.hpp"
#include "crowdscale/util.hpp"
#include "crowdscale/wasserstein.hpp"

namespace crowdscale {

struct XiReport {
  double xi_n = 0.0;    // 2 max{Lip(v_d), N Lip(K)}
  double xi_star = 0.0; // 2 max{Lip(v_d), Lip(base)}; valid when a + b >= 1
  bool uniform_bound_valid = false;
};

/// Lipschitz modulus controlling all exponential stability bounds. Rejects
/// kernels outside the Lipschitz theory.
template <int D>
XiReport xi_n(const DesiredVelocity<D>& vd, const ScaledKernel<D>& k) {
  XiReport r;
  const double lip_k = k.lipschitz();
  r.xi_n = 2.0 * std::max(vd.lipschitz(), k.n_agents() * lip_k);
  r.xi_star = 2.0 * std::max(vd.lipschitz(), k.base().lipschitz_const);
  r.uniform_bound_valid = k.admissible();
  return r;
}

/// Ceiling e^{xi t (1 + e^{xi T})} W1(mu_0, nu_0) of the continuous
/// dependence estimate.
inline double continuous_dependence_bound(double w1_initial, double xi,
                                          double t, double t_final) {
  require(t >= 0.0, "time must be nonnegative");
  require(t <= t_final, "bound is stated for t <= T");
  return std::exp(xi * t * (1.0 + std::exp(xi * t_final))) * w1_initial;
}

struct SnapshotBound {
  double t = 0.0;
  double observed = 0.0;
  double ceiling = 0.0;
};

struct BoundReport {
  double xi_n = 0.0;
  double bound_factor = 1.0;        // exponential factor at final time
  double observed = 0.0;            // W1 at final time
  double predicted_ceiling = 0.0;   // ceiling at final time
  bool satisfied = true;            // all snapshots within ceiling + 1e-9
  std::vector<SnapshotBound> snapshots;
};

namespace detail {

template <int D, class W1At>
BoundReport bound_report_from_snapshots(const std::vector<double>& times,
                                        double xi, double t_final,
                                        W1At&& w1_at) {
  BoundReport report;
  report.xi_n = xi;
  const double w1_init = w1_at(0);
  for (std::size_t s = 0; s < times.size(); ++s) {
    SnapshotBound row;
    row.t = times[s];
    row.observed = w1_at(s);
    row.ceiling = continuous_dependence_bound(w1_init, xi, row.t, t_final);
    if (row.observed > row.ceiling + 1e-9) report.satisfied = false;
    report.snapshots.push_back(row);
  }
  report.observed = report.snapshots.back().observed;
  report.predicted_ceiling = report.snapshots.back().ceiling;
  report.bound_factor =
      w1_init > 0.0
          ? report.predicted_ceiling / w1_init
          : std::exp(xi * t_final * (1.0 + std::exp(xi * t_final)));
  return report;
}

}  // namespace detail

/// Simulates two atomic initial conditions with the particle solver and
/// checks W1(mu_t, nu_t) against the continuous-dependence ceiling at every
/// snapshot. Distances are taken on the line, so the domain must be free.
template <int D>
BoundReport verify_continuous_dependence(const AtomicMeasure<D>& mu0,
                                         const AtomicMeasure<D>& nu0,
                                         const DesiredVelocity<D>& vd,
                                         const ScaledKernel<D>& k,
                                         const Domain<D>& dom,
                                         const SimConfig& cfg) {
  require(mu0.count() == nu0.count(),
          "continuous dependence compares equal-mass crowds");
  require(!dom.is_periodic(),
          "continuous dependence distances are taken on the line; use a free "
          "domain");
  const double xi = xi_n(vd, k).xi_n;

  const MicroState<D> sa{0.0, mu0.positions};
  const MicroState<D> sb{0.0, nu0.positions};
  const auto ta = integrate_micro(sa, vd, k, dom, cfg);
  const auto tb = integrate_micro(sb, vd, k, dom, cfg);
  require(!ta.aborted && !tb.aborted, "solver aborted during bound check");
  require(ta.times.size() == tb.times.size(),
          "paired runs produced different snapshot grids");

  return detail::bound_report_from_snapshots<D>(
      ta.times, xi, cfg.t_final, [&](std::size_t s) {
        AtomicMeasure<D> a{ta.snapshots[s].positions};
        AtomicMeasure<D> b{tb.snapshots[s].positions};
        if constexpr (D == 1) {
          return w1_1d_cdf(cdf_of(a), cdf_of(b)).value;
        } else {
          return w1_lp_oracle(a, b).value;
        }
      });
}

/// Bump-measure variant: both crowds evolve under the characteristics
/// solver and the distance is measured between the solver clouds.
template <int D>
BoundReport verify_continuous_dependence(const BumpMeasure<D>& mu0,
                                         const BumpMeasure<D>& nu0,
                                         const DesiredVelocity<D>& vd,
                                         const ScaledKernel<D>& k,
                                         const Domain<D>& dom,
                                         const SimConfig& cfg) {
  require(mu0.count() == nu0.count(),
          "continuous dependence compares equal-mass crowds");
  require(!dom.is_periodic(),
          "continuous dependence distances are taken on the line; use a free "
          "domain");
  const double xi = xi_n(vd, k).xi_n;

  const auto ta = integrate_characteristics(mu0, vd, k, dom, cfg);
  const auto tb = integrate_characteristics(nu0, vd, k, dom, cfg);
  require(!ta.aborted && !tb.aborted, "solver aborted during bound check");
  require(ta.times.size() == tb.times.size(),
          "paired runs produced different snapshot grids");

  return detail::bound_report_from_snapshots<D>(
      ta.times, xi, cfg.t_final, [&](std::size_t s) {
        if constexpr (D == 1) {
          return w1_1d_cdf(cdf_of(ta.snapshots[s].cloud),
                           cdf_of(tb.snapshots[s].cloud))
              .value;
        } else {
          return w1_lp_oracle(ta.snapshots[s].cloud, tb.snapshots[s].cloud)
              .value;
        }
      });
}

/// Flow-map expansion check (regularity of the flow, part i): the particle
/// trajectories are the flow map sampled at the initial positions, so
/// |gamma_t(y) - gamma_t(x)| <= e^{xi t} |y - x| is tested on all pairs at
/// all snapshots. Returns the worst ratio observed / ceiling (<= 1 means the
/// bound holds with slack 1 - ratio).
template <int D>
double flow_map_expansion_ratio(const Trajectory<MicroState<D>>& traj,
                                double xi) {
  double worst = 0.0;
  const auto& x0 = traj.snapshots.front().positions;
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    const double t = traj.times[s] - traj.times.front();
    const double grow = std::exp(xi * t);
    const auto& xt = traj.snapshots[s].positions;
    for (std::size_t i = 0; i < x0.size(); ++i)
      for (std::size_t j = i + 1; j < x0.size(); ++j) {
        const double base = norm(x0[j] - x0[i]);
        if (base == 0.0) continue;
        worst = std::max(worst, norm(xt[j] - xt[i]) / (grow * base));
      }
  }
  return worst;
}

/// Trajectories of passive tracers advected through the velocity field of an
/// atomic solution (the tracers do not contribute to the measure). Used to
/// sample the cross-solution flow map gamma^nu_t at mu's initial points.
template <int D>
struct TracerRun {
  Trajectory<MicroState<D>> carrier;              // the nu-solution itself
  std::vector<std::vector<Vec<D>>> tracer_paths;  // [snapshot][tracer]
};

template <int D>
TracerRun<D> advect_tracers(const AtomicMeasure<D>& nu0,
                            const std::vector<Vec<D>>& tracers0,
                            const DesiredVelocity<D>& vd,
                            const ScaledKernel<D>& k, const Domain<D>& dom,
                            const SimConfig& cfg) {
  check_periodic_support(k, dom);
  const std::size_t n = nu0.positions.size();

  TracerRun<D> out;
  detail::fill_run_diagnostics(out.carrier, static_cast<int>(n), vd, k,
                               cfg.t_final);
  const double dt = cfg.dt ? *cfg.dt : detail::default_dt(out.carrier.xi_n);
  require(dt > 0.0 && cfg.t_final >= dt, "need 0 < dt <= t_final");

  std::vector<Vec<D>> state = nu0.positions;
  state.insert(state.end(), tracers0.begin(), tracers0.end());
  for (auto& x : state) x = dom.wrap(x);

  auto snapshot = [&](double t) {
    MicroState<D> s;
    s.time = t;
    s.positions.assign(state.begin(), state.begin() + static_cast<long>(n));
    out.carrier.times.push_back(t);
    out.carrier.snapshots.push_back(std::move(s));
    out.tracer_paths.emplace_back(state.begin() + static_cast<long>(n),
                                  state.end());
  };
  snapshot(0.0);

  auto rhs = [&](double, const std::vector<Vec<D>>& xs,
                 std::vector<Vec<D>>& dx) {
    // Interaction sums run over the carrier atoms only.
    for (std::size_t i = 0; i < xs.size(); ++i) {
      KahanVec<D> acc;
      for (std::size_t j = 0; j < n; ++j)
        acc.add(k(dom.gap(xs[i], xs[j])));
      dx[i] = vd(xs[i]) - acc.value();
    }
  };

  RkWorkspace<D> ws;
  const detail::StepSchedule sched(0.0, cfg.t_final, dt);
  double t = 0.0;
  for (long step = 1; step <= sched.n_steps; ++step) {
    const double target = sched.target(step);
    rk_step(cfg.rk_order, t, target - t, state, rhs, ws);
    t = target;
    for (auto& x : state) x = dom.wrap(x);
    if (step % cfg.snapshot_stride == 0 || step == sched.n_steps) snapshot(t);
  }
  return out;
}

/// Push-forward by U(z) = N^{b' - b} z, the change of variables of the
/// scaling equivalence.
template <int D>
CrowdMeasure<D> scaling_transform(const CrowdMeasure<D>& m, double beta_from,
                                  double beta_to, int n) {
  const double a = std::pow(static_cast<double>(n), beta_to - beta_from);
  return push_forward(m, PointMap<D>::linear(a));
}

struct ScalingReport {
  double scale_factor = 1.0;  // N^{b' - b}
  std::vector<double> times;
  std::vector<double> discrepancy;    // W1(nu_t, U # mu_t)
  std::vector<double> error_ceiling;  // step-refinement estimate per snapshot

  double terminal() const { return discrepancy.back(); }
  double max_discrepancy() const {
    double m = 0.0;
    for (double d : discrepancy) m = std::max(m, d);
    return m;
  }
};

/// Runs mu under K^N_{a,b} and nu = U # mu_0 under K^N_{a',b'} with
/// a + b = a' + b' and v_d = 0, then measures W1(nu_t, U # mu_t) per
/// snapshot. The identity nu_t = U # mu_t is exact in continuous time, so
/// the discrepancy is bounded by integrator error; both systems also run at
/// half the step and the per-snapshot Richardson estimate of that error is
/// reported as the ceiling.
template <int D>
ScalingReport verify_scaling_equivalence(const AtomicMeasure<D>& mu0,
                                         double alpha, double beta,
                                         double alpha2, double beta2,
                                         const KernelProfile<D>& base,
                                         const DesiredVelocity<D>& vd,
                                         const SimConfig& cfg) {
  require(std::abs((alpha + beta) - (alpha2 + beta2)) <= 1e-12,
          "scaling equivalence requires matching exponent sums");
  require(vd.is_zero(), "scaling equivalence is stated for v_d = 0");
  const int n = mu0.count();
  require(n >= 1, "need at least one agent");

  ScalingReport report;
  report.scale_factor = std::pow(static_cast<double>(n), beta2 - beta);
  const PointMap<D> u = PointMap<D>::linear(report.scale_factor);

  const ScaledKernel<D> ka(base, alpha, beta, n);
  const ScaledKernel<D> kb(base, alpha2, beta2, n);
  const auto dom = Domain<D>::free();

  const MicroState<D> sa{0.0, mu0.positions};
  const MicroState<D> sb{0.0, push_forward(mu0, u).positions};
  const auto ta = integrate_micro(sa, vd, ka, dom, cfg);
  const auto tb = integrate_micro(sb, vd, kb, dom, cfg);
  require(!ta.aborted && !tb.aborted, "solver aborted during scaling check");
  require(ta.times.size() == tb.times.size(),
          "paired runs produced different snapshot grids");

  SimConfig half = cfg;
  half.dt = 0.5 * (cfg.dt ? *cfg.dt : detail::default_dt(ta.xi_n));
  half.snapshot_stride = 2 * cfg.snapshot_stride;
  const auto ta2 = integrate_micro(sa, vd, ka, dom, half);
  const auto tb2 = integrate_micro(sb, vd, kb, dom, half);
  require(ta2.times.size() == ta.times.size(),
          "half-step runs produced a different snapshot grid");

  const double order_factor = cfg.rk_order == 4   ? 16.0 / 15.0
                              : cfg.rk_order == 2 ? 4.0 / 3.0
                                                  : 2.0;
  for (std::size_t s = 0; s < ta.times.size(); ++s) {
    AtomicMeasure<D> mapped{ta.snapshots[s].positions};
    mapped = push_forward(mapped, u);
    AtomicMeasure<D> nu{tb.snapshots[s].positions};
    double w1;
    if constexpr (D == 1) {
      w1 = w1_1d_cdf(cdf_of(nu), cdf_of(mapped)).value;
    } else {
      w1 = w1_lp_oracle(nu, mapped).value;
    }
    KahanSum ceiling;
    for (int i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      ceiling.add(std::abs(report.scale_factor) *
                  norm(ta.snapshots[s].positions[idx] -
                       ta2.snapshots[s].positions[idx]));
      ceiling.add(norm(tb.snapshots[s].positions[idx] -
                       tb2.snapshots[s].positions[idx]));
    }
    report.times.push_back(ta.times[s]);
    report.discrepancy.push_back(w1);
    report.error_ceiling.push_back(order_factor * ceiling.value());
  }
  return report;
}

}  // namespace crowdscale
