#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "crowdscale/config.hpp"
#include "crowdscale/desired_velocity.hpp"
#include "crowdscale/domain.hpp"
#include "crowdscale/kernel.hpp"
#include "crowdscale/rk.hpp"
#include "crowdscale/trajectory.hpp"
#include "crowdscale/util.hpp"
#include "crowdscale/vec.hpp"

namespace crowdscale {

template <int D>
struct MicroState {
  double time = 0.0;
  std::vector<Vec<D>> positions;

  int count() const { return static_cast<int>(positions.size()); }
};

template <int D>
void check_periodic_support(const ScaledKernel<D>& k, const Domain<D>& dom) {
  if (dom.is_periodic())
    require(k.support_radius() < dom.length(),
            "kernel support radius >= domain length on a periodic domain "
            "(ill-posed image sum)");
}

/// Sum of K(X_j - x) over a point set, optionally weighted, in fixed index
/// order with compensated summation. Both the particle model and the
/// measure velocity funnel through here, so the atomic specialization of the
/// two coincides bit for bit.
template <int D>
Vec<D> interaction_sum(const std::vector<Vec<D>>& pts, const double* weights,
                       const Vec<D>& x, const ScaledKernel<D>& k,
                       const Domain<D>& dom) {
  KahanVec<D> acc;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    Vec<D> kv = k(dom.gap(x, pts[j]));
    if (weights) kv *= weights[j];
    acc.add(kv);
  }
  return acc.value();
}

/// dX_i/dt = v_d(X_i) - sum_j K(X_j - X_i). The j = i term contributes K(0),
/// which vanishes for self-interaction-free kernels. On the periodic corridor
/// the relative position is the forward gap in [0, L).
template <int D>
Vec<D> micro_velocity(const MicroState<D>& s, int i,
                      const DesiredVelocity<D>& vd, const ScaledKernel<D>& k,
                      const Domain<D>& dom) {
  require(i >= 0 && i < s.count(), "agent index out of range");
  check_periodic_support(k, dom);
  const Vec<D>& x = s.positions[static_cast<std::size_t>(i)];
  return vd(x) - interaction_sum(s.positions, nullptr, x, k, dom);
}

namespace detail {

inline double default_dt(double xi) {
  if (std::isfinite(xi) && xi > 0.0) return std::min(0.01, 0.1 / xi);
  return 0.01;
}

/// Fixed-step schedule through [t0, t0 + span]: full steps of dt with the
/// last one shortened to land exactly on the final time. Step counts (and
/// so snapshot grids) are deterministic functions of (span, dt), which
/// keeps paired runs at dt and dt/2 aligned.
struct StepSchedule {
  double t0 = 0.0;
  double dt = 0.0;
  double t_end = 0.0;
  long n_steps = 0;

  StepSchedule(double start, double span, double step)
      : t0(start), dt(step), t_end(start + span) {
    n_steps = std::max(1L, std::lround(std::ceil(span / step - 1e-9)));
  }
  double target(long k) const { return k == n_steps ? t_end : t0 + k * dt; }
};

template <int D>
void fill_run_diagnostics(Trajectory<MicroState<D>>& out, int n,
                          const DesiredVelocity<D>& vd,
                          const ScaledKernel<D>& k, double t_final);

}  // namespace detail

/// Fixed-step explicit RK integration of the particle system through
/// t_final. Positions wrap after every full step on periodic domains; a
/// non-finite state aborts the run, keeping the last valid snapshot.
template <int D>
Trajectory<MicroState<D>> integrate_micro(const MicroState<D>& s0,
                                          const DesiredVelocity<D>& vd,
                                          const ScaledKernel<D>& k,
                                          const Domain<D>& dom,
                                          const SimConfig& cfg) {
  check_periodic_support(k, dom);
  require(cfg.t_final > 0.0, "final time must be positive");

  Trajectory<MicroState<D>> out;
  detail::fill_run_diagnostics(out, s0.count(), vd, k, cfg.t_final);

  const double dt = cfg.dt ? *cfg.dt : detail::default_dt(out.xi_n);
  require(dt > 0.0, "time step must be positive");
  require(cfg.t_final >= dt, "final time must be at least one step");

  MicroState<D> s = s0;
  for (auto& x : s.positions) x = dom.wrap(x);
  out.times.push_back(s.time);
  out.snapshots.push_back(s);

  auto rhs = [&](double, const std::vector<Vec<D>>& xs,
                 std::vector<Vec<D>>& dx) {
    for (std::size_t i = 0; i < xs.size(); ++i)
      dx[i] = vd(xs[i]) - interaction_sum(xs, nullptr, xs[i], k, dom);
  };

  RkWorkspace<D> ws;
  const detail::StepSchedule sched(s0.time, cfg.t_final, dt);
  MicroState<D> prev = s;
  for (long step = 1; step <= sched.n_steps; ++step) {
    const double target = sched.target(step);
    rk_step(cfg.rk_order, s.time, target - s.time, s.positions, rhs, ws);
    s.time = target;
    bool ok = true;
    for (const auto& x : s.positions) ok = ok && is_finite(x);
    if (!ok) {
      out.aborted = true;
      out.abort_reason = "non-finite state at t = " + format_double(s.time);
      if (out.times.back() != prev.time) {
        out.times.push_back(prev.time);
        out.snapshots.push_back(prev);
      }
      break;
    }
    for (auto& x : s.positions) x = dom.wrap(x);
    if (step % cfg.snapshot_stride == 0 || step == sched.n_steps) {
      out.times.push_back(s.time);
      out.snapshots.push_back(s);
    }
    prev = s;
  }
  return out;
}

/// Equilibrium speed of the equispaced lattice on [0, L):
/// w = v_d - sum_{h=0}^{N-1} K(h L / N). The h = 0 term is the
/// self-interaction K(0), zero for the stationary-assumption kernels.
inline double lattice_equilibrium_speed(int n, double length, double v_d,
                                        const ScaledKernel<1>& k) {
  require(n >= 1, "need at least one agent");
  require(length > 0.0, "domain length must be positive");
  KahanSum s;
  for (int h = 0; h < n; ++h) s.add(k.value1d(h * length / n));
  return v_d - s.value();
}

/// Real part of the linearization eigenvalue for Fourier mode `mode`:
/// Re(sigma_k) = sum_{h=1}^{N-1} K'(h L / N) (1 - cos(2 pi k h / N)).
inline double micro_mode_growth_rate(int n, double length, int mode,
                                     const ScaledKernel<1>& k) {
  const double two_pi = 2.0 * 3.14159265358979323846;
  KahanSum s;
  for (int h = 1; h < n; ++h)
    s.add(k.deriv1d(h * length / n) *
          (1.0 - std::cos(two_pi * mode * h / n)));
  return s.value();
}

/// Re(sigma_k) for k = 1 .. N-1.
inline std::vector<double> micro_stability_spectrum(int n, double length,
                                                    const ScaledKernel<1>& k) {
  require(n >= 2, "spectrum needs at least two agents");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) - 1);
  for (int mode = 1; mode < n; ++mode)
    out.push_back(micro_mode_growth_rate(n, length, mode, k));
  return out;
}

/// Equispaced lattice state X_i = i L / N on [0, L).
inline MicroState<1> lattice_state(int n, double length) {
  MicroState<1> s;
  s.positions.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s.positions.push_back(vec1(i * length / n));
  return s;
}

/// Forward headways of a periodic 1-d state, in position order.
inline std::vector<double> forward_headways(const MicroState<1>& s,
                                            double length) {
  std::vector<double> xs(s.positions.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = s.positions[i][0];
  std::sort(xs.begin(), xs.end());
  std::vector<double> h(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double next = i + 1 < xs.size() ? xs[i + 1] : xs[0] + length;
    h[i] = next - xs[i];
  }
  return h;
}

struct PerturbationDecay {
  double predicted_rate = 0.0;  // max_k Re(sigma_k)
  int slowest_mode = 1;
  double measured_rate = 0.0;   // least-squares slope of log |eta_hat_k*|
  double initial_amplitude = 0.0;
};

/// Measures the decay of a random lattice perturbation against the
/// linearized prediction. The perturbation is projected on the slowest
/// Fourier mode, whose coefficient evolves as exp(sigma_k t) in the linear
/// regime, so |coef| decays at exactly Re(sigma_k).
inline PerturbationDecay lattice_perturbation_decay(
    int n, double length, double v_d, const ScaledKernel<1>& k,
    double amplitude, unsigned seed, double t_final = 2.0, double dt = 0.005) {
  PerturbationDecay result;
  const auto spectrum = micro_stability_spectrum(n, length, k);
  result.slowest_mode = 1;
  result.predicted_rate = spectrum[0];
  for (int m = 2; m < n; ++m)
    if (spectrum[static_cast<std::size_t>(m - 1)] > result.predicted_rate) {
      result.predicted_rate = spectrum[static_cast<std::size_t>(m - 1)];
      result.slowest_mode = m;
    }

  MicroState<1> s = lattice_state(n, length);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-amplitude, amplitude);
  std::vector<double> eta(static_cast<std::size_t>(n));
  double mean = 0.0;
  for (auto& e : eta) {
    e = jitter(rng);
    mean += e;
  }
  mean /= n;
  for (int i = 0; i < n; ++i) {
    eta[static_cast<std::size_t>(i)] -= mean;  // drop the rigid k = 0 mode
    s.positions[static_cast<std::size_t>(i)][0] += eta[static_cast<std::size_t>(i)];
  }
  result.initial_amplitude = amplitude;

  SimConfig cfg;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.snapshot_stride = std::max(1, static_cast<int>(t_final / dt) / 80);
  const double w = lattice_equilibrium_speed(n, length, v_d, k);
  const auto dom = Domain<1>::periodic(length);
  const auto traj =
      integrate_micro(s, DesiredVelocity<1>::constant(vec1(v_d)), k, dom, cfg);

  const double two_pi = 2.0 * 3.14159265358979323846;
  std::vector<double> ts, logs;
  for (std::size_t snap = 0; snap < traj.snapshots.size(); ++snap) {
    const double t = traj.times[snap];
    if (t < 0.25 * t_final) continue;  // let fast modes die out first
    std::complex<double> coef(0.0, 0.0);
    for (int i = 0; i < n; ++i) {
      double dev = traj.snapshots[snap].positions[static_cast<std::size_t>(i)][0] -
                   (i * length / n + w * t);
      dev = std::remainder(dev, length);
      coef += dev * std::exp(std::complex<double>(
                        0.0, -two_pi * result.slowest_mode * i / n));
    }
    const double amp = std::abs(coef) / n;
    if (amp < 1e-13) break;  // noise floor
    ts.push_back(t);
    logs.push_back(std::log(amp));
  }
  require(ts.size() >= 3, "perturbation decayed below the noise floor before "
                          "a rate could be fitted; reduce t_final");
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += logs[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * logs[i];
  }
  const double m = static_cast<double>(ts.size());
  result.measured_rate = (m * stl - st * sl) / (m * stt - st * st);
  return result;
}

namespace detail {

template <int D>
void fill_run_diagnostics(Trajectory<MicroState<D>>& out, int n,
                          const DesiredVelocity<D>& vd,
                          const ScaledKernel<D>& k, double t_final) {
  const auto& base = k.base();
  if (!base.discontinuous_at_zero && base.is_lipschitz()) {
    const double lip_k = k.lipschitz();
    out.xi_n = 2.0 * std::max(vd.lipschitz(), n * lip_k);
    const double lv = vd.lipschitz() + n * lip_k;
    out.structure_factor = lv * t_final * std::exp(lv * t_final);
  }
}

}  // namespace detail

}  // namespace crowdscale
