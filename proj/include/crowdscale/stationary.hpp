#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "crowdscale/kernel.hpp"
#include "crowdscale/macro.hpp"
#include "crowdscale/micro.hpp"
#include "crowdscale/quadrature.hpp"
#include "crowdscale/util.hpp"

namespace crowdscale {

struct SpeedDiagramRow {
  int n = 0;
  double v_micro = 0.0;
  double v_macro = 0.0;
  double dv = 0.0;           // v_micro - v_macro
  double dv_over_k0p = std::numeric_limits<double>::quiet_NaN();
};

struct SpeedDiagram {
  double length = 0.0;
  double v_d = 0.0;
  std::vector<SpeedDiagramRow> rows;
};

/// Equilibrium speeds of the lattice and of the uniform density, per N.
inline SpeedDiagram speed_diagram(double length, const std::vector<int>& ns,
                                  double v_d, const ScaledKernel<1>& k) {
  SpeedDiagram d;
  d.length = length;
  d.v_d = v_d;
  const double k0p = k.right_limit_at_zero();
  for (int n : ns) {
    SpeedDiagramRow row;
    row.n = n;
    row.v_micro = lattice_equilibrium_speed(n, length, v_d, k);
    row.v_macro = uniform_equilibrium_speed(n, length, v_d, k);
    row.dv = row.v_micro - row.v_macro;
    if (k0p > 0.0) row.dv_over_k0p = row.dv / k0p;
    d.rows.push_back(row);
  }
  return d;
}

/// Direct route for dv(N) = v[lattice] - v[uniform]; the constant desired
/// speed cancels.
inline double delta_v_direct(int n, double length, const ScaledKernel<1>& k) {
  return lattice_equilibrium_speed(n, length, 0.0, k) -
         uniform_equilibrium_speed(n, length, 0.0, k);
}

/// Three-piece evaluation of dv(N) over the partition of [0, L] into a half
/// cell at each end and full cells around the frozen lattice points
/// X_i = (i - 1) L / N: dv = <K>_{E1}/2 - K(0) + sum_i (<K>_{Ei} - K(X_i)) +
/// <K>_{EN+1}/2. The -K(0) term vanishes for self-interaction-free kernels,
/// where the pieces are exactly the displayed ones.
struct DeltaVPartition {
  double piece_first = 0.0;
  std::vector<double> middle_pieces;  // i = 2 .. N
  double piece_last = 0.0;

  double middle_sum() const {
    KahanSum s;
    for (double p : middle_pieces) s.add(p);
    return s.value();
  }
  double total() const {
    KahanSum s;
    s.add(piece_first);
    for (double p : middle_pieces) s.add(p);
    s.add(piece_last);
    return s.value();
  }
};

inline DeltaVPartition delta_v_partition(int n, double length,
                                         const ScaledKernel<1>& k) {
  require(n >= 1, "partition needs at least one agent");
  const double h = length / n;
  const double radius = std::min(k.support_radius(), length);
  // Integrate only where K can be nonzero, split at the support edge where
  // the built-in profiles have a kink.
  auto mean_k = [&](double lo, double hi) {
    const double width = hi - lo;
    double integral = 0.0;
    const double a = std::max(lo, 0.0);
    const double cut = std::min(hi, radius);
    if (cut > a)
      integral = adaptive_integrate([&](double z) { return k.value1d(z); }, a,
                                    cut, 1e-12);
    return integral / width;
  };

  DeltaVPartition out;
  out.piece_first = 0.5 * mean_k(0.0, 0.5 * h) - k.value1d(0.0);
  out.middle_pieces.reserve(static_cast<std::size_t>(n > 0 ? n - 1 : 0));
  for (int i = 2; i <= n; ++i) {
    const double x_i = (i - 1) * h;
    const double lo = x_i - 0.5 * h;
    const double hi = x_i + 0.5 * h;
    if (lo >= radius) {
      out.middle_pieces.push_back(0.0);  // cell fully outside the support
      continue;
    }
    out.middle_pieces.push_back(mean_k(lo, hi) - k.value1d(x_i));
  }
  out.piece_last = 0.5 * mean_k(length - 0.5 * h, length);
  return out;
}

struct DeltaVLimit {
  std::vector<int> ns;       // doubling sequence 2, 4, ..., n_max
  std::vector<double> dv;
  double predicted_limit = 0.0;    // K(0+)/2 - K(0)
  double terminal_deviation = 0.0; // |dv(n_max) - predicted_limit|
  double extrapolated_limit = 0.0; // Richardson on the last three doublings
};

/// dv(N) along a doubling sequence, against the limit K(0+)/2 (shifted by
/// -K(0) for kernels with self-interaction).
inline DeltaVLimit delta_v_limit_check(const ScaledKernel<1>& k, double length,
                                       int n_max) {
  require(n_max >= 8, "need n_max >= 8 for the limit check");
  DeltaVLimit out;
  out.predicted_limit = 0.5 * k.right_limit_at_zero() - k.value_at_zero();
  for (int n = 2; n <= n_max; n *= 2) {
    out.ns.push_back(n);
    out.dv.push_back(delta_v_direct(n, length, k));
  }
  out.terminal_deviation = std::abs(out.dv.back() - out.predicted_limit);
  const std::size_t m = out.dv.size();
  const double f1 = out.dv[m - 3], f2 = out.dv[m - 2], f3 = out.dv[m - 1];
  const double denom = f2 - f3;
  if (denom != 0.0 && (f1 - f2) / denom > 1.0) {
    const double rate = (f1 - f2) / denom;
    out.extrapolated_limit = f3 + (f3 - f2) / (rate - 1.0);
  } else {
    out.extrapolated_limit = f3;
  }
  return out;
}

}  // namespace crowdscale
