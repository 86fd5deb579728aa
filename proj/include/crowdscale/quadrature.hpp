#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "crowdscale/util.hpp"

namespace crowdscale {

/// Gauss-Legendre rule on [-1, 1]: nodes (strictly interior) and weights.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes by Newton iteration on P_n; accurate to ~1e-15 for the orders used
/// here. Rules are cached per order; map references stay valid under later
/// insertions, so callers may hold them across the lock.
inline const GaussRule& gauss_legendre(int n) {
  require(n >= 1, "Gauss-Legendre order must be >= 1");
  static std::mutex cache_mutex;
  static std::map<int, GaussRule> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
  }

  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess for the i-th root.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n and P_n' by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto [pos, unused] = cache.emplace(n, std::move(rule));
  return pos->second;
}

/// Fixed-order Gauss-Legendre on [a, b].
inline double gauss_integrate(const std::function<double(double)>& f, double a,
                              double b, int order = 20) {
  const GaussRule& rule = gauss_legendre(order);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  KahanSum s;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    s.add(rule.weights[i] * f(mid + half * rule.nodes[i]));
  return half * s.value();
}

/// Adaptive bisection with an embedded GL10/GL20 pair. Nodes are strictly
/// interior, so integrands may be undefined (or have the "wrong" value) at
/// interval endpoints -- this is what allows the kernels' jump at z = 0 to be
/// integrated as its a.e. limit.
inline double adaptive_integrate(const std::function<double(double)>& f,
                                 double a, double b, double tol = 1e-10,
                                 int max_depth = 48) {
  if (a == b) return 0.0;
  struct Rec {
    static double go(const std::function<double(double)>& f, double a, double b,
                     double tol, int depth) {
      const double coarse = gauss_integrate(f, a, b, 10);
      const double fine = gauss_integrate(f, a, b, 20);
      if (std::abs(fine - coarse) <= tol || depth <= 0) return fine;
      const double mid = 0.5 * (a + b);
      return go(f, a, mid, 0.5 * tol, depth - 1) +
             go(f, mid, b, 0.5 * tol, depth - 1);
    }
  };
  return Rec::go(f, a, b, tol, max_depth);
}

/// Mean value of f over [a, b].
inline double interval_mean(const std::function<double(double)>& f, double a,
                            double b, double tol = 1e-10) {
  require(b > a, "interval_mean needs a nonempty interval");
  return adaptive_integrate(f, a, b, tol * (b - a)) / (b - a);
}

/// Surface area of the unit sphere in R^d.
inline double unit_sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * 3.14159265358979323846;
    case 3: return 4.0 * 3.14159265358979323846;
    default: throw std::invalid_argument("dimension must be 1, 2 or 3");
  }
}

}  // namespace crowdscale
