#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "crowdscale/quadrature.hpp"
#include "crowdscale/util.hpp"
#include "crowdscale/vec.hpp"

namespace crowdscale {

/// Interaction kernel profile: a compactly supported vector field on R^D
/// giving the repulsive velocity contribution of a neighbour at relative
/// position z.
///
/// One-dimensional profiles used by the stationary analysis are frontal:
/// supported on [0, R], with a possible jump at z = 0 (the value K(0) is kept
/// separately from the right limit K(0+); the evaluator returns K(0) exactly
/// at z = 0). Profiles for d >= 2 are radial: K(z) = g(|z|) z/|z|.
template <int D>
struct KernelProfile {
  std::string name;
  double support_radius = 1.0;
  /// Global Lipschitz constant; NaN when the profile is not globally
  /// Lipschitz (in particular when it jumps at z = 0).
  double lipschitz_const = std::numeric_limits<double>::quiet_NaN();
  bool discontinuous_at_zero = false;
  double value_at_zero = 0.0;       // K(0), scalar magnitude
  double right_limit_at_zero = 0.0; // K(0+), 1-d profiles
  std::function<Vec<D>(const Vec<D>&)> evaluator;
  /// Analytic K'(z) on (0, R) when available (1-d). Empty -> central
  /// differences.
  std::function<double(double)> deriv1d;

  bool is_lipschitz() const { return std::isfinite(lipschitz_const); }
};

/// K(z) = (1/5)(1 - z^2) on (0, 1], zero elsewhere, K(0) = 0. Satisfies the
/// stationarity assumptions; jumps at the origin (K(0+) = 1/5).
inline KernelProfile<1> profile_fig3() {
  KernelProfile<1> p;
  p.name = "fig3";
  p.support_radius = 1.0;
  p.discontinuous_at_zero = true;
  p.value_at_zero = 0.0;
  p.right_limit_at_zero = 0.2;
  p.evaluator = [](const Vec<1>& zv) {
    const double z = zv[0];
    if (z <= 0.0 || z > 1.0) return vec1(0.0);
    return vec1(0.2 * (1.0 - z * z));
  };
  p.deriv1d = [](double z) {
    if (z <= 0.0 || z >= 1.0) return 0.0;
    return -0.4 * z;
  };
  return p;
}

/// K(z) = z(1 - z)/2 on [0, 1], zero elsewhere. Globally Lipschitz with
/// constant 1/2 and K(0+) = 0; violates the monotonicity clause of the
/// stationarity assumptions but is admissible for the time-dependent theory.
inline KernelProfile<1> profile_fig5() {
  KernelProfile<1> p;
  p.name = "fig5";
  p.support_radius = 1.0;
  p.lipschitz_const = 0.5;
  p.discontinuous_at_zero = false;
  p.value_at_zero = 0.0;
  p.right_limit_at_zero = 0.0;
  p.evaluator = [](const Vec<1>& zv) {
    const double z = zv[0];
    if (z <= 0.0 || z > 1.0) return vec1(0.0);
    return vec1(0.5 * z * (1.0 - z));
  };
  p.deriv1d = [](double z) {
    if (z <= 0.0 || z >= 1.0) return 0.0;
    return 0.5 * (1.0 - 2.0 * z);
  };
  return p;
}

/// Radial repulsive kernel K(z) = g(|z|) z/|z| with the triangular magnitude
/// g(s) = max(0, 1 - |2s - R|/R). g vanishes at 0 and at R, peaks at R/2, so
/// K is globally Lipschitz (constant 2/R: the Jacobian's singular values are
/// |g'| radially and g(s)/s tangentially, both bounded by 2/R). Works in any
/// dimension; odd in 1-d.
template <int D>
inline KernelProfile<D> profile_tent(double radius = 1.0) {
  require(radius > 0.0, "tent kernel radius must be positive");
  KernelProfile<D> p;
  p.name = "tent";
  p.support_radius = radius;
  p.lipschitz_const = 2.0 / radius;
  p.discontinuous_at_zero = false;
  p.value_at_zero = 0.0;
  p.right_limit_at_zero = 0.0;
  p.evaluator = [radius](const Vec<D>& z) {
    const double s = norm(z);
    if (s <= 0.0 || s >= radius) return Vec<D>{};
    const double g = 1.0 - std::abs(2.0 * s - radius) / radius;
    return (g / s) * z;
  };
  if constexpr (D == 1) {
    p.deriv1d = [radius](double z) {
      if (z <= 0.0 || z >= radius) return 0.0;
      return (z < 0.5 * radius ? 2.0 : -2.0) / radius;
    };
  }
  return p;
}

/// 1-d profile from tabulated (z, K(z)) samples with linear interpolation.
/// Support is [0, z_max]. If the table starts at some z_min > 0 the profile
/// is extended with the constant K(z_min) on (0, z_min) and K(0) = 0, which
/// reproduces the jump the stationarity assumptions require.
inline KernelProfile<1> tabulated_profile(std::vector<double> zs,
                                          std::vector<double> ks,
                                          const std::string& name = "table") {
  require(zs.size() == ks.size() && zs.size() >= 2,
          "tabulated profile needs at least two (z, K) samples");
  for (std::size_t i = 0; i < zs.size(); ++i) {
    require(std::isfinite(zs[i]) && std::isfinite(ks[i]),
            "tabulated profile has non-finite entries");
    if (i > 0)
      require(zs[i] > zs[i - 1], "tabulated z values must be strictly increasing");
  }
  require(zs.front() >= 0.0, "tabulated z values must be nonnegative");

  KernelProfile<1> p;
  p.name = name;
  p.support_radius = zs.back();
  const bool starts_at_zero = zs.front() == 0.0;
  const double k_first = ks.front();
  p.value_at_zero = starts_at_zero ? k_first : 0.0;
  p.right_limit_at_zero = k_first;
  p.discontinuous_at_zero = !starts_at_zero && k_first != 0.0;

  // The interpolant is globally Lipschitz only if it is continuous at 0 and
  // drops to 0 continuously at the support edge.
  const bool continuous = !p.discontinuous_at_zero && std::abs(ks.back()) == 0.0 &&
                          (starts_at_zero ? true : k_first == 0.0);
  if (continuous) {
    double max_slope = 0.0;
    for (std::size_t i = 1; i < zs.size(); ++i)
      max_slope = std::max(max_slope,
                           std::abs((ks[i] - ks[i - 1]) / (zs[i] - zs[i - 1])));
    p.lipschitz_const = max_slope;
  }

  auto table = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>(
      std::move(zs), std::move(ks));
  p.evaluator = [table](const Vec<1>& zv) {
    const double z = zv[0];
    const auto& zt = table->first;
    const auto& kt = table->second;
    if (z < 0.0 || z > zt.back()) return vec1(0.0);
    if (z == 0.0) return vec1(zt.front() == 0.0 ? kt.front() : 0.0);
    if (z <= zt.front()) return vec1(kt.front());
    const auto hi = std::upper_bound(zt.begin(), zt.end(), z);
    const std::size_t j = static_cast<std::size_t>(hi - zt.begin());
    const std::size_t i = j >= zt.size() ? zt.size() - 1 : j;
    const double t = (z - zt[i - 1]) / (zt[i] - zt[i - 1]);
    return vec1(kt[i - 1] + t * (kt[i] - kt[i - 1]));
  };
  return p;
}

/// Same 1-d profile with the value at exactly z = 0 replaced (models the
/// right-continuous variant K(0) = K(0+) discussed for the speed diagrams).
inline KernelProfile<1> with_value_at_zero(KernelProfile<1> p, double k0) {
  auto inner = p.evaluator;
  p.value_at_zero = k0;
  p.discontinuous_at_zero = (k0 != p.right_limit_at_zero);
  p.evaluator = [inner, k0](const Vec<1>& z) {
    if (z[0] == 0.0) return vec1(k0);
    return inner(z);
  };
  return p;
}

/// Member of the two-parameter family K^N_{a,b}(z) = N^{-a} B(z / N^b) built
/// over a base profile B with support radius R. Effective support radius is
/// N^b R and the Lipschitz constant scales as Lip(B) / N^{a+b}.
template <int D>
class ScaledKernel {
 public:
  explicit ScaledKernel(KernelProfile<D> base)
      : ScaledKernel(std::move(base), 0.0, 0.0, 1) {}

  ScaledKernel(KernelProfile<D> base, double alpha, double beta, int n_agents)
      : base_(std::move(base)), alpha_(alpha), beta_(beta), n_(n_agents) {
    require(n_ >= 1, "agent count must be >= 1");
    arg_scale_ = std::pow(static_cast<double>(n_), -beta_);
    val_scale_ = std::pow(static_cast<double>(n_), -alpha_);
    radius_ = std::pow(static_cast<double>(n_), beta_) * base_.support_radius;
  }

  Vec<D> operator()(const Vec<D>& z) const {
    if (norm(z) > radius_) return Vec<D>{};  // literal zero outside support
    return val_scale_ * base_.evaluator(arg_scale_ * z);
  }

  double support_radius() const { return radius_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  int n_agents() const { return n_; }
  bool admissible() const { return alpha_ + beta_ >= 1.0; }
  const KernelProfile<D>& base() const { return base_; }

  /// Lip(B) / N^{a+b}; rejects profiles that jump at the origin, which are
  /// outside the time-dependent theory.
  double lipschitz() const {
    require(!base_.discontinuous_at_zero,
            "kernel '" + base_.name +
                "' jumps at z = 0 and has no Lipschitz constant");
    require(base_.is_lipschitz(),
            "kernel '" + base_.name + "' is not globally Lipschitz");
    return base_.lipschitz_const /
           std::pow(static_cast<double>(n_), alpha_ + beta_);
  }

  double value_at_zero() const { return val_scale_ * base_.value_at_zero; }
  double right_limit_at_zero() const {
    return val_scale_ * base_.right_limit_at_zero;
  }

  /// Scalar view for 1-d kernels.
  double value1d(double z) const {
    static_assert(D == 1);
    return (*this)(vec1(z))[0];
  }

  /// K'(z), zero outside (0, R) per the stationary analysis convention
  /// (lattice points at or beyond the support edge contribute nothing).
  double deriv1d(double z) const {
    static_assert(D == 1);
    if (z <= 0.0 || z >= radius_) return 0.0;
    const double chain = val_scale_ * arg_scale_;
    if (base_.deriv1d) return chain * base_.deriv1d(arg_scale_ * z);
    const double h = 1e-6 * radius_;
    const double lo = std::max(z - h, 0.5 * std::min(z, h));
    const double hi = std::min(z + h, radius_ - 0.5 * std::min(radius_ - z, h));
    return (value1d(hi) - value1d(lo)) / (hi - lo);
  }

 private:
  KernelProfile<D> base_;
  double alpha_, beta_;
  int n_;
  double arg_scale_, val_scale_, radius_;
};

struct ClauseResult {
  std::string clause;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ClauseResult> clauses;
  bool all_pass() const {
    for (const auto& c : clauses)
      if (!c.pass) return false;
    return true;
  }
};

/// Checks the three stationarity clauses for a 1-d profile on a periodic
/// corridor of length L:
///   (i)   supp K = [0, R] with 0 < R < L,
///   (ii)  K, K'' bounded and K in C^2(0, R) (second-difference probe on a
///         1000-point grid, relative tolerance 1e-6),
///   (iii) K > 0 and K' < 0 on (0, R), K(0) = K(R) = 0, K(0+) > 0.
inline ValidationReport validate_stationary_assumptions(
    const KernelProfile<1>& p, double domain_length) {
  ValidationReport report;
  const double R = p.support_radius;
  auto value = [&p](double z) { return p.evaluator(vec1(z))[0]; };

  {  // clause (i)
    ClauseResult c{"(i) compact frontal support", true, ""};
    if (!(R > 0.0 && R < domain_length)) {
      c.pass = false;
      c.detail = "requires 0 < R < L, got R = " + format_double(R) +
                 ", L = " + format_double(domain_length);
    } else {
      for (int i = 1; i <= 64 && c.pass; ++i) {
        const double zr = R + i * (R / 32.0);
        const double zl = -i * (R / 64.0);
        if (value(zr) != 0.0 || value(zl) != 0.0) {
          c.pass = false;
          c.detail = "kernel does not vanish outside [0, R]";
        }
      }
    }
    report.clauses.push_back(std::move(c));
  }

  const int grid_n = 1000;
  const double h = 1e-3 * R;

  {  // clause (ii)
    ClauseResult c{"(ii) bounded and C^2 in (0, R)", true, ""};
    double max_abs_k = 0.0, max_abs_d2 = 0.0;
    for (int i = 0; i < grid_n && c.pass; ++i) {
      const double z = 2.0 * h + (R - 4.0 * h) * (i + 0.5) / grid_n;
      const double k = value(z);
      if (!std::isfinite(k)) {
        c.pass = false;
        c.detail = "non-finite value at z = " + format_double(z);
        break;
      }
      max_abs_k = std::max(max_abs_k, std::abs(k));
      const double d2a = (value(z - h) - 2.0 * k + value(z + h)) / (h * h);
      const double d2b =
          (value(z - 0.5 * h) - 2.0 * k + value(z + 0.5 * h)) / (0.25 * h * h);
      max_abs_d2 = std::max(max_abs_d2, std::abs(d2a));
      const double scale = 1.0 + std::max(std::abs(d2a), std::abs(d2b));
      if (std::abs(d2a - d2b) > 1e-6 * scale) {
        c.pass = false;
        c.detail = "second differences disagree at z = " + format_double(z) +
                   " (not C^2)";
      }
    }
    if (c.pass && (!std::isfinite(max_abs_k) || !std::isfinite(max_abs_d2))) {
      c.pass = false;
      c.detail = "unbounded K or K''";
    }
    report.clauses.push_back(std::move(c));
  }

  {  // clause (iii)
    ClauseResult c{"(iii) positive decreasing, K(0) = K(R) = 0, K(0+) > 0", true,
                   ""};
    std::string problems;
    for (int i = 0; i < grid_n; ++i) {
      const double z = 2.0 * h + (R - 4.0 * h) * (i + 0.5) / grid_n;
      if (!(value(z) > 0.0)) {
        problems += " K <= 0 at z = " + format_double(z) + ";";
        break;
      }
    }
    for (int i = 0; i < grid_n; ++i) {
      const double z = 2.0 * h + (R - 4.0 * h) * (i + 0.5) / grid_n;
      const double slope = (value(z + h) - value(z - h)) / (2.0 * h);
      if (!(slope < 0.0)) {
        problems += " K' >= 0 at z = " + format_double(z) + ";";
        break;
      }
    }
    if (p.value_at_zero != 0.0) problems += " K(0) != 0;";
    if (std::abs(value(R)) > 1e-12) problems += " K(R) != 0;";
    if (!(p.right_limit_at_zero > 0.0)) problems += " K(0+) <= 0;";
    if (!problems.empty()) {
      c.pass = false;
      c.detail = problems;
    }
    report.clauses.push_back(std::move(c));
  }
  return report;
}

/// Max sampled difference quotient; the declared Lipschitz constant must
/// dominate it. Pairs straddling a jump at the origin are excluded when the
/// profile declares one.
template <int D>
inline double max_sampled_difference_quotient(const KernelProfile<D>& p,
                                              int samples = 4000,
                                              unsigned seed = 12345) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.2 * p.support_radius,
                                               1.2 * p.support_radius);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec<D> a{}, b{};
    for (int i = 0; i < D; ++i) {
      a[i] = coord(rng);
      b[i] = coord(rng);
    }
    if (s % 4 == 0) b = a + 1e-4 * (b - a);  // include near-coincident pairs
    const double dz = norm(b - a);
    if (dz == 0.0) continue;
    if (p.discontinuous_at_zero && (norm(a) == 0.0 || norm(b) == 0.0)) continue;
    const double dk = norm(p.evaluator(b) - p.evaluator(a));
    worst = std::max(worst, dk / dz);
  }
  return worst;
}

}  // namespace crowdscale
