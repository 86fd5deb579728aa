#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "crowdscale/quadrature.hpp"
#include "crowdscale/util.hpp"
#include "crowdscale/vec.hpp"

namespace crowdscale {

/// Crowd of N discrete pedestrians: one unit mass per position.
template <int D>
struct AtomicMeasure {
  std::vector<Vec<D>> positions;

  int count() const { return static_cast<int>(positions.size()); }
};

/// Radial bump shape on the unit ball, kept unnormalized; the dimension-
/// dependent normalization making the bump integrate to one is applied where
/// the density is evaluated.
struct BumpProfile {
  std::string name;
  std::function<double(double)> shape;  // shape(|x|) on [0, 1]
  bool linear_cdf_1d = false;           // 1-d CDF is piecewise linear (exact W1 path)
};

inline BumpProfile bump_profile(const std::string& name) {
  BumpProfile p;
  p.name = name;
  if (name == "indicator") {
    p.shape = [](double) { return 1.0; };
    p.linear_cdf_1d = true;
  } else if (name == "cosine") {
    p.shape = [](double s) {
      if (s >= 1.0) return 0.0;
      const double c = std::cos(1.5707963267948966 * s);
      return c * c;
    };
  } else {
    throw std::invalid_argument("unknown bump profile '" + name +
                                "' (expected indicator or cosine)");
  }
  return p;
}

/// Integral of s^p * shape(s) over [0, 1]; the normalizer and first moment of
/// every profile reduce to these. Analytic for the indicator shape so its
/// closed forms stay exact to the last bit.
inline double radial_moment(const BumpProfile& p, int power) {
  if (p.name == "indicator") return 1.0 / (power + 1);
  return gauss_integrate([&](double s) { return std::pow(s, power) * p.shape(s); },
                         0.0, 1.0, 60);
}

/// Normalization constant Z such that f = shape / Z has unit integral on B_1.
template <int D>
double profile_normalization(const BumpProfile& p) {
  return unit_sphere_area(D) * radial_moment(p, D - 1);
}

/// m_f = integral of |x| f(x) over B_1. For the indicator profile this equals
/// d / (1 + d) (the Gauss rule is exact on the polynomial integrand).
template <int D>
double profile_first_moment(const BumpProfile& p) {
  return radial_moment(p, D) / radial_moment(p, D - 1);
}

/// Superposition of N disjoint unit-mass bumps of radius r centered at the
/// former atom positions.
template <int D>
struct BumpMeasure {
  std::vector<Vec<D>> centers;
  double radius = 0.0;
  BumpProfile profile;
  double first_moment = 0.0;  // m_f

  int count() const { return static_cast<int>(centers.size()); }

  double density(const Vec<D>& x) const {
    const double z = profile_normalization<D>(profile) * std::pow(radius, D);
    double sum = 0.0;
    for (const auto& c : centers) {
      const double s = norm(x - c) / radius;
      if (s <= 1.0) sum += profile.shape(s) / z;
    }
    return sum;
  }
};

/// Cell averages of a density on the periodic interval [0, L), M uniform
/// cells, cell i = [i L/M, (i+1) L/M).
struct GridDensity1D {
  double length = 1.0;
  std::vector<double> cell_averages;

  int cells() const { return static_cast<int>(cell_averages.size()); }
  double dx() const { return length / cells(); }
  double cell_center(int i) const { return (i + 0.5) * dx(); }
};

inline GridDensity1D uniform_grid(double mass, double length, int cells) {
  require(cells >= 1 && length > 0.0 && mass >= 0.0,
          "uniform_grid needs positive length and at least one cell");
  GridDensity1D g;
  g.length = length;
  g.cell_averages.assign(cells, mass / length);
  return g;
}

template <int D>
using CrowdMeasure =
    std::variant<AtomicMeasure<D>, BumpMeasure<D>, GridDensity1D>;

/// N_k = 2^{k d} atoms at the centroids of the dyadic partition of [0, 1]^d.
/// Minimum pairwise distance is exactly 2^{-k}.
template <int D>
AtomicMeasure<D> make_lattice(int k_level) {
  require(k_level >= 0, "lattice level must be >= 0");
  require(k_level * D <= 24, "lattice size guard: k * d must be <= 24");
  const std::int64_t side = std::int64_t{1} << k_level;
  const double step = 1.0 / static_cast<double>(side);
  AtomicMeasure<D> m;
  m.positions.reserve(static_cast<std::size_t>(1) << (k_level * D));
  std::array<std::int64_t, D> idx{};
  while (true) {
    Vec<D> p;
    for (int a = 0; a < D; ++a) p[a] = (idx[a] + 0.5) * step;
    m.positions.push_back(p);
    int a = D - 1;
    while (a >= 0 && ++idx[a] == side) idx[a--] = 0;
    if (a < 0) break;
  }
  return m;
}

template <int D>
double min_pairwise_distance(const AtomicMeasure<D>& m) {
  double best = std::numeric_limits<double>::infinity();
  const auto& xs = m.positions;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      best = std::min(best, norm(xs[j] - xs[i]));
  return best;
}

/// Bumps of radius r around the atoms. Requires the strict separation
/// r < min pairwise distance / 2, so supports stay disjoint.
template <int D>
BumpMeasure<D> make_bumps(const AtomicMeasure<D>& atoms, double r,
                          const BumpProfile& profile) {
  require(r > 0.0, "bump radius must be positive");
  const auto& xs = atoms.positions;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double d = norm(xs[j] - xs[i]);
      if (!(r < 0.5 * d))
        throw std::invalid_argument(
            "bump radius " + format_double(r) + " violates r < d/2 for atoms " +
            std::to_string(i) + " and " + std::to_string(j) +
            " at distance " + format_double(d));
    }
  BumpMeasure<D> b;
  b.centers = xs;
  b.radius = r;
  b.profile = profile;
  b.first_moment = profile_first_moment<D>(profile);
  return b;
}

/// 1-d CDF of a single normalized bump profile: G(u) = f-mass of [-1, u].
inline double profile_cdf_1d(const BumpProfile& p, double u) {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double z = profile_normalization<1>(p);
  if (p.name == "indicator") return 0.5 * (u + 1.0);
  return adaptive_integrate([&](double s) { return p.shape(std::abs(s)) / z; },
                            -1.0, u, 1e-12);
}

/// Point transformations supported by push_forward. Bump and grid measures
/// only admit rigid translations and the declared linear scaling U(z) = a z;
/// atomic measures accept arbitrary maps.
template <int D>
class PointMap {
 public:
  enum class Kind { translation, linear, general };

  static PointMap translation(const Vec<D>& c) {
    PointMap m;
    m.kind_ = Kind::translation;
    m.shift_ = c;
    return m;
  }
  static PointMap linear(double a) {
    require(a != 0.0, "declared linear scaling must be invertible (a != 0)");
    PointMap m;
    m.kind_ = Kind::linear;
    m.scale_ = a;
    return m;
  }
  static PointMap identity() { return linear(1.0); }
  static PointMap general(std::function<Vec<D>(const Vec<D>&)> f) {
    PointMap m;
    m.kind_ = Kind::general;
    m.fn_ = std::move(f);
    return m;
  }

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  const Vec<D>& shift() const { return shift_; }

  Vec<D> operator()(const Vec<D>& x) const {
    switch (kind_) {
      case Kind::translation: return x + shift_;
      case Kind::linear: return scale_ * x;
      case Kind::general: return fn_(x);
    }
    return x;
  }

 private:
  Kind kind_ = Kind::linear;
  Vec<D> shift_{};
  double scale_ = 1.0;
  std::function<Vec<D>(const Vec<D>&)> fn_;
};

template <int D>
AtomicMeasure<D> push_forward(const AtomicMeasure<D>& m, const PointMap<D>& u) {
  AtomicMeasure<D> out;
  out.positions.reserve(m.positions.size());
  for (const auto& x : m.positions) out.positions.push_back(u(x));
  return out;
}

template <int D>
BumpMeasure<D> push_forward(const BumpMeasure<D>& m, const PointMap<D>& u) {
  BumpMeasure<D> out = m;
  switch (u.kind()) {
    case PointMap<D>::Kind::translation:
      for (auto& c : out.centers) c += u.shift();
      return out;
    case PointMap<D>::Kind::linear:
      for (auto& c : out.centers) c *= u.scale();
      out.radius = std::abs(u.scale()) * m.radius;
      return out;
    case PointMap<D>::Kind::general:
      throw std::invalid_argument(
          "push_forward of bump measures supports translations and declared "
          "linear scalings only");
  }
  return out;
}

/// Donor-cell remap for translations; linear scalings map cells onto cells of
/// the rescaled interval. Mass is conserved by construction.
inline GridDensity1D push_forward(const GridDensity1D& g, const PointMap<1>& u) {
  const int m = g.cells();
  switch (u.kind()) {
    case PointMap<1>::Kind::translation: {
      const double s = u.shift()[0] / g.dx();
      const double q = std::floor(s);
      const double f = s - q;
      const auto shift_idx = [m](double base, int i, int extra) {
        const std::int64_t raw =
            static_cast<std::int64_t>(base) + i + extra;
        return static_cast<std::size_t>(((raw % m) + m) % m);
      };
      GridDensity1D out = g;
      for (int i = 0; i < m; ++i) {
        // new cell i receives mass from old cells i - q and i - q - 1
        const double a = g.cell_averages[shift_idx(-q, i, 0)];
        const double b = g.cell_averages[shift_idx(-q, i, -1)];
        out.cell_averages[i] = (1.0 - f) * a + f * b;
      }
      return out;
    }
    case PointMap<1>::Kind::linear: {
      const double a = u.scale();
      GridDensity1D out;
      out.length = std::abs(a) * g.length;
      out.cell_averages.resize(g.cell_averages.size());
      for (int i = 0; i < m; ++i) {
        const int src = a > 0.0 ? i : m - 1 - i;
        out.cell_averages[i] = g.cell_averages[src] / std::abs(a);
      }
      return out;
    }
    case PointMap<1>::Kind::general:
      throw std::invalid_argument(
          "push_forward of grid densities supports translations and declared "
          "linear scalings only");
  }
  return g;
}

template <int D>
double total_mass(const AtomicMeasure<D>& m) {
  return static_cast<double>(m.positions.size());
}

template <int D>
double total_mass(const BumpMeasure<D>& m) {
  return static_cast<double>(m.centers.size());
}

inline double total_mass(const GridDensity1D& g) {
  KahanSum s;
  for (double a : g.cell_averages) s.add(a);
  return s.value() * g.dx();
}

template <int D>
double total_mass(const CrowdMeasure<D>& m) {
  return std::visit([](const auto& v) { return total_mass(v); }, m);
}

template <int D>
CrowdMeasure<D> push_forward(const CrowdMeasure<D>& m, const PointMap<D>& u) {
  return std::visit(
      [&u](const auto& v) -> CrowdMeasure<D> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GridDensity1D>) {
          if constexpr (D == 1) {
            return push_forward(v, u);
          } else {
            throw std::invalid_argument("grid densities are one-dimensional");
          }
        } else {
          return push_forward(v, u);
        }
      },
      m);
}

}  // namespace crowdscale
