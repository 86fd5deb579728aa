#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crowdscale/measure.hpp"
#include "crowdscale/quadrature.hpp"
#include "crowdscale/util.hpp"
#include "crowdscale/vec.hpp"

namespace crowdscale {

/// Finite weighted point set discretizing a continuous crowd measure.
/// Weights are positive and sum to the crowd mass N; provenance records which
/// bump (or cell) each point came from.
template <int D>
struct QuadratureCloud {
  std::vector<Vec<D>> points;
  std::vector<double> weights;
  std::vector<int> provenance;

  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

/// Rescales a block of weights to the exact block mass `target`: the last
/// weight is set to target - (sum of the others), which is exact by Sterbenz
/// subtraction once the block sum is within a factor two of the target.
inline void normalize_block(std::vector<double>& w, std::size_t lo,
                            std::size_t hi, double target) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += w[i];
  require(s > 0.0, "bump quadrature produced an empty weight block");
  const double f = target / s;
  for (std::size_t i = lo; i < hi; ++i) w[i] *= f;
  double head = 0.0;
  for (std::size_t i = lo; i + 1 < hi; ++i) head += w[i];
  w[hi - 1] = target - head;
}

}  // namespace detail

/// Gauss-Legendre cloud for a bump measure: `points_per_bump` nodes per bump
/// (1-d: nodes on the interval; 2-d: tensor radial x angular rule mapped into
/// the ball). Each bump's weights are renormalized to carry exactly unit
/// mass. Three-dimensional clouds are not provided (no d = 3 dynamics here).
template <int D>
QuadratureCloud<D> discretize_bumps(const BumpMeasure<D>& m,
                                    int points_per_bump = 16 * D) {
  require(points_per_bump >= 2, "need at least two quadrature points per bump");
  static_assert(D <= 2, "quadrature clouds exist for d = 1, 2 only");

  QuadratureCloud<D> cloud;
  const double z = profile_normalization<D>(m.profile);
  const double r = m.radius;

  if constexpr (D == 1) {
    const GaussRule& rule = gauss_legendre(points_per_bump);
    for (int b = 0; b < m.count(); ++b) {
      const std::size_t lo = cloud.points.size();
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = rule.nodes[i];
        const double f = m.profile.shape(std::abs(u)) / z;
        if (f <= 0.0) continue;
        cloud.points.push_back(vec1(m.centers[b][0] + r * u));
        cloud.weights.push_back(rule.weights[i] * f);
        cloud.provenance.push_back(b);
      }
      detail::normalize_block(cloud.weights, lo, cloud.weights.size(), 1.0);
    }
  } else {
    int n_rad = std::max(2, static_cast<int>(std::lround(
                                std::sqrt(points_per_bump / 2.0))));
    int n_ang = std::max(4, (points_per_bump + n_rad - 1) / n_rad);
    const GaussRule& rad = gauss_legendre(n_rad);
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int b = 0; b < m.count(); ++b) {
      const std::size_t lo = cloud.points.size();
      for (int i = 0; i < n_rad; ++i) {
        const double s = 0.5 * (rad.nodes[i] + 1.0);  // radius in (0, 1)
        const double ws = 0.5 * rad.weights[i];
        const double f = m.profile.shape(s) / z;
        if (f <= 0.0) continue;
        for (int j = 0; j < n_ang; ++j) {
          const double th = two_pi * (j + 0.5) / n_ang;
          cloud.points.push_back(m.centers[b] +
                                 r * s * vec2(std::cos(th), std::sin(th)));
          cloud.weights.push_back(ws * (two_pi / n_ang) * f * s);
          cloud.provenance.push_back(b);
        }
      }
      detail::normalize_block(cloud.weights, lo, cloud.weights.size(), 1.0);
    }
  }
  return cloud;
}

/// Regular-cell discretization used for transport-oracle cross checks: cells
/// of a uniform grid inside each ball, midpoint masses, residual mass added
/// to the cell nearest the center so each bump carries exactly unit mass.
template <int D>
QuadratureCloud<D> discretize_bumps_cells(const BumpMeasure<D>& m,
                                          int cells_per_axis) {
  require(cells_per_axis >= 1, "need at least one cell per axis");
  static_assert(D <= 2, "cell discretizations exist for d = 1, 2 only");

  QuadratureCloud<D> cloud;
  const double z = profile_normalization<D>(m.profile);
  const double r = m.radius;
  const double h = 2.0 / cells_per_axis;  // cell edge in unit-ball coords

  for (int b = 0; b < m.count(); ++b) {
    const std::size_t lo = cloud.points.size();
    std::size_t center_idx = lo;
    double best_center_dist = std::numeric_limits<double>::infinity();
    if constexpr (D == 1) {
      for (int i = 0; i < cells_per_axis; ++i) {
        const double u = -1.0 + (i + 0.5) * h;
        const double f = m.profile.shape(std::abs(u)) / z;
        if (f <= 0.0) continue;
        cloud.points.push_back(vec1(m.centers[b][0] + r * u));
        cloud.weights.push_back(f * h);
        cloud.provenance.push_back(b);
        if (std::abs(u) < best_center_dist) {
          best_center_dist = std::abs(u);
          center_idx = cloud.points.size() - 1;
        }
      }
    } else {
      for (int i = 0; i < cells_per_axis; ++i)
        for (int j = 0; j < cells_per_axis; ++j) {
          const Vec<2> u = vec2(-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h);
          const double s = norm(u);
          if (s > 1.0) continue;
          const double f = m.profile.shape(s) / z;
          if (f <= 0.0) continue;
          cloud.points.push_back(m.centers[b] + r * u);
          cloud.weights.push_back(f * h * h);
          cloud.provenance.push_back(b);
          if (s < best_center_dist) {
            best_center_dist = s;
            center_idx = cloud.points.size() - 1;
          }
        }
    }
    // Residual onto the center cell (conservation before accuracy). In two
    // dimensions the boundary-cut error can exceed the center cell's own
    // mass; spread it proportionally in that case. A last-weight Sterbenz
    // correction makes the bump mass exactly one either way.
    double s = 0.0;
    for (std::size_t i = lo; i < cloud.weights.size(); ++i)
      s += cloud.weights[i];
    require(s > 0.0, "cell discretization produced an empty bump");
    if (cloud.weights[center_idx] + (1.0 - s) > 0.0)
      cloud.weights[center_idx] += 1.0 - s;
    detail::normalize_block(cloud.weights, lo, cloud.weights.size(), 1.0);
  }
  return cloud;
}

/// Cell centers and masses of a periodic grid density, as a weighted cloud.
inline QuadratureCloud<1> grid_points(const GridDensity1D& g) {
  QuadratureCloud<1> cloud;
  cloud.points.reserve(g.cell_averages.size());
  for (int i = 0; i < g.cells(); ++i) {
    cloud.points.push_back(vec1(g.cell_center(i)));
    cloud.weights.push_back(g.cell_averages[i] * g.dx());
    cloud.provenance.push_back(i);
  }
  return cloud;
}

/// Total mass grouped by provenance block. Blocks are summed plainly in
/// construction order, which reproduces the exact unit masses the
/// normalization installed; the block totals then add exactly.
template <int D>
double total_mass(const QuadratureCloud<D>& c) {
  double block = 0.0;
  KahanSum total;
  for (std::size_t i = 0; i < c.weights.size(); ++i) {
    if (i > 0 && c.provenance[i] != c.provenance[i - 1]) {
      total.add(block);
      block = 0.0;
    }
    block += c.weights[i];
  }
  total.add(block);
  return total.value();
}

}  // namespace crowdscale
