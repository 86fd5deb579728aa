#pragma once

#include <cmath>
#include <stdexcept>

#include "crowdscale/util.hpp"
#include "crowdscale/vec.hpp"

namespace crowdscale {

/// Spatial domain: free space R^D or the periodic interval [0, L) (1-d only).
///
/// On the periodic interval the relative position of a neighbour is the
/// forward gap (to - from) mod L in [0, L). Kernels with frontal support
/// [0, R], R < L, then see exactly one image of every neighbour, which is the
/// setting of the stationary analysis. Two-sided kernels on a periodic domain
/// are handled where needed (grid velocities) by also probing the backward
/// image gap - L.
template <int D>
class Domain {
 public:
  static Domain free() { return Domain(false, 0.0); }

  static Domain periodic(double length) {
    static_assert(D == 1, "periodic domains are one-dimensional");
    require(length > 0.0, "periodic domain length must be positive");
    return Domain(true, length);
  }

  bool is_periodic() const { return periodic_; }
  double length() const { return length_; }

  /// Relative position of `to` as seen from `from`.
  Vec<D> gap(const Vec<D>& from, const Vec<D>& to) const {
    Vec<D> g = to - from;
    if (periodic_) g[0] = mod_length(g[0]);
    return g;
  }

  /// Map a point back into the fundamental domain. No-op in free space.
  Vec<D> wrap(Vec<D> x) const {
    if (periodic_) x[0] = mod_length(x[0]);
    return x;
  }

 private:
  Domain(bool periodic, double length) : periodic_(periodic), length_(length) {}

  double mod_length(double x) const {
    double m = std::fmod(x, length_);
    if (m < 0.0) m += length_;
    // fmod can land exactly on L after the correction when x is a tiny
    // negative number.
    if (m >= length_) m -= length_;
    return m;
  }

  bool periodic_;
  double length_;
};

}  // namespace crowdscale
