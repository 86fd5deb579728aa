#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "crowdscale/vec.hpp"

namespace crowdscale {

/// Kahan compensated accumulator. Interaction sums use it in a fixed index
/// order so results do not depend on how work is scheduled.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Component-wise Kahan accumulator for Vec<D>.
template <int D>
class KahanVec {
 public:
  void add(const Vec<D>& v) {
    for (int i = 0; i < D; ++i) k_[i].add(v[i]);
  }
  Vec<D> value() const {
    Vec<D> out{};
    for (int i = 0; i < D; ++i) out[i] = k_[i].value();
    return out;
  }

 private:
  std::array<KahanSum, D> k_{};
};

/// Shortest-round-trip decimal form, stable across runs (%.17g keeps every
/// bit of a double).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double relative_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace crowdscale
