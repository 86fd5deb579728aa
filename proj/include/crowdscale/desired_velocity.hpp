#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "crowdscale/util.hpp"
#include "crowdscale/vec.hpp"

namespace crowdscale {

/// Velocity field an agent would follow absent any neighbours. Constant,
/// affine (c + s x) or, in 1-d, tabulated with linear interpolation. The
/// stored Lipschitz constant is exact for these forms.
template <int D>
class DesiredVelocity {
 public:
  static DesiredVelocity zero() { return constant(Vec<D>{}); }

  static DesiredVelocity constant(const Vec<D>& c) {
    DesiredVelocity v;
    v.kind_ = "constant";
    v.offset_ = c;
    v.lip_ = 0.0;
    return v;
  }

  static DesiredVelocity affine(const Vec<D>& c, double slope) {
    DesiredVelocity v;
    v.kind_ = "affine";
    v.offset_ = c;
    v.slope_ = slope;
    v.lip_ = std::abs(slope);
    return v;
  }

  /// 1-d tabulated field; extended constantly outside the sample range.
  static DesiredVelocity tabulated(std::vector<double> xs,
                                   std::vector<double> vs) {
    static_assert(D == 1, "tabulated desired velocities are one-dimensional");
    require(xs.size() == vs.size() && xs.size() >= 2,
            "tabulated desired velocity needs at least two samples");
    for (std::size_t i = 1; i < xs.size(); ++i)
      require(xs[i] > xs[i - 1], "tabulated x values must increase");
    DesiredVelocity v;
    v.kind_ = "tabulated";
    double lip = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      lip = std::max(lip, std::abs((vs[i] - vs[i - 1]) / (xs[i] - xs[i - 1])));
    v.lip_ = lip;
    v.xs_ = std::move(xs);
    v.vs_ = std::move(vs);
    return v;
  }

  Vec<D> operator()(const Vec<D>& x) const {
    if (kind_ == "constant") return offset_;
    if (kind_ == "affine") return offset_ + slope_ * x;
    if constexpr (D == 1) {
      const double t = x[0];
      if (t <= xs_.front()) return vec1(vs_.front());
      if (t >= xs_.back()) return vec1(vs_.back());
      const auto hi = std::upper_bound(xs_.begin(), xs_.end(), t);
      const std::size_t j = static_cast<std::size_t>(hi - xs_.begin());
      const double w = (t - xs_[j - 1]) / (xs_[j] - xs_[j - 1]);
      return vec1(vs_[j - 1] + w * (vs_[j] - vs_[j - 1]));
    } else {
      throw std::logic_error("tabulated desired velocities are 1-d");
    }
  }

  double lipschitz() const { return lip_; }
  const std::string& kind() const { return kind_; }
  bool is_constant() const { return kind_ == "constant"; }
  bool is_zero() const { return is_constant() && norm(offset_) == 0.0; }
  const Vec<D>& constant_value() const { return offset_; }

  /// Max sampled difference quotient over [-span, span]^D pairs; the declared
  /// constant must dominate it.
  double max_sampled_quotient(double span = 4.0, int samples = 2000) const {
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      Vec<D> a{}, b{};
      for (int i = 0; i < D; ++i) {
        a[i] = -span + 2.0 * span * ((s * 7 + i * 13) % 101) / 100.0;
        b[i] = -span + 2.0 * span * ((s * 11 + i * 17 + 51) % 103) / 102.0;
      }
      const double dz = norm(b - a);
      if (dz == 0.0) continue;
      worst = std::max(worst, norm((*this)(b) - (*this)(a)) / dz);
    }
    return worst;
  }

 private:
  std::string kind_ = "constant";
  Vec<D> offset_{};
  double slope_ = 0.0;
  double lip_ = 0.0;
  std::vector<double> xs_, vs_;
};

}  // namespace crowdscale
