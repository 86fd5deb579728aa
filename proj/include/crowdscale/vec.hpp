#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace crowdscale {

/// Fixed-dimension point/vector in R^D. Everything in this library lives in
/// D = 1, 2 or 3.
template <int D>
struct Vec {
  static_assert(D >= 1 && D <= 3, "spatial dimension must be 1, 2 or 3");

  std::array<double, D> c{};

  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < D; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < D; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < D; ++i) c[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator/(Vec a, double s) { return a *= 1.0 / s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }
  friend bool operator==(const Vec& a, const Vec& b) { return a.c == b.c; }
};

template <int D>
double dot(const Vec<D>& a, const Vec<D>& b) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) s += a.c[i] * b.c[i];
  return s;
}

template <int D>
double norm2(const Vec<D>& a) {
  return dot(a, a);
}

template <int D>
double norm(const Vec<D>& a) {
  if constexpr (D == 1) return std::abs(a.c[0]);
  return std::sqrt(norm2(a));
}

template <int D>
bool is_finite(const Vec<D>& a) {
  for (int i = 0; i < D; ++i)
    if (!std::isfinite(a.c[i])) return false;
  return true;
}

inline Vec<1> vec1(double x) { return Vec<1>{{x}}; }
inline Vec<2> vec2(double x, double y) { return Vec<2>{{x, y}}; }
inline Vec<3> vec3(double x, double y, double z) { return Vec<3>{{x, y, z}}; }

/// The scalar behind a 1-d vector; used heavily by the stationary analysis.
inline double scalar(const Vec<1>& v) { return v.c[0]; }

}  // namespace crowdscale
