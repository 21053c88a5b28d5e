#pragma once

// Dimension-generic primitives shared by every stage: points, balls, weighted
// sites, half-space planes and the power-distance arithmetic that ties them
// together. Dim is 2 or 3 throughout the library.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "polarballs/errors.hpp"

namespace polarballs {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Vector = Eigen::Matrix<double, Dim, 1>;

/// Relative tolerance for geometric comparisons against zero. Multiply by the
/// model's bounding-box diagonal to get an absolute threshold.
inline constexpr double kRelTol = 1e-9;

template <int Dim>
bool is_finite(const Point<Dim>& p) {
  return p.allFinite();
}

template <int Dim>
struct Ball {
  Point<Dim> center = Point<Dim>::Zero();
  double radius = 0.0;
};

template <int Dim>
struct WeightedSite {
  Point<Dim> center = Point<Dim>::Zero();
  double weight = 0.0;  // squared radius for sites that come from balls
};

/// The set {x : normal . x = offset}. As a clip it keeps {x : normal . x <= offset}.
template <int Dim>
struct HalfspacePlane {
  Vector<Dim> normal = Vector<Dim>::UnitX();
  double offset = 0.0;

  double signed_distance(const Point<Dim>& x) const { return normal.dot(x) - offset; }
  bool keeps(const Point<Dim>& x, double tol = 0.0) const { return signed_distance(x) <= tol; }
};

template <int Dim>
struct Box {
  Point<Dim> lo = Point<Dim>::Constant(std::numeric_limits<double>::infinity());
  Point<Dim> hi = Point<Dim>::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Point<Dim>& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool empty() const { return (hi.array() < lo.array()).any(); }
  Point<Dim> center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return empty() ? 0.0 : (hi - lo).norm(); }
  bool contains(const Point<Dim>& p, double tol = 0.0) const {
    return ((p.array() >= lo.array() - tol) && (p.array() <= hi.array() + tol)).all();
  }
  bool overlaps(const Box& o) const {
    return !((o.hi.array() < lo.array()).any() || (hi.array() < o.lo.array()).any());
  }
};

template <int Dim>
WeightedSite<Dim> to_site(const Ball<Dim>& b) {
  return {b.center, b.radius * b.radius};
}

/// ||x - c||^2 - w.
template <int Dim>
double power_distance(const Point<Dim>& x, const WeightedSite<Dim>& s) {
  return (x - s.center).squaredNorm() - s.weight;
}

/// |p_j - p_i| - r_i - r_j: negative iff the open balls penetrate.
template <int Dim>
double ball_gap(const Ball<Dim>& a, const Ball<Dim>& b) {
  // Written symmetrically so that ball_gap(a, b) == ball_gap(b, a) bit for bit.
  const double dist = (a.center - b.center).norm();
  return dist - (std::min(a.radius, b.radius) + std::max(a.radius, b.radius));
}

/// Plane of points with equal power distance to both balls' sites, normal
/// pointing from b1 toward b2. Contains the intersection circle when the balls
/// overlap.
template <int Dim>
HalfspacePlane<Dim> equal_power_plane(const Ball<Dim>& b1, const Ball<Dim>& b2) {
  const Vector<Dim> d = b2.center - b1.center;
  const double len = d.norm();
  if (!(len > 0.0)) {
    throw Error(ErrorCode::DegenerateInput, "equal_power_plane: coincident ball centers");
  }
  // |q-c1|^2 - r1^2 = |q-c2|^2 - r2^2  <=>  2 (c2-c1).q = |c2|^2 - |c1|^2 - r2^2 + r1^2.
  // Evaluated relative to the midpoint to keep cancellation small.
  const Vector<Dim> n = d / len;
  const Point<Dim> mid = 0.5 * (b1.center + b2.center);
  const double shift = (b1.radius - b2.radius) * (b1.radius + b2.radius) / (2.0 * len);
  return {n, n.dot(mid) + shift};
}

/// Same construction for weighted sites: {x : power(x, s1) = power(x, s2)}.
template <int Dim>
HalfspacePlane<Dim> equal_power_plane(const WeightedSite<Dim>& s1, const WeightedSite<Dim>& s2) {
  const Vector<Dim> d = s2.center - s1.center;
  const double len = d.norm();
  if (!(len > 0.0)) {
    throw Error(ErrorCode::DegenerateInput, "equal_power_plane: coincident site centers");
  }
  const Vector<Dim> n = d / len;
  const Point<Dim> mid = 0.5 * (s1.center + s2.center);
  return {n, n.dot(mid) + (s1.weight - s2.weight) / (2.0 * len)};
}

template <int Dim>
double ball_volume(double r) {
  if constexpr (Dim == 2) {
    return M_PI * r * r;
  } else {
    return 4.0 / 3.0 * M_PI * r * r * r;
  }
}

/// Volume (area in 2D) of the part of a ball at signed distance >= h from its
/// center along some direction, i.e. a cap of height r - h.
template <int Dim>
double ball_cap_volume(double r, double h) {
  if (h >= r) return 0.0;
  if (h <= -r) return ball_volume<Dim>(r);
  if constexpr (Dim == 2) {
    // circular segment
    return r * r * std::acos(h / r) - h * std::sqrt(r * r - h * h);
  } else {
    const double cap = r - h;
    return M_PI * cap * cap * (3.0 * r - cap) / 3.0;
  }
}

template <int Dim>
std::string format_point(const Point<Dim>& p) {
  std::string s = "(";
  for (int i = 0; i < Dim; ++i) {
    if (i) s += ", ";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

}  // namespace polarballs
