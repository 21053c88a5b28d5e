#pragma once

// Pores from a porous-mode selection: balls shrunk by the wall thickness tau
// and cut by separator planes offset tau/2 from the equal-power planes.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "polarballs/convex_polytope.hpp"
#include "polarballs/mesh_export.hpp"
#include "polarballs/poles.hpp"
#include "polarballs/selection.hpp"
#include "polarballs/shape.hpp"

namespace polarballs {

template <int Dim>
struct ThickBall {
  Ball<Dim> original;
  Ball<Dim> shrunk;
  int source_pole = 0;
};

template <int Dim>
struct ThickenedSet {
  std::vector<ThickBall<Dim>> balls;
  std::vector<std::pair<int, int>> neighbors;  // i < j, original balls penetrate
  std::size_t dropped = 0;
  double tau = 0.0;
};

/// Drops balls with r < tau and shrinks the rest by tau. `tau` is absolute.
template <int Dim>
ThickenedSet<Dim> apply_thickness(const SelectionTrace<Dim>& selected, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::ContractViolation, "tau must be positive");
  ThickenedSet<Dim> out;
  out.tau = tau;
  for (const auto& s : selected.steps) {
    if (s.radius < tau) {
      ++out.dropped;
      continue;
    }
    out.balls.push_back({{s.center, s.radius}, {s.center, s.radius - tau}, s.pole});
  }
  if (out.balls.empty()) {
    throw Error(ErrorCode::EmptyResult, "every selected ball is thinner than the wall thickness tau");
  }
  for (int i = 0; i < static_cast<int>(out.balls.size()); ++i)
    for (int j = i + 1; j < static_cast<int>(out.balls.size()); ++j)
      if (ball_gap(out.balls[i].original, out.balls[j].original) < 0.0) out.neighbors.emplace_back(i, j);
  return out;
}

template <int Dim>
struct PoreClip {
  HalfspacePlane<Dim> plane;   // keeps the pore side
  HalfspacePlane<Dim> source;  // equal-power plane of the unshrunk pair, normal toward the neighbour
  int neighbor = 0;
};

template <int Dim>
struct PoreSpec {
  int id = 0;  // index into the thickened set
  Ball<Dim> ball;
  Ball<Dim> original;
  int source_pole = 0;
  std::vector<PoreClip<Dim>> clips;

  bool contains(const Point<Dim>& x) const {
    if ((x - ball.center).squaredNorm() > ball.radius * ball.radius) return false;
    for (const auto& c : clips)
      if (!c.plane.keeps(x)) return false;
    return true;
  }
};

namespace detail {

template <int Dim>
ConvexPolytope<Dim> unit_round_polytope(int subdivisions) {
  if constexpr (Dim == 3) {
    const TriMesh m = icosphere(subdivisions);
    std::vector<std::vector<int>> faces;
    for (const auto& f : m.faces) faces.push_back({f[0], f[1], f[2]});
    return ConvexPolytope<3>(m.vertices, faces);
  } else {
    const int n = 20 << subdivisions;
    std::vector<Point<2>> v;
    for (int i = 0; i < n; ++i) v.emplace_back(std::cos(2.0 * M_PI * i / n), std::sin(2.0 * M_PI * i / n));
    return ConvexPolytope<2>(v);
  }
}

}  // namespace detail

/// The pore as an inscribed round polytope (icosphere in 3D, regular polygon
/// with 20 * 2^s sides in 2D) clipped by every separator plane.
template <int Dim>
ConvexPolytope<Dim> pore_polytope(const PoreSpec<Dim>& pore, int subdivisions = 4) {
  auto poly = detail::unit_round_polytope<Dim>(subdivisions);
  std::vector<Point<Dim>> verts = poly.vertices();
  for (auto& v : verts) v = pore.ball.center + pore.ball.radius * v;
  if constexpr (Dim == 3) {
    poly = ConvexPolytope<3>(verts, poly.faces());
  } else {
    poly = ConvexPolytope<2>(verts);
  }
  const double tol = 1e-12 * std::max(1.0, pore.ball.radius);
  for (const auto& c : pore.clips) {
    poly.clip(c.plane, tol);
    if (poly.empty()) break;
  }
  return poly;
}

template <int Dim>
struct PoreBuild {
  std::vector<PoreSpec<Dim>> pores;
  std::vector<std::string> warnings;
};

/// Each neighbour pair's equal-power plane (of the unshrunk balls) is moved
/// tau/2 toward both pores. Pores whose region vanishes are dropped.
template <int Dim>
PoreBuild<Dim> build_pores(const ThickenedSet<Dim>& set) {
  PoreBuild<Dim> out;
  const double half = 0.5 * set.tau;
  std::vector<PoreSpec<Dim>> pores(set.balls.size());
  for (int i = 0; i < static_cast<int>(set.balls.size()); ++i) {
    pores[i].id = i;
    pores[i].ball = set.balls[i].shrunk;
    pores[i].original = set.balls[i].original;
    pores[i].source_pole = set.balls[i].source_pole;
  }
  for (const auto& [i, j] : set.neighbors) {
    const auto plane = equal_power_plane(set.balls[i].original, set.balls[j].original);
    const HalfspacePlane<Dim> flipped{-plane.normal, -plane.offset};
    pores[i].clips.push_back({{plane.normal, plane.offset - half}, plane, j});
    pores[j].clips.push_back({{flipped.normal, flipped.offset - half}, flipped, i});
  }
  for (auto& p : pores) {
    if (pore_polytope(p, 2).empty()) {
      out.warnings.push_back("pore " + std::to_string(p.id) + " is emptied by its separators; dropped");
      continue;
    }
    out.pores.push_back(std::move(p));
  }
  return out;
}

struct VolumeEstimate {
  double volume = 0.0;  // analytic when available, otherwise Monte Carlo
  double mc_volume = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> analytic;
  std::size_t points = 0;
};

/// Monte Carlo volume of ball cut by the clips, sampling uniformly in the
/// ball; Wilson 95% interval scaled by the ball volume.
template <int Dim>
VolumeEstimate pore_volume(const PoreSpec<Dim>& pore, std::size_t mc_points = 20000, std::uint64_t seed = 0) {
  if (mc_points < 10000) throw Error(ErrorCode::ContractViolation, "pore_volume needs at least 1e4 Monte Carlo points");
  const double r = pore.ball.radius;
  const double full = ball_volume<Dim>(r);
  Rng rng(seed);
  std::size_t hits = 0;
  std::size_t n = 0;
  while (n < mc_points) {
    Vector<Dim> u;
    for (int k = 0; k < Dim; ++k) u[k] = rng.uniform(-1.0, 1.0);
    if (u.squaredNorm() > 1.0) continue;
    ++n;
    const Point<Dim> x = pore.ball.center + r * u;
    bool in = true;
    for (const auto& c : pore.clips) {
      if (!c.plane.keeps(x)) {
        in = false;
        break;
      }
    }
    hits += in;
  }
  const auto est = binomial_estimate(hits, n);
  VolumeEstimate v;
  v.points = n;
  v.mc_volume = est.fraction * full;
  v.ci_low = est.ci_low * full;
  v.ci_high = est.ci_high * full;
  v.volume = v.mc_volume;
  if (pore.clips.size() <= 1) {
    double a = full;
    if (!pore.clips.empty()) {
      const auto& pl = pore.clips[0].plane;
      a = full - ball_cap_volume<Dim>(r, pl.offset - pl.normal.dot(pore.ball.center));
    }
    v.analytic = a;
    v.volume = a;
  }
  return v;
}

template <int Dim>
struct PorousResult {
  std::vector<PoreSpec<Dim>> pores;
  std::vector<VolumeEstimate> volumes;
  double solid_volume = 0.0;
  double pore_volume_total = 0.0;
  double weight_saving_ratio = 0.0;
  double tau = 0.0;
  std::vector<std::string> warnings;
};

template <int Dim>
PorousResult<Dim> report(const BoundaryShape<Dim>& shape, std::vector<PoreSpec<Dim>> pores, double tau,
                         std::size_t mc_points = 20000, std::uint64_t seed = 0) {
  PorousResult<Dim> r;
  r.tau = tau;
  r.solid_volume = shape.volume();
  if (!(r.solid_volume > 0.0)) throw Error(ErrorCode::ContractViolation, "solid volume must be positive");
  r.pores = std::move(pores);
  for (std::size_t i = 0; i < r.pores.size(); ++i) {
    r.volumes.push_back(pore_volume(r.pores[i], mc_points, seed + i));
    r.pore_volume_total += r.volumes.back().volume;
  }
  r.weight_saving_ratio = r.pore_volume_total / r.solid_volume;
  return r;
}

/// Weight-saving ratio estimated directly: the fraction of uniform points in
/// the solid that fall inside some pore.
template <int Dim>
CoverageResult ratio_monte_carlo(const std::vector<PoreSpec<Dim>>& pores, const BoundaryShape<Dim>& shape,
                                 std::size_t mc_points = 100000, std::uint64_t seed = 0) {
  Rng rng(seed);
  std::size_t hits = 0;
  std::size_t n = 0;
  while (n < mc_points) {
    Point<Dim> x;
    for (int k = 0; k < Dim; ++k) x[k] = rng.uniform(shape.bbox.lo[k], shape.bbox.hi[k]);
    if (!shape.contains(x)) continue;
    ++n;
    for (const auto& p : pores) {
      if (p.contains(x)) {
        ++hits;
        break;
      }
    }
  }
  return binomial_estimate(hits, n);
}

/// Fraction of Monte Carlo pore points that fall outside the shape.
template <int Dim>
CoverageResult pore_containment(const std::vector<PoreSpec<Dim>>& pores, const BoundaryShape<Dim>& shape,
                                std::size_t points_per_pore = 2000, std::uint64_t seed = 0) {
  Rng rng(seed);
  std::size_t outside = 0;
  std::size_t total = 0;
  for (const auto& p : pores) {
    std::size_t got = 0;
    for (std::size_t tries = 0; got < points_per_pore && tries < 50 * points_per_pore; ++tries) {
      Vector<Dim> u;
      for (int k = 0; k < Dim; ++k) u[k] = rng.uniform(-1.0, 1.0);
      if (u.squaredNorm() > 1.0) continue;
      const Point<Dim> x = p.ball.center + p.ball.radius * u;
      if (!p.contains(x)) continue;
      ++got;
      outside += !shape.contains(x);
    }
    total += got;
  }
  return binomial_estimate(outside, total);
}

/// Largest violation of "every vertex lies on the inner side of every face
/// plane" over the polytope; planes from Newell normals of each face.
inline double convexity_violation(const ConvexPolytope<3>& poly) {
  double worst = 0.0;
  const auto& v = poly.vertices();
  for (const auto& f : poly.faces()) {
    Vector<3> n = Vector<3>::Zero();
    Point<3> c = Point<3>::Zero();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Point<3>& a = v[f[i]];
      const Point<3>& b = v[f[(i + 1) % f.size()]];
      n += Vector<3>((a.y() - b.y()) * (a.z() + b.z()), (a.z() - b.z()) * (a.x() + b.x()),
                     (a.x() - b.x()) * (a.y() + b.y()));
      c += a;
    }
    const double len = n.norm();
    if (!(len > 0.0)) continue;
    n /= len;
    c /= static_cast<double>(f.size());
    for (const auto& p : v) worst = std::max(worst, n.dot(p - c));
  }
  return worst;
}

inline double convexity_violation(const ConvexPolytope<2>& poly) {
  double worst = 0.0;
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point<2>& a = v[i];
    const Point<2>& b = v[(i + 1) % v.size()];
    const Vector<2> e = b - a;
    if (!(e.norm() > 0.0)) continue;
    const Vector<2> n = Vector<2>(e.y(), -e.x()).normalized();
    for (const auto& p : v) worst = std::max(worst, n.dot(p - a));
  }
  return worst;
}

/// Triangle mesh of a pore (3D: closed; 2D: a flat fan at z = 0).
template <int Dim>
TriMesh pore_mesh(const ConvexPolytope<Dim>& poly) {
  TriMesh m;
  for (const auto& p : poly.vertices()) m.vertices.push_back(embed<Dim>(p));
  if constexpr (Dim == 3) {
    m.faces = poly.triangles();
  } else {
    for (int i = 1; i + 1 < static_cast<int>(poly.vertices().size()); ++i) m.faces.push_back({0, i, i + 1});
  }
  return m;
}

template <int Dim>
std::vector<std::pair<std::string, TriMesh>> export_pore_meshes(const std::vector<PoreSpec<Dim>>& pores,
                                                                 int subdivisions = 4) {
  if (subdivisions < 3) throw Error(ErrorCode::ContractViolation, "pore meshes need at least 3 subdivisions");
  std::vector<std::pair<std::string, TriMesh>> out;
  for (const auto& p : pores) out.emplace_back("pore_" + std::to_string(p.id), pore_mesh<Dim>(pore_polytope(p, subdivisions)));
  return out;
}

template <int Dim>
nlohmann::json to_json(const PorousResult<Dim>& r) {
  nlohmann::json pores = nlohmann::json::array();
  for (std::size_t i = 0; i < r.pores.size(); ++i) {
    const auto& p = r.pores[i];
    nlohmann::json clips = nlohmann::json::array();
    for (const auto& c : p.clips)
      clips.push_back({{"normal", point_json<Dim>(c.plane.normal)}, {"offset", c.plane.offset}, {"neighbor", c.neighbor}});
    pores.push_back({{"id", p.id},
                     {"source_pole", p.source_pole},
                     {"center", point_json<Dim>(p.ball.center)},
                     {"radius", p.ball.radius},
                     {"clips", clips},
                     {"volume", r.volumes[i].volume},
                     {"ci", {r.volumes[i].ci_low, r.volumes[i].ci_high}}});
  }
  return {{"solid_volume", r.solid_volume},
          {"tau", r.tau},
          {"pores", pores},
          {"pore_volume_total", r.pore_volume_total},
          {"weight_saving_ratio", r.weight_saving_ratio}};
}

}  // namespace polarballs
