#pragma once

// Inside/outside poles of boundary samples and their polar balls.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarballs/geometry.hpp"
#include "polarballs/power_diagram.hpp"
#include "polarballs/sampling.hpp"
#include "polarballs/shape.hpp"

namespace polarballs {

enum class Side { Inside, Outside };

inline const char* to_string(Side s) { return s == Side::Inside ? "inside" : "outside"; }

template <int Dim>
struct Pole {
  int id = 0;  // index within its side's list
  Point<Dim> position;
  double radius = 0.0;
  Side side = Side::Inside;
  int parent = 0;  // sample id
  bool clamped = false;
};

template <int Dim>
struct PoleSet {
  std::vector<Pole<Dim>> inside;   // P
  std::vector<Pole<Dim>> outside;  // Q
  double diag = 0.0;               // bounding-box diagonal of the shape
  std::vector<std::string> log;
};

template <int Dim>
Ball<Dim> polar_ball(const Pole<Dim>& p) {
  return {p.position, p.radius};
}

/// For each sample, the farthest cell vertex strictly behind its tangent
/// plane (inside pole) and strictly in front of it (outside pole). A vertex
/// claimed by several samples is kept once, for the lowest sample id.
template <int Dim>
PoleSet<Dim> extract_poles(const VoronoiDiagram<Dim>& vd, const std::vector<SurfaceSample<Dim>>& samples, double diag) {
  if (vd.size() != samples.size()) throw Error(ErrorCode::ContractViolation, "diagram and sample set differ");
  PoleSet<Dim> out;
  out.diag = diag;
  const double min_radius = 1e-6 * diag;
  std::map<std::array<double, Dim>, char> seen;
  auto key_of = [](const Point<Dim>& p) {
    std::array<double, Dim> k;
    for (int i = 0; i < Dim; ++i) k[i] = p[i];
    return k;
  };
  int omitted_inside = 0;
  int omitted_outside = 0;
  for (const auto& s : samples) {
    const VoronoiVertex<Dim>* best[2] = {nullptr, nullptr};
    double best_d[2] = {-1.0, -1.0};
    const auto verts = vd.cell_vertices(s.id);
    for (const auto& v : verts) {
      const double side = (v.position - s.position).dot(s.normal);
      if (side == 0.0) continue;
      const int k = side < 0.0 ? 0 : 1;
      const double d = (v.position - s.position).norm();
      if (d > best_d[k]) {
        best_d[k] = d;
        best[k] = &v;
      }
    }
    for (int k = 0; k < 2; ++k) {
      if (!best[k]) {
        ++(k == 0 ? omitted_inside : omitted_outside);
        continue;
      }
      if (k == 0 && best[k]->clamped) {
        // the cell reaches the box behind the surface; no finite inside pole
        ++omitted_inside;
        continue;
      }
      if (best_d[k] < min_radius) continue;
      if (!seen.emplace(key_of(best[k]->position), 1).second) continue;
      Pole<Dim> p;
      p.position = best[k]->position;
      p.radius = best_d[k];
      p.side = k == 0 ? Side::Inside : Side::Outside;
      p.parent = s.id;
      p.clamped = best[k]->clamped;
      auto& list = k == 0 ? out.inside : out.outside;
      p.id = static_cast<int>(list.size());
      list.push_back(p);
    }
  }
  if (omitted_inside) out.log.push_back(std::to_string(omitted_inside) + " samples without an inside pole");
  if (omitted_outside) out.log.push_back(std::to_string(omitted_outside) + " samples without an outside pole");
  return out;
}

template <int Dim>
PoleSet<Dim> compute_poles(const BoundaryShape<Dim>& shape, const std::vector<SurfaceSample<Dim>>& samples) {
  const auto vd = build_voronoi(positions(samples));
  return extract_poles(vd, samples, shape.bbox_diag);
}

struct CoverageResult {
  double fraction = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t points = 0;
};

/// Wilson score interval at 95%.
inline CoverageResult binomial_estimate(std::size_t hits, std::size_t n) {
  CoverageResult r;
  r.points = n;
  if (n == 0) return r;
  const double z = 1.959963984540054;
  const double p = static_cast<double>(hits) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  r.fraction = p;
  r.ci_low = std::max(0.0, centre - half);
  r.ci_high = std::min(1.0, centre + half);
  return r;
}

/// Fraction of the enclosed volume covered by the union of inside polar balls,
/// estimated from `mc_points` uniform interior points.
template <int Dim>
CoverageResult coverage_fraction(const PoleSet<Dim>& poles, const BoundaryShape<Dim>& shape, std::size_t mc_points,
                                 std::uint64_t seed) {
  if (mc_points < 10000) throw Error(ErrorCode::ContractViolation, "coverage needs at least 1e4 Monte Carlo points");
  std::vector<Ball<Dim>> balls;
  for (const auto& p : poles.inside) balls.push_back(polar_ball(p));
  std::sort(balls.begin(), balls.end(), [](const Ball<Dim>& a, const Ball<Dim>& b) { return a.radius > b.radius; });
  Rng rng(seed);
  std::size_t hits = 0;
  std::size_t n = 0;
  while (n < mc_points) {
    Point<Dim> x;
    for (int k = 0; k < Dim; ++k) x[k] = rng.uniform(shape.bbox.lo[k], shape.bbox.hi[k]);
    if (!shape.contains(x)) continue;
    ++n;
    for (const auto& b : balls) {
      if ((x - b.center).squaredNorm() < b.radius * b.radius) {
        ++hits;
        break;
      }
    }
  }
  return binomial_estimate(hits, n);
}

template <int Dim>
nlohmann::json point_json(const Point<Dim>& p) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < Dim; ++k) a.push_back(p[k]);
  return a;
}

template <int Dim>
nlohmann::json to_json(const PoleSet<Dim>& ps) {
  auto side = [](const std::vector<Pole<Dim>>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : list) {
      arr.push_back({{"id", p.id},
                     {"position", point_json<Dim>(p.position)},
                     {"radius", p.radius},
                     {"side", to_string(p.side)},
                     {"parent", p.parent},
                     {"clamped", p.clamped}});
    }
    return arr;
  };
  return {{"bbox_diag", ps.diag}, {"inside", side(ps.inside)}, {"outside", side(ps.outside)}};
}

}  // namespace polarballs
