#pragma once

// Boundary sampling: a dense area-weighted candidate pool (64 per requested
// sample) thinned by farthest-point selection. Deterministic for a given
// (shape, n, seed) on any platform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <vector>

#include "polarballs/errors.hpp"
#include "polarballs/geometry.hpp"
#include "polarballs/shape.hpp"

namespace polarballs {

/// mt19937_64 with a fixed 53-bit double conversion (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : e_(seed) {}
  double uniform() { return static_cast<double>(e_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return e_() % n; }
  std::uint64_t next() { return e_(); }

 private:
  std::mt19937_64 e_;
};

template <int Dim>
struct SurfaceSample {
  Point<Dim> position;
  Vector<Dim> normal;  // outward
  int id = 0;
  int face = 0;
};

namespace detail {

/// Uniform bucket grid over points for radius queries.
template <int Dim>
class PointGrid {
 public:
  PointGrid(const std::vector<Point<Dim>>& pts, const Box<Dim>& box, double cell) : box_(box), cell_(cell) {
    for (int k = 0; k < Dim; ++k) {
      res_[k] = std::max(1, static_cast<int>(std::ceil((box.hi[k] - box.lo[k]) / cell)));
    }
    std::size_t total = 1;
    for (int k = 0; k < Dim; ++k) total *= res_[k];
    start_.assign(total + 1, 0);
    std::vector<std::size_t> key(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      key[i] = flat(coords(pts[i]));
      ++start_[key[i] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    items_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) items_[fill[key[i]]++] = static_cast<int>(i);
  }

  /// Calls f(i) for every point whose bucket intersects the ball's bbox.
  template <class F>
  void for_each_near(const Point<Dim>& c, double r, F&& f) const {
    std::array<int, Dim> lo{};
    std::array<int, Dim> hi{};
    for (int k = 0; k < Dim; ++k) {
      lo[k] = clamp_coord(k, (c[k] - r - box_.lo[k]) / cell_);
      hi[k] = clamp_coord(k, (c[k] + r - box_.lo[k]) / cell_);
    }
    std::array<int, Dim> at = lo;
    while (true) {
      const std::size_t cidx = flat(at);
      for (std::size_t j = start_[cidx]; j < start_[cidx + 1]; ++j) f(items_[j]);
      int k = 0;
      for (; k < Dim; ++k) {
        if (++at[k] <= hi[k]) break;
        at[k] = lo[k];
      }
      if (k == Dim) break;
    }
  }

 private:
  int clamp_coord(int k, double x) const { return std::clamp(static_cast<int>(std::floor(x)), 0, res_[k] - 1); }
  std::array<int, Dim> coords(const Point<Dim>& p) const {
    std::array<int, Dim> c{};
    for (int k = 0; k < Dim; ++k) c[k] = clamp_coord(k, (p[k] - box_.lo[k]) / cell_);
    return c;
  }
  std::size_t flat(const std::array<int, Dim>& c) const {
    std::size_t f = 0;
    for (int k = Dim - 1; k >= 0; --k) f = f * res_[k] + c[k];
    return f;
  }

  Box<Dim> box_;
  double cell_;
  std::array<int, Dim> res_{};
  std::vector<std::size_t> start_;
  std::vector<int> items_;
};

}  // namespace detail

/// Exactly n farthest-point samples from a 64n-point candidate pool.
template <int Dim>
std::vector<SurfaceSample<Dim>> sample_boundary(const BoundaryShape<Dim>& shape, std::size_t n, std::uint64_t seed) {
  if (n < static_cast<std::size_t>(Dim + 1)) {
    throw Error(ErrorCode::ContractViolation, "sample count must be at least " + std::to_string(Dim + 1));
  }
  Rng rng(seed);
  const int nf = static_cast<int>(shape.faces.size());
  std::vector<double> cdf(nf);
  double total = 0.0;
  for (int f = 0; f < nf; ++f) {
    total += shape.face_measure(f);
    cdf[f] = total;
  }

  const std::size_t m = 64 * n;
  std::vector<Point<Dim>> cand(m);
  std::vector<int> cand_face(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = rng.uniform() * total;
    const int f = std::min(static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()), nf - 1);
    const auto& face = shape.faces[f];
    cand_face[i] = f;
    if constexpr (Dim == 3) {
      const double s = std::sqrt(rng.uniform());
      const double t = rng.uniform();
      cand[i] = (1.0 - s) * shape.vertices[face[0]] + s * (1.0 - t) * shape.vertices[face[1]] +
                s * t * shape.vertices[face[2]];
    } else {
      const double t = rng.uniform();
      cand[i] = (1.0 - t) * shape.vertices[face[0]] + t * shape.vertices[face[1]];
    }
  }

  // Bucket size near the final spacing, capped so the grid stays small.
  const double extent = (shape.bbox.hi - shape.bbox.lo).maxCoeff();
  double cell = Dim == 3 ? std::sqrt(total / n) : total / n;
  cell = std::max(cell, extent / (Dim == 3 ? 128.0 : 4096.0));
  const detail::PointGrid<Dim> grid(cand, shape.bbox, cell);

  std::vector<double> dist(m, std::numeric_limits<double>::infinity());
  std::vector<char> taken(m, 0);
  using Entry = std::pair<double, int>;  // (squared distance, -index): max-heap prefers smaller index on ties
  std::priority_queue<Entry> heap;

  std::vector<SurfaceSample<Dim>> out;
  out.reserve(n);
  int next = static_cast<int>(rng.below(m));
  double radius = std::numeric_limits<double>::infinity();
  while (true) {
    taken[next] = 1;
    SurfaceSample<Dim> s;
    s.position = cand[next];
    s.face = cand_face[next];
    s.normal = shape.face_normal(s.face);
    s.id = static_cast<int>(out.size());
    out.push_back(s);
    if (out.size() == n) break;

    const Point<Dim> p = cand[next];
    auto update = [&](int i) {
      if (taken[i]) return;
      const double d2 = (cand[i] - p).squaredNorm();
      if (d2 < dist[i]) {
        dist[i] = d2;
        heap.emplace(d2, -i);
      }
    };
    if (std::isinf(radius)) {
      for (std::size_t i = 0; i < m; ++i) update(static_cast<int>(i));
    } else {
      // candidates farther than the current maximum cannot improve
      grid.for_each_near(p, radius, update);
    }

    while (true) {
      if (heap.empty()) throw Error(ErrorCode::DegenerateInput, "boundary has fewer distinct candidates than samples");
      const auto [d2, neg] = heap.top();
      heap.pop();
      const int i = -neg;
      if (taken[i] || d2 != dist[i]) continue;
      next = i;
      radius = std::sqrt(d2);
      break;
    }
  }
  return out;
}

template <int Dim>
std::vector<Point<Dim>> positions(const std::vector<SurfaceSample<Dim>>& samples) {
  std::vector<Point<Dim>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.position);
  return out;
}

}  // namespace polarballs
