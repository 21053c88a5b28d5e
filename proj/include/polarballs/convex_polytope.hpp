#pragma once

// Bounded convex polytopes (polygons in 2D, polyhedra in 3D) with half-space
// clipping. Used for box-clipped Voronoi/power cells and for pore meshes.

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "polarballs/geometry.hpp"

namespace polarballs {

template <int Dim>
class ConvexPolytope;

/// Counter-clockwise polygon.
template <>
class ConvexPolytope<2> {
 public:
  using P = Point<2>;

  ConvexPolytope() = default;
  explicit ConvexPolytope(std::vector<P> ccw) : verts_(std::move(ccw)) {}

  static ConvexPolytope from_box(const Box<2>& b) {
    return ConvexPolytope({P(b.lo.x(), b.lo.y()), P(b.hi.x(), b.lo.y()), P(b.hi.x(), b.hi.y()),
                           P(b.lo.x(), b.hi.y())});
  }

  /// Keep {x : plane.signed_distance(x) <= 0}. Points within tol of the plane
  /// count as on it.
  void clip(const HalfspacePlane<2>& plane, double tol = 0.0) {
    if (verts_.empty()) return;
    std::vector<P> out;
    const std::size_t n = verts_.size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = plane.signed_distance(verts_[i]);
      if (std::abs(s[i]) <= tol) s[i] = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = (i + 1) % n;
      if (s[i] <= 0.0) out.push_back(verts_[i]);
      if ((s[i] < 0.0 && s[j] > 0.0) || (s[i] > 0.0 && s[j] < 0.0)) {
        const double t = s[i] / (s[i] - s[j]);
        out.push_back(verts_[i] + t * (verts_[j] - verts_[i]));
      }
    }
    verts_ = out.size() >= 3 ? std::move(out) : std::vector<P>{};
  }

  bool empty() const { return verts_.size() < 3; }
  const std::vector<P>& vertices() const { return verts_; }

  double volume() const {
    double a = 0.0;
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      const P& p = verts_[i];
      const P& q = verts_[(i + 1) % verts_.size()];
      a += p.x() * q.y() - p.y() * q.x();
    }
    return 0.5 * a;
  }

 private:
  std::vector<P> verts_;
};

/// Polyhedron as shared vertices plus outward-oriented (CCW from outside)
/// polygonal faces.
template <>
class ConvexPolytope<3> {
 public:
  using P = Point<3>;

  ConvexPolytope() = default;
  ConvexPolytope(std::vector<P> verts, std::vector<std::vector<int>> faces)
      : verts_(std::move(verts)), faces_(std::move(faces)) {}

  static ConvexPolytope from_box(const Box<3>& b) {
    std::vector<P> v;
    for (int i = 0; i < 8; ++i) {
      v.emplace_back((i & 1) ? b.hi.x() : b.lo.x(), (i & 2) ? b.hi.y() : b.lo.y(),
                     (i & 4) ? b.hi.z() : b.lo.z());
    }
    std::vector<std::vector<int>> f = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                                       {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
    return ConvexPolytope(std::move(v), std::move(f));
  }

  void clip(const HalfspacePlane<3>& plane, double tol = 0.0) {
    if (faces_.empty()) return;
    const std::size_t n = verts_.size();
    std::vector<double> s(n);
    bool any_out = false;
    bool any_in = false;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = plane.signed_distance(verts_[i]);
      if (std::abs(s[i]) <= tol) s[i] = 0.0;
      any_out |= s[i] > 0.0;
      any_in |= s[i] < 0.0;
    }
    if (!any_out) return;
    if (!any_in) {
      verts_.clear();
      faces_.clear();
      return;
    }

    std::vector<P> verts = verts_;
    std::map<std::pair<int, int>, int> edge_point;
    auto cut = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = edge_point.find(key);
      if (it != edge_point.end()) return it->second;
      const int lo = key.first;
      const int hi = key.second;
      const double t = s[lo] / (s[lo] - s[hi]);
      verts.push_back(verts_[lo] + t * (verts_[hi] - verts_[lo]));
      const int id = static_cast<int>(verts.size()) - 1;
      edge_point.emplace(key, id);
      return id;
    };

    std::vector<std::vector<int>> faces;
    std::vector<char> on_cap(verts_.size(), 0);
    bool face_on_plane = false;
    for (const auto& f : faces_) {
      std::vector<int> nf;
      bool all_zero = true;
      for (std::size_t i = 0; i < f.size(); ++i) {
        const int a = f[i];
        const int b = f[(i + 1) % f.size()];
        all_zero &= s[a] == 0.0;
        if (s[a] <= 0.0) nf.push_back(a);
        if ((s[a] < 0.0 && s[b] > 0.0) || (s[a] > 0.0 && s[b] < 0.0)) nf.push_back(cut(a, b));
      }
      face_on_plane |= all_zero;
      if (nf.size() >= 3) faces.push_back(std::move(nf));
    }

    if (!face_on_plane) {
      std::vector<int> cap;
      for (std::size_t i = 0; i < verts_.size(); ++i)
        if (s[i] == 0.0) cap.push_back(static_cast<int>(i));
      for (const auto& [key, id] : edge_point) cap.push_back(id);
      if (cap.size() >= 3) {
        // Order around the centroid, counter-clockwise seen from +normal.
        P c = P::Zero();
        for (int id : cap) c += verts[id];
        c /= static_cast<double>(cap.size());
        const Vector<3> nrm = plane.normal;
        Vector<3> u = nrm.unitOrthogonal();
        Vector<3> v = nrm.cross(u);
        std::vector<std::pair<double, int>> ang;
        for (int id : cap) {
          const Vector<3> d = verts[id] - c;
          ang.emplace_back(std::atan2(d.dot(v), d.dot(u)), id);
        }
        std::sort(ang.begin(), ang.end());
        std::vector<int> loop;
        for (auto& [a, id] : ang) loop.push_back(id);
        faces.push_back(std::move(loop));
      }
    }

    // Compact unused vertices.
    std::vector<int> remap(verts.size(), -1);
    std::vector<P> compact;
    for (auto& f : faces) {
      for (int& id : f) {
        if (remap[id] < 0) {
          remap[id] = static_cast<int>(compact.size());
          compact.push_back(verts[id]);
        }
        id = remap[id];
      }
    }
    verts_ = std::move(compact);
    faces_ = std::move(faces);
    if (faces_.size() < 4) {
      verts_.clear();
      faces_.clear();
    }
  }

  bool empty() const { return faces_.empty(); }
  const std::vector<P>& vertices() const { return verts_; }
  const std::vector<std::vector<int>>& faces() const { return faces_; }

  double volume() const {
    double v = 0.0;
    for (const auto& f : faces_) {
      for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        v += verts_[f[0]].dot(verts_[f[i]].cross(verts_[f[i + 1]]));
      }
    }
    return v / 6.0;
  }

  /// Fan triangulation of every face.
  std::vector<std::array<int, 3>> triangles() const {
    std::vector<std::array<int, 3>> t;
    for (const auto& f : faces_)
      for (std::size_t i = 1; i + 1 < f.size(); ++i) t.push_back({f[0], f[i], f[i + 1]});
    return t;
  }

 private:
  std::vector<P> verts_;
  std::vector<std::vector<int>> faces_;
};

}  // namespace polarballs
