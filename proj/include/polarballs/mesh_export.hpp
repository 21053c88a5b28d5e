#pragma once

// Triangle meshes for visual output: icospheres, capped cylinders and a
// multi-object OBJ writer. 2D geometry is embedded in the z = 0 plane.

#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "polarballs/geometry.hpp"

namespace polarballs {

struct TriMesh {
  std::vector<Point<3>> vertices;
  std::vector<std::array<int, 3>> faces;

  void append(const TriMesh& o) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), o.vertices.begin(), o.vertices.end());
    for (const auto& f : o.faces) faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  }

  /// Signed enclosed volume; positive for outward-oriented closed meshes.
  double volume() const {
    double v = 0.0;
    for (const auto& f : faces) v += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
    return v / 6.0;
  }

  /// Every undirected edge is used by exactly two faces, once per direction.
  bool is_closed() const {
    std::map<std::pair<int, int>, int> count;
    for (const auto& f : faces) {
      for (int k = 0; k < 3; ++k) ++count[{f[k], f[(k + 1) % 3]}];
    }
    for (const auto& [e, n] : count) {
      if (n != 1) return false;
      auto it = count.find({e.second, e.first});
      if (it == count.end() || it->second != 1) return false;
    }
    return true;
  }
};

template <int Dim>
Point<3> embed(const Point<Dim>& p) {
  if constexpr (Dim == 3) {
    return p;
  } else {
    return {p.x(), p.y(), 0.0};
  }
}

/// Unit icosphere, outward oriented.
inline TriMesh icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const int id = static_cast<int>(m.vertices.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      const int a = midpoint(f[0], f[1]);
      const int b = midpoint(f[1], f[2]);
      const int c = midpoint(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    m.faces = std::move(next);
  }
  return m;
}

inline TriMesh sphere_mesh(const Point<3>& c, double r, int subdivisions = 2) {
  TriMesh m = icosphere(subdivisions);
  for (auto& v : m.vertices) v = c + r * v;
  return m;
}

/// Closed cylinder from a to b; empty if the axis is degenerate.
inline TriMesh cylinder_mesh(const Point<3>& a, const Point<3>& b, double r, int segments = 12) {
  TriMesh m;
  const Vector<3> axis = b - a;
  if (!(axis.norm() > 0.0) || !(r > 0.0)) return m;
  const Vector<3> w = axis.normalized();
  const Vector<3> helper = std::abs(w.x()) < 0.9 ? Vector<3>::UnitX() : Vector<3>::UnitY();
  const Vector<3> u = w.cross(helper).normalized();
  const Vector<3> v = w.cross(u);
  for (int i = 0; i < segments; ++i) {
    const double th = 2.0 * M_PI * i / segments;
    const Vector<3> off = r * (std::cos(th) * u + std::sin(th) * v);
    m.vertices.push_back(a + off);
    m.vertices.push_back(b + off);
  }
  const int ca = static_cast<int>(m.vertices.size());
  m.vertices.push_back(a);
  m.vertices.push_back(b);
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    const int a0 = 2 * i, b0 = 2 * i + 1, a1 = 2 * j, b1 = 2 * j + 1;
    m.faces.push_back({a0, a1, b1});
    m.faces.push_back({a0, b1, b0});
    m.faces.push_back({ca, a1, a0});
    m.faces.push_back({ca + 1, b0, b1});
  }
  return m;
}

/// Writes named objects into one OBJ stream with shared global indexing.
inline void write_obj_objects(std::ostream& os, const std::vector<std::pair<std::string, TriMesh>>& objects) {
  os.precision(17);
  int base = 1;
  for (const auto& [name, mesh] : objects) {
    os << "o " << name << '\n';
    for (const auto& p : mesh.vertices) os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    for (const auto& f : mesh.faces) os << "f " << f[0] + base << ' ' << f[1] + base << ' ' << f[2] + base << '\n';
    base += static_cast<int>(mesh.vertices.size());
  }
}

}  // namespace polarballs
