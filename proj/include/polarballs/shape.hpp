#pragma once

// Closed boundaries: 3D triangle meshes (OBJ) and 2D polygons (plain "x y"
// lines). Loading validates closedness, manifoldness and orientation, and
// builds a small acceleration grid for inside/outside queries.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "polarballs/errors.hpp"
#include "polarballs/geometry.hpp"

namespace polarballs {

enum class ShapeFormat { ObjMesh, PolygonText };

namespace detail {

/// Uniform grid over one or two coordinates of the bbox, listing the faces
/// whose projection overlaps each bin. Rays are cast along +x.
template <int Dim>
struct RayGrid {
  static constexpr int kAxes = Dim - 1;  // y (2D) or y,z (3D)
  std::array<double, kAxes> lo{};
  std::array<double, kAxes> step{};
  int res = 1;
  std::vector<std::vector<int>> bins;

  int bin(int axis, double x) const {
    const int b = static_cast<int>(std::floor((x - lo[axis]) / step[axis]));
    return std::clamp(b, 0, res - 1);
  }
};

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace detail

template <int Dim>
struct BoundaryShape {
  std::vector<Point<Dim>> vertices;
  /// Triangles (3D) or directed loop edges (2D), oriented outward: CCW seen
  /// from outside in 3D, counter-clockwise loop in 2D.
  std::vector<std::array<int, Dim>> faces;
  Box<Dim> bbox;
  double bbox_diag = 0.0;
  int genus = 0;
  std::vector<std::string> warnings;
  std::shared_ptr<const detail::RayGrid<Dim>> grid;

  /// Unit outward normal of a face.
  Vector<Dim> face_normal(int f) const {
    if constexpr (Dim == 3) {
      const auto& t = faces[f];
      const Vector<3> n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
      return n.normalized();
    } else {
      const Vector<2> d = vertices[faces[f][1]] - vertices[faces[f][0]];
      return Vector<2>(d.y(), -d.x()).normalized();
    }
  }

  /// Area (3D) or length (2D) of a face.
  double face_measure(int f) const {
    if constexpr (Dim == 3) {
      const auto& t = faces[f];
      return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
    } else {
      return (vertices[faces[f][1]] - vertices[faces[f][0]]).norm();
    }
  }

  double boundary_measure() const {
    double s = 0.0;
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) s += face_measure(f);
    return s;
  }

  /// Enclosed volume (area in 2D).
  double volume() const {
    double v = 0.0;
    if constexpr (Dim == 3) {
      for (const auto& t : faces) v += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
      return v / 6.0;
    } else {
      for (const auto& e : faces) {
        const auto& a = vertices[e[0]];
        const auto& b = vertices[e[1]];
        v += a.x() * b.y() - a.y() * b.x();
      }
      return 0.5 * v;
    }
  }

  /// Ray-cast containment. Ties on shared edges are broken by a consistent
  /// infinitesimal shift of the ray, so every ray crosses a closed surface
  /// an exact number of times.
  bool contains(const Point<Dim>& p) const {
    if (!bbox.contains(p)) return false;
    const auto& g = *grid;
    if constexpr (Dim == 3) {
      const auto& cell = g.bins[g.bin(0, p.y()) * g.res + g.bin(1, p.z())];
      int winding = 0;
      for (int f : cell) {
        const auto& t = faces[f];
        const Point<3>& a = vertices[t[0]];
        const Point<3>& b = vertices[t[1]];
        const Point<3>& c = vertices[t[2]];
        const double area = (b.y() - a.y()) * (c.z() - a.z()) - (b.z() - a.z()) * (c.y() - a.y());
        if (area == 0.0) continue;
        const int s0 = edge_side(a, b, p);
        const int s1 = edge_side(b, c, p);
        const int s2 = edge_side(c, a, p);
        if (s0 != s1 || s1 != s2 || s0 == 0) continue;
        // barycentric weights in the yz projection
        const double wa = ((b.y() - p.y()) * (c.z() - p.z()) - (b.z() - p.z()) * (c.y() - p.y())) / area;
        const double wb = ((c.y() - p.y()) * (a.z() - p.z()) - (c.z() - p.z()) * (a.y() - p.y())) / area;
        const double x = wa * a.x() + wb * b.x() + (1.0 - wa - wb) * c.x();
        if (x > p.x()) winding += detail::sign_of(area);
      }
      return winding != 0;
    } else {
      const auto& cell = g.bins[g.bin(0, p.y())];
      bool inside = false;
      for (int f : cell) {
        const Point<2>& a = vertices[faces[f][0]];
        const Point<2>& b = vertices[faces[f][1]];
        if ((a.y() > p.y()) == (b.y() > p.y())) continue;
        const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
        if (x > p.x()) inside = !inside;
      }
      return inside;
    }
  }

 private:
  // Side of p relative to the projected edge a->b, with p shifted by
  // (e, e^2) in (y, z) to break exact ties.
  static int edge_side(const Point<3>& a, const Point<3>& b, const Point<3>& p) {
    const double dy = b.y() - a.y();
    const double dz = b.z() - a.z();
    const double o = dy * (p.z() - a.z()) - dz * (p.y() - a.y());
    if (o != 0.0) return detail::sign_of(o);
    if (dz != 0.0) return -detail::sign_of(dz);
    return detail::sign_of(dy);
  }
};

namespace detail {

template <int Dim>
void build_grid(BoundaryShape<Dim>& s) {
  auto g = std::make_shared<RayGrid<Dim>>();
  const int nf = static_cast<int>(s.faces.size());
  if constexpr (Dim == 3) {
    g->res = std::clamp(static_cast<int>(std::sqrt(nf / 2.0)), 1, 256);
  } else {
    g->res = std::clamp(nf / 2, 1, 4096);
  }
  for (int a = 0; a < RayGrid<Dim>::kAxes; ++a) {
    g->lo[a] = s.bbox.lo[a + 1];
    g->step[a] = std::max((s.bbox.hi[a + 1] - s.bbox.lo[a + 1]) / g->res, 1e-300);
  }
  g->bins.resize(Dim == 3 ? g->res * g->res : g->res);
  for (int f = 0; f < nf; ++f) {
    std::array<int, 2> lo{0, 0};
    std::array<int, 2> hi{0, 0};
    for (int a = 0; a < RayGrid<Dim>::kAxes; ++a) {
      double mn = std::numeric_limits<double>::infinity();
      double mx = -mn;
      for (int v : s.faces[f]) {
        mn = std::min(mn, s.vertices[v][a + 1]);
        mx = std::max(mx, s.vertices[v][a + 1]);
      }
      lo[a] = g->bin(a, mn);
      hi[a] = g->bin(a, mx);
    }
    if constexpr (Dim == 3) {
      for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j) g->bins[i * g->res + j].push_back(f);
    } else {
      for (int i = lo[0]; i <= hi[0]; ++i) g->bins[i].push_back(f);
    }
  }
  s.grid = std::move(g);
}

inline int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace detail

/// Validates and finalizes a closed triangle mesh. Globally inverted meshes are
/// flipped (with a warning); locally inconsistent orientation is an error.
inline BoundaryShape<3> make_mesh(std::vector<Point<3>> vertices, std::vector<std::array<int, 3>> faces) {
  if (vertices.size() < 4 || faces.size() < 4) throw Error(ErrorCode::EmptyInput, "mesh needs at least 4 vertices and 4 faces");
  BoundaryShape<3> s;
  s.vertices = std::move(vertices);
  s.faces = std::move(faces);
  for (const auto& p : s.vertices) {
    if (!p.allFinite()) throw Error(ErrorCode::ParseError, "non-finite vertex coordinate");
    s.bbox.extend(p);
  }
  s.bbox_diag = s.bbox.diagonal();
  const int nv = static_cast<int>(s.vertices.size());
  for (std::size_t f = 0; f < s.faces.size(); ++f) {
    for (int v : s.faces[f])
      if (v < 0 || v >= nv) throw Error(ErrorCode::ParseError, "face " + std::to_string(f) + " index out of range");
    if (s.face_measure(static_cast<int>(f)) <= 1e-12 * s.bbox_diag * s.bbox_diag) {
      throw Error(ErrorCode::DegenerateInput, "face " + std::to_string(f) + " is degenerate");
    }
  }

  // Every undirected edge must be used exactly twice, in opposite directions.
  std::map<std::pair<int, int>, std::array<int, 2>> edges;  // (min,max) -> count, direction balance
  for (const auto& t : s.faces) {
    for (int i = 0; i < 3; ++i) {
      const int a = t[i];
      const int b = t[(i + 1) % 3];
      auto& e = edges[{std::min(a, b), std::max(a, b)}];
      ++e[0];
      e[1] += a < b ? 1 : -1;
    }
  }
  for (const auto& [key, e] : edges) {
    const std::string name = "(" + std::to_string(key.first) + ", " + std::to_string(key.second) + ")";
    if (e[0] != 2) {
      throw Error(ErrorCode::ManifoldViolation, "edge " + name + " is shared by " + std::to_string(e[0]) + " faces");
    }
    if (e[1] != 0) throw Error(ErrorCode::OrientationError, "edge " + name + " has inconsistently oriented faces");
  }

  const double vol = s.volume();
  if (std::abs(vol) <= 1e-12 * std::pow(s.bbox_diag, 3)) throw Error(ErrorCode::DegenerateInput, "mesh encloses no volume");
  if (vol < 0.0) {
    for (auto& t : s.faces) std::swap(t[1], t[2]);
    s.warnings.push_back("mesh was inward-oriented; faces flipped");
  }

  // Euler characteristic per connected component.
  std::vector<int> parent(nv);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<char> used(nv, 0);
  for (const auto& t : s.faces) {
    for (int i = 0; i < 3; ++i) {
      used[t[i]] = 1;
      parent[detail::find_root(parent, t[i])] = detail::find_root(parent, t[(i + 1) % 3]);
    }
  }
  int used_count = 0;
  int components = 0;
  for (int v = 0; v < nv; ++v) {
    if (!used[v]) continue;
    ++used_count;
    if (detail::find_root(parent, v) == v) ++components;
  }
  const int chi = used_count - static_cast<int>(edges.size()) + static_cast<int>(s.faces.size());
  s.genus = (2 * components - chi) / 2;
  if (s.genus > 0) s.warnings.push_back("mesh has genus " + std::to_string(s.genus) + "; loops are not reproduced");
  if (components > 1) s.warnings.push_back("mesh has " + std::to_string(components) + " components");

  detail::build_grid(s);
  return s;
}

/// Validates and finalizes a simple polygon (implicitly closed loop).
/// Clockwise input is reversed.
inline BoundaryShape<2> make_polygon(std::vector<Point<2>> loop) {
  if (loop.size() < 3) throw Error(ErrorCode::EmptyInput, "polygon needs at least 3 vertices");
  BoundaryShape<2> s;
  s.vertices = std::move(loop);
  for (const auto& p : s.vertices) {
    if (!p.allFinite()) throw Error(ErrorCode::ParseError, "non-finite vertex coordinate");
    s.bbox.extend(p);
  }
  s.bbox_diag = s.bbox.diagonal();
  const int n = static_cast<int>(s.vertices.size());
  for (int i = 0; i < n; ++i) s.faces.push_back({i, (i + 1) % n});
  for (int f = 0; f < n; ++f) {
    if (s.face_measure(f) <= 1e-12 * s.bbox_diag) throw Error(ErrorCode::DegenerateInput, "edge " + std::to_string(f) + " is degenerate");
  }
  const double area = s.volume();
  if (std::abs(area) <= 1e-12 * s.bbox_diag * s.bbox_diag) throw Error(ErrorCode::DegenerateInput, "polygon encloses no area");
  if (area < 0.0) {
    std::reverse(s.vertices.begin(), s.vertices.end());
    s.warnings.push_back("polygon was clockwise; reversed");
  }
  detail::build_grid(s);
  return s;
}

namespace detail {

inline int parse_obj_index(const std::string& tok, int nv, int line) {
  const std::string head = tok.substr(0, tok.find('/'));
  int idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoi(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad face index '" + tok + "'");
  }
  if (idx < 0) idx = nv + idx + 1;
  return idx - 1;
}

}  // namespace detail

inline BoundaryShape<3> parse_obj(std::istream& in) {
  std::vector<Point<3>> v;
  std::vector<std::array<int, 3>> f;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": bad vertex");
      v.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) idx.push_back(detail::parse_obj_index(tok, static_cast<int>(v.size()), ln));
      if (idx.size() != 3) throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": only triangles are supported");
      f.push_back({idx[0], idx[1], idx[2]});
    }
  }
  return make_mesh(std::move(v), std::move(f));
}

inline BoundaryShape<2> parse_polygon(std::istream& in) {
  std::vector<Point<2>> v;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double x, y;
    std::string extra;
    if (!(ss >> x >> y) || (ss >> extra)) throw Error(ErrorCode::ParseError, "line " + std::to_string(ln) + ": expected 'x y'");
    v.emplace_back(x, y);
  }
  return make_polygon(std::move(v));
}

template <int Dim>
BoundaryShape<Dim> load_shape(const std::string& path, ShapeFormat format) {
  static_assert(Dim == 2 || Dim == 3);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  if constexpr (Dim == 3) {
    if (format != ShapeFormat::ObjMesh) throw Error(ErrorCode::ContractViolation, "3D shapes are read from OBJ meshes");
    return parse_obj(in);
  } else {
    if (format != ShapeFormat::PolygonText) throw Error(ErrorCode::ContractViolation, "2D shapes are read from polygon text");
    return parse_polygon(in);
  }
}

inline void write_obj(std::ostream& os, const BoundaryShape<3>& s) {
  os.precision(17);
  for (const auto& p : s.vertices) os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& t : s.faces) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

inline void write_polygon(std::ostream& os, const BoundaryShape<2>& s) {
  os.precision(17);
  for (const auto& p : s.vertices) os << p.x() << ' ' << p.y() << '\n';
}

}  // namespace polarballs
