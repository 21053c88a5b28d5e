#pragma once

// Power diagrams as the dual of a regular triangulation, addressed by caller
// chosen site ids. Site ids double as the symbolic-perturbation keys, so the
// diagram over a given id -> site map is unique regardless of how it was built.

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "polarballs/convex_polytope.hpp"
#include "polarballs/errors.hpp"
#include "polarballs/geometry.hpp"
#include "polarballs/regular_triangulation.hpp"

namespace polarballs {

/// Cube centred on `bbox` whose side is `factor` times the bbox diagonal.
template <int Dim>
Box<Dim> inflated_box(const Box<Dim>& bbox, double factor = 10.0) {
  const double half = 0.5 * factor * std::max(bbox.diagonal(), 1e-300);
  Box<Dim> out;
  out.lo = bbox.center() - Point<Dim>::Constant(half);
  out.hi = bbox.center() + Point<Dim>::Constant(half);
  return out;
}

template <int Dim>
class PowerDiagram {
 public:
  using SiteId = int;
  using Tri = RegularTriangulation<Dim>;
  static constexpr int kAbsent = -1;

  /// `domain` bounds the clipped cells; every site must lie well inside the
  /// auxiliary simplex built around it (1000 domain diagonals).
  explicit PowerDiagram(const Box<Dim>& domain) : domain_(domain), tri_(Tri::aux_simplex(domain)) {}

  const Box<Dim>& domain() const { return domain_; }
  const Tri& triangulation() const { return tri_; }

  /// Returns false when the new site is hidden.
  bool insert(SiteId id, const WeightedSite<Dim>& s) {
    if (id < 0) throw Error(ErrorCode::ContractViolation, "negative site id");
    if (contains(id)) throw Error(ErrorCode::DuplicateSite, "site id " + std::to_string(id) + " already present");
    const auto key = site_key(s);
    if (auto it = by_value_.find(key); it != by_value_.end()) {
      throw Error(ErrorCode::DuplicateSite, "site " + std::to_string(id) + " duplicates site " + std::to_string(it->second));
    }
    const int v = tri_.add_vertex(s.center, s.weight, id);
    set_vertex_of(id, v);
    return tri_.insert(v);
  }

  void remove(SiteId id) {
    const int v = require(id);
    tri_.remove(v);
    set_vertex_of(id, kAbsent);
  }

  bool contains(SiteId id) const {
    return id >= 0 && id < static_cast<SiteId>(vertex_of_.size()) && vertex_of_[id] != kAbsent;
  }

  /// Triangulation vertex of a site.
  int vertex_index(SiteId id) const { return require(id); }

  bool hidden(SiteId id) const { return tri_.vertex(require(id)).state != Tri::VertexState::Active; }

  WeightedSite<Dim> site(SiteId id) const {
    const auto& v = tri_.vertex(require(id));
    return {v.p, v.w};
  }

  std::size_t size() const { return count_; }

  std::vector<SiteId> site_ids() const {
    std::vector<SiteId> out;
    for (SiteId i = 0; i < static_cast<SiteId>(vertex_of_.size()); ++i)
      if (vertex_of_[i] != kAbsent) out.push_back(i);
    return out;
  }

  /// Sites whose cells share a facet with this one; empty for hidden sites.
  std::vector<SiteId> neighbors(SiteId id) const {
    const int v = require(id);
    std::vector<SiteId> out;
    for (int u : tri_.adjacent_vertices(v))
      if (!Tri::is_aux(u)) out.push_back(static_cast<SiteId>(tri_.vertex(u).key));
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Every adjacent pair (a < b).
  std::set<std::pair<SiteId, SiteId>> adjacency() const {
    std::set<std::pair<SiteId, SiteId>> out;
    for (const auto& c : tri_.cells()) {
      if (!c.alive) continue;
      for (int i = 0; i < Dim + 1; ++i) {
        for (int j = i + 1; j < Dim + 1; ++j) {
          if (Tri::is_aux(c.v[i]) || Tri::is_aux(c.v[j])) continue;
          const SiteId a = static_cast<SiteId>(tri_.vertex(c.v[i]).key);
          const SiteId b = static_cast<SiteId>(tri_.vertex(c.v[j]).key);
          out.emplace(std::min(a, b), std::max(a, b));
        }
      }
    }
    return out;
  }

  /// Power cell clipped to the domain box. Empty for hidden sites.
  ConvexPolytope<Dim> cell(SiteId id) const {
    const int v = require(id);
    if (tri_.vertex(v).state != Tri::VertexState::Active) return {};
    auto poly = ConvexPolytope<Dim>::from_box(domain_);
    const WeightedSite<Dim> me{tri_.vertex(v).p, tri_.vertex(v).w};
    for (int u : tri_.adjacent_vertices(v)) {
      const WeightedSite<Dim> other{tri_.vertex(u).p, tri_.vertex(u).w};
      poly.clip(equal_power_plane(me, other));
      if (poly.empty()) break;
    }
    return poly;
  }

  /// Line-based dump: "site <id> <coords...> <weight> [hidden] : <neighbor ids>".
  void dump(std::ostream& os) const {
    const auto old_prec = os.precision(17);
    for (SiteId id : site_ids()) {
      const auto s = site(id);
      os << "site " << id;
      for (int k = 0; k < Dim; ++k) os << ' ' << s.center[k];
      os << ' ' << s.weight;
      if (hidden(id)) os << " hidden";
      os << " :";
      for (SiteId n : neighbors(id)) os << ' ' << n;
      os << '\n';
    }
    os.precision(old_prec);
  }

  std::string validate() const { return tri_.validate(); }

  // Transactions: everything between begin() and rollback() is undone exactly.
  void begin() {
    tri_.begin();
    log_.clear();
  }
  void commit() {
    tri_.commit();
    log_.clear();
  }
  void rollback() {
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) apply_vertex_of(it->first, it->second);
    log_.clear();
    tri_.rollback();
  }
  bool in_transaction() const { return tri_.in_transaction(); }

 private:
  using ValueKey = std::array<double, Dim + 1>;

  static ValueKey site_key(const WeightedSite<Dim>& s) {
    ValueKey k;
    for (int i = 0; i < Dim; ++i) k[i] = s.center[i];
    k[Dim] = s.weight;
    return k;
  }

  int require(SiteId id) const {
    if (!contains(id)) throw Error(ErrorCode::UnknownSite, "site " + std::to_string(id));
    return vertex_of_[id];
  }

  void set_vertex_of(SiteId id, int v) {
    const int old = id < static_cast<SiteId>(vertex_of_.size()) ? vertex_of_[id] : kAbsent;
    if (tri_.in_transaction()) log_.emplace_back(id, old);
    apply_vertex_of(id, v);
  }

  void apply_vertex_of(SiteId id, int v) {
    if (id >= static_cast<SiteId>(vertex_of_.size())) vertex_of_.resize(id + 1, kAbsent);
    const int old = vertex_of_[id];
    if (old != kAbsent) {
      by_value_.erase(site_key({tri_.vertex(old).p, tri_.vertex(old).w}));
      --count_;
    }
    vertex_of_[id] = v;
    if (v != kAbsent) {
      by_value_.emplace(site_key({tri_.vertex(v).p, tri_.vertex(v).w}), id);
      ++count_;
    }
  }

  Box<Dim> domain_;
  Tri tri_;
  std::vector<int> vertex_of_;
  std::map<ValueKey, SiteId> by_value_;
  std::size_t count_ = 0;
  std::vector<std::pair<SiteId, int>> log_;
};

/// Insertion that stays provisional until commit(); destroyed uncommitted, it
/// rolls the diagram back to its exact prior state.
template <int Dim>
class TentativeInsert {
 public:
  using SiteId = typename PowerDiagram<Dim>::SiteId;

  TentativeInsert(PowerDiagram<Dim>& d, SiteId id, const WeightedSite<Dim>& s) : d_(&d), id_(id) {
    d.begin();
    try {
      visible_ = d.insert(id, s);
    } catch (...) {
      d.rollback();
      throw;
    }
  }
  TentativeInsert(const TentativeInsert&) = delete;
  TentativeInsert& operator=(const TentativeInsert&) = delete;
  TentativeInsert(TentativeInsert&& o) noexcept : d_(o.d_), id_(o.id_), visible_(o.visible_) { o.d_ = nullptr; }
  ~TentativeInsert() {
    if (d_) d_->rollback();
  }

  bool visible() const { return visible_; }
  SiteId id() const { return id_; }
  std::vector<SiteId> neighbors() const {
    if (!d_) throw Error(ErrorCode::ContractViolation, "tentative insert already resolved");
    return d_->neighbors(id_);
  }
  void commit() {
    if (!d_) throw Error(ErrorCode::ContractViolation, "tentative insert already resolved");
    d_->commit();
    d_ = nullptr;
  }
  void rollback() {
    if (!d_) throw Error(ErrorCode::ContractViolation, "tentative insert already resolved");
    d_->rollback();
    d_ = nullptr;
  }

 private:
  PowerDiagram<Dim>* d_;
  SiteId id_;
  bool visible_ = false;
};

template <int Dim>
TentativeInsert<Dim> tentative_insert(PowerDiagram<Dim>& d, int id, const WeightedSite<Dim>& s) {
  return TentativeInsert<Dim>(d, id, s);
}

template <int Dim>
Box<Dim> bounding_box(const std::vector<WeightedSite<Dim>>& sites) {
  Box<Dim> b;
  for (const auto& s : sites) b.extend(s.center);
  return b;
}

/// Sites get ids 0..n-1 in input order.
template <int Dim>
PowerDiagram<Dim> build_power_diagram(const std::vector<WeightedSite<Dim>>& sites, const Box<Dim>& domain) {
  if (sites.size() < Dim + 1) throw Error(ErrorCode::EmptyInput, "power diagram needs at least dim+1 sites");
  PowerDiagram<Dim> d(domain);
  for (std::size_t i = 0; i < sites.size(); ++i) d.insert(static_cast<int>(i), sites[i]);
  return d;
}

/// Default domain: the 10x inflated bounding box of the centres.
template <int Dim>
PowerDiagram<Dim> build_power_diagram(const std::vector<WeightedSite<Dim>>& sites) {
  return build_power_diagram(sites, inflated_box(bounding_box(sites)));
}

/// A vertex of a box-clipped Voronoi cell. Clamped vertices lie on the box.
template <int Dim>
struct VoronoiVertex {
  Point<Dim> position;
  bool clamped = false;
};

/// Unweighted Voronoi diagram of a point set (ids 0..n-1), with circumcentres
/// of the dual Delaunay cells cached.
template <int Dim>
class VoronoiDiagram {
 public:
  using Tri = RegularTriangulation<Dim>;

  VoronoiDiagram(PowerDiagram<Dim> pd, std::size_t n) : pd_(std::move(pd)), n_(n) {
    const Tri& t = pd_.triangulation();
    centers_.resize(t.cells().size());
    finite_.assign(t.cells().size(), 0);
    for (int c = 0; c < static_cast<int>(t.cells().size()); ++c) {
      if (!t.cells()[c].alive || t.cell_has_aux(c)) continue;
      centers_[c] = t.orthocenter(c);
      finite_[c] = pd_.domain().contains(centers_[c]) ? 1 : 0;
    }
  }

  const PowerDiagram<Dim>& power_diagram() const { return pd_; }
  const Tri& triangulation() const { return pd_.triangulation(); }
  const Box<Dim>& box() const { return pd_.domain(); }
  std::size_t size() const { return n_; }
  Point<Dim> generator(int id) const { return pd_.site(id).center; }

  /// Delaunay cell with a circumcentre inside the box (a genuine Voronoi vertex).
  bool is_finite_vertex(int cell) const { return finite_[cell] != 0; }
  const Point<Dim>& circumcenter(int cell) const { return centers_[cell]; }

  /// Delaunay cells incident to a generator.
  std::vector<int> incident_cells(int id) const {
    const Tri& t = pd_.triangulation();
    return t.star(vertex_of(id));
  }

  /// Vertices of the generator's box-clipped cell. Interior vertices come from
  /// circumcentres (bit-identical across cells); box vertices are flagged.
  std::vector<VoronoiVertex<Dim>> cell_vertices(int id) const {
    std::vector<VoronoiVertex<Dim>> out;
    bool needs_clip = false;
    for (int c : incident_cells(id)) {
      if (finite_[c]) {
        out.push_back({centers_[c], false});
      } else {
        needs_clip = true;
      }
    }
    if (needs_clip) {
      const auto poly = pd_.cell(id);
      const double tol = 1e-9 * (box().hi - box().lo).maxCoeff();
      for (const auto& p : poly.vertices()) {
        const bool on_box = ((p - box().lo).array().abs() <= tol).any() || ((p - box().hi).array().abs() <= tol).any();
        if (on_box) out.push_back({p, true});
      }
    }
    return out;
  }

 private:
  int vertex_of(int id) const {
    // generator id i was inserted as the (i + Dim + 1)-th vertex
    const int v = id + Dim + 1;
    if (id < 0 || id >= static_cast<int>(n_)) throw Error(ErrorCode::UnknownSite, "generator " + std::to_string(id));
    return v;
  }

  PowerDiagram<Dim> pd_;
  std::size_t n_;
  std::vector<Point<Dim>> centers_;
  std::vector<char> finite_;
};

/// Voronoi diagram of the points clipped to their bounding box inflated by
/// `box_inflation` (cube of side box_inflation * diagonal).
template <int Dim>
VoronoiDiagram<Dim> build_voronoi(const std::vector<Point<Dim>>& points, double box_inflation = 10.0) {
  if (points.size() < Dim + 1) throw Error(ErrorCode::EmptyInput, "voronoi diagram needs at least dim+1 points");
  std::vector<WeightedSite<Dim>> sites;
  sites.reserve(points.size());
  for (const auto& p : points) sites.push_back({p, 0.0});
  auto pd = build_power_diagram(sites, inflated_box(bounding_box(sites), box_inflation));
  bool full_dim = false;
  for (int c = 0; c < static_cast<int>(pd.triangulation().cells().size()) && !full_dim; ++c)
    full_dim = pd.triangulation().cells()[c].alive && !pd.triangulation().cell_has_aux(c);
  if (!full_dim) {
    throw Error(ErrorCode::DegenerateInput, "all points are collinear/coplanar; no bounded Voronoi vertex exists");
  }
  return VoronoiDiagram<Dim>(std::move(pd), points.size());
}

}  // namespace polarballs
