#pragma once

// Incremental regular (weighted Delaunay) triangulation in 2D/3D.
//
// Points live inside a large auxiliary simplex whose vertices are ordinary,
// zero-weight vertices 0..Dim; every cell is therefore finite. Insertion is
// Bowyer-Watson over the power-conflict region; removal re-triangulates the
// star of the vertex from the regular triangulation of its link plus any
// hidden vertices that fall inside the star. All mutations are journaled so a
// transaction can be rolled back to the exact prior state.

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "polarballs/errors.hpp"
#include "polarballs/geometry.hpp"
#include "polarballs/predicates.hpp"

namespace polarballs {

template <int Dim>
class RegularTriangulation {
 public:
  static constexpr int kCellVerts = Dim + 1;
  using VertexId = int;
  using CellId = int;
  static constexpr int kNone = -1;

  enum class VertexState : std::uint8_t { Active, Hidden, Removed, Pending };

  struct Vertex {
    Point<Dim> p;
    double w = 0.0;
    std::int64_t key = 0;
    VertexState state = VertexState::Pending;
    CellId cell = kNone;
  };

  struct Cell {
    std::array<VertexId, kCellVerts> v{};
    std::array<CellId, kCellVerts> n{};
    bool alive = false;
  };

  /// `aux` must be a positively oriented simplex enclosing every point that
  /// will ever be inserted. Aux vertices get keys -(Dim+1)..-1.
  explicit RegularTriangulation(const std::array<Point<Dim>, kCellVerts>& aux) : aux_(aux) {
    for (int i = 0; i < kCellVerts; ++i) {
      Vertex v;
      v.p = aux[i];
      v.key = -(kCellVerts) + i;
      v.state = VertexState::Active;
      v.cell = 0;
      verts_.push_back(v);
    }
    Cell c;
    for (int i = 0; i < kCellVerts; ++i) {
      c.v[i] = i;
      c.n[i] = kNone;
    }
    c.alive = true;
    cells_.push_back(c);
    if (orient_cell(0) <= 0) throw Error(ErrorCode::DegenerateInput, "auxiliary simplex is not positively oriented");
  }

  /// Auxiliary simplex around a domain box, `factor` box diagonals away.
  static std::array<Point<Dim>, kCellVerts> aux_simplex(const Box<Dim>& domain, double factor = 1000.0) {
    const Point<Dim> c = domain.center();
    const double L = std::max(domain.diagonal(), 1.0) * factor;
    std::array<Point<Dim>, kCellVerts> a;
    if constexpr (Dim == 2) {
      a[0] = c + L * Point<2>(-std::sqrt(3.0), -1.0);
      a[1] = c + L * Point<2>(std::sqrt(3.0), -1.0);
      a[2] = c + L * Point<2>(0.0, 2.0);
    } else {
      a[0] = c + L * Point<3>(1, 1, 1);
      a[1] = c + L * Point<3>(1, -1, -1);
      a[2] = c + L * Point<3>(-1, 1, -1);
      a[3] = c + L * Point<3>(-1, -1, 1);
      // make it positively oriented
      std::array<const Point<3>*, 4> pts{&a[0], &a[1], &a[2], &a[3]};
      if (predicates::orient<3>(pts) < 0) std::swap(a[2], a[3]);
    }
    return a;
  }

  const std::array<Point<Dim>, kCellVerts>& aux() const { return aux_; }

  // ---------------------------------------------------------------- queries

  std::size_t num_vertices() const { return verts_.size(); }
  const Vertex& vertex(VertexId v) const { return verts_.at(v); }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(CellId c) const { return cells_[c]; }
  static bool is_aux(VertexId v) { return v < kCellVerts; }

  bool cell_has_aux(CellId c) const {
    for (VertexId v : cells_[c].v)
      if (is_aux(v)) return true;
    return false;
  }

  /// Cells incident to an active vertex.
  std::vector<CellId> star(VertexId v) const {
    std::vector<CellId> out;
    if (verts_[v].state != VertexState::Active) return out;
    const CellId start = verts_[v].cell;
    std::vector<CellId> stack{start};
    ++stamp_;
    mark(start);
    while (!stack.empty()) {
      const CellId c = stack.back();
      stack.pop_back();
      out.push_back(c);
      for (int i = 0; i < kCellVerts; ++i) {
        if (cells_[c].v[i] == v) continue;
        const CellId nb = cells_[c].n[i];
        if (nb == kNone || marked(nb)) continue;
        mark(nb);
        stack.push_back(nb);
      }
    }
    return out;
  }

  /// Vertices sharing an edge with v (aux vertices included), sorted.
  std::vector<VertexId> adjacent_vertices(VertexId v) const {
    std::vector<VertexId> out;
    for (CellId c : star(v))
      for (VertexId u : cells_[c].v)
        if (u != v) out.push_back(u);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Orthocenter of a cell: the point with equal power to all its vertices.
  Point<Dim> orthocenter(CellId c) const {
    const auto& cv = cells_[c].v;
    const Point<Dim>& p0 = verts_[cv[0]].p;
    Eigen::Matrix<double, Dim, Dim> A;
    Eigen::Matrix<double, Dim, 1> b;
    for (int i = 1; i <= Dim; ++i) {
      const Vector<Dim> d = verts_[cv[i]].p - p0;
      A.row(i - 1) = 2.0 * d.transpose();
      b[i - 1] = d.squaredNorm() - (verts_[cv[i]].w - verts_[cv[0]].w);
    }
    return p0 + A.inverse() * b;
  }

  /// Power of the orthocenter (squared orthoradius); the circumradius^2 for
  /// zero weights.
  double ortho_weight(CellId c, const Point<Dim>& center) const {
    const auto& v0 = verts_[cells_[c].v[0]];
    return (center - v0.p).squaredNorm() - v0.w;
  }

  int orient_cell(CellId c) const {
    std::array<const Point<Dim>*, kCellVerts> pts;
    for (int i = 0; i < kCellVerts; ++i) pts[i] = &verts_[cells_[c].v[i]].p;
    return predicates::orient<Dim>(pts);
  }

  bool conflict(CellId c, VertexId q) const {
    std::array<predicates::KeyedSite<Dim>, kCellVerts> cs;
    for (int i = 0; i < kCellVerts; ++i) {
      const Vertex& v = verts_[cells_[c].v[i]];
      cs[i] = {&v.p, v.w, v.key};
    }
    const Vertex& qv = verts_[q];
    return predicates::in_conflict<Dim>(cs, {&qv.p, qv.w, qv.key});
  }

  /// Whether a weighted point not (yet) in the triangulation conflicts with c.
  bool conflict_with(CellId c, const Point<Dim>& p, double w, std::int64_t key) const {
    std::array<predicates::KeyedSite<Dim>, kCellVerts> cs;
    for (int i = 0; i < kCellVerts; ++i) {
      const Vertex& v = verts_[cells_[c].v[i]];
      cs[i] = {&v.p, v.w, v.key};
    }
    return predicates::in_conflict<Dim>(cs, {&p, w, key});
  }

  /// Visibility walk to a cell containing p (closed).
  CellId locate(const Point<Dim>& p, CellId hint = kNone) const {
    auto usable = [&](CellId c) { return c >= 0 && c < static_cast<CellId>(cells_.size()) && cells_[c].alive; };
    CellId c = usable(hint) ? hint : (usable(last_cell_) ? last_cell_ : any_alive_cell());
    CellId prev = kNone;
    const std::size_t max_steps = 4 * cells_.size() + 100;
    for (std::size_t steps = 0; steps < max_steps; ++steps) {
      const int start = static_cast<int>(rng() % kCellVerts);
      int next = -1;
      for (int k = 0; k < kCellVerts && next < 0; ++k) {
        const int i = (start + k) % kCellVerts;
        if (prev != kNone && cells_[c].n[i] == prev) continue;
        std::array<const Point<Dim>*, kCellVerts> pts;
        for (int j = 0; j < kCellVerts; ++j) pts[j] = &verts_[cells_[c].v[j]].p;
        pts[i] = &p;
        if (predicates::orient<Dim>(pts) < 0) next = i;
      }
      if (next < 0) return c;
      const CellId nb = cells_[c].n[next];
      if (nb == kNone) throw Error(ErrorCode::ContractViolation, "point outside the triangulation domain");
      prev = c;
      c = nb;
    }
    throw Error(ErrorCode::DegenerateInput, "point location did not terminate");
  }

  // ---------------------------------------------------------- transactions

  void begin() {
    if (tx_active_) throw Error(ErrorCode::ContractViolation, "nested transaction");
    tx_active_ = true;
    log_.clear();
  }

  void commit() {
    if (!tx_active_) throw Error(ErrorCode::ContractViolation, "commit without transaction");
    finish_commit();
  }

  void rollback() {
    if (!tx_active_) throw Error(ErrorCode::ContractViolation, "rollback without transaction");
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
      switch (it->kind) {
        case Op::CellCreated:
          cells_[it->a].alive = false;
          if (it->b) {
            free_.push_back(it->a);
          } else {
            cells_.pop_back();
          }
          break;
        case Op::CellKilled:
          cells_[it->a].alive = true;
          break;
        case Op::NeighborChanged:
          cells_[it->a].n[it->b] = it->c;
          break;
        case Op::VertexChanged:
          verts_[it->a].state = static_cast<VertexState>(it->b);
          verts_[it->a].cell = it->c;
          break;
        case Op::VertexAdded:
          verts_.pop_back();
          break;
      }
    }
    log_.clear();
    tx_active_ = false;
    last_cell_ = kNone;
  }

  bool in_transaction() const { return tx_active_; }

  // ------------------------------------------------------------- mutation

  /// Appends a vertex record without inserting it.
  VertexId add_vertex(const Point<Dim>& p, double w, std::int64_t key) {
    if (!is_finite<Dim>(p) || !std::isfinite(w)) throw Error(ErrorCode::ContractViolation, "non-finite site");
    Vertex v;
    v.p = p;
    v.w = w;
    v.key = key;
    verts_.push_back(v);
    journal({Op::VertexAdded, static_cast<int>(verts_.size()) - 1, 0, 0});
    return static_cast<VertexId>(verts_.size()) - 1;
  }

  /// Inserts a pending vertex. Returns false if it ends up hidden.
  bool insert(VertexId q, CellId hint = kNone) {
    AutoTx tx(*this);
    const bool ok = insert_impl(q, hint);
    tx.done();
    return ok;
  }

  /// Removes a vertex. Hidden or pending vertices are simply marked removed.
  void remove(VertexId v) {
    if (is_aux(v)) throw Error(ErrorCode::ContractViolation, "cannot remove an auxiliary vertex");
    AutoTx tx(*this);
    remove_impl(v);
    tx.done();
  }

  /// Structural self-check: adjacency symmetry and positive orientation.
  /// Returns an empty string when valid.
  std::string validate() const {
    for (CellId c = 0; c < static_cast<CellId>(cells_.size()); ++c) {
      const Cell& cl = cells_[c];
      if (!cl.alive) continue;
      if (orient_cell(c) <= 0) return "cell " + std::to_string(c) + " not positively oriented";
      for (int i = 0; i < kCellVerts; ++i) {
        const CellId nb = cl.n[i];
        if (nb == kNone) continue;
        if (!cells_[nb].alive) return "dead neighbor";
        if (mirror_index(nb, c) < 0) return "asymmetric adjacency";
      }
      for (VertexId v : cl.v)
        if (verts_[v].state != VertexState::Active) return "inactive vertex in a cell";
    }
    return {};
  }

  /// Checks the local regularity condition on every interior facet.
  bool is_regular() const {
    for (CellId c = 0; c < static_cast<CellId>(cells_.size()); ++c) {
      if (!cells_[c].alive) continue;
      for (int i = 0; i < kCellVerts; ++i) {
        const CellId nb = cells_[c].n[i];
        if (nb == kNone) continue;
        const int j = mirror_index(nb, c);
        if (conflict(c, cells_[nb].v[j])) return false;
      }
    }
    return true;
  }

 private:
  enum class Op : std::uint8_t { CellCreated, CellKilled, NeighborChanged, VertexChanged, VertexAdded };
  struct LogEntry {
    Op kind;
    int a;
    int b;
    int c;
  };

  struct AutoTx {
    RegularTriangulation& t;
    bool owned;
    explicit AutoTx(RegularTriangulation& tri) : t(tri), owned(!tri.tx_active_) {
      if (owned) t.begin();
    }
    void done() {
      if (owned) {
        t.commit();
        owned = false;
      }
    }
    ~AutoTx() {
      if (owned) t.rollback();
    }
  };

  void journal(const LogEntry& e) {
    if (tx_active_) log_.push_back(e);
  }

  void finish_commit() {
    for (const auto& e : log_)
      if (e.kind == Op::CellKilled) free_.push_back(e.a);
    log_.clear();
    tx_active_ = false;
  }

  CellId new_cell(const Cell& c) {
    CellId id;
    bool from_free = false;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
      cells_[id] = c;
      from_free = true;
    } else {
      cells_.push_back(c);
      id = static_cast<CellId>(cells_.size()) - 1;
    }
    cells_[id].alive = true;
    journal({Op::CellCreated, id, from_free ? 1 : 0, 0});
    return id;
  }

  void kill_cell(CellId c) {
    cells_[c].alive = false;
    journal({Op::CellKilled, c, 0, 0});
  }

  void set_neighbor(CellId c, int i, CellId nb) {
    journal({Op::NeighborChanged, c, i, cells_[c].n[i]});
    cells_[c].n[i] = nb;
  }

  void set_vertex(VertexId v, VertexState s, CellId cell) {
    journal({Op::VertexChanged, v, static_cast<int>(verts_[v].state), verts_[v].cell});
    verts_[v].state = s;
    verts_[v].cell = cell;
  }

  int mirror_index(CellId c, CellId of) const {
    for (int i = 0; i < kCellVerts; ++i)
      if (cells_[c].n[i] == of) return i;
    return -1;
  }

  CellId any_alive_cell() const {
    for (CellId c = static_cast<CellId>(cells_.size()) - 1; c >= 0; --c)
      if (cells_[c].alive) return c;
    throw Error(ErrorCode::ContractViolation, "empty triangulation");
  }

  std::uint64_t rng() const {
    rng_state_ ^= rng_state_ << 13;
    rng_state_ ^= rng_state_ >> 7;
    rng_state_ ^= rng_state_ << 17;
    return rng_state_;
  }

  void mark(CellId c) const {
    if (static_cast<std::size_t>(c) >= marks_.size()) marks_.resize(cells_.size() * 2 + 16, 0);
    marks_[c] = stamp_;
  }
  bool marked(CellId c) const { return static_cast<std::size_t>(c) < marks_.size() && marks_[c] == stamp_; }

  // Boundary facet of a cavity: kept outer cell (may be kNone) seen from a
  // cavity cell through its facet `index`.
  struct BoundaryFacet {
    CellId inner;
    int index;
    CellId outer;
  };

  bool insert_impl(VertexId q, CellId hint) {
    if (verts_[q].state != VertexState::Pending) throw Error(ErrorCode::ContractViolation, "vertex already inserted");
    const CellId start = locate(verts_[q].p, hint);
    if (!conflict(start, q)) {
      set_vertex(q, VertexState::Hidden, kNone);
      return false;
    }

    // Conflict region by flood fill; test results cached via two stamps.
    ++stamp_;
    const std::uint32_t in_stamp = stamp_;
    ++stamp_;
    const std::uint32_t out_stamp = stamp_;
    auto set_state = [&](CellId c, std::uint32_t s) {
      if (static_cast<std::size_t>(c) >= marks_.size()) marks_.resize(cells_.size() * 2 + 16, 0);
      marks_[c] = s;
    };
    auto state_of = [&](CellId c) -> std::uint32_t {
      return static_cast<std::size_t>(c) < marks_.size() ? marks_[c] : 0;
    };

    std::vector<CellId> cavity{start};
    std::vector<BoundaryFacet> boundary;
    set_state(start, in_stamp);
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      const CellId c = cavity[k];
      for (int i = 0; i < kCellVerts; ++i) {
        const CellId nb = cells_[c].n[i];
        if (nb == kNone) {
          boundary.push_back({c, i, kNone});
          continue;
        }
        const std::uint32_t st = state_of(nb);
        if (st == in_stamp) continue;
        if (st == out_stamp) {
          boundary.push_back({c, i, nb});
          continue;
        }
        if (conflict(nb, q)) {
          set_state(nb, in_stamp);
          cavity.push_back(nb);
        } else {
          set_state(nb, out_stamp);
          boundary.push_back({c, i, nb});
        }
      }
    }

    const std::vector<CellId> created = fill_star(q, boundary);

    std::vector<VertexId> touched;
    for (CellId c : cavity)
      for (VertexId v : cells_[c].v) touched.push_back(v);
    for (CellId c : cavity) kill_cell(c);

    set_vertex(q, VertexState::Active, created.front());
    refresh_incidence(created);
    // Cavity vertices left without a cell are now hidden.
    for (VertexId v : touched) {
      if (verts_[v].state == VertexState::Active && !cells_[verts_[v].cell].alive) {
        if (is_aux(v)) throw Error(ErrorCode::DegenerateInput, "auxiliary vertex was hidden");
        set_vertex(v, VertexState::Hidden, kNone);
      }
    }
    last_cell_ = created.front();
    return true;
  }

  /// Points every vertex of `cells` whose incident cell died (or that was not
  /// active) at one of them.
  void refresh_incidence(const std::vector<CellId>& cells) {
    for (CellId c : cells) {
      for (VertexId u : cells_[c].v) {
        const Vertex& vx = verts_[u];
        if (vx.state != VertexState::Active || vx.cell == kNone || !cells_[vx.cell].alive) {
          set_vertex(u, VertexState::Active, c);
        }
      }
    }
  }

  bool contains_vertex(CellId c, VertexId v) const {
    for (VertexId u : cells_[c].v)
      if (u == v) return true;
    return false;
  }

  /// Creates the cone from q to the cavity boundary and links everything up.
  std::vector<CellId> fill_star(VertexId q, const std::vector<BoundaryFacet>& boundary) {
    std::vector<CellId> created;
    created.reserve(boundary.size());
    struct Ridge {
      std::array<VertexId, Dim - 1> key;
      CellId cell;
      int index;
    };
    std::vector<Ridge> ridges;
    ridges.reserve(boundary.size() * Dim);
    for (const BoundaryFacet& bf : boundary) {
      Cell nc;
      nc.v = cells_[bf.inner].v;
      nc.v[bf.index] = q;
      nc.n.fill(kNone);
      nc.n[bf.index] = bf.outer;
      const CellId id = new_cell(nc);
      created.push_back(id);
      if (bf.outer != kNone) {
        const int j = mirror_index(bf.outer, bf.inner);
        set_neighbor(bf.outer, j, id);
      }
      for (int j = 0; j < kCellVerts; ++j) {
        if (j == bf.index) continue;
        Ridge r;
        int k = 0;
        for (int m = 0; m < kCellVerts; ++m)
          if (m != j && m != bf.index) r.key[k++] = nc.v[m];
        std::sort(r.key.begin(), r.key.end());
        r.cell = id;
        r.index = j;
        ridges.push_back(r);
      }
    }
    std::sort(ridges.begin(), ridges.end(), [](const Ridge& a, const Ridge& b) { return a.key < b.key; });
    for (std::size_t i = 0; i + 1 < ridges.size(); i += 2) {
      if (ridges[i].key != ridges[i + 1].key) throw Error(ErrorCode::DegenerateInput, "cavity boundary is not a closed star");
      cells_[ridges[i].cell].n[ridges[i].index] = ridges[i + 1].cell;
      cells_[ridges[i + 1].cell].n[ridges[i + 1].index] = ridges[i].cell;
    }
    if (ridges.size() % 2 != 0) throw Error(ErrorCode::DegenerateInput, "cavity boundary is not a closed star");
    return created;
  }

  bool point_in_cell(const Point<Dim>& p, CellId c) const {
    for (int i = 0; i < kCellVerts; ++i) {
      std::array<const Point<Dim>*, kCellVerts> pts;
      for (int j = 0; j < kCellVerts; ++j) pts[j] = &verts_[cells_[c].v[j]].p;
      pts[i] = &p;
      if (predicates::orient<Dim>(pts) < 0) return false;
    }
    return true;
  }

  void remove_impl(VertexId v) {
    const VertexState st = verts_[v].state;
    if (st == VertexState::Removed) throw Error(ErrorCode::UnknownSite, "vertex already removed");
    if (st != VertexState::Active) {
      set_vertex(v, VertexState::Removed, kNone);
      return;
    }

    const std::vector<CellId> star_cells = star(v);

    // Link facets keyed by sorted vertex ids.
    struct LinkFacet {
      std::array<VertexId, Dim> key;
      CellId outer;
      int outer_index;  // index in outer cell of the facet
      bool used = false;
    };
    std::vector<LinkFacet> link;
    std::vector<VertexId> link_verts;
    Box<Dim> star_box;
    for (CellId c : star_cells) {
      int iv = -1;
      for (int i = 0; i < kCellVerts; ++i) {
        const VertexId u = cells_[c].v[i];
        star_box.extend(verts_[u].p);
        if (u == v) {
          iv = i;
        } else {
          link_verts.push_back(u);
        }
      }
      LinkFacet lf;
      int k = 0;
      for (int i = 0; i < kCellVerts; ++i)
        if (i != iv) lf.key[k++] = cells_[c].v[i];
      std::sort(lf.key.begin(), lf.key.end());
      lf.outer = cells_[c].n[iv];
      lf.outer_index = lf.outer == kNone ? -1 : mirror_index(lf.outer, c);
      link.push_back(lf);
    }
    std::sort(link.begin(), link.end(), [](const LinkFacet& a, const LinkFacet& b) { return a.key < b.key; });
    std::sort(link_verts.begin(), link_verts.end());
    link_verts.erase(std::unique(link_verts.begin(), link_verts.end()), link_verts.end());

    // Hidden vertices that may re-appear: those located in the star.
    std::vector<VertexId> revived;
    for (VertexId u = kCellVerts; u < static_cast<VertexId>(verts_.size()); ++u) {
      if (verts_[u].state != VertexState::Hidden) continue;
      if (!star_box.contains(verts_[u].p)) continue;
      for (CellId c : star_cells) {
        if (point_in_cell(verts_[u].p, c)) {
          revived.push_back(u);
          break;
        }
      }
    }

    // Regular triangulation of link + candidates inside the same aux simplex.
    RegularTriangulation local(aux_);
    std::vector<VertexId> to_global(kCellVerts);
    for (int i = 0; i < kCellVerts; ++i) to_global[i] = i;
    auto add_local = [&](VertexId g) {
      const Vertex& gv = verts_[g];
      const VertexId l = local.add_vertex(gv.p, gv.w, gv.key);
      to_global.push_back(g);
      local.insert(l);
    };
    for (VertexId u : link_verts)
      if (!is_aux(u)) add_local(u);
    for (VertexId u : revived) add_local(u);

    auto find_link = [&](const std::array<VertexId, Dim>& key) -> LinkFacet* {
      auto it = std::lower_bound(link.begin(), link.end(), key,
                                 [](const LinkFacet& a, const std::array<VertexId, Dim>& k) { return a.key < k; });
      if (it != link.end() && it->key == key) return &*it;
      return nullptr;
    };
    auto facet_key = [&](CellId lc, int j) {
      std::array<VertexId, Dim> key;
      int k = 0;
      for (int m = 0; m < kCellVerts; ++m)
        if (m != j) key[k++] = to_global[local.cells_[lc].v[m]];
      std::sort(key.begin(), key.end());
      return key;
    };

    // Seeds: local cells on v's side of a link facet.
    std::vector<CellId> hole;
    std::vector<char> in_hole(local.cells_.size(), 0);
    for (CellId lc = 0; lc < static_cast<CellId>(local.cells_.size()); ++lc) {
      if (!local.cells_[lc].alive) continue;
      for (int j = 0; j < kCellVerts && !in_hole[lc]; ++j) {
        if (!find_link(facet_key(lc, j))) continue;
        std::array<const Point<Dim>*, kCellVerts> pts;
        for (int m = 0; m < kCellVerts; ++m) pts[m] = &local.verts_[local.cells_[lc].v[m]].p;
        pts[j] = &verts_[v].p;
        if (predicates::orient<Dim>(pts) > 0) {
          in_hole[lc] = 1;
          hole.push_back(lc);
        }
      }
    }
    for (std::size_t k = 0; k < hole.size(); ++k) {
      const CellId lc = hole[k];
      for (int j = 0; j < kCellVerts; ++j) {
        if (find_link(facet_key(lc, j))) continue;
        const CellId nb = local.cells_[lc].n[j];
        if (nb == kNone) throw Error(ErrorCode::DegenerateInput, "vertex removal escaped the star");
        if (!in_hole[nb]) {
          in_hole[nb] = 1;
          hole.push_back(nb);
        }
      }
    }

    if (hole.empty()) throw Error(ErrorCode::DegenerateInput, "vertex removal found no hole cells");

    // Splice the hole cells in.
    std::vector<CellId> global_of(local.cells_.size(), kNone);
    for (CellId lc : hole) {
      Cell nc;
      for (int m = 0; m < kCellVerts; ++m) nc.v[m] = to_global[local.cells_[lc].v[m]];
      nc.n.fill(kNone);
      global_of[lc] = new_cell(nc);
    }
    for (CellId sc : star_cells) kill_cell(sc);
    std::size_t matched = 0;
    for (CellId lc : hole) {
      const CellId gc = global_of[lc];
      for (int j = 0; j < kCellVerts; ++j) {
        const CellId nb = local.cells_[lc].n[j];
        if (nb != kNone && in_hole[nb]) {
          cells_[gc].n[j] = global_of[nb];
          continue;
        }
        LinkFacet* lf = find_link(facet_key(lc, j));
        if (!lf || lf->used) throw Error(ErrorCode::DegenerateInput, "vertex removal: unmatched hole facet");
        lf->used = true;
        ++matched;
        cells_[gc].n[j] = lf->outer;
        if (lf->outer != kNone) set_neighbor(lf->outer, lf->outer_index, gc);
      }
    }
    if (matched != link.size()) throw Error(ErrorCode::DegenerateInput, "vertex removal: hole does not match the star");

    set_vertex(v, VertexState::Removed, kNone);
    std::vector<CellId> created;
    for (CellId lc : hole) created.push_back(global_of[lc]);
    refresh_incidence(created);
    last_cell_ = global_of[hole.front()];
  }

  std::array<Point<Dim>, kCellVerts> aux_;
  std::vector<Vertex> verts_;
  std::vector<Cell> cells_;
  std::vector<CellId> free_;
  std::vector<LogEntry> log_;
  bool tx_active_ = false;
  CellId last_cell_ = 0;
  mutable std::vector<std::uint32_t> marks_;
  mutable std::uint32_t stamp_ = 0;
  mutable std::uint64_t rng_state_ = 0x9E3779B97F4A7C15ull;
};

}  // namespace polarballs
