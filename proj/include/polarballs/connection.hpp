#pragma once

// Wiring of selected balls: the interior Voronoi graph, its centredness
// weights and an approximate Steiner tree over the selected poles.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "polarballs/mesh_export.hpp"
#include "polarballs/poles.hpp"
#include "polarballs/power_diagram.hpp"
#include "polarballs/sampling.hpp"
#include "polarballs/shape.hpp"

namespace polarballs {

template <int Dim>
struct GraphNode {
  Point<Dim> position;
  double radius = 0.0;
  int cell = -1;  // representative Delaunay cell; -1 for feature nodes
  bool feature = false;
};

template <int Dim>
struct InteriorVoronoiGraph {
  std::vector<GraphNode<Dim>> nodes;
  std::vector<std::pair<int, int>> edges;  // a < b, sorted, unique
  std::vector<int> cell_node;              // Delaunay cell -> node, or -1
  std::vector<std::string> log;

  /// Node whose Voronoi vertex is exactly `p` (as reported by the diagram), or -1.
  int node_at(const Point<Dim>& p) const {
    auto it = index_.find(key(p));
    return it == index_.end() ? -1 : it->second;
  }

  static std::array<double, Dim> key(const Point<Dim>& p) {
    std::array<double, Dim> k;
    for (int i = 0; i < Dim; ++i) k[i] = p[i];
    return k;
  }

  std::map<std::array<double, Dim>, int> index_;
};

/// Voronoi vertices strictly inside the shape, joined along Voronoi edges
/// whose midpoint is also inside. Circumcentres of cospherical Delaunay cells
/// closer than kRelTol * diag are merged into one node.
template <int Dim>
InteriorVoronoiGraph<Dim> interior_voronoi_graph(const VoronoiDiagram<Dim>& vd, const BoundaryShape<Dim>& shape) {
  using Tri = RegularTriangulation<Dim>;
  const Tri& tri = vd.triangulation();
  const int nc = static_cast<int>(tri.cells().size());
  InteriorVoronoiGraph<Dim> g;
  g.cell_node.assign(nc, -1);

  const double tol = kRelTol * shape.bbox_diag;
  std::map<std::array<long long, Dim>, std::vector<int>> buckets;
  auto bucket_of = [&](const Point<Dim>& p) {
    std::array<long long, Dim> b;
    for (int i = 0; i < Dim; ++i) b[i] = static_cast<long long>(std::floor(p[i] / tol));
    return b;
  };
  auto find_close = [&](const Point<Dim>& p) {
    const auto b = bucket_of(p);
    int best = -1;
    const int span = Dim == 2 ? 9 : 27;
    for (int o = 0; o < span; ++o) {
      auto q = b;
      int r = o;
      for (int i = 0; i < Dim; ++i) {
        q[i] += r % 3 - 1;
        r /= 3;
      }
      auto it = buckets.find(q);
      if (it == buckets.end()) continue;
      for (int n : it->second) {
        if ((g.nodes[n].position - p).norm() <= tol && (best < 0 || n < best)) best = n;
      }
    }
    return best;
  };

  int merged = 0;
  for (int c = 0; c < nc; ++c) {
    if (!tri.cells()[c].alive || tri.cell_has_aux(c) || !vd.is_finite_vertex(c)) continue;
    const Point<Dim>& x = vd.circumcenter(c);
    if (!shape.contains(x)) continue;
    int n = find_close(x);
    if (n < 0) {
      n = static_cast<int>(g.nodes.size());
      g.nodes.push_back({x, (x - tri.vertex(tri.cells()[c].v[0]).p).norm(), c, false});
      buckets[bucket_of(x)].push_back(n);
    } else {
      ++merged;
    }
    g.cell_node[c] = n;
    g.index_.emplace(InteriorVoronoiGraph<Dim>::key(x), n);
  }

  std::set<std::pair<int, int>> edges;
  for (int c = 0; c < nc; ++c) {
    const int a = g.cell_node[c];
    if (a < 0) continue;
    for (int nb : tri.cells()[c].n) {
      if (nb < 0 || nb < c) continue;
      const int b = g.cell_node[nb];
      if (b < 0 || b == a) continue;
      if (!shape.contains(0.5 * (vd.circumcenter(c) + vd.circumcenter(nb)))) continue;
      edges.emplace(std::min(a, b), std::max(a, b));
    }
  }
  g.edges.assign(edges.begin(), edges.end());
  if (merged) g.log.push_back(std::to_string(merged) + " near-coincident Voronoi vertices merged");
  return g;
}

/// Centredness weight: (|p_i - p_j| + mu |r_i - r_j|) / min(r_i, r_j).
template <int Dim>
double centredness_weight(const Point<Dim>& pi, double ri, const Point<Dim>& pj, double rj, double mu) {
  return ((pi - pj).norm() + mu * std::abs(ri - rj)) / std::min(ri, rj);
}

using Adjacency = std::vector<std::vector<std::pair<int, double>>>;

template <int Dim>
struct WeightedPoleGraph {
  std::vector<GraphNode<Dim>> nodes;
  Adjacency adj;  // per node, sorted by neighbour id
  std::vector<int> terminals;
  double mu = 3.0;
  std::vector<std::string> warnings;

  std::size_t num_edges() const {
    std::size_t n = 0;
    for (const auto& a : adj) n += a.size();
    return n / 2;
  }

  double weight(int a, int b) const {
    for (const auto& [n, w] : adj[a])
      if (n == b) return w;
    return std::numeric_limits<double>::infinity();
  }

  void add_edge(int a, int b, double w) {
    auto put = [](std::vector<std::pair<int, double>>& list, int n, double w) {
      auto it = std::lower_bound(list.begin(), list.end(), std::make_pair(n, -std::numeric_limits<double>::infinity()));
      if (it != list.end() && it->first == n) {
        it->second = std::min(it->second, w);
      } else {
        list.insert(it, {n, w});
      }
    };
    put(adj[a], b, w);
    put(adj[b], a, w);
  }

  void set_terminals(std::vector<int> t) {
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    for (int x : t) {
      if (x < 0 || x >= static_cast<int>(nodes.size()))
        throw Error(ErrorCode::ContractViolation, "terminal " + std::to_string(x) + " is not a graph node");
    }
    terminals = std::move(t);
  }
};

template <int Dim>
WeightedPoleGraph<Dim> build_weighted_graph(const InteriorVoronoiGraph<Dim>& graph, double mu = 3.0) {
  if (!(mu >= 0.0)) throw Error(ErrorCode::ContractViolation, "mu must be non-negative");
  WeightedPoleGraph<Dim> g;
  g.nodes = graph.nodes;
  g.mu = mu;
  g.adj.assign(g.nodes.size(), {});
  int excluded = 0;
  for (const auto& n : g.nodes) excluded += !(n.radius > 0.0);
  if (excluded) g.warnings.push_back(std::to_string(excluded) + " graph nodes with radius <= 0 excluded");
  for (const auto& [a, b] : graph.edges) {
    const auto& na = g.nodes[a];
    const auto& nb = g.nodes[b];
    if (!(na.radius > 0.0) || !(nb.radius > 0.0)) continue;
    g.add_edge(a, b, centredness_weight<Dim>(na.position, na.radius, nb.position, nb.radius, mu));
  }
  return g;
}

struct WireTree {
  std::vector<std::pair<int, int>> edges;  // a < b, sorted
  std::vector<int> nodes;                  // sorted
  double cost = 0.0;
};

namespace detail {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
};

using WEdge = std::tuple<double, int, int>;  // (weight, a, b) with a < b

inline double edge_weight(const std::vector<std::vector<std::pair<int, double>>>& adj, int a, int b) {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& [v, wt] : adj[a])
    if (v == b) w = std::min(w, wt);
  return w;
}

inline std::vector<WEdge> kruskal(std::vector<WEdge> edges, std::size_t n) {
  std::sort(edges.begin(), edges.end());
  DisjointSets ds(n);
  std::vector<WEdge> out;
  for (const auto& e : edges)
    if (ds.unite(std::get<1>(e), std::get<2>(e))) out.push_back(e);
  return out;
}

}  // namespace detail

/// Connected components of the terminals (sorted lists); one list when the
/// terminals can all reach each other.
inline std::vector<std::vector<int>> terminal_components(const Adjacency& adj, const std::vector<int>& terminals) {
  detail::DisjointSets ds(adj.size());
  for (int a = 0; a < static_cast<int>(adj.size()); ++a)
    for (const auto& [b, w] : adj[a]) ds.unite(a, b);
  std::map<int, std::vector<int>> by_root;
  for (int t : terminals) by_root[ds.find(t)].push_back(t);
  std::vector<std::vector<int>> out;
  for (auto& [r, list] : by_root) {
    std::sort(list.begin(), list.end());
    out.push_back(std::move(list));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Shortest-path 2-approximation of the Steiner tree (Mehlhorn's variant of
/// the terminal distance-graph MST), followed by an MST of the expanded
/// subgraph and pruning of non-terminal leaves. Ties go to smaller node ids.
inline WireTree steiner_tree(const Adjacency& adj, std::vector<int> terminals) {
  std::sort(terminals.begin(), terminals.end());
  terminals.erase(std::unique(terminals.begin(), terminals.end()), terminals.end());
  WireTree tree;
  if (terminals.empty()) return tree;
  const int n = static_cast<int>(adj.size());
  for (int t : terminals)
    if (t < 0 || t >= n) throw Error(ErrorCode::ContractViolation, "terminal " + std::to_string(t) + " out of range");

  const auto comps = terminal_components(adj, terminals);
  if (comps.size() > 1) {
    std::string msg = std::to_string(comps.size()) + " terminal components:";
    for (const auto& c : comps) {
      msg += " {";
      for (std::size_t i = 0; i < c.size(); ++i) msg += (i ? "," : "") + std::to_string(c[i]);
      msg += "}";
    }
    throw Error(ErrorCode::DisconnectedTerminals, msg);
  }
  if (terminals.size() == 1) {
    tree.nodes = terminals;
    return tree;
  }

  // Voronoi regions of the terminals under shortest-path distance.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> base(n, -1), pred(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  for (int t : terminals) {
    dist[t] = 0.0;
    base[t] = t;
    pq.push({0.0, t});
  }
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : adj[u]) {
      const double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        base[v] = base[u];
        pred[v] = u;
        pq.push({nd, v});
      }
    }
  }

  // Cheapest bridge edge between each pair of regions.
  std::map<std::pair<int, int>, std::tuple<double, int, int, double>> bridge;
  for (int u = 0; u < n; ++u) {
    if (base[u] < 0) continue;
    for (const auto& [v, w] : adj[u]) {
      if (v <= u || base[v] < 0 || base[v] == base[u]) continue;
      const double c = dist[u] + w + dist[v];
      const auto key = std::minmax(base[u], base[v]);
      auto it = bridge.find(key);
      if (it == bridge.end() || c < std::get<0>(it->second)) bridge[key] = {c, u, v, w};
    }
  }
  std::map<int, int> term_index;
  for (int i = 0; i < static_cast<int>(terminals.size()); ++i) term_index[terminals[i]] = i;
  std::vector<detail::WEdge> dgraph;
  for (const auto& [key, val] : bridge) {
    dgraph.emplace_back(std::get<0>(val), term_index[key.first], term_index[key.second]);
  }
  const auto dmst = detail::kruskal(dgraph, terminals.size());

  // Expand the chosen bridges into graph paths.
  std::map<std::pair<int, int>, double> sub;
  auto add = [&](int a, int b, double w) { sub[std::minmax(a, b)] = w; };
  for (const auto& e : dmst) {
    const auto key = std::make_pair(terminals[std::get<1>(e)], terminals[std::get<2>(e)]);
    const auto& [c, u, v, w] = bridge.at(key);
    add(u, v, w);
    for (int x : {u, v}) {
      while (pred[x] >= 0) {
        add(pred[x], x, detail::edge_weight(adj, pred[x], x));
        x = pred[x];
      }
    }
  }
  std::vector<detail::WEdge> sub_edges;
  std::map<int, int> local;
  std::vector<int> global;
  auto id_of = [&](int x) {
    auto it = local.find(x);
    if (it != local.end()) return it->second;
    const int id = static_cast<int>(global.size());
    local.emplace(x, id);
    global.push_back(x);
    return id;
  };
  for (const auto& [e, w] : sub) sub_edges.emplace_back(w, id_of(e.first), id_of(e.second));
  const auto smst = detail::kruskal(sub_edges, global.size());

  // Prune non-terminal leaves.
  std::vector<std::set<int>> nb(global.size());
  std::map<std::pair<int, int>, double> kept;
  for (const auto& [w, a, b] : smst) {
    nb[a].insert(b);
    nb[b].insert(a);
    kept[std::minmax(a, b)] = w;
  }
  std::set<int> is_term;
  for (int t : terminals) is_term.insert(local.at(t));
  std::vector<int> stack;
  for (int i = 0; i < static_cast<int>(global.size()); ++i)
    if (nb[i].size() == 1 && !is_term.count(i)) stack.push_back(i);
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (nb[x].size() != 1 || is_term.count(x)) continue;
    const int y = *nb[x].begin();
    nb[x].clear();
    nb[y].erase(x);
    kept.erase(std::minmax(x, y));
    if (nb[y].size() == 1 && !is_term.count(y)) stack.push_back(y);
  }

  std::set<int> nodes;
  for (const auto& [e, w] : kept) {
    const int a = global[e.first], b = global[e.second];
    tree.edges.emplace_back(std::min(a, b), std::max(a, b));
    tree.cost += w;
    nodes.insert(a);
    nodes.insert(b);
  }
  std::sort(tree.edges.begin(), tree.edges.end());
  tree.nodes.assign(nodes.begin(), nodes.end());
  return tree;
}

template <int Dim>
WireTree steiner_tree(const WeightedPoleGraph<Dim>& g) {
  return steiner_tree(g.adj, g.terminals);
}

/// One tree per terminal component, for callers that accept a forest.
inline std::vector<WireTree> steiner_forest(const Adjacency& adj, const std::vector<int>& terminals) {
  std::vector<WireTree> out;
  for (const auto& comp : terminal_components(adj, terminals)) out.push_back(steiner_tree(adj, comp));
  return out;
}

/// Largest nearest-neighbour distance among the samples.
template <int Dim>
double max_sample_spacing(const VoronoiDiagram<Dim>& vd) {
  double worst = 0.0;
  const auto& pd = vd.power_diagram();
  for (int i = 0; i < static_cast<int>(vd.size()); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j : pd.neighbors(i)) best = std::min(best, (vd.generator(i) - vd.generator(j)).norm());
    if (std::isfinite(best)) worst = std::max(worst, best);
  }
  return worst;
}

/// Adds each feature point as a terminal node wired to the interior Voronoi
/// vertices of its nearest sample's cell. Features farther than twice the
/// maximum sample spacing from every sample are rejected with a warning.
template <int Dim>
WeightedPoleGraph<Dim> augment_with_features(const WeightedPoleGraph<Dim>& graph, const InteriorVoronoiGraph<Dim>& ivg,
                                             const std::vector<Point<Dim>>& features, const VoronoiDiagram<Dim>& vd,
                                             const std::vector<SurfaceSample<Dim>>& samples, double diag) {
  WeightedPoleGraph<Dim> g = graph;
  if (features.empty()) return g;
  if (samples.size() != vd.size()) throw Error(ErrorCode::ContractViolation, "diagram and sample set differ");
  const double reach = 2.0 * max_sample_spacing(vd);
  std::vector<int> terminals = g.terminals;
  for (std::size_t f = 0; f < features.size(); ++f) {
    const Point<Dim>& x = features[f];
    int near = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      const double d = (s.position - x).norm();
      if (d < best) {
        best = d;
        near = s.id;
      }
    }
    if (best > reach) {
      g.warnings.push_back("feature " + std::to_string(f) + " at " + format_point<Dim>(x) +
                           " is too far from the boundary; rejected");
      continue;
    }
    std::set<int> targets;
    for (int c : vd.incident_cells(near)) {
      const int n = ivg.cell_node[c];
      if (n >= 0 && g.nodes[n].radius > 0.0) targets.insert(n);
    }
    if (targets.empty()) {
      g.warnings.push_back("feature " + std::to_string(f) + " has no interior Voronoi vertex to attach to; rejected");
      continue;
    }
    double r = std::numeric_limits<double>::infinity();
    for (int n : targets) r = std::min(r, g.nodes[n].radius);
    r = std::max(r, 1e-3 * diag);
    const int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({x, r, -1, true});
    g.adj.emplace_back();
    for (int n : targets) g.add_edge(id, n, centredness_weight<Dim>(x, r, g.nodes[n].position, g.nodes[n].radius, g.mu));
    terminals.push_back(id);
  }
  g.set_terminals(terminals);
  return g;
}

/// Sharp corners: polygon vertices whose edge normals turn by at least
/// `angle_deg`; mesh vertices with one or at least three incident edges whose
/// dihedral (normal-to-normal) angle is at least `angle_deg`.
template <int Dim>
std::vector<Point<Dim>> detect_sharp_features(const BoundaryShape<Dim>& shape, double angle_deg = 40.0) {
  const double cos_limit = std::cos(angle_deg * M_PI / 180.0);
  std::vector<Point<Dim>> out;
  if constexpr (Dim == 2) {
    const int n = static_cast<int>(shape.faces.size());
    std::vector<int> incoming(shape.vertices.size(), -1), outgoing(shape.vertices.size(), -1);
    for (int f = 0; f < n; ++f) {
      outgoing[shape.faces[f][0]] = f;
      incoming[shape.faces[f][1]] = f;
    }
    for (std::size_t v = 0; v < shape.vertices.size(); ++v) {
      if (incoming[v] < 0 || outgoing[v] < 0) continue;
      if (shape.face_normal(incoming[v]).dot(shape.face_normal(outgoing[v])) <= cos_limit)
        out.push_back(shape.vertices[v]);
    }
  } else {
    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (int f = 0; f < static_cast<int>(shape.faces.size()); ++f) {
      const auto& t = shape.faces[f];
      for (int k = 0; k < 3; ++k) edge_faces[std::minmax(t[k], t[(k + 1) % 3])].push_back(f);
    }
    std::vector<int> sharp(shape.vertices.size(), 0);
    for (const auto& [e, fs] : edge_faces) {
      if (fs.size() != 2) continue;
      if (shape.face_normal(fs[0]).dot(shape.face_normal(fs[1])) <= cos_limit) {
        ++sharp[e.first];
        ++sharp[e.second];
      }
    }
    for (std::size_t v = 0; v < shape.vertices.size(); ++v)
      if (sharp[v] == 1 || sharp[v] >= 3) out.push_back(shape.vertices[v]);
  }
  return out;
}

template <int Dim>
nlohmann::json to_json(const WireTree& tree, const WeightedPoleGraph<Dim>& g) {
  nlohmann::json nodes = nlohmann::json::array();
  std::set<int> term(g.terminals.begin(), g.terminals.end());
  for (int n : tree.nodes) {
    nodes.push_back({{"node", n},
                     {"position", point_json<Dim>(g.nodes[n].position)},
                     {"radius", g.nodes[n].radius},
                     {"terminal", term.count(n) > 0},
                     {"feature", g.nodes[n].feature}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : tree.edges)
    edges.push_back({{"nodes", {a, b}},
                     {"from", point_json<Dim>(g.nodes[a].position)},
                     {"to", point_json<Dim>(g.nodes[b].position)}});
  return {{"nodes", nodes}, {"edges", edges}, {"cost", tree.cost}};
}

/// Cylinders along the tree edges.
template <int Dim>
TriMesh wire_mesh(const std::vector<WireTree>& trees, const WeightedPoleGraph<Dim>& g, double radius) {
  TriMesh m;
  for (const auto& t : trees)
    for (const auto& [a, b] : t.edges)
      m.append(cylinder_mesh(embed<Dim>(g.nodes[a].position), embed<Dim>(g.nodes[b].position), radius));
  return m;
}

}  // namespace polarballs
