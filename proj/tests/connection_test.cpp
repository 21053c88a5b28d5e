#include <gtest/gtest.h>

#include <random>

#include "polarballs/connection.hpp"
#include "polarballs/selection.hpp"
#include "oracles.hpp"
#include "test_shapes.hpp"

using namespace polarballs;
using namespace oracles;

namespace {

double prim_mst_cost(const Adjacency& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<char> in(n, 0);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  key[0] = 0;
  double total = 0;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int v = 0; v < n; ++v)
      if (!in[v] && (u < 0 || key[v] < key[u])) u = v;
    in[u] = 1;
    total += key[u];
    for (const auto& [v, w] : adj[u])
      if (!in[v]) key[v] = std::min(key[v], w);
  }
  return total;
}

// Tree invariants: edge/node count, connectivity, terminal leaves, minimality.
void check_tree(const WireTree& t, const Adjacency& adj, const std::vector<int>& terms) {
  if (terms.size() <= 1) {
    EXPECT_TRUE(t.edges.empty());
    return;
  }
  EXPECT_EQ(t.edges.size() + 1, t.nodes.size());
  std::set<int> nodes(t.nodes.begin(), t.nodes.end());
  for (int x : terms) EXPECT_TRUE(nodes.count(x));
  std::map<int, int> degree;
  double cost = 0;
  for (const auto& [a, b] : t.edges) {
    ++degree[a];
    ++degree[b];
    cost += detail::edge_weight(adj, a, b);
  }
  EXPECT_NEAR(cost, t.cost, 1e-9 * std::max(1.0, cost));
  const std::set<int> ts(terms.begin(), terms.end());
  for (const auto& [v, deg] : degree)
    if (deg == 1) {
      EXPECT_TRUE(ts.count(v)) << "non-terminal leaf " << v;
    }
  auto connected_without = [&](std::size_t skip) {
    Adjacency sub(adj.size());
    for (std::size_t e = 0; e < t.edges.size(); ++e) {
      if (e == skip) continue;
      sub[t.edges[e].first].push_back({t.edges[e].second, 1.0});
      sub[t.edges[e].second].push_back({t.edges[e].first, 1.0});
    }
    return terminal_components(sub, terms).size() == 1;
  };
  EXPECT_TRUE(connected_without(t.edges.size()));
  for (std::size_t e = 0; e < t.edges.size(); ++e) EXPECT_FALSE(connected_without(e));
}

template <int Dim>
struct Built {
  std::vector<SurfaceSample<Dim>> samples;
  VoronoiDiagram<Dim> vd;
  PoleSet<Dim> poles;
  InteriorVoronoiGraph<Dim> ivg;
};

template <int Dim>
Built<Dim> build(const BoundaryShape<Dim>& shape, std::size_t n, std::uint64_t seed) {
  auto samples = sample_boundary(shape, n, seed);
  auto vd = build_voronoi(positions(samples));
  auto poles = extract_poles(vd, samples, shape.bbox_diag);
  auto ivg = interior_voronoi_graph(vd, shape);
  return {std::move(samples), std::move(vd), std::move(poles), std::move(ivg)};
}

template <int Dim>
void check_interior_graph(const BoundaryShape<Dim>& shape, const Built<Dim>& b, bool expect_connected) {
  ASSERT_FALSE(b.ivg.nodes.empty());
  for (const auto& n : b.ivg.nodes) {
    EXPECT_TRUE(shape.contains(n.position));
    EXPECT_GT(n.radius, 0.0);
  }
  for (const auto& [a, c] : b.ivg.edges) EXPECT_LT(a, c);
  for (const auto& p : b.poles.inside)
    if (shape.contains(p.position)) {
      EXPECT_GE(b.ivg.node_at(p.position), 0);
    }
  if (expect_connected) {
    Adjacency adj(b.ivg.nodes.size());
    for (const auto& [a, c] : b.ivg.edges) {
      adj[a].push_back({c, 1.0});
      adj[c].push_back({a, 1.0});
    }
    std::vector<int> all(b.ivg.nodes.size());
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(terminal_components(adj, all).size(), 1u);
  }
}

}  // namespace

TEST(Weights, CentrednessExamples) {
  const Point<3> a{0, 0, 0}, b{1, 0, 0};
  EXPECT_DOUBLE_EQ(centredness_weight<3>(a, 0.5, b, 0.5, 3.0), 2.0);
  EXPECT_DOUBLE_EQ(centredness_weight<3>(a, 1.0, b, 0.5, 3.0), 5.0);
  EXPECT_DOUBLE_EQ(centredness_weight<3>(a, 1.0, b, 0.5, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(centredness_weight<3>(a, 1.0, b, 0.5, 3.0), centredness_weight<3>(b, 0.5, a, 1.0, 3.0));
}

TEST(Weights, GraphEdgesAndNonPositiveRadii) {
  InteriorVoronoiGraph<2> ivg;
  ivg.nodes = {{{0, 0}, 0.5}, {{1, 0}, 0.5}, {{2, 0}, 0.0}, {{1, 1}, 1.0}};
  ivg.edges = {{0, 1}, {1, 2}, {1, 3}};
  const auto g = build_weighted_graph(ivg, 3.0);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(g.weight(3, 1), 5.0);
  EXPECT_EQ(g.warnings.size(), 1u);
  EXPECT_THROW(build_weighted_graph(ivg, -1.0), Error);
}

TEST(Steiner, TwoTerminalsGiveShortestPath) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto adj = random_connected_graph(rng, 15, 20);
    const auto t = steiner_tree(adj, {2, 11});
    EXPECT_NEAR(t.cost, all_pairs(adj)[2][11], 1e-9);
    check_tree(t, adj, {2, 11});
  }
}

TEST(Steiner, AllTerminalsGiveMinimumSpanningTree) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto adj = random_connected_graph(rng, 12, 25);
    std::vector<int> all(12);
    std::iota(all.begin(), all.end(), 0);
    const auto t = steiner_tree(adj, all);
    EXPECT_NEAR(t.cost, prim_mst_cost(adj), 1e-9);
    check_tree(t, adj, all);
  }
}

TEST(Steiner, WithinTwiceOptimumOnRandomGraphs) {
  std::mt19937_64 rng(13);
  int violations = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(8, 16)(rng);
    const auto adj = random_connected_graph(rng, n, 2 * n);
    const int k = std::uniform_int_distribution<int>(2, 8)(rng);
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<int> terms(ids.begin(), ids.begin() + std::min(k, n));
    std::sort(terms.begin(), terms.end());
    const auto t = steiner_tree(adj, terms);
    const double opt = dreyfus_wagner(adj, terms);
    EXPECT_GE(t.cost, opt - 1e-9);
    violations += t.cost > 2.0 * opt + 1e-9;
    check_tree(t, adj, terms);
  }
  EXPECT_EQ(violations, 0);
}

TEST(Steiner, Deterministic) {
  std::mt19937_64 rng(14);
  const auto adj = random_connected_graph(rng, 30, 60);
  const auto a = steiner_tree(adj, {1, 5, 9, 20});
  const auto b = steiner_tree(adj, {20, 9, 5, 1, 5});
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(a.cost, b.cost);
}

TEST(Steiner, DisconnectedTerminalsAreReported) {
  const auto adj = make_adj(5, {{0, 1, 1.0}, {2, 3, 1.0}});
  try {
    steiner_tree(adj, {0, 1, 3, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DisconnectedTerminals);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("{0,1}"), std::string::npos);
    EXPECT_NE(msg.find("{3}"), std::string::npos);
    EXPECT_NE(msg.find("{4}"), std::string::npos);
  }
  const auto forest = steiner_forest(adj, {0, 1, 3, 4});
  ASSERT_EQ(forest.size(), 3u);
  EXPECT_EQ(forest[0].edges.size(), 1u);
  EXPECT_TRUE(steiner_tree(adj, {}).nodes.empty());
  EXPECT_EQ(steiner_tree(adj, {2}).nodes, std::vector<int>{2});
}

TEST(InteriorGraph, ConvexShapesGiveConnectedInteriorGraphs) {
  const auto sph = testshapes::sphere(4);
  check_interior_graph(sph, build(sph, 1000, 0), true);
  const auto cube = testshapes::unit_cube();
  check_interior_graph(cube, build(cube, 1000, 1), true);
  const auto disc = testshapes::circle(256);
  check_interior_graph(disc, build(disc, 300, 2), true);
}

TEST(InteriorGraph, NonConvexShapes) {
  const auto star = testshapes::star(5, 0.45, 1.0, 20);
  check_interior_graph(star, build(star, 500, 3), false);
  const auto q = testshapes::quadruped();
  check_interior_graph(q, build(q, 1500, 4), false);
}

TEST(Features, NoFeaturesLeaveGraphUnchanged) {
  const auto cube = testshapes::unit_cube();
  const auto b = build(cube, 600, 5);
  const auto g = build_weighted_graph(b.ivg);
  const auto h = augment_with_features(g, b.ivg, {}, b.vd, b.samples, cube.bbox_diag);
  EXPECT_EQ(h.nodes.size(), g.nodes.size());
  EXPECT_EQ(h.adj, g.adj);
}

TEST(Features, CubeCornerBecomesLeafTerminal) {
  const auto cube = testshapes::unit_cube();
  const auto b = build(cube, 1500, 6);
  SelectionParams params;
  params.mode = Mode::Ballstick;
  const auto trace = select_ballstick(b.poles, params);
  auto g = build_weighted_graph(b.ivg);
  std::vector<int> terms;
  for (int id : trace.accepted_ids()) {
    const int n = b.ivg.node_at(b.poles.inside[id].position);
    if (n >= 0) terms.push_back(n);
  }
  ASSERT_FALSE(terms.empty());
  g.set_terminals(terms);
  const Point<3> corner{1, 1, 1};
  const auto h = augment_with_features(g, b.ivg, {corner}, b.vd, b.samples, cube.bbox_diag);
  ASSERT_EQ(h.nodes.size(), g.nodes.size() + 1);
  const int f = static_cast<int>(g.nodes.size());
  EXPECT_TRUE(h.nodes[f].feature);
  EXPECT_GE(h.nodes[f].radius, 1e-3 * cube.bbox_diag);

  // degree equals the number of distinct interior vertices of the nearest sample's cell
  int nearest = 0;
  for (const auto& s : b.samples)
    if ((s.position - corner).norm() < (b.samples[nearest].position - corner).norm()) nearest = s.id;
  std::set<int> targets;
  for (int c : b.vd.incident_cells(nearest))
    if (b.ivg.cell_node[c] >= 0) targets.insert(b.ivg.cell_node[c]);
  EXPECT_EQ(h.adj[f].size(), targets.size());

  const auto t = steiner_tree(h);
  int degree = 0;
  for (const auto& [a, c] : t.edges) degree += (a == f) + (c == f);
  EXPECT_EQ(degree, 1);
  check_tree(t, h.adj, h.terminals);
}

TEST(Features, FarFeatureIsRejected) {
  const auto cube = testshapes::unit_cube();
  const auto b = build(cube, 600, 7);
  const auto g = build_weighted_graph(b.ivg);
  const auto h = augment_with_features(g, b.ivg, {Point<3>{3, 3, 3}}, b.vd, b.samples, cube.bbox_diag);
  EXPECT_EQ(h.nodes.size(), g.nodes.size());
  ASSERT_EQ(h.warnings.size(), g.warnings.size() + 1);
  EXPECT_NE(h.warnings.back().find("rejected"), std::string::npos);
}

TEST(Features, SharpCornerDetection) {
  EXPECT_EQ(detect_sharp_features(testshapes::unit_cube()).size(), 8u);
  EXPECT_TRUE(detect_sharp_features(testshapes::sphere(3)).empty());
  EXPECT_EQ(detect_sharp_features(make_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}})).size(), 4u);
  EXPECT_TRUE(detect_sharp_features(testshapes::circle(64)).empty());
}

TEST(Wires, JsonAndMesh) {
  const auto adj = make_adj(3, {{0, 1, 1.0}, {1, 2, 2.0}});
  WeightedPoleGraph<2> g;
  g.nodes = {{{0, 0}, 0.5}, {{1, 0}, 0.5}, {{2, 0}, 0.5}};
  g.adj = adj;
  g.set_terminals({0, 2});
  const auto t = steiner_tree(g);
  const auto j = to_json(t, g);
  EXPECT_EQ(j["edges"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["cost"].get<double>(), 3.0);
  EXPECT_EQ(j["nodes"][1]["terminal"], false);
  const auto m = wire_mesh<2>({t}, g, 0.05);
  EXPECT_TRUE(m.is_closed());
  EXPECT_GT(m.volume(), 0.0);
}
