#include <gtest/gtest.h>

#include "polarballs/selection.hpp"
#include "test_shapes.hpp"

using namespace polarballs;

namespace {

template <int Dim>
Pole<Dim> pole(int id, const Point<Dim>& c, double r, Side side = Side::Inside) {
  Pole<Dim> p;
  p.id = id;
  p.position = c;
  p.radius = r;
  p.side = side;
  return p;
}

SelectionParams params(Mode mode, Acceleration accel, double delta = 1e-3, double eps = 0.0) {
  SelectionParams p;
  p.mode = mode;
  p.acceleration = accel;
  p.delta = delta;
  p.epsilon = eps;
  return p;
}

template <int Dim>
PoleSet<Dim> pipeline_poles(const BoundaryShape<Dim>& shape, std::size_t n, std::uint64_t seed) {
  return compute_poles(shape, sample_boundary(shape, n, seed));
}

const Acceleration kBoth[] = {Acceleration::BruteForce, Acceleration::PowerDiagram};

}  // namespace

TEST(Ballstick, HandRunExample) {
  PoleSet<2> ps;
  ps.diag = 1.0;
  ps.inside = {pole<2>(0, {0, 0}, 2), pole<2>(1, {5, 0}, 1.5), pole<2>(2, {2.5, 0}, 1), pole<2>(3, {6, 0}, 0.5)};
  for (auto a : kBoth) {
    const auto tr = select_ballstick(ps, params(Mode::Ballstick, a));
    EXPECT_EQ(tr.accepted_ids(), (std::vector<int>{0, 1}));
    EXPECT_EQ(tr.trailing_rejected, 2u);
  }
}

TEST(Ballstick, SingleAndTiedCandidates) {
  PoleSet<3> ps;
  ps.diag = 1.0;
  ps.inside = {pole<3>(0, {0, 0, 0}, 0.5)};
  for (auto a : kBoth) EXPECT_EQ(select_ballstick(ps, params(Mode::Ballstick, a)).accepted_ids(), std::vector<int>{0});
  ps.inside = {pole<3>(0, {4, 0, 0}, 1), pole<3>(1, {0, 0, 0}, 1)};
  for (auto a : kBoth) {
    EXPECT_EQ(select_ballstick(ps, params(Mode::Ballstick, a)).accepted_ids(), (std::vector<int>{0, 1}));
  }
}

TEST(Ballstick, TerminationAndGap) {
  PoleSet<2> ps;
  ps.diag = 10.0;
  ps.inside = {pole<2>(0, {0, 0}, 2), pole<2>(1, {4.05, 0}, 2), pole<2>(2, {20, 0}, 0.4)};
  // gap 0.05 between the first two; eps 0.1 * 10 = 1 rejects the second
  auto tr = select_ballstick(ps, params(Mode::Ballstick, Acceleration::PowerDiagram, 0.01, 0.1));
  EXPECT_EQ(tr.accepted_ids(), (std::vector<int>{0, 2}));
  // delta 0.05 * 10 = 0.5 stops before the 0.4 ball
  tr = select_ballstick(ps, params(Mode::Ballstick, Acceleration::PowerDiagram, 0.05, 0.001));
  EXPECT_EQ(tr.accepted_ids(), (std::vector<int>{0, 1}));
  auto p = params(Mode::Ballstick, Acceleration::BruteForce, 0.01, 0.0);
  p.max_balls = 1;
  EXPECT_EQ(select_ballstick(ps, p).accepted_ids(), std::vector<int>{0});
}

TEST(Ballstick, Errors) {
  PoleSet<2> empty;
  empty.diag = 1;
  try {
    select_ballstick(empty, params(Mode::Ballstick, Acceleration::PowerDiagram));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  EXPECT_TRUE(select_oracle(empty, params(Mode::Ballstick, Acceleration::BruteForce)).steps.empty());
  PoleSet<2> one = empty;
  one.inside = {pole<2>(0, {0, 0}, 1)};
  EXPECT_THROW(select_ballstick(one, params(Mode::Ballstick, Acceleration::BruteForce, 0.0)), Error);
  auto bad = params(Mode::Porous, Acceleration::BruteForce);
  bad.lambda = 1.5;
  EXPECT_THROW(select_porous(one, bad), Error);
  EXPECT_EQ(select_oracle(one, params(Mode::Porous, Acceleration::BruteForce)).accepted_ids(), std::vector<int>{0});
}

TEST(Porous, PenalisedPriority) {
  PoleSet<3> ps;
  ps.diag = 1.0;
  ps.inside = {pole<3>(0, {0, 0, 0}, 2), pole<3>(1, {3, 0, 0}, 2), pole<3>(2, {10, 0, 0}, 1.5)};
  for (auto a : kBoth) {
    auto p = params(Mode::Porous, a);
    p.lambda = 0.8;
    const auto tr = select_porous(ps, p);
    ASSERT_EQ(tr.accepted_ids(), (std::vector<int>{0, 2, 1}));
    EXPECT_EQ(tr.steps[0].priority, 2.0);
    EXPECT_EQ(tr.steps[1].priority, 1.5);  // penalty inactive
    EXPECT_NEAR(tr.steps[2].priority, 1.2, 1e-15);
  }
}

TEST(Porous, StopsWhenPriorityTurnsNegative) {
  PoleSet<2> ps;
  ps.diag = 1.0;
  // centre of the second ball inside the first: priority 1 + (0.5 - 3 - 1) < 0
  ps.inside = {pole<2>(0, {0, 0}, 3), pole<2>(1, {0.5, 0}, 1)};
  for (auto a : kBoth) {
    auto p = params(Mode::Porous, a);
    p.lambda = 1.0;
    EXPECT_EQ(select_porous(ps, p).accepted_ids(), std::vector<int>{0});
  }
}

TEST(ConflictQuery, OnlyOutsideNeighbours) {
  PowerDiagram<2> pd(Box<2>{{-30, -30}, {30, 30}});
  const int np = 1;
  pd.insert(0, {{10, 0}, 1.0});
  for (int k = 0; k < 12; ++k) {
    const double a = 2 * M_PI * k / 12;
    pd.insert(np + k, {{2 * std::cos(a), 2 * std::sin(a)}, 0.25});
  }
  auto h = tentative_insert(pd, 99, {{0, 0}, 1.0});
  ASSERT_TRUE(h.visible());
  EXPECT_TRUE(conflict_candidates(h, np).empty());
}

TEST(ConflictQuery, ThreeAcceptedNeighbours) {
  PowerDiagram<2> pd(Box<2>{{-30, -30}, {30, 30}});
  const int np = 3;
  const double eps = 0.1;
  for (int k = 0; k < 3; ++k) {
    const double a = 2 * M_PI * k / 3;
    pd.insert(k, {{3 * std::cos(a), 3 * std::sin(a)}, (1 + eps) * (1 + eps)});
  }
  for (int k = 0; k < 8; ++k) {
    const double a = 2 * M_PI * k / 8 + 0.1;
    pd.insert(np + k, {{20 * std::cos(a), 20 * std::sin(a)}, 1.0});
  }
  auto h = tentative_insert(pd, 50, {{0, 0}, 1.0});
  EXPECT_EQ(conflict_candidates(h, np), (std::vector<int>{0, 1, 2}));
}

TEST(PeelUpdate, FarBallHasEmptyPeelSet) {
  PowerDiagram<2> pd(Box<2>{{-50, -50}, {50, 50}});
  const int np = 3;
  pd.insert(0, {{0, 0}, 1});
  pd.insert(1, {{30, 0}, 1});
  pd.insert(2, {{31, 0}, 1});
  for (int k = 0; k < 6; ++k) {
    const double a = 2 * M_PI * k / 6;
    pd.insert(np + k, {{2 * std::cos(a), 2 * std::sin(a)}, 0.5});
  }
  const auto peeled = porous_priority_update(pd, 0, np);
  ASSERT_TRUE(peeled.has_value());
  EXPECT_TRUE(peeled->empty());
  EXPECT_FALSE(pd.contains(0));
  EXPECT_TRUE(pd.contains(1));
  EXPECT_TRUE(pd.contains(2));
  pd.validate();
}

TEST(PeelUpdate, PeelsThroughLayers) {
  // a chain of inside poles: the far end only becomes adjacent after peeling
  PowerDiagram<2> pd(Box<2>{{-50, -50}, {50, 50}});
  const int np = 5;
  for (int k = 0; k < np; ++k) pd.insert(k, {{static_cast<double>(k), 0}, 0.3});
  for (int k = 0; k < 10; ++k) {
    const double a = 2 * M_PI * k / 10;
    pd.insert(np + k, {{2 + 8 * std::cos(a), 8 * std::sin(a)}, 1});
  }
  const auto peeled = porous_priority_update(pd, 0, np);
  ASSERT_TRUE(peeled.has_value());
  EXPECT_EQ(*peeled, (std::vector<int>{1, 2, 3, 4}));
  for (int k = 1; k < np; ++k) EXPECT_TRUE(pd.contains(k));
}

template <int Dim>
void check_peel_equivalence(const PoleSet<Dim>& ps, int picks) {
  const int np = static_cast<int>(ps.inside.size());
  const Box<Dim> box = detail::pole_box(ps);
  PowerDiagram<Dim> full(box);
  PowerDiagram<Dim> outside(box);
  for (const auto& q : ps.outside) {
    full.insert(np + q.id, {q.position, q.radius * q.radius});
    outside.insert(np + q.id, {q.position, q.radius * q.radius});
  }
  for (const auto& p : ps.inside) full.insert(p.id, {p.position, p.radius * p.radius});
  std::vector<char> gone(np, 0);
  const int stride = std::max(1, np / picks);
  for (int acc = 0; acc < np; acc += stride) {
    gone[acc] = 1;
    std::vector<std::pair<int, WeightedSite<Dim>>> remaining;
    for (int j = 0; j < np; ++j) {
      if (!gone[j]) remaining.push_back({j, {ps.inside[j].position, ps.inside[j].radius * ps.inside[j].radius}});
    }
    const auto fast = peel_set(outside, acc, {ps.inside[acc].position, ps.inside[acc].radius * ps.inside[acc].radius},
                               remaining);
    const auto literal = porous_priority_update(full, acc, np);
    ASSERT_EQ(fast.has_value(), literal.has_value());
    if (fast) {
      EXPECT_EQ(*fast, *literal) << "accepted " << acc;
    }
    EXPECT_EQ(outside.size(), ps.outside.size());
  }
}

TEST(PeelUpdate, PairwiseCharacterisationMatchesLoop) {
  check_peel_equivalence(pipeline_poles(testshapes::random_radial_polygon(4), 300, 0), 12);
  check_peel_equivalence(pipeline_poles(testshapes::star(5, 0.4, 1.0, 10), 300, 1), 12);
  check_peel_equivalence(pipeline_poles(testshapes::bird(), 300, 2), 6);
}

TEST(Selection, SphereGivesOneBall) {
  const auto ps = pipeline_poles(testshapes::sphere(4), 1000, 0);
  for (auto a : kBoth) {
    SelectionParams p;
    p.acceleration = a;
    EXPECT_EQ(select_ballstick(ps, p).steps.size(), 1u);
  }
}

template <int Dim>
void check_equivalence(const PoleSet<Dim>& ps, Mode mode) {
  SelectionParams p;
  p.mode = mode;
  p.acceleration = Acceleration::PowerDiagram;
  p.shadow = true;
  const auto fast = select(ps, p);
  const auto slow = select_oracle(ps, p);
  EXPECT_EQ(fast.accepted_ids(), slow.accepted_ids());
  EXPECT_EQ(fast.shadow_misses, 0u);
  EXPECT_GT(fast.shadow_checks, 0u);
  EXPECT_LE(fast.total_checks, slow.total_checks);
  for (std::size_t i = 1; i < fast.steps.size(); ++i) {
    if (mode == Mode::Ballstick) {
      EXPECT_LE(fast.steps[i].radius, fast.steps[i - 1].radius);
    }
    EXPECT_LE(fast.steps[i].priority, fast.steps[i - 1].priority);
  }
  if (mode == Mode::Ballstick) {
    EXPECT_GE(min_pairwise_gap(fast.balls()), p.epsilon * ps.diag - 1e-9 * ps.diag);
  }
}

TEST(Selection, AcceleratedMatchesOracle2D) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ps = pipeline_poles(testshapes::random_radial_polygon(seed), 500, seed);
    check_equivalence(ps, Mode::Ballstick);
    check_equivalence(ps, Mode::Porous);
  }
  const auto star = pipeline_poles(testshapes::star(6, 0.4, 1.0, 12), 500, 0);
  check_equivalence(star, Mode::Ballstick);
  check_equivalence(star, Mode::Porous);
}

TEST(Selection, AcceleratedMatchesOracle3D) {
  const auto ps = pipeline_poles(testshapes::quadruped(), 1500, 0);
  check_equivalence(ps, Mode::Ballstick);
  check_equivalence(ps, Mode::Porous);
}

TEST(Selection, LambdaOneCentresOutsidePriorBalls) {
  const auto ps = pipeline_poles(testshapes::kitten(), 1000, 1);
  SelectionParams p;
  p.mode = Mode::Porous;
  p.lambda = 1.0;
  const auto tr = select_porous(ps, p);
  ASSERT_GT(tr.steps.size(), 1u);
  for (std::size_t i = 0; i < tr.steps.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_GE((tr.steps[i].center - tr.steps[j].center).norm(), tr.steps[j].radius);
    }
  }
}

TEST(Selection, Json) {
  PoleSet<2> ps;
  ps.diag = 1.0;
  ps.inside = {pole<2>(0, {0, 0}, 2), pole<2>(1, {5, 0}, 1.5)};
  const auto j = to_json(select_ballstick(ps, params(Mode::Ballstick, Acceleration::PowerDiagram)));
  EXPECT_EQ(j["mode"], "ballstick");
  ASSERT_EQ(j["balls"].size(), 2u);
  EXPECT_EQ(j["balls"][1]["pole"], 1);
  EXPECT_EQ(j["balls"][1]["radius"], 1.5);
  EXPECT_EQ(j["balls"][1]["center"][0], 5.0);
}
