#include <gtest/gtest.h>

#include "polarballs/poles.hpp"
#include "test_shapes.hpp"

using namespace polarballs;

namespace {

template <int Dim>
PoleSet<Dim> poles_of(const BoundaryShape<Dim>& shape, std::size_t n, std::uint64_t seed,
                      std::vector<SurfaceSample<Dim>>* keep = nullptr) {
  const auto samples = sample_boundary(shape, n, seed);
  const auto vd = build_voronoi(positions(samples));
  auto ps = extract_poles(vd, samples, shape.bbox_diag);
  if (keep) *keep = samples;
  return ps;
}

}  // namespace

TEST(Poles, SphereInsidePolesNearCentre) {
  const auto sph = testshapes::sphere(6);
  const auto ps = poles_of(sph, 2000, 0);
  ASSERT_FALSE(ps.inside.empty());
  for (const auto& p : ps.inside) {
    EXPECT_LT(p.position.norm(), 0.05);
    EXPECT_NEAR(p.radius, 1.0, 0.05);
    EXPECT_FALSE(p.clamped);
  }
  EXPECT_GT(ps.outside.size(), 0u);
}

TEST(Poles, CircleInsidePolesNearCentre) {
  const auto c = testshapes::circle(2048);
  const auto ps = poles_of(c, 500, 0);
  ASSERT_FALSE(ps.inside.empty());
  for (const auto& p : ps.inside) {
    EXPECT_LT(p.position.norm(), 0.01);
    EXPECT_NEAR(p.radius, 1.0, 0.01);
  }
}

TEST(Poles, PolarBallsAreEmptyOfSamples) {
  const auto shape = testshapes::quadruped();
  std::vector<SurfaceSample<3>> samples;
  const auto ps = poles_of(shape, 1500, 4, &samples);
  for (const auto* list : {&ps.inside, &ps.outside}) {
    for (const auto& p : *list) {
      const double own = (p.position - samples[p.parent].position).norm();
      EXPECT_NEAR(own, p.radius, 1e-9 * shape.bbox_diag);
      for (const auto& s : samples) EXPECT_GE((s.position - p.position).norm(), p.radius * (1 - 1e-9));
    }
  }
}

TEST(Poles, SidesRespectTangentPlaneAndContainment) {
  const auto shape = testshapes::star(5, 0.45, 1.0, 20);
  std::vector<SurfaceSample<2>> samples;
  const auto ps = poles_of(shape, 500, 1, &samples);
  for (const auto& p : ps.inside) EXPECT_LT((p.position - samples[p.parent].position).dot(samples[p.parent].normal), 0);
  for (const auto& p : ps.outside) EXPECT_GT((p.position - samples[p.parent].position).dot(samples[p.parent].normal), 0);
  int interior = 0;
  for (const auto& p : ps.inside) interior += shape.contains(p.position);
  EXPECT_GT(interior, 0.95 * ps.inside.size());
}

TEST(Poles, PositionsAreUnique) {
  const auto ps = poles_of(testshapes::unit_cube(), 800, 2);
  std::set<std::array<double, 3>> seen;
  for (const auto* list : {&ps.inside, &ps.outside}) {
    for (std::size_t i = 0; i < list->size(); ++i) {
      const auto& p = (*list)[i];
      EXPECT_EQ(p.id, static_cast<int>(i));
      EXPECT_TRUE(seen.insert({p.position.x(), p.position.y(), p.position.z()}).second);
      EXPECT_GE(p.radius, 1e-6 * ps.diag);
    }
  }
}

TEST(Poles, WilsonInterval) {
  const auto r = binomial_estimate(50, 100);
  EXPECT_DOUBLE_EQ(r.fraction, 0.5);
  EXPECT_NEAR(r.ci_low, 0.4038, 1e-4);
  EXPECT_NEAR(r.ci_high, 0.5962, 1e-4);
  const auto all = binomial_estimate(100, 100);
  EXPECT_DOUBLE_EQ(all.ci_high, 1.0);
  EXPECT_LT(all.ci_low, 1.0);
}

TEST(Poles, CoverageOfSphere) {
  const auto sph = testshapes::sphere(4);
  const auto ps = poles_of(sph, 500, 0);
  const auto cov = coverage_fraction(ps, sph, 20000, 1);
  EXPECT_GT(cov.fraction, 0.9);
  EXPECT_LE(cov.ci_low, cov.fraction);
  EXPECT_GE(cov.ci_high, cov.fraction);
  EXPECT_THROW(coverage_fraction(ps, sph, 100, 1), Error);
}

TEST(Poles, JsonLayout) {
  const auto ps = poles_of(testshapes::circle(128), 40, 0);
  const auto j = to_json(ps);
  EXPECT_EQ(j["inside"].size(), ps.inside.size());
  EXPECT_EQ(j["outside"].size(), ps.outside.size());
  EXPECT_EQ(j["inside"][0]["position"].size(), 2u);
  EXPECT_EQ(j["inside"][0]["side"], "inside");
  EXPECT_DOUBLE_EQ(j["bbox_diag"].get<double>(), ps.diag);
}
