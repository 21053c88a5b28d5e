#include <gtest/gtest.h>

#include "polarballs/sampling.hpp"
#include "test_shapes.hpp"

using namespace polarballs;

namespace {

template <int Dim>
double min_spacing(const std::vector<SurfaceSample<Dim>>& s) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) m = std::min(m, (s[i].position - s[j].position).norm());
  return m;
}

}  // namespace

TEST(Sampling, CircleEightSamplesAreEvenlySpaced) {
  const auto c = testshapes::circle(512);
  const auto s = sample_boundary(c, 8, 0);
  ASSERT_EQ(s.size(), 8u);
  std::vector<double> ang;
  for (const auto& x : s) ang.push_back(std::atan2(x.position.y(), x.position.x()));
  std::sort(ang.begin(), ang.end());
  for (std::size_t i = 0; i < ang.size(); ++i) {
    double gap = (i + 1 < ang.size() ? ang[i + 1] : ang[0] + 2 * M_PI) - ang[i];
    EXPECT_NEAR(gap, M_PI / 4, 0.1 * M_PI / 4);
  }
}

TEST(Sampling, Deterministic) {
  const auto sph = testshapes::sphere(3);
  const auto a = sample_boundary(sph, 300, 7);
  const auto b = sample_boundary(sph, 300, 7);
  const auto c = sample_boundary(sph, 300, 8);
  ASSERT_EQ(a.size(), b.size());
  bool differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].position, b[i].position);
    EXPECT_EQ(a[i].id, static_cast<int>(i));
    differ |= a[i].position != c[i].position;
  }
  EXPECT_TRUE(differ);
}

TEST(Sampling, SpacingNearIdealOnSphere) {
  const auto sph = testshapes::sphere(4);
  for (std::size_t n : {8u, 100u, 500u}) {
    const auto s = sample_boundary(sph, n, 1);
    ASSERT_EQ(s.size(), n);
    const double ideal = std::sqrt(sph.boundary_measure() / n);
    EXPECT_GT(min_spacing(s), 0.5 * ideal) << n;
  }
}

TEST(Sampling, SpacingNearIdealOnPolygon) {
  const auto shape = testshapes::star(5, 0.5, 1.0);
  for (std::size_t n : {8u, 100u, 500u}) {
    const auto s = sample_boundary(shape, n, 2);
    const double ideal = shape.boundary_measure() / n;
    EXPECT_GT(min_spacing(s), 0.5 * ideal) << n;
  }
}

TEST(Sampling, SamplesLieOnFacesWithOutwardNormals) {
  const auto sph = testshapes::sphere(2);
  for (const auto& s : sample_boundary(sph, 400, 3)) {
    const auto& t = sph.faces[s.face];
    const Vector<3> n = sph.face_normal(s.face);
    EXPECT_NEAR(n.dot(s.position - sph.vertices[t[0]]), 0.0, 1e-12);
    EXPECT_EQ(n, s.normal);
    EXPECT_GT(n.dot(s.position), 0.0);
    EXPECT_NEAR(s.normal.norm(), 1.0, 1e-12);
  }
  const auto poly = testshapes::circle(64);
  for (const auto& s : sample_boundary(poly, 50, 3)) EXPECT_GT(s.normal.dot(s.position), 0.0);
}

TEST(Sampling, TooFewSamplesIsContractViolation) {
  const auto sph = testshapes::sphere(1);
  try {
    sample_boundary(sph, 3, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ContractViolation);
  }
  EXPECT_EQ(sample_boundary(testshapes::circle(16), 3, 0).size(), 3u);
}
