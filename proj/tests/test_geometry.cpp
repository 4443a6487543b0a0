#include <gtest/gtest.h>

#include <sstream>

#include "bhm/geometry.hpp"

using namespace bhm;

namespace {

std::vector<Point> circle(double r, int n, Point c = Point(0, 0)) {
  std::vector<Point> pts;
  for (int k = 0; k < n; ++k) {
    const double a = 2 * std::numbers::pi * k / n;
    pts.push_back(c + Point(r * std::cos(a), r * std::sin(a)));
  }
  return pts;
}

}  // namespace

TEST(SignedDistance, ClosedForms) {
  EXPECT_DOUBLE_EQ(signed_distance(make_ball(Point(0, 0), 0.5), Point(0.3, 0)), -0.2);
  EXPECT_DOUBLE_EQ(signed_distance(FullBallDomain{2}, Point(1, 0)), 0.0);
  EXPECT_NEAR(signed_distance(make_annulus(Point(0, 0), 0.2, 0.8), Point(0.5, 0)), -0.3, 1e-15);
  EXPECT_NEAR(signed_distance(make_ball(Point(0, 0, 0), 0.5), Point(0, 0, 0.9)), 0.4, 1e-15);
}

TEST(SignedDistance, DimensionMismatchIsInputError) {
  try {
    signed_distance(make_ball(Point(0, 0), 0.5), Point(0, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Input);
  }
}

TEST(SignedDistance, CapAgainstBruteForce) {
  const auto cap = make_cap(Point(0.6, 0.8), 0.3);
  // brute-force boundary: flat chord plus arc
  std::vector<Point> bdry;
  const Point v(0.6, 0.8), w(-0.8, 0.6);
  const double rim = std::sqrt(1 - 0.09);
  for (int k = 0; k <= 4000; ++k) bdry.push_back(v * 0.3 + w * (-rim + 2 * rim * k / 4000.0));
  const double amax = std::acos(0.3);
  for (int k = 0; k <= 4000; ++k) {
    const double a = -amax + 2 * amax * k / 4000.0;
    bdry.push_back(v * std::cos(a) + w * std::sin(a));
  }
  Rng rng(7, 0);
  for (int i = 0; i < 300; ++i) {
    const Point x(2.4 * rng.uniform() - 1.2, 2.4 * rng.uniform() - 1.2);
    double best = kInf;
    for (const auto& b : bdry) best = std::min(best, distance(x, b));
    const bool in = x.dot(v) > 0.3 && x.norm() < 1;
    const double sd = signed_distance(cap, x);
    EXPECT_NEAR(std::abs(sd), best, 1e-3);
    if (std::abs(sd) > 1e-9) {
      EXPECT_EQ(sd < 0, in);
    }
    EXPECT_NEAR(distance(project_to_boundary(cap, x), x), std::abs(sd), 1e-12);
  }
}

TEST(SignedDistance, LipschitzOnRandomPairs) {
  const std::vector<DomainDescriptor> doms = {
      make_ball(Point(0.1, 0.2), 0.5), make_annulus(Point(0, 0), 0.2, 0.8),
      make_cap(Point(1, 0), -0.2), FullBallDomain{2}, rasterize(make_ball(Point(0, 0), 0.6), 128)};
  Rng rng(11, 0);
  for (const auto& d : doms) {
    const double slack = std::holds_alternative<GridRegion>(d) ? 2 * 2.0 / 128 : 1e-12;
    for (int i = 0; i < 1000; ++i) {
      const Point x(2 * rng.uniform() - 1, 2 * rng.uniform() - 1);
      const Point y(2 * rng.uniform() - 1, 2 * rng.uniform() - 1);
      EXPECT_LE(std::abs(signed_distance(d, x) - signed_distance(d, y)), distance(x, y) + slack);
    }
  }
}

TEST(SignedDistance, GridRegionApproximatesDisc) {
  const auto g = rasterize(make_ball(Point(0, 0), 0.5), 256);
  for (double r : {0.0, 0.2, 0.45, 0.55, 0.8})
    EXPECT_NEAR(signed_distance(g, Point(r, 0.01)), std::hypot(r, 0.01) - 0.5, 2 * 2.0 / 256);
}

TEST(Hausdorff, Basics) {
  EXPECT_EQ(hausdorff_distance({Point(0, 0)}, {Point(0, 0)}), 0.0);
  EXPECT_EQ(hausdorff_distance({Point(0, 0)}, {Point(1, 0)}), 1.0);
  EXPECT_NEAR(hausdorff_distance(circle(1.0, 360), circle(0.9, 360)), 0.1, 1e-9);
  EXPECT_THROW(hausdorff_distance({}, {Point(0, 0)}), Error);
}

TEST(BoundarySamples, LieOnBoundary) {
  const std::vector<DomainDescriptor> doms = {
      make_ball(Point(0.1, 0.2), 0.5), make_annulus(Point(0, 0), 0.2, 0.8),
      make_cap(Point(0, 1), 0.5), make_cap(Point(0, 0, 1), 0.5), make_ball(Point(0, 0, 0), 0.3)};
  for (const auto& d : doms) {
    const auto pts = boundary_samples(d, 200);
    EXPECT_GE(pts.size(), 199u);
    for (const auto& p : pts) EXPECT_NEAR(signed_distance(d, p), 0.0, 1e-12);
  }
  const auto g = rasterize(make_ball(Point(0, 0), 0.5), 64);
  for (const auto& p : boundary_samples(g, 100000))
    EXPECT_NEAR(signed_distance(g, p), 0.0, 1e-12);
}

TEST(SmoothInner, ShrunkenDisc) {
  const auto a = rasterize(make_ball(Point(0, 0), 0.5), 400);
  const auto ad = smooth_inner_approximation(a, 0.05);
  const auto b = boundary_samples(ad, 512);
  // within 0.05 of a ball of radius in [0.45, 0.5]
  for (const auto& p : b) {
    EXPECT_LE(p.norm(), 0.5 + 1e-9);
    EXPECT_GE(p.norm(), 0.45 - 0.005);
  }
  EXPECT_LT(hausdorff_distance(boundary_samples(a, 512), b), 0.05);
  for (const auto& p : b) EXPECT_LE(signed_distance(a, p), -0.05 / 4);
}

TEST(SmoothInner, AnnulusKeepsTwoBoundaryComponents) {
  const auto a = rasterize(make_annulus(Point(0, 0), 0.1, 0.6), 400);
  const auto ad = smooth_inner_approximation(a, 0.02);
  EXPECT_EQ(count_components(ad, true), 1);
  EXPECT_EQ(count_components(ad, false), 2);
  EXPECT_LT(hausdorff_distance(boundary_samples(a, 512), boundary_samples(ad, 512)), 0.02);
}

TEST(SmoothInner, TooLargeDeltaIsDegenerate) {
  const auto a = rasterize(make_ball(Point(0, 0), 0.3), 200);
  try {
    smooth_inner_approximation(a, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
}

TEST(MaskCsv, RoundTrip) {
  const auto a = rasterize(make_annulus(Point(0, 0), 0.2, 0.7), 50);
  std::stringstream ss;
  write_mask_csv(a, ss);
  const auto b = read_mask_csv(ss);
  EXPECT_EQ(a.mask(), b.mask());
  EXPECT_DOUBLE_EQ(a.spacing(), b.spacing());
  EXPECT_DOUBLE_EQ(a.x0(), b.x0());
}

TEST(GridRegion, RejectsCellsOutsideBall) {
  std::vector<std::uint8_t> m(16, 1);
  EXPECT_THROW(GridRegion::centered(4, m), Error);
}
