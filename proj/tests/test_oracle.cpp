#include <gtest/gtest.h>

#include "bhm/oracle.hpp"

using namespace bhm;

namespace {

GainField plateau() { return with_gstar(plateau_gain(0.2, 0.25), 0.25); }

}  // namespace

TEST(RadialOracle, ConcaveAndMajorises) {
  for (const auto& g : {plateau(), with_gstar(ring_gain(0.3, 0.1), 0.25),
                        with_gstar(mollify(spiked_gain(0.05), 0.01), 0.25)}) {
    const auto grid = radial_grid(2048, 1e-3, 2);
    const auto v = radial_value_oracle(g, 2, grid.radii);
    for (std::size_t k = 0; k < v.values.size(); ++k) EXPECT_GE(v.values[k], g.at_radius(v.radii[k]) - 1e-12);
    for (std::size_t k = 1; k + 1 < v.values.size(); ++k) {
      const double d2 = (v.values[k + 1] - v.values[k]) / (v.s[k + 1] - v.s[k]) -
                        (v.values[k] - v.values[k - 1]) / (v.s[k] - v.s[k - 1]);
      EXPECT_LE(d2, 1e-12) << g.name << " k=" << k;
    }
    EXPECT_EQ(v.values.back(), 0.0);
  }
}

TEST(RadialOracle, PlateauClosedForm) {
  // V = 1 on r <= 0.2, then ln r / ln 0.2 (tangency at the plateau edge);
  // the discrete hull may anchor one log cell inside the edge
  const double cell = std::log(1e3) / 2047;
  const auto v = radial_value_oracle(plateau(), 2, radial_grid(2048, 1e-3, 2).radii);
  for (double r : {0.1, 0.2, 0.3, 0.5, 0.9}) {
    const double expect = r <= 0.2 ? 1.0 : std::log(r) / std::log(0.2);
    EXPECT_NEAR(v(r), expect, cell / std::log(5.0)) << r;
  }
  EXPECT_EQ(v.value_at_origin, 1.0);
}

TEST(RadialOracle, ThreeDimensional) {
  const auto g = with_gstar(plateau_gain(0.2, 0.25, 1.0, 3), 0.25);
  const auto v = radial_value_oracle(g, 3, radial_grid(2048, 1e-3, 3).radii);
  // (1/r - 1) / (1/0.2 - 1) outside the plateau; one log cell at the edge
  // spans cell / 0.2 in s, at slope 1/4
  const double cell = std::log(1e3) / 2047;
  for (double r : {0.3, 0.6}) EXPECT_NEAR(v(r), (1 / r - 1) / 4.0, 1.25 * cell);
}

TEST(RadialOracle, PolarOriginInnerRegion) {
  // a spike of radius 0.01 and a dome: V on the inner region equals the
  // dome value at the exit radius, not the spike height
  GainField g = spiked_gain(0.01);
  g = with_gstar(g, 0.25);
  const auto v = radial_value_oracle(g, 2, radial_grid(4096, 1e-4, 2).radii);
  EXPECT_EQ(v.value_at_origin, 1.0);
  EXPECT_LE(v(0.05), 1.0);
  EXPECT_GE(v(0.05), g.at_radius(0.05) - 1e-12);
}

TEST(RadialOracle, RejectsBadInput) {
  EXPECT_THROW(radial_value_oracle(plateau(), 2, {0.5, 0.9}), Error);
  EXPECT_THROW(radial_value_oracle(plateau(), 4, {0.5, 1.0}), Error);
  EXPECT_THROW(radial_value_oracle(with_gstar(bump_gain(Point(0.1, 0), 0.2), 0.25), 2, {0.5, 1.0}), Error);
}

TEST(Psor, SuperharmonicAndMajorises) {
  const auto g = with_gstar(plateau_gain(0.2, 0.4), 0.25);
  const auto res = psor_obstacle_solve(g, 129);
  const auto& st = *res.field.stencil;
  const auto gv = gain_on_grid(g, res.field);
  for (std::size_t k = 0; k < st.size(); ++k) {
    if (!st.active[k]) continue;
    EXPECT_GE(res.field.values[k], gv[k] - 1e-12);
    EXPECT_GE(st.apply(res.field.values, k) / st.diag[k], -1e-8);
  }
  EXPECT_LT(res.residual, 1e-8);
}

TEST(Psor, MatchesRadialOracle) {
  const auto g = with_gstar(plateau_gain(0.2, 0.4), 0.25);
  const auto res = psor_obstacle_solve(g, 129);
  const auto v = radial_value_oracle(g, 2, radial_grid(2048, 1e-3, 2).radii);
  EXPECT_LT(cross_validate(res.field, v).sup, 2e-2);
}

TEST(Psor, RejectsCoarseGrid) { EXPECT_THROW(psor_obstacle_solve(plateau(), 65), Error); }

TEST(CrossValidate, GridMismatch) {
  EXPECT_THROW(cross_validate(cartesian_grid(17), cartesian_grid(33)), Error);
  const auto a = cartesian_grid(17);
  const auto cv = cross_validate(a, a);
  EXPECT_EQ(cv.sup, 0.0);
  EXPECT_GT(cv.nodes, 0u);
}
