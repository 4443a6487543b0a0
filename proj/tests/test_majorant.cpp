#include <gtest/gtest.h>

#include <cmath>

#include "bhm/majorant.hpp"

using namespace bhm;

namespace {

constexpr double kGstar = 1.25;

double ring_value(double a, double r) { return kGstar * std::log(r) / std::log(a); }

// Radial chain: patch k lives on (inner[k], outer[k]) with data g* inside;
// its outer data is taken from patch k + 1, the last patch runs to the sphere.
// `offset` perturbs the data handed up at each joint.
MajorantPtr radial_chain(const std::vector<double>& inner, const std::vector<double>& outer, double offset = 0.0) {
  const std::size_t L = inner.size();
  MajorantPtr cur = make_leaf(annulus_to_boundary_patch(inner[L - 1], kGstar, 2), "leaf");
  for (std::size_t k = L - 1; k-- > 0;) {
    const double vb = std::min(kGstar, cur->value(Point(outer[k], 0)) + offset);
    HarmonicPatch p = radial_annulus_patch(inner[k], outer[k], kGstar, vb, kGstar, 2);
    MajorantPtr child = cur;
    cur = make_branch(std::move(p), [child](const Point&) { return child; }, static_cast<int>(L - k), 0.0,
                      "level");
  }
  return cur;
}

GainField fixture_gain() { return with_gstar(plateau_gain(0.1, 0.15), 0.25); }

}  // namespace

TEST(Patch, CapValuesAndClass) {
  const auto p = cap_patch(Point(1, 0), 0.5, 1.2, kGstar);
  EXPECT_EQ(p.patch_class(), PatchClass::H1);
  EXPECT_NEAR(p.value(Point(0.7, 0)), (1.2 - 0.7) / 0.5, 1e-14);
  // threshold c - z g* = 0.575: points with u.v <= 0.575 are outside
  EXPECT_EQ(p.value(Point(0.5, 0.1)), kInf);
  EXPECT_NEAR(p.value(Point(0.6, 0.0)), 1.2, 1e-14);
  EXPECT_THROW(cap_patch(Point(1, 0), 0.5, 0.9, kGstar), Error);
}

TEST(Patch, RadialAnnulusIsHarmonic) {
  const auto p = radial_annulus_patch(0.2, 0.8, 1.0, 0.3, kGstar, 2);
  EXPECT_NEAR(p.value(Point(0.2, 0)), 1.0, 1e-14);
  EXPECT_NEAR(p.value(Point(0, 0.8)), 0.3, 1e-14);
  EXPECT_EQ(p.patch_class(), PatchClass::H0);
  // mean value over a small circle inside the annulus
  const Point c(0.5, 0.0);
  double m = 0.0;
  for (int k = 0; k < 256; ++k) {
    const double a = 2 * std::numbers::pi * k / 256;
    m += p.value(c + Point(std::cos(a), std::sin(a)) * 0.1);
  }
  EXPECT_NEAR(m / 256, p.value(c), 1e-10);
}

TEST(Patch, AnnulusToBoundaryIsH1) {
  for (int d : {2, 3}) {
    const auto p = annulus_to_boundary_patch(0.4, kGstar, d);
    EXPECT_EQ(p.patch_class(), PatchClass::H1);
    EXPECT_NEAR(p.value(Point::on_axis(d, 0.4)), kGstar, 1e-14);
    EXPECT_NEAR(p.value(Point::on_axis(d, 1.0)), 0.0, 1e-14);
  }
}

TEST(Patch, ValueIsCappedAtGstar) {
  const auto p = constant_patch(2, 1.0, kGstar).shifted(0.5);
  EXPECT_EQ(p.value(Point(0.1, 0.2)), kGstar);
}

TEST(Patch, RejectsDataAboveGstar) {
  EXPECT_THROW(radial_annulus_patch(0.2, 0.5, 1.3, 0.0, kGstar, 2), Error);
}

TEST(Branched, LeafNeedsH1) {
  EXPECT_THROW(make_leaf(radial_annulus_patch(0.2, 0.8, 1.0, 0.3, kGstar, 2)), Error);
  EXPECT_NO_THROW(make_leaf(annulus_to_boundary_patch(0.3, kGstar, 2)));
}

TEST(Branched, DepthLimit) {
  auto leaf = make_leaf(annulus_to_boundary_patch(0.3, kGstar, 2));
  const auto p = radial_annulus_patch(0.2, 0.5, kGstar, 0.5, kGstar, 2);
  try {
    make_branch(p, [leaf](const Point&) { return leaf; }, max_depth_setting() + 1, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Structural);
  }
}

TEST(Branched, ExactChainHasZeroMatchingError) {
  const auto h = radial_chain({0.3, 0.5}, {0.7, 1.0});
  EXPECT_EQ(h->depth, 2);
  EXPECT_LT(matching_error(*h).norm, 1e-12);
  const auto h3 = radial_chain({0.2, 0.3, 0.5}, {0.4, 0.6, 1.0});
  EXPECT_EQ(h3->depth, 3);
  EXPECT_LT(matching_error(*h3).norm, 1e-12);
}

TEST(Branched, MatchingErrorMeasuresJump) {
  const auto h = radial_chain({0.3, 0.5}, {0.7, 1.0}, 0.02);
  const auto m = matching_error(*h);
  EXPECT_NEAR(m.delta, 0.02, 1e-12);
  EXPECT_NEAR(m.norm, 0.02, 1e-12);
  const auto h3 = radial_chain({0.2, 0.3, 0.5}, {0.4, 0.6, 1.0}, 0.01);
  EXPECT_NEAR(matching_error(*h3).norm, 0.02, 1e-12);
}

TEST(Branched, UpwardTranslate) {
  const auto h = radial_chain({0.3, 0.5}, {0.7, 1.0});
  const auto t = upward_translate(h, 0.1);
  const Point x(0.5, 0.1);
  EXPECT_NEAR(t->value(x), h->value(x) + 0.1, 1e-14);
  const auto child = t->extension(Point(0.7, 0));
  EXPECT_NEAR(child->value(Point(0.8, 0)), ring_value(0.5, 0.8) + 0.1, 1e-14);
  EXPECT_LT(matching_error(*t).norm, 1e-12);
}

TEST(Branched, MajorisesGain) {
  const auto g = fixture_gain();
  EXPECT_TRUE(majorises_gain(*radial_chain({0.3, 0.5}, {0.7, 1.0}), g, 256).ok);
  // a flat ball below the plateau fails
  const auto low = make_leaf(make_patch("flat", make_ball(Point(0, 0), 0.5), BoundaryData::constant(kGstar), kGstar,
                                        0.0, [](const Point&) { return 0.5; }));
  const auto rep = majorises_gain(*low, g, 256);
  EXPECT_FALSE(rep.ok);
  EXPECT_NEAR(rep.worst_gap, -0.5, 1e-9);
}

TEST(Regularisation, SandwichAndZeroNorm) {
  const auto g = fixture_gain();
  for (double offset : {0.02, -0.03}) {
    const auto h = radial_chain({0.2, 0.3, 0.5}, {0.4, 0.6, 1.0}, offset);
    const double norm = matching_error(*h).norm;
    const auto h0 = continuous_regularisation(h, g);
    EXPECT_LE(matching_error(*h0).norm, 1e-9);
    Rng rng(11, 0);
    for (int i = 0; i < 1000; ++i) {
      const Point x = rng.unit_vector(2) * (0.2 + 0.2 * rng.uniform());
      const double a = h->value(x), b = h0->value(x);
      EXPECT_LE(a, b + 1e-12);
      EXPECT_LE(b, a + norm + 1e-12);
    }
  }
}

TEST(Regularisation, RequiresMajorant) {
  const auto g = fixture_gain();
  const auto low = make_leaf(make_patch("flat", make_ball(Point(0, 0), 0.5), BoundaryData::constant(kGstar), kGstar,
                                        0.0, [](const Point&) { return 0.5; }));
  try {
    continuous_regularisation(low, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(LipschitzExtension, ContainsQueryAndBoundsValue) {
  const auto g = fixture_gain();
  const auto h = radial_chain({0.3, 0.5}, {0.7, 1.0});
  const Point x(0.65, 0.0);
  const double eps = 0.01, M = lipschitz_bound(g);
  const double eps1 = 0.5 * std::min(1.0 - x.norm(), (kGstar - h->value(x) - eps) / M);
  const auto ext = lipschitz_extension(h, x, eps, eps1, g);
  Rng rng(12, 0);
  for (int i = 0; i < 200; ++i) {
    const Point u = x + rng.unit_vector(2) * (eps1 * rng.uniform());
    const auto k = ext(u);
    EXPECT_TRUE(k->contains(u));
    EXPECT_LT(std::abs(k->value(u) - h->value(x)), M * eps1 + eps);
    EXPECT_LT(matching_error(*k).norm, eps);
  }
  EXPECT_THROW(ext(x + Point(2 * eps1, 0)), Error);
}

TEST(LipschitzExtension, CrossesIntoChild) {
  const auto g = fixture_gain();
  const auto h = radial_chain({0.3, 0.5}, {0.7, 1.0});
  const Point x(0.69, 0.0);
  const double M = lipschitz_bound(g);
  const double eps1 = 0.5 * std::min(0.31, (kGstar - h->value(x) - 0.01) / M);
  const auto ext = lipschitz_extension(h, x, 0.01, eps1, g);
  const Point u(0.69 + 0.9 * eps1, 0.0);
  ASSERT_GT(u.norm(), 0.7);
  const auto k = ext(u);
  EXPECT_EQ(k->depth, 1);
  EXPECT_NEAR(k->value(u), ring_value(0.5, u.norm()), 1e-12);
}

TEST(LipschitzExtension, Preconditions) {
  const auto g = fixture_gain();
  const auto h = radial_chain({0.3, 0.5}, {0.7, 1.0});
  const Point x(0.65, 0.0);
  const double gap = kGstar - h->value(x);
  auto kind_of = [&](double eps, double eps1) {
    try {
      lipschitz_extension(h, x, eps, eps1, g);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Input;
  };
  EXPECT_EQ(kind_of(gap + 0.01, 1e-3), ErrorKind::Infeasible);
  EXPECT_EQ(kind_of(0.01, 0.5), ErrorKind::Infeasible);
  const auto bad = radial_chain({0.3, 0.5}, {0.7, 1.0}, 0.05);
  EXPECT_THROW(lipschitz_extension(bad, x, 0.01, 1e-3, g), Error);
}

TEST(Tree, DescribesNodesAndAttachments) {
  const auto h = radial_chain({0.2, 0.3, 0.5}, {0.4, 0.6, 1.0});
  std::vector<TreeNode> nodes;
  describe_tree(h, 4, 100, nodes);
  ASSERT_GE(nodes.size(), 7u);
  EXPECT_EQ(nodes[0].parent, -1);
  EXPECT_EQ(nodes[0].depth, 3);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    EXPECT_GE(nodes[i].parent, 0);
    EXPECT_EQ(nodes[i].depth, nodes[static_cast<std::size_t>(nodes[i].parent)].depth - 1);
  }
  EXPECT_NEAR(nodes[1].attachment.norm(), 0.4, 1e-12);
  EXPECT_EQ(nodes.back().depth, 1);
  EXPECT_EQ(nodes.back().patch_class, "H1");
}

TEST(Branched, LiftToMajorant) {
  const auto g = fixture_gain();
  // harmonic from g* at r = 0.05 to 0 on the sphere dips below the plateau edge r = 0.1
  const auto low = make_leaf(annulus_to_boundary_patch(0.05, g.gstar, 2), "low");
  ASSERT_FALSE(majorises_gain(*low, g, 512).ok);
  const auto lifted = lift_to_majorant(low, g);
  EXPECT_TRUE(majorises_gain(*lifted, g, 512).ok);
  const double shift = lifted->value(Point(0.5, 0)) - low->value(Point(0.5, 0));
  // the sampled defect, close to and below the exact one at r = 0.1
  EXPECT_NEAR(shift, -majorises_gain(*low, g, 2048, 0.0, 16).worst_gap, 1e-15);
  const double exact = 1.0 - low->value(Point(0.1, 0));
  EXPECT_LE(shift, exact);
  EXPECT_GT(shift, exact - 5e-3);
  const auto high = make_leaf(annulus_to_boundary_patch(0.2, g.gstar, 2), "high");
  EXPECT_EQ(lift_to_majorant(high, g), high);
}
