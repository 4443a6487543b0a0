#pragma once

// Harmonic patches truncated at g*, branched harmonic majorants with lazy
// extension maps, matching errors, upward translation, continuous
// regularisation and the Lipschitz extension construction.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bhm/core.hpp"
#include "bhm/gain.hpp"
#include "bhm/geometry.hpp"
#include "bhm/harmonic.hpp"

namespace bhm {

enum class PatchClass { H0, H1 };

inline const char* to_string(PatchClass c) { return c == PatchClass::H0 ? "H0" : "H1"; }

/// Points within this signed distance of a domain count as its closure.
inline constexpr double kDomainTol = 1e-9;

/// A harmonic function on a subdomain, given by its boundary data, shifted
/// by `shift` and truncated at g*; +inf off the closed domain.
class HarmonicPatch {
 public:
  double value(const Point& x) const {
    if (signed_distance(domain_, x) > kDomainTol) return kInf;
    return std::min(raw(x) + shift_, gstar_);
  }
  /// Data value (before shift and truncation) at a boundary point.
  double data(const Point& y) const { return data_(y); }
  bool contains(const Point& x) const { return signed_distance(domain_, x) <= kDomainTol; }

  const DomainDescriptor& domain() const { return domain_; }
  const BoundaryData& boundary_data() const { return data_; }
  double gstar() const { return gstar_; }
  PatchClass patch_class() const { return cls_; }
  double lipschitz() const { return lipschitz_; }
  double shift() const { return shift_; }
  const std::string& kind() const { return kind_; }
  const WosConfig& wos() const { return wos_; }

  HarmonicPatch shifted(double c) const {
    HarmonicPatch p = *this;
    p.shift_ += c;
    return p;
  }

  /// Untruncated, unshifted harmonic value (closed domain assumed).
  double raw(const Point& x) const {
    if (closed_form_) return closed_form_(x);
    return wos_harmonic_eval(make_region(domain_), data_, x, wos_).mean;
  }

 private:
  friend HarmonicPatch make_patch(std::string, DomainDescriptor, BoundaryData, double, double,
                                  std::function<double(const Point&)>, WosConfig);
  DomainDescriptor domain_;
  BoundaryData data_;
  double gstar_ = kInf;
  PatchClass cls_ = PatchClass::H0;
  double lipschitz_ = kInf;
  double shift_ = 0.0;
  std::function<double(const Point&)> closed_form_;
  WosConfig wos_;
  std::string kind_;
};

/// Generic constructor: checks 0 <= data <= g* on boundary samples and sets
/// the class flag (H1 iff data = g* wherever the boundary lies inside the
/// open ball).
inline HarmonicPatch make_patch(std::string kind, DomainDescriptor domain, BoundaryData data,
                                double gstar, double lipschitz,
                                std::function<double(const Point&)> closed_form,
                                WosConfig wos = {}) {
  require(gstar > 0.0 && std::isfinite(gstar), ErrorKind::Input, "patch: g* must be positive");
  bool h1 = true;
  const double tol = 1e-12 * gstar;
  for (const Point& y : boundary_samples(domain, 256)) {
    const double f = data(y);
    require(f >= -tol && f <= gstar + tol, ErrorKind::Input,
            "patch '" + kind + "': boundary data outside [0, g*]");
    if (y.norm() < 1.0 - 1e-9 && f < gstar - tol) h1 = false;
  }
  HarmonicPatch p;
  p.kind_ = std::move(kind);
  p.domain_ = std::move(domain);
  p.data_ = std::move(data);
  p.data_.gstar_on_interior = h1;
  p.gstar_ = gstar;
  p.cls_ = h1 ? PatchClass::H1 : PatchClass::H0;
  p.lipschitz_ = lipschitz;
  p.closed_form_ = std::move(closed_form);
  p.wos_ = wos;
  return p;
}

/// Constant c on the whole ball.
inline HarmonicPatch constant_patch(int dim, double c, double gstar) {
  require(c >= 0.0, ErrorKind::Input, "constant_patch: value must be nonnegative");
  return make_patch("constant", FullBallDomain{dim}, BoundaryData::constant(c), gstar, 0.0,
                    [c](const Point&) { return c; });
}

/// The affine harmonic (c - u.v)/z on its truncation domain {(c - u.v)/z < g*}.
inline HarmonicPatch cap_patch(const Point& v, double z, double c, double gstar) {
  require(z > 0.0, ErrorKind::Input, "cap_patch: z must be positive");
  require(c >= 1.0, ErrorKind::Input, "cap_patch: c >= 1 keeps boundary data nonnegative");
  const double threshold = c - z * gstar;
  require(threshold < 1.0, ErrorKind::Degenerate, "cap_patch: empty domain");
  DomainDescriptor dom = threshold <= -1.0 ? DomainDescriptor(FullBallDomain{v.dim})
                                           : make_cap(v, threshold);
  auto h = [v, z, c](const Point& u) { return (c - u.dot(v)) / z; };
  auto data = [h, gstar](const Point& u) { return std::min(h(u), gstar); };
  return make_patch("cap", std::move(dom), BoundaryData{data, false}, gstar, 1.0 / z, h);
}

/// Cap domain {u.v > threshold} with constant data.
inline HarmonicPatch cap_constant_patch(const Point& v, double threshold, double c, double gstar) {
  return make_patch("cap-constant", make_cap(v, threshold), BoundaryData::constant(c), gstar, 0.0,
                    [c](const Point&) { return c; });
}

/// Radial harmonic on {a < |u| < b} with values va on |u| = a and vb on |u| = b.
inline HarmonicPatch radial_annulus_patch(double a, double b, double va, double vb, double gstar,
                                          int dim) {
  require(0.0 < a && a < b && b <= 1.0, ErrorKind::Input, "radial_annulus_patch: need 0 < a < b <= 1");
  const double sa = scale_coordinate(a, dim), sb = scale_coordinate(b, dim);
  // |d s / d r| is largest at r = a
  const double ds = dim == 2 ? 1.0 / a : (dim - 2.0) * std::pow(a, 1.0 - dim);
  const double lip = std::abs(vb - va) / std::abs(sb - sa) * ds;
  const double mid = 0.5 * (a + b);
  auto data = [=](const Point& y) { return y.norm() < mid ? va : vb; };
  auto h = [=](const Point& u) {
    const double r = std::clamp(u.norm(), a, b);
    return va + (vb - va) * (scale_coordinate(r, dim) - sa) / (sb - sa);
  };
  return make_patch("radial-annulus", make_annulus(Point::zero(dim), a, b), BoundaryData{data, false},
                    gstar, lip, h);
}

/// {a < |u| < 1} with data g* inside and 0 on the unit sphere.
inline HarmonicPatch annulus_to_boundary_patch(double a, double gstar, int dim) {
  HarmonicPatch p = radial_annulus_patch(a, 1.0, gstar, 0.0, gstar, dim);
  require(p.patch_class() == PatchClass::H1, ErrorKind::Structural,
          "annulus_to_boundary_patch: class detection failed");
  return p;
}

/// Constant c on the centred ball of radius b.
inline HarmonicPatch flat_ball_patch(double b, double c, double gstar, int dim) {
  return make_patch("flat-ball", make_ball(Point::zero(dim), b), BoundaryData::constant(c), gstar, 0.0,
                    [c](const Point&) { return c; });
}

/// Poisson integral of arbitrary data on a ball; `lipschitz` is supplied by the caller.
inline HarmonicPatch poisson_ball_patch(const Point& center, double radius, BoundaryData data,
                                        double gstar, double lipschitz) {
  auto d = data;
  return make_patch("poisson-ball", make_ball(center, radius), std::move(data), gstar, lipschitz,
                    [center, radius, d](const Point& x) {
                      const Point off = x - center;
                      const double n = off.norm();
                      // clamp to the closed ball (closure tolerance)
                      const Point y = n > radius ? center + off * (radius / n) : x;
                      return poisson_ball_eval(center, radius, d, y);
                    });
}

/// Walk-on-spheres evaluated patch on an arbitrary domain.
inline HarmonicPatch wos_patch(DomainDescriptor domain, BoundaryData data, double gstar,
                               double lipschitz, WosConfig wos) {
  return make_patch("wos", std::move(domain), std::move(data), gstar, lipschitz, nullptr, wos);
}

// ---------------------------------------------------------------------------
// Branched majorants

struct BranchedMajorant;
using MajorantPtr = std::shared_ptr<const BranchedMajorant>;
/// Interior-boundary point -> successor majorant (pure and reentrant).
using ExtensionMap = std::function<MajorantPtr(const Point&)>;

inline int& max_depth_setting() {
  static int n = 16;
  return n;
}

struct BranchedMajorant {
  HarmonicPatch base;
  ExtensionMap extension;  // empty iff depth == 1
  int depth = 1;
  double error_bound = 0.0;
  std::string label;

  double value(const Point& x) const { return base.value(x); }
  bool contains(const Point& x) const { return base.contains(x); }
};

inline MajorantPtr make_leaf(HarmonicPatch p, std::string label = {}) {
  require(p.patch_class() == PatchClass::H1, ErrorKind::Input,
          "depth-1 majorants need an H1 patch (data g* on the interior boundary)");
  auto m = std::make_shared<BranchedMajorant>();
  m->base = std::move(p);
  m->label = std::move(label);
  return m;
}

inline MajorantPtr make_branch(HarmonicPatch p, ExtensionMap ext, int depth, double error_bound,
                               std::string label = {}) {
  require(depth >= 2, ErrorKind::Input, "make_branch: depth must be >= 2");
  require(depth <= max_depth_setting(), ErrorKind::Structural,
          "make_branch: depth exceeds N_max = " + std::to_string(max_depth_setting()));
  require(static_cast<bool>(ext), ErrorKind::Input, "make_branch: extension map required");
  require(error_bound >= 0.0, ErrorKind::Input, "make_branch: error bound must be nonnegative");
  auto m = std::make_shared<BranchedMajorant>();
  m->base = std::move(p);
  m->extension = std::move(ext);
  m->depth = depth;
  m->error_bound = error_bound;
  m->label = std::move(label);
  return m;
}

inline double patch_value(const BranchedMajorant& h, const Point& x) { return h.value(x); }

/// Boundary points inside the open ball where the (shifted) data is below g*.
inline std::vector<Point> interior_boundary_samples(const HarmonicPatch& p, int count) {
  require(count >= 1, ErrorKind::Input, "interior_boundary_samples: count must be >= 1");
  std::vector<Point> out;
  const double tol = 1e-12 * p.gstar();
  for (const Point& y : boundary_samples(p.domain(), count))
    if (y.norm() < 1.0 - 1e-9 && p.data(y) + p.shift() < p.gstar() - tol) out.push_back(y);
  return out;
}

inline std::vector<Point> interior_boundary_samples(const BranchedMajorant& h, int count) {
  return interior_boundary_samples(h.base, count);
}

struct MatchingError {
  double delta = 0.0;
  double norm = 0.0;
};

/// Sampled matching error: delta = sup |h(v) - kappa_v(v)| over interior
/// boundary samples, norm = delta + sup norm(kappa_v).
inline MatchingError matching_error(const BranchedMajorant& h, int samples_per_level = 64) {
  if (h.depth == 1 || !h.extension) return {};
  MatchingError m;
  double child_norm = 0.0;
  for (const Point& v : interior_boundary_samples(h.base, samples_per_level)) {
    const MajorantPtr k = h.extension(v);
    require(k != nullptr, ErrorKind::Structural, "extension map returned no majorant");
    m.delta = std::max(m.delta, std::abs(h.value(v) - k->value(v)));
    child_norm = std::max(child_norm, matching_error(*k, samples_per_level).norm);
  }
  m.norm = m.delta + child_norm;
  return m;
}

/// Adds c >= 0 to every patch of the tree (values stay truncated at g*).
inline MajorantPtr upward_translate(const MajorantPtr& h, double c) {
  require(c >= 0.0, ErrorKind::Input, "upward_translate: c must be nonnegative");
  if (c == 0.0) return h;
  auto m = std::make_shared<BranchedMajorant>(*h);
  m->base = h->base.shifted(c);
  if (h->extension) {
    ExtensionMap inner = h->extension;
    m->extension = [inner, c](const Point& v) { return upward_translate(inner(v), c); };
  }
  return m;
}

struct MajorisationReport {
  bool ok = true;
  double worst_gap = kInf;  // min over probes of h - g
};

/// Checks h >= g at domain probes, then recursively on children attached at
/// a few interior boundary samples.
inline MajorisationReport majorises_gain(const BranchedMajorant& h, const GainField& g, int probes,
                                         double tol = 1e-9, int children_per_level = 8) {
  MajorisationReport r;
  auto check = [&](const Point& x) {
    const double v = h.value(x);
    if (std::isfinite(v)) r.worst_gap = std::min(r.worst_gap, v - g(x));
  };
  for (const Point& x : interior_samples(h.base.domain(), probes, 0x9a17)) check(x);
  for (const Point& x : boundary_samples(h.base.domain(), std::max(1, probes / 4))) check(x);
  if (h.extension) {
    const auto vs = interior_boundary_samples(h.base, children_per_level);
    for (const Point& v : vs) {
      const auto child = majorises_gain(*h.extension(v), g, std::max(8, probes / 4), tol,
                                        std::max(2, children_per_level / 2));
      r.worst_gap = std::min(r.worst_gap, child.worst_gap);
    }
  }
  r.ok = r.worst_gap >= -tol;
  return r;
}

/// h translated up by its sampled majorisation defect. Trees built on a grid
/// majorise g at the nodes only; between nodes they can fall short by the
/// interpolation error of g.
inline MajorantPtr lift_to_majorant(const MajorantPtr& h, const GainField& g, int probes = 2048) {
  const auto rep = majorises_gain(*h, g, probes, 0.0, 16);
  return rep.worst_gap >= 0.0 ? h : upward_translate(h, -rep.worst_gap);
}

namespace detail {

inline MajorantPtr regularise(const MajorantPtr& h, int samples) {
  if (h->depth == 1 || !h->extension) return h;
  ExtensionMap ext = h->extension;
  auto child0 = [ext, samples](const Point& v) { return regularise(ext(v), samples); };
  double delta0 = 0.0;
  for (const Point& v : interior_boundary_samples(h->base, samples))
    delta0 = std::max(delta0, std::abs(h->value(v) - child0(v)->value(v)));
  const HarmonicPatch base = h->base;
  auto m = std::make_shared<BranchedMajorant>(*h);
  m->base = base.shifted(delta0);
  m->error_bound = 0.0;
  m->extension = [base, child0, delta0](const Point& v) {
    const MajorantPtr k = child0(v);
    // eps_v = h(v) + delta0 - kappa0_v(v) >= 0 on the sampled set
    const double eps = std::max(0.0, base.value(v) + delta0 - k->value(v));
    return upward_translate(k, eps);
  };
  return m;
}

}  // namespace detail

/// Branched majorant h0 with h <= h0 <= h + norm(h) and zero matching error
/// on the sample set of size `samples` per level.
inline MajorantPtr continuous_regularisation(const MajorantPtr& h, const GainField& g,
                                             int samples = 64, int probes = 256) {
  const auto rep = majorises_gain(*h, g, probes);
  require(rep.ok, ErrorKind::Precondition,
          "continuous_regularisation: h does not majorise g (gap " + std::to_string(rep.worst_gap) + ")");
  return detail::regularise(h, samples);
}

namespace detail {

// First point of the segment from `from` to `to` where it leaves the closed
// domain of p; returns false if the whole segment stays inside.
inline bool segment_exit(const HarmonicPatch& p, const Point& from, const Point& to, Point& exit) {
  const Point dir = to - from;
  const double len = dir.norm();
  if (len == 0.0) return false;
  const Point e = dir * (1.0 / len);
  double t = 0.0;
  for (int it = 0; it < 100000; ++it) {
    const double phi = signed_distance(p.domain(), from + e * t);
    if (phi > -1e-12) {
      // bisection back to the boundary crossing
      double lo = std::max(0.0, t - std::max(1e-12, std::abs(phi)) * 2.0), hi = t;
      if (signed_distance(p.domain(), from + e * lo) > 0.0) lo = 0.0;
      for (int b = 0; b < 60; ++b) {
        const double mid = 0.5 * (lo + hi);
        (signed_distance(p.domain(), from + e * mid) < 0.0 ? lo : hi) = mid;
      }
      if (hi >= len) return false;
      exit = from + e * hi;
      return true;
    }
    if (t >= len) return false;
    t = std::min(len, t + std::max(-phi, 1e-9));
  }
  require(false, ErrorKind::NonConvergence, "segment_exit: marching did not terminate");
  return false;
}

}  // namespace detail

/// Extension map on Ball(x, eps1): kappa_u follows the segment from x to u
/// through the tree, switching to the successor patch at each exit point.
inline ExtensionMap lipschitz_extension(const MajorantPtr& h, const Point& x, double eps, double eps1,
                                        const GainField& g, int samples = 64) {
  const double hx = h->value(x);
  require(std::isfinite(hx), ErrorKind::Infeasible, "lipschitz_extension: x not in the domain of h");
  const double gstar = h->base.gstar();
  require(hx < gstar, ErrorKind::Infeasible, "lipschitz_extension: h(x) must be below g*");
  require(eps < gstar - hx, ErrorKind::Infeasible, "lipschitz_extension: need eps < g* - h(x)");
  const double norm = matching_error(*h, samples).norm;
  require(norm < eps, ErrorKind::Infeasible, "lipschitz_extension: matching error must be below eps");
  const double M = lipschitz_bound(g);
  require(eps1 > 0.0 && eps1 < 1.0 - x.norm() && eps1 < (gstar - hx - eps) / M, ErrorKind::Infeasible,
          "lipschitz_extension: eps1 too large");
  return [h, x, eps1](const Point& u) -> MajorantPtr {
    require(distance(u, x) <= eps1 * (1.0 + 1e-12), ErrorKind::Input,
            "lipschitz_extension: query outside Ball(x, eps1)");
    MajorantPtr cur = h;
    Point from = x;
    for (int hop = 0; hop <= max_depth_setting(); ++hop) {
      Point v;
      if (!detail::segment_exit(cur->base, from, u, v)) return cur;
      require(static_cast<bool>(cur->extension) && v.norm() < 1.0 &&
                  cur->value(v) < cur->base.gstar() * (1.0 - 1e-9),
              ErrorKind::Infeasible, "lipschitz_extension: path terminated before reaching u");
      MajorantPtr next = cur->extension(v);
      require(next && next->contains(v), ErrorKind::Structural,
              "lipschitz_extension: successor does not contain its attachment point");
      cur = next;
      from = v;
    }
    require(false, ErrorKind::Structural, "lipschitz_extension: tree deeper than N_max");
    return cur;
  };
}

// ---------------------------------------------------------------------------
// Tree description (for JSON emission by the CLI)

struct TreeNode {
  int id = 0;
  int parent = -1;
  std::string kind;
  std::string patch_class;
  int depth = 1;
  double error_bound = 0.0;
  Point attachment;  // point of the parent boundary where this node attaches
};

inline void describe_tree(const MajorantPtr& h, int samples_per_level, int max_nodes,
                          std::vector<TreeNode>& out, int parent = -1, Point at = Point()) {
  if (static_cast<int>(out.size()) >= max_nodes) return;
  TreeNode n;
  n.id = static_cast<int>(out.size());
  n.parent = parent;
  n.kind = h->base.kind();
  n.patch_class = to_string(h->base.patch_class());
  n.depth = h->depth;
  n.error_bound = h->error_bound;
  n.attachment = at;
  out.push_back(n);
  if (!h->extension) return;
  for (const Point& v : interior_boundary_samples(h->base, samples_per_level))
    describe_tree(h->extension(v), samples_per_level, max_nodes, out, n.id, v);
}

}  // namespace bhm
