#pragma once

// Harmonic functions on subdomains of the unit ball: Poisson integrals on
// balls, closed-form radial and affine harmonics, and walk-on-spheres.

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <vector>

#include "bhm/core.hpp"
#include "bhm/geometry.hpp"

namespace bhm {

struct BoundaryData {
  std::function<double(const Point&)> f;
  bool gstar_on_interior = false;  // data = g* on the part of the boundary inside the ball

  double operator()(const Point& y) const { return f(y); }

  static BoundaryData constant(double c) {
    return BoundaryData{[c](const Point&) { return c; }, false};
  }
};

struct WosConfig {
  double eps = 1e-4;
  long max_steps = 100000;
  long walks = 100000;
  std::uint64_t seed = 0;
};

/// Domain oracle used by walk-on-spheres.
struct Region {
  int dim = 2;
  std::function<double(const Point&)> sdf;
  std::function<Point(const Point&)> project;
};

inline Region make_region(const DomainDescriptor& dom) {
  Region r;
  r.dim = dimension(dom);
  r.sdf = [dom](const Point& x) { return signed_distance(dom, x); };
  r.project = [dom](const Point& x) { return project_to_boundary(dom, x); };
  return r;
}

namespace detail {

// Panels on [0, pi] refined geometrically towards 0 at scale `gap`.
inline QuadratureRule graded_half_circle(double gap, int order = 16) {
  QuadratureRule q;
  double lo = 0.0, hi = std::max(gap, 1e-14);
  while (true) {
    hi = std::min(hi, std::numbers::pi);
    const QuadratureRule p = gauss_legendre(order, lo, hi);
    q.nodes.insert(q.nodes.end(), p.nodes.begin(), p.nodes.end());
    q.weights.insert(q.weights.end(), p.weights.begin(), p.weights.end());
    if (hi >= std::numbers::pi) break;
    lo = hi;
    hi = 2.0 * hi;
  }
  return q;
}

}  // namespace detail

/// Poisson integral of f over the sphere |y - center| = radius, evaluated at
/// x. Returns +inf outside the closed ball and f itself on the sphere.
inline double poisson_ball_eval(const Point& center, double radius, const BoundaryData& f,
                                const Point& x) {
  require_same_dim(x, center.dim, "poisson_ball_eval");
  require(radius > 0.0, ErrorKind::Input, "poisson_ball_eval: radius must be positive");
  const Point off = x - center;
  const double rho = off.norm() / radius;
  if (rho > 1.0 + 1e-12) return kInf;
  if (rho >= 1.0 - 1e-13) return f(center + off * (1.0 / (rho * radius)) * radius);
  const int d = center.dim;
  // frame with first axis along x - center
  Point e0 = rho > 0.0 ? off * (1.0 / off.norm()) : Point::on_axis(d, 1.0);
  const QuadratureRule t = detail::graded_half_circle(1.0 - rho);
  const double k0 = 1.0 - rho * rho;
  double s = 0.0;
  if (d == 2) {
    const Point e1(-e0[1], e0[0]);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const double c = std::cos(t.nodes[i]), sn = std::sin(t.nodes[i]);
      const double ker = k0 / (1.0 - 2.0 * rho * c + rho * rho);
      const double fp = f(center + (e0 * c + e1 * sn) * radius);
      const double fm = f(center + (e0 * c - e1 * sn) * radius);
      s += t.weights[i] * ker * (fp + fm);
    }
    return s / (2.0 * std::numbers::pi);
  }
  Point a = std::abs(e0[0]) < 0.9 ? Point(1, 0, 0) : Point(0, 1, 0);
  Point e1 = a - e0 * a.dot(e0);
  e1 = e1 * (1.0 / e1.norm());
  const Point e2(e0[1] * e1[2] - e0[2] * e1[1], e0[2] * e1[0] - e0[0] * e1[2],
                 e0[0] * e1[1] - e0[1] * e1[0]);
  const int nphi = 64;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const double c = std::cos(t.nodes[i]), sn = std::sin(t.nodes[i]);
    const double q = 1.0 - 2.0 * rho * c + rho * rho;
    const double ker = k0 / (q * std::sqrt(q));
    double ring = 0.0;
    for (int k = 0; k < nphi; ++k) {
      const double p = 2.0 * std::numbers::pi * k / nphi;
      ring += f(center + (e0 * c + e1 * (sn * std::cos(p)) + e2 * (sn * std::sin(p))) * radius);
    }
    s += t.weights[i] * ker * sn * ring * (2.0 * std::numbers::pi / nphi);
  }
  return s / (4.0 * std::numbers::pi);
}

/// Harnack constant on B(0, R) for nonnegative harmonics on the unit ball:
/// sup u <= C_R inf u with C_R = (1 + R) / (1 - R)^(d - 1).
inline double harnack_constant(double R, int d) {
  require(R >= 0.0 && R < 1.0 && d >= 2, ErrorKind::Input, "harnack_constant: need 0 <= R < 1, d >= 2");
  return (1.0 + R) / std::pow(1.0 - R, d - 1);
}

/// Largest R with harnack_constant(R, d) <= bound (bound > 1).
inline double harnack_radius(double bound, int d) {
  require(bound > 1.0, ErrorKind::Input, "harnack_radius: bound must exceed 1");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (harnack_constant(mid, d) <= bound ? lo : hi) = mid;
  }
  return lo;
}

/// Radial harmonic on a <= r <= b with values va at a and vb at b; +inf
/// outside [a, b].
inline double radial_annulus_harmonic(double a, double b, double va, double vb, double r, int d) {
  require(0.0 < a && a < b, ErrorKind::Input, "radial_annulus_harmonic: need 0 < a < b");
  require(d >= 2, ErrorKind::Input, "radial_annulus_harmonic: need d >= 2");
  if (r < a || r > b) return kInf;
  const double sa = scale_coordinate(a, d), sb = scale_coordinate(b, d);
  const double t = (scale_coordinate(r, d) - sa) / (sb - sa);
  return va + (vb - va) * t;
}

/// (c - u.v) / z, truncated: +inf where it exceeds g* or |u| > 1.
inline double affine_harmonic(const Point& v, double z, double c, const Point& u,
                              double gstar = kInf) {
  require(z > 0.0, ErrorKind::Input, "affine_harmonic: z must be positive");
  require(std::abs(v.norm() - 1.0) <= 1e-12, ErrorKind::Input,
          "affine_harmonic: v must be a unit vector");
  require_same_dim(u, v.dim, "affine_harmonic");
  if (u.norm() > 1.0 + 1e-12) return kInf;
  const double h = (c - u.dot(v)) / z;
  return h <= gstar ? h : kInf;
}

/// One walk-on-spheres exit position started at x. `steps` receives the
/// number of sphere jumps.
inline Point wos_exit_sample(const Region& dom, const Point& x, const WosConfig& cfg, Rng& rng,
                             long* steps = nullptr) {
  require(cfg.eps > 0.0, ErrorKind::Input, "wos: eps must be positive");
  require_same_dim(x, dom.dim, "wos_exit_sample");
  double phi = dom.sdf(x);
  require(phi < 1e-12, ErrorKind::Input, "wos_exit_sample: start point outside the domain");
  Point y = x;
  long n = 0;
  while (-phi > cfg.eps) {
    require(n < cfg.max_steps, ErrorKind::NonConvergence,
            "wos_exit_sample: exceeded " + std::to_string(cfg.max_steps) + " steps");
    y = y + rng.unit_vector(dom.dim) * (-phi);
    phi = dom.sdf(y);
    ++n;
  }
  if (steps) *steps = n;
  return dom.project(y);
}

struct WosResult {
  double mean = 0.0;
  double std_error = 0.0;
  long walks = 0;
  std::vector<long> steps_histogram;  // index = number of jumps (last bin collects the tail)
};

/// Monte Carlo harmonic extension of f to x: mean of f at WoS exit points.
/// Walk i uses the stream Rng(cfg.seed, i).
inline WosResult wos_harmonic_eval(const Region& dom, const BoundaryData& f, const Point& x,
                                   const WosConfig& cfg) {
  require(cfg.walks >= 1, ErrorKind::Input, "wos: walks must be >= 1");
  std::vector<double> vals(static_cast<std::size_t>(cfg.walks));
  std::vector<long> steps(static_cast<std::size_t>(cfg.walks));
  parallel_for(vals.size(), [&](std::size_t i) {
    Rng rng(cfg.seed, i);
    long n = 0;
    vals[i] = f(wos_exit_sample(dom, x, cfg, rng, &n));
    steps[i] = n;
  });
  const Estimate e = summarize(vals);
  WosResult r;
  r.mean = e.mean;
  r.std_error = e.std_error;
  r.walks = cfg.walks;
  r.steps_histogram.assign(257, 0);
  for (long s : steps) ++r.steps_histogram[static_cast<std::size_t>(std::min(s, 256L))];
  return r;
}

inline void write_steps_histogram_csv(const WosResult& r, std::ostream& os) {
  os << "# walk-on-spheres jump counts per walk (last row: >= 256 jumps)\n";
  os << "steps,walks\n";
  for (std::size_t i = 0; i < r.steps_histogram.size(); ++i)
    if (r.steps_histogram[i]) os << i << ',' << r.steps_histogram[i] << '\n';
}

}  // namespace bhm
