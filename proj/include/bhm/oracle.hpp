#pragma once

// Reference solutions for the value function: the smallest concave majorant
// of the radial gain in the scale coordinate, and projected SOR for the
// discrete obstacle problem on the disc.

#include <algorithm>
#include <cmath>
#include <vector>

#include "bhm/core.hpp"
#include "bhm/envelope.hpp"
#include "bhm/gain.hpp"
#include "bhm/laplace.hpp"

namespace bhm {

struct RadialProfile {
  int dim = 2;
  std::vector<double> radii;
  std::vector<double> s;
  std::vector<double> values;
  double value_at_origin = 0.0;  // max(g(0), lim_{r -> 0} V(r)); the origin is polar

  /// Piecewise affine interpolation in s; constant below r_0.
  double operator()(double r) const {
    if (r <= radii.front()) return values.front();
    if (r >= radii.back()) return values.back();
    const auto it = std::lower_bound(radii.begin(), radii.end(), r);
    const std::size_t k = static_cast<std::size_t>(it - radii.begin());
    const double sr = scale_coordinate(r, dim);
    const double t = (sr - s[k - 1]) / (s[k] - s[k - 1]);
    return values[k - 1] + t * (values[k] - values[k - 1]);
  }
};

/// Smallest concave majorant, in s = ln r (d = 2) or r^(2-d), of the radial
/// gain on the given radii with V(1) = 0. A concave function bounded below
/// on a half-line is monotone towards its open end, so V is nonincreasing
/// in r and dominates the suffix maximum of g; the suffix maximum (with
/// max g on [0, r_0] folded into the first node) is hulled.
inline RadialProfile radial_value_oracle(const GainField& g, int d, const std::vector<double>& radii) {
  require(g.radial, ErrorKind::Input, "radial_value_oracle: gain is not radial");
  require(d == 2 || d == 3, ErrorKind::Input, "radial_value_oracle: d must be 2 or 3");
  require(radii.size() >= 2 && radii.back() == 1.0, ErrorKind::Input,
          "radial_value_oracle: radii must end at 1");
  for (std::size_t k = 0; k + 1 < radii.size(); ++k)
    require(radii[k] > 0.0 && radii[k] < radii[k + 1], ErrorKind::Input,
            "radial_value_oracle: radii must be positive and strictly increasing");
  const std::size_t N = radii.size();
  RadialProfile out;
  out.dim = d;
  out.radii = radii;
  out.s.resize(N);
  std::vector<double> y(N);
  y[N - 1] = 0.0;
  for (std::size_t k = N - 1; k-- > 0;) y[k] = std::max(y[k + 1], g.at_radius(radii[k]));
  for (int k = 0; k <= 256; ++k) y[0] = std::max(y[0], g.at_radius(radii[0] * k / 256.0));
  for (std::size_t k = 0; k < N; ++k) out.s[k] = scale_coordinate(radii[k], d);
  // s is increasing in r for d = 2 and decreasing for d = 3: hull in s order
  std::vector<std::size_t> order(N);
  for (std::size_t k = 0; k < N; ++k) order[k] = d == 2 ? k : N - 1 - k;
  // upper hull (monotone chain)
  std::vector<std::size_t> hull;
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (out.s[a] - out.s[o]) * (y[b] - y[o]) - (y[a] - y[o]) * (out.s[b] - out.s[o]);
  };
  for (std::size_t idx : order) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), idx) >= 0.0) hull.pop_back();
    hull.push_back(idx);
  }
  out.values.assign(N, 0.0);
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const std::size_t a = hull[h], b = hull[h + 1];
    const std::size_t lo = std::min(a, b), hi = std::max(a, b);
    for (std::size_t k = lo; k <= hi; ++k)
      out.values[k] = y[a] + (y[b] - y[a]) * (out.s[k] - out.s[a]) / (out.s[b] - out.s[a]);
  }
  if (hull.size() == 1) out.values[hull[0]] = y[hull[0]];
  out.value_at_origin = std::max(g.at_radius(0.0), out.values.front());
  return out;
}

struct PsorResult {
  GridField field;
  long sweeps = 0;
  double residual = 0.0;  // max over nodes of |min(-Lap u / diag, u - g)|
};

/// max over active nodes of |min((-Lap_h u)_k / diag_k, u_k - g_k)|.
inline double complementarity_residual(const DiscStencil& st, const std::vector<double>& u,
                                       const std::vector<double>& g) {
  double r = 0.0;
  for (std::size_t k = 0; k < st.size(); ++k)
    if (st.active[k]) r = std::max(r, std::abs(std::min(st.apply(u, k) / st.diag[k], u[k] - g[k])));
  return r;
}

/// Projected SOR for min(-Lap_h u, u - g) = 0 on the disc, u = 0 on the circle.
inline PsorResult psor_obstacle_solve(const GainField& g, int n, double omega = 1.7, double tol = 1e-10,
                                      long max_iter = 1000000) {
  require(g.dim == 2, ErrorKind::Input, "psor_obstacle_solve: d must be 2");
  require(n >= 129, ErrorKind::Input, "psor_obstacle_solve: spacing must be <= 1/64 (n >= 129)");
  PsorResult res;
  res.field = cartesian_grid(n);
  res.field.tag = "psor";
  const DiscStencil& st = *res.field.stencil;
  const std::vector<double> obstacle = gain_on_grid(g, res.field);
  std::vector<double>& u = res.field.values;
  u = obstacle;
  std::vector<std::uint8_t> free(st.active.begin(), st.active.end());
  const auto sr = sor_solve(st, u, free, &obstacle, omega, tol, max_iter);
  res.sweeps = sr.sweeps;
  res.residual = complementarity_residual(st, u, obstacle);
  require(sr.converged, ErrorKind::NonConvergence,
          "psor_obstacle_solve: no convergence after " + std::to_string(sr.sweeps) +
              " sweeps, last change " + std::to_string(sr.last_change));
  return res;
}

struct CrossValidation {
  double sup = 0.0;
  double l2 = 0.0;  // root mean square over compared nodes
  std::size_t nodes = 0;
};

/// Distances between a field and a radial profile sampled at the field nodes.
inline CrossValidation cross_validate(const GridField& f, const RadialProfile& v) {
  CrossValidation cv;
  double ss = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!f.active(k)) continue;
    const double d = std::abs(f.values[k] - v(f.radius(k)));
    cv.sup = std::max(cv.sup, d);
    ss += d * d;
    ++cv.nodes;
  }
  cv.l2 = cv.nodes ? std::sqrt(ss / static_cast<double>(cv.nodes)) : 0.0;
  return cv;
}

/// Distances between two fields on the same grid.
inline CrossValidation cross_validate(const GridField& a, const GridField& b) {
  require(a.kind == b.kind && a.size() == b.size(), ErrorKind::Input, "cross_validate: grid mismatch");
  CrossValidation cv;
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a.active(k)) continue;
    const double d = std::abs(a.values[k] - b.values[k]);
    cv.sup = std::max(cv.sup, d);
    ss += d * d;
    ++cv.nodes;
  }
  cv.l2 = cv.nodes ? std::sqrt(ss / static_cast<double>(cv.nodes)) : 0.0;
  return cv;
}

}  // namespace bhm
