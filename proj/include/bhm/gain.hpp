#pragma once

// Gain functions: continuous, nonnegative, compactly supported in the open
// unit ball. Radial gains carry their profile r -> g(r) explicitly.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "bhm/core.hpp"

namespace bhm {

/// Piecewise-linear table on a uniform grid of [0, r_end]; zero beyond r_end.
struct RadialTable {
  double r_end = 0.0;
  std::vector<double> values;

  double operator()(double r) const {
    if (values.empty() || r >= r_end) return 0.0;
    const double t = r / r_end * static_cast<double>(values.size() - 1);
    const auto i = static_cast<std::size_t>(t);
    if (i + 1 >= values.size()) return values.back();
    const double f = t - static_cast<double>(i);
    return (1.0 - f) * values[i] + f * values[i + 1];
  }
};

struct GainField {
  std::string name;
  int dim = 2;
  std::function<double(const Point&)> evaluator;
  bool radial = false;
  std::function<double(double)> profile;  // set iff radial
  double support_radius = 0.0;
  double max_gain = 0.0;  // probed maximum
  double gstar = kInf;    // set by with_gstar
  double lipschitz = kInf;
  bool continuous = true;

  double operator()(const Point& x) const { return evaluator(x); }
  double at_radius(double r) const {
    require(radial, ErrorKind::Input, "gain '" + name + "' is not radial");
    return profile(r);
  }
};

struct GainConstants {
  double gbar = 0.0;
  double gstar = 0.0;
  double delta_supp = 0.0;
  double M = 0.0;
};

namespace detail {

inline double probe_max(const GainField& g) {
  double m = 0.0;
  if (g.radial) {
    const int n = 4096;
    for (int k = 0; k <= n; ++k) m = std::max(m, g.profile(g.support_radius * k / n));
  } else if (g.dim == 2) {
    const int n = 64;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Point x(-1.0 + (i + 0.5) * 2.0 / n, -1.0 + (j + 0.5) * 2.0 / n);
        if (x.norm() < 1.0) m = std::max(m, g(x));
      }
  } else {
    const int n = 16;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const Point x(-1.0 + (i + 0.5) * 2.0 / n, -1.0 + (j + 0.5) * 2.0 / n,
                        -1.0 + (k + 0.5) * 2.0 / n);
          if (x.norm() < 1.0) m = std::max(m, g(x));
        }
  }
  return m;
}

inline GainField radial_gain(std::string name, int dim, std::function<double(double)> profile,
                             double support_radius, double lipschitz, bool continuous) {
  require(dim >= 2 && dim <= kMaxDim, ErrorKind::Input, "gain: dimension must be 2 or 3");
  require(support_radius > 0.0 && support_radius < 1.0, ErrorKind::Input,
          "gain: support radius must lie in (0, 1)");
  GainField g;
  g.name = std::move(name);
  g.dim = dim;
  g.radial = true;
  g.profile = std::move(profile);
  auto prof = g.profile;
  g.evaluator = [prof](const Point& x) { return prof(x.norm()); };
  g.support_radius = support_radius;
  g.lipschitz = lipschitz;
  g.continuous = continuous;
  g.max_gain = probe_max(g);
  return g;
}

// Normalised bump kernel exp(-1 / (1 - t^2)), t = rho / width.
inline double bump(double t) { return t < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

}  // namespace detail

/// g(x) = 1 for |x| <= eps, sqrt(1/4 - |x|^2) for eps < |x| < 1/2, 0 otherwise.
inline GainField spiked_gain(double eps, int dim = 2) {
  require(eps >= 0.0 && eps < 0.5, ErrorKind::Input,
          "spiked_gain: epsilon must lie in [0, 1/2), got " + std::to_string(eps));
  auto prof = [eps](double r) {
    if (r <= eps) return 1.0;
    if (r < 0.5) return std::sqrt(0.25 - r * r);
    return 0.0;
  };
  return detail::radial_gain("spiked", dim, prof, 0.5, kInf, false);
}

/// Height 1 on |x| <= r0, linear decay to 0 at |x| = r1.
inline GainField plateau_gain(double r0, double r1, double height = 1.0, int dim = 2) {
  require(0.0 <= r0 && r0 < r1 && r1 < 1.0 && height > 0.0, ErrorKind::Input,
          "plateau_gain: need 0 <= r0 < r1 < 1 and height > 0");
  auto prof = [=](double r) {
    if (r <= r0) return height;
    if (r < r1) return height * (r1 - r) / (r1 - r0);
    return 0.0;
  };
  return detail::radial_gain("plateau", dim, prof, r1, height / (r1 - r0), true);
}

/// Parabolic ring height * (1 - ((|x| - center) / half_width)^2)_+.
inline GainField ring_gain(double center, double half_width, double height = 1.0, int dim = 2) {
  require(half_width > 0.0 && center - half_width > 0.0 && center + half_width < 1.0 && height > 0.0,
          ErrorKind::Input, "ring_gain: ring must lie inside the punctured unit ball");
  auto prof = [=](double r) {
    const double t = (r - center) / half_width;
    return t * t < 1.0 ? height * (1.0 - t * t) : 0.0;
  };
  return detail::radial_gain("ring", dim, prof, center + half_width, 2.0 * height / half_width, true);
}

/// Off-centre parabolic bump height * (1 - |x - c|^2 / rho^2)_+.
inline GainField bump_gain(const Point& c, double rho, double height = 1.0) {
  require(rho > 0.0 && height > 0.0 && c.norm() + rho < 1.0, ErrorKind::Input,
          "bump_gain: bump must lie inside the unit ball");
  GainField g;
  g.name = "bump";
  g.dim = c.dim;
  g.evaluator = [=](const Point& x) {
    const double t = distance(x, c) / rho;
    return t < 1.0 ? height * (1.0 - t * t) : 0.0;
  };
  g.support_radius = c.norm() + rho;
  g.lipschitz = 2.0 * height / rho;
  g.continuous = true;
  g.max_gain = detail::probe_max(g);
  return g;
}

/// Convolution with a normalised radial bump of the given width.
inline GainField mollify(const GainField& g, double width) {
  require(width > 0.0, ErrorKind::Input, "mollify: width must be positive");
  require(width < (1.0 - g.support_radius) / 2.0, ErrorKind::Input,
          "mollify: width must be below (1 - support_radius)/2");
  const int d = g.dim;
  const QuadratureRule rq = composite_gauss_legendre(8, 8, 0.0, width);
  // angle: [0, 2 pi) for d = 2, polar angle [0, pi] for d = 3
  const QuadratureRule aq =
      composite_gauss_legendre(32, 8, 0.0, d == 2 ? 2.0 * std::numbers::pi : std::numbers::pi);
  double norm = 0.0;
  std::vector<double> rw(rq.nodes.size());
  for (std::size_t i = 0; i < rq.nodes.size(); ++i) {
    const double rho = rq.nodes[i];
    rw[i] = rq.weights[i] * detail::bump(rho / width) * (d == 2 ? rho : rho * rho);
  }
  std::vector<double> aw(aq.nodes.size());
  for (std::size_t j = 0; j < aq.nodes.size(); ++j)
    aw[j] = aq.weights[j] * (d == 2 ? 1.0 : std::sin(aq.nodes[j]));
  for (double a : rw)
    for (double b : aw) norm += a * b;

  GainField out;
  out.name = g.name + "*bump";
  out.dim = d;
  out.support_radius = g.support_radius + width;
  out.continuous = true;

  if (g.radial) {
    const int n = 4096;
    auto table = std::make_shared<RadialTable>();
    table->r_end = out.support_radius;
    table->values.resize(n + 1);
    parallel_for(static_cast<std::size_t>(n + 1), [&](std::size_t k) {
      const double r = out.support_radius * static_cast<double>(k) / n;
      double s = 0.0;
      for (std::size_t i = 0; i < rq.nodes.size(); ++i) {
        const double rho = rq.nodes[i];
        double inner = 0.0;
        for (std::size_t j = 0; j < aq.nodes.size(); ++j) {
          const double q2 = r * r + rho * rho - 2.0 * r * rho * std::cos(aq.nodes[j]);
          inner += aw[j] * g.profile(std::sqrt(std::max(0.0, q2)));
        }
        s += rw[i] * inner;
      }
      table->values[k] = std::max(0.0, s / norm);
    });
    table->values[n] = 0.0;
    double lip = 0.0;
    const double h = out.support_radius / n;
    for (int k = 0; k < n; ++k)
      lip = std::max(lip, std::abs(table->values[k + 1] - table->values[k]) / h);
    out.radial = true;
    out.profile = [table](double r) { return (*table)(r); };
    out.evaluator = [table](const Point& x) { return (*table)(x.norm()); };
    out.lipschitz = lip;
  } else {
    require(d == 2, ErrorKind::Input, "mollify: non-radial gains are supported for d = 2 only");
    const QuadratureRule rc = composite_gauss_legendre(2, 8, 0.0, width);
    const QuadratureRule ac = composite_gauss_legendre(8, 4, 0.0, 2.0 * std::numbers::pi);
    double cn = 0.0;
    for (std::size_t i = 0; i < rc.nodes.size(); ++i)
      for (std::size_t j = 0; j < ac.nodes.size(); ++j)
        cn += rc.weights[i] * detail::bump(rc.nodes[i] / width) * rc.nodes[i] * ac.weights[j];
    auto src = g.evaluator;
    out.evaluator = [=](const Point& x) {
      double s = 0.0;
      for (std::size_t i = 0; i < rc.nodes.size(); ++i) {
        const double rho = rc.nodes[i];
        const double wr = rc.weights[i] * detail::bump(rho / width) * rho;
        for (std::size_t j = 0; j < ac.nodes.size(); ++j)
          s += wr * ac.weights[j] *
               src(x + Point(rho * std::cos(ac.nodes[j]), rho * std::sin(ac.nodes[j])));
      }
      return std::max(0.0, s / cn);
    };
    out.lipschitz = g.lipschitz;
    if (!std::isfinite(out.lipschitz)) {
      double lip = 0.0;
      const int n = 64;
      const double h = 2.0 / n;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
          const Point a(-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h);
          const Point b = a + Point(h, 0.0);
          lip = std::max(lip, std::abs(out(a) - out(b)) / h);
        }
      out.lipschitz = lip;
    }
  }
  out.max_gain = detail::probe_max(out);
  return out;
}

/// gbar = probed maximum, g* = gbar (1 + margin), delta_supp = 1 - support
/// radius, M = max(L_g, g* / delta_supp).
inline GainConstants derive_constants(const GainField& g, double gstar_margin) {
  require(gstar_margin > 0.0, ErrorKind::Input, "derive_constants: g* margin must be positive");
  GainConstants c;
  c.gbar = detail::probe_max(g);
  require(c.gbar > 0.0, ErrorKind::Degenerate,
          "derive_constants: gain vanishes on its probe grid, so g* > gbar cannot hold");
  c.gstar = c.gbar * (1.0 + gstar_margin);
  c.delta_supp = 1.0 - g.support_radius;
  c.M = std::max(g.lipschitz, c.gstar / c.delta_supp);
  return c;
}

/// Copy of g carrying g* = gbar (1 + margin).
inline GainField with_gstar(GainField g, double gstar_margin) {
  const GainConstants c = derive_constants(g, gstar_margin);
  g.max_gain = c.gbar;
  g.gstar = c.gstar;
  return g;
}

inline double lipschitz_bound(const GainField& g) {
  require(std::isfinite(g.gstar), ErrorKind::Input, "gain has no g* (use with_gstar)");
  return std::max(g.lipschitz, g.gstar / (1.0 - g.support_radius));
}

}  // namespace bhm
