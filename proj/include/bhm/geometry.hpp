#pragma once

// Subdomains of the unit ball, signed distance queries, boundary sampling,
// Hausdorff distances and smooth inner approximation of grid regions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bhm/core.hpp"

namespace bhm {

struct BallDomain {
  Point center;
  double radius = 0.0;
};

struct AnnulusDomain {
  Point center;
  double inner = 0.0;
  double outer = 0.0;
};

/// {u in the open unit ball : u . direction > threshold}.
struct CapDomain {
  Point direction;
  double threshold = 0.0;
};

struct FullBallDomain {
  int dim = 2;
};

/// A union of square cells on a uniform Cartesian grid (d = 2). Cell (i, j)
/// has centre (x0 + (i + 1/2) h, y0 + (j + 1/2) h); storage is row-major in j.
class GridRegion {
 public:
  GridRegion() = default;
  GridRegion(int nx, int ny, double spacing, double x0, double y0, std::vector<std::uint8_t> mask)
      : nx_(nx), ny_(ny), h_(spacing), x0_(x0), y0_(y0), mask_(std::move(mask)) {
    require(nx > 0 && ny > 0 && spacing > 0.0, ErrorKind::Input,
            "GridRegion: grid extents and spacing must be positive");
    require(mask_.size() == static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny),
            ErrorKind::Input, "GridRegion: mask size does not match nx*ny");
    const double half_diag = spacing * std::numbers::sqrt2 / 2.0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (inside(i, j))
          require(center(i, j).norm() + half_diag < 1.0, ErrorKind::Input,
                  "GridRegion: mask cell not strictly inside the unit ball");
    build_distance();
  }

  /// Grid of n x n cells covering [-1, 1]^2.
  static GridRegion centered(int n, std::vector<std::uint8_t> mask) {
    const double h = 2.0 / n;
    return GridRegion(n, n, h, -1.0, -1.0, std::move(mask));
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double spacing() const { return h_; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  bool inside(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return false;
    return mask_[static_cast<std::size_t>(j) * nx_ + i] != 0;
  }
  Point center(int i, int j) const { return Point(x0_ + (i + 0.5) * h_, y0_ + (j + 0.5) * h_); }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
  }

  /// Signed distance at cell centres (padded by one cell on every side).
  double cell_distance(int i, int j) const {
    return (*dist_)[static_cast<std::size_t>(j + 1) * (nx_ + 2) + (i + 1)];
  }

  /// Bilinear interpolation of the cell-centre distance transform.
  double signed_distance(const Point& x) const {
    require_same_dim(x, 2, "GridRegion::signed_distance");
    // padded index space: centre of padded cell (I, J) is x0 + (I - 1/2) h
    const double fx = (x[0] - x0_) / h_ + 0.5;
    const double fy = (x[1] - y0_) / h_ + 0.5;
    const double cx = std::clamp(fx, 0.0, static_cast<double>(nx_ + 1));
    const double cy = std::clamp(fy, 0.0, static_cast<double>(ny_ + 1));
    const double extra = std::hypot(fx - cx, fy - cy) * h_;
    int i0 = std::min(static_cast<int>(std::floor(cx)), nx_);
    int j0 = std::min(static_cast<int>(std::floor(cy)), ny_);
    const double tx = cx - i0, ty = cy - j0;
    auto at = [&](int i, int j) { return (*dist_)[static_cast<std::size_t>(j) * (nx_ + 2) + i]; };
    const double v = (1 - tx) * (1 - ty) * at(i0, j0) + tx * (1 - ty) * at(i0 + 1, j0) +
                     (1 - tx) * ty * at(i0, j0 + 1) + tx * ty * at(i0 + 1, j0 + 1);
    return v + extra;
  }

  /// Cell-edge midpoints separating inside from outside cells.
  std::vector<Point> boundary_midpoints() const {
    std::vector<Point> out;
    for (int j = -1; j < ny_; ++j)
      for (int i = -1; i < nx_; ++i) {
        const bool a = inside(i, j);
        if (j >= 0 && a != inside(i + 1, j))
          out.emplace_back(x0_ + (i + 1) * h_, y0_ + (j + 0.5) * h_);
        if (i >= 0 && a != inside(i, j + 1))
          out.emplace_back(x0_ + (i + 0.5) * h_, y0_ + (j + 1) * h_);
      }
    return out;
  }

  /// Largest distance from an inside cell centre to the boundary.
  double inradius() const {
    double r = 0.0;
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        if (inside(i, j)) r = std::max(r, -cell_distance(i, j));
    return r;
  }

 private:
  // Exact squared Euclidean distance transform along one line.
  static void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
      if (f[q] == kInf) continue;
      if (f[v[0]] == kInf) {
        v[0] = q;
        continue;
      }
      double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      while (s <= z[k]) {
        --k;
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      const double dq = q - v[k];
      d[q] = f[v[k]] == kInf ? kInf : dq * dq + f[v[k]];
    }
  }

  // Squared distance (in cells) to the nearest cell with inside == target.
  std::vector<double> edt_to(bool target) const {
    const int w = nx_ + 2, hgt = ny_ + 2;
    std::vector<double> g(static_cast<std::size_t>(w) * hgt);
    for (int J = 0; J < hgt; ++J)
      for (int I = 0; I < w; ++I)
        g[static_cast<std::size_t>(J) * w + I] = inside(I - 1, J - 1) == target ? 0.0 : kInf;
    std::vector<double> f, d;
    f.resize(static_cast<std::size_t>(hgt));
    d.resize(static_cast<std::size_t>(hgt));
    for (int I = 0; I < w; ++I) {
      for (int J = 0; J < hgt; ++J) f[J] = g[static_cast<std::size_t>(J) * w + I];
      edt_1d(f, d);
      for (int J = 0; J < hgt; ++J) g[static_cast<std::size_t>(J) * w + I] = d[J];
    }
    f.resize(static_cast<std::size_t>(w));
    d.resize(static_cast<std::size_t>(w));
    for (int J = 0; J < hgt; ++J) {
      for (int I = 0; I < w; ++I) f[I] = g[static_cast<std::size_t>(J) * w + I];
      edt_1d(f, d);
      for (int I = 0; I < w; ++I) g[static_cast<std::size_t>(J) * w + I] = d[I];
    }
    return g;
  }

  void build_distance() {
    const auto to_out = edt_to(false);
    const auto to_in = edt_to(true);
    auto dist = std::make_shared<std::vector<double>>(to_out.size());
    const int w = nx_ + 2;
    for (std::size_t k = 0; k < dist->size(); ++k) {
      const int I = static_cast<int>(k % w), J = static_cast<int>(k / w);
      if (inside(I - 1, J - 1))
        (*dist)[k] = -(std::sqrt(to_out[k]) - 0.5) * h_;
      else
        (*dist)[k] = to_in[k] == kInf ? 2.0 * (nx_ + ny_) * h_ : (std::sqrt(to_in[k]) - 0.5) * h_;
    }
    dist_ = std::move(dist);
  }

  int nx_ = 0, ny_ = 0;
  double h_ = 0.0, x0_ = 0.0, y0_ = 0.0;
  std::vector<std::uint8_t> mask_;
  std::shared_ptr<const std::vector<double>> dist_;
};

using DomainDescriptor =
    std::variant<BallDomain, AnnulusDomain, CapDomain, FullBallDomain, GridRegion>;

inline DomainDescriptor make_ball(const Point& center, double radius) {
  require(radius > 0.0, ErrorKind::Input, "Ball: radius must be positive");
  require(center.norm() + radius <= 1.0 + 1e-12, ErrorKind::Input,
          "Ball: must lie in the closed unit ball");
  return BallDomain{center, radius};
}

inline DomainDescriptor make_annulus(const Point& center, double inner, double outer) {
  require(inner > 0.0 && inner < outer, ErrorKind::Input,
          "Annulus: need 0 < inner < outer");
  require(center.norm() + outer <= 1.0 + 1e-12, ErrorKind::Input,
          "Annulus: must lie in the closed unit ball");
  return AnnulusDomain{center, inner, outer};
}

inline DomainDescriptor make_cap(const Point& direction, double threshold) {
  require(std::abs(direction.norm() - 1.0) <= 1e-12, ErrorKind::Input,
          "Cap: direction must be a unit vector");
  require(threshold > -1.0 && threshold < 1.0, ErrorKind::Input,
          "Cap: threshold must lie in (-1, 1)");
  return CapDomain{direction, threshold};
}

inline int dimension(const DomainDescriptor& dom) {
  return std::visit(
      [](const auto& d) -> int {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BallDomain> || std::is_same_v<T, AnnulusDomain>)
          return d.center.dim;
        else if constexpr (std::is_same_v<T, CapDomain>)
          return d.direction.dim;
        else if constexpr (std::is_same_v<T, FullBallDomain>)
          return d.dim;
        else
          return 2;
      },
      dom);
}

namespace detail {

// Orthonormal vectors completing `v` to a basis.
inline std::vector<Point> complement_basis(const Point& v) {
  if (v.dim == 2) return {Point(-v[1], v[0])};
  Point a = std::abs(v[0]) < 0.9 ? Point(1, 0, 0) : Point(0, 1, 0);
  Point e1 = a - v * a.dot(v);
  e1 = e1 * (1.0 / e1.norm());
  Point e2(v[1] * e1[2] - v[2] * e1[1], v[2] * e1[0] - v[0] * e1[2], v[0] * e1[1] - v[1] * e1[0]);
  return {e1, e2};
}

struct CapQuery {
  double signed_distance;
  Point nearest;
};

// The cap is rotationally symmetric about its direction, so the query
// reduces to the half-plane (p, q) = (u . v, |u - (u . v) v|).
inline CapQuery cap_query(const CapDomain& cap, const Point& u) {
  const Point& v = cap.direction;
  const double t = cap.threshold;
  const double p = u.dot(v);
  Point w = u - v * p;
  double q = w.norm();
  Point what = q > 1e-300 ? w * (1.0 / q) : complement_basis(v)[0];
  const double rim_q = std::sqrt(std::max(0.0, 1.0 - t * t));

  // flat disc {p = t, q <= rim_q}
  const double qs = std::min(q, rim_q);
  const double d_flat = std::hypot(p - t, q - qs);
  // spherical part {p^2 + q^2 = 1, p >= t}
  const double rho = std::hypot(p, q);
  double d_arc, ap, aq;
  if (rho > 1e-300 && p / rho >= t) {
    d_arc = std::abs(rho - 1.0);
    ap = p / rho;
    aq = q / rho;
  } else {
    ap = t;
    aq = rim_q;
    d_arc = std::hypot(p - t, q - rim_q);
  }
  const bool in = p > t && rho < 1.0;
  CapQuery out;
  if (d_flat <= d_arc) {
    out.signed_distance = in ? -d_flat : d_flat;
    out.nearest = v * t + what * qs;
  } else {
    out.signed_distance = in ? -d_arc : d_arc;
    out.nearest = v * ap + what * aq;
  }
  return out;
}

}  // namespace detail

/// Signed distance to the boundary: negative inside, positive outside.
inline double signed_distance(const DomainDescriptor& dom, const Point& x) {
  require_same_dim(x, dimension(dom), "signed_distance");
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BallDomain>) {
          return distance(x, d.center) - d.radius;
        } else if constexpr (std::is_same_v<T, AnnulusDomain>) {
          const double r = distance(x, d.center);
          if (r < d.inner) return d.inner - r;
          if (r > d.outer) return r - d.outer;
          return -std::min(r - d.inner, d.outer - r);
        } else if constexpr (std::is_same_v<T, CapDomain>) {
          return detail::cap_query(d, x).signed_distance;
        } else if constexpr (std::is_same_v<T, FullBallDomain>) {
          return x.norm() - 1.0;
        } else {
          return d.signed_distance(x);
        }
      },
      dom);
}

/// Nearest boundary point (up to grid resolution for GridRegion).
inline Point project_to_boundary(const DomainDescriptor& dom, const Point& x) {
  return std::visit(
      [&](const auto& d) -> Point {
        using T = std::decay_t<decltype(d)>;
        auto radial = [&](const Point& c, double radius) {
          Point off = x - c;
          const double n = off.norm();
          if (n < 1e-300) return c + Point::on_axis(x.dim, radius);
          return c + off * (radius / n);
        };
        if constexpr (std::is_same_v<T, BallDomain>) {
          return radial(d.center, d.radius);
        } else if constexpr (std::is_same_v<T, AnnulusDomain>) {
          const double r = distance(x, d.center);
          return radial(d.center, std::abs(r - d.inner) <= std::abs(r - d.outer) ? d.inner : d.outer);
        } else if constexpr (std::is_same_v<T, CapDomain>) {
          return detail::cap_query(d, x).nearest;
        } else if constexpr (std::is_same_v<T, FullBallDomain>) {
          return radial(Point::zero(d.dim), 1.0);
        } else {
          Point y = x;
          const double e = 0.25 * d.spacing();
          for (int it = 0; it < 4; ++it) {
            const double phi = d.signed_distance(y);
            Point grad((d.signed_distance(Point(y[0] + e, y[1])) -
                        d.signed_distance(Point(y[0] - e, y[1]))) / (2 * e),
                       (d.signed_distance(Point(y[0], y[1] + e)) -
                        d.signed_distance(Point(y[0], y[1] - e))) / (2 * e));
            const double gn = grad.norm();
            if (gn < 1e-12) break;
            y = y - grad * (phi / (gn * gn));
          }
          return y;
        }
      },
      dom);
}

/// Directed-both-ways Hausdorff distance between two finite samplings.
inline double hausdorff_distance(const std::vector<Point>& a, const std::vector<Point>& b) {
  require(!a.empty() && !b.empty(), ErrorKind::Input, "hausdorff_distance: empty point set");
  auto directed = [](const std::vector<Point>& from, const std::vector<Point>& to) {
    double worst = 0.0;
    for (const Point& p : from) {
      double best = kInf;
      for (const Point& q : to) {
        best = std::min(best, distance(p, q));
        if (best <= worst) break;
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace detail {

inline std::vector<Point> circle_points(const Point& c, double r, int n, double phase = 0.0) {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * (k + phase) / n;
    out.push_back(c + Point(r * std::cos(a), r * std::sin(a)));
  }
  return out;
}

// Fibonacci lattice on a sphere.
inline std::vector<Point> sphere_points(const Point& c, double r, int n) {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / n;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden * k;
    out.push_back(c + Point(r * rad * std::cos(a), r * rad * std::sin(a), r * z));
  }
  return out;
}

inline std::vector<Point> shell_points(const Point& c, double r, int n) {
  return c.dim == 2 ? circle_points(c, r, n, 0.5) : sphere_points(c, r, n);
}

}  // namespace detail

/// Deterministic, approximately uniform samples of the domain boundary.
/// GridRegion boundaries are the cell-edge midpoints (strided down to
/// `count` when there are more).
inline std::vector<Point> boundary_samples(const DomainDescriptor& dom, int count) {
  require(count >= 1, ErrorKind::Input, "boundary_samples: count must be positive");
  return std::visit(
      [&](const auto& d) -> std::vector<Point> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, BallDomain>) {
          return detail::shell_points(d.center, d.radius, count);
        } else if constexpr (std::is_same_v<T, AnnulusDomain>) {
          const double wi = d.center.dim == 2 ? d.inner : d.inner * d.inner;
          const double wo = d.center.dim == 2 ? d.outer : d.outer * d.outer;
          int ni = std::max(1, static_cast<int>(std::lround(count * wi / (wi + wo))));
          int no = std::max(1, count - ni);
          auto out = detail::shell_points(d.center, d.inner, ni);
          auto outer = detail::shell_points(d.center, d.outer, no);
          out.insert(out.end(), outer.begin(), outer.end());
          return out;
        } else if constexpr (std::is_same_v<T, CapDomain>) {
          const Point& v = d.direction;
          const double t = d.threshold;
          const double rim = std::sqrt(1.0 - t * t);
          const auto basis = detail::complement_basis(v);
          std::vector<Point> out;
          if (v.dim == 2) {
            const double flat_len = 2.0 * rim, arc_len = 2.0 * std::acos(t);
            int nf = std::max(1, static_cast<int>(std::lround(count * flat_len / (flat_len + arc_len))));
            int na = std::max(1, count - nf);
            for (int k = 0; k < nf; ++k) {
              const double q = -rim + flat_len * (k + 0.5) / nf;
              out.push_back(v * t + basis[0] * q);
            }
            const double amax = std::acos(t);
            for (int k = 0; k < na; ++k) {
              const double a = -amax + 2.0 * amax * (k + 0.5) / na;
              out.push_back(v * std::cos(a) + basis[0] * std::sin(a));
            }
          } else {
            const double flat_area = std::numbers::pi * rim * rim;
            const double cap_area = 2.0 * std::numbers::pi * (1.0 - t);
            int nf = std::max(1, static_cast<int>(std::lround(count * flat_area / (flat_area + cap_area))));
            int na = std::max(1, count - nf);
            const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
            for (int k = 0; k < nf; ++k) {
              const double rr = rim * std::sqrt((k + 0.5) / nf);
              const double a = golden * k;
              out.push_back(v * t + basis[0] * (rr * std::cos(a)) + basis[1] * (rr * std::sin(a)));
            }
            for (int k = 0; k < na; ++k) {
              const double z = 1.0 - (1.0 - t) * (k + 0.5) / na;
              const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
              const double a = golden * k;
              out.push_back(v * z + basis[0] * (rr * std::cos(a)) + basis[1] * (rr * std::sin(a)));
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, FullBallDomain>) {
          return detail::shell_points(Point::zero(d.dim), 1.0, count);
        } else {
          auto all = d.boundary_midpoints();
          if (static_cast<int>(all.size()) <= count) return all;
          std::vector<Point> out;
          out.reserve(static_cast<std::size_t>(count));
          for (int k = 0; k < count; ++k)
            out.push_back(all[static_cast<std::size_t>(k) * all.size() / count]);
          return out;
        }
      },
      dom);
}

/// Deterministic pseudo-random points in the open domain.
inline std::vector<Point> interior_samples(const DomainDescriptor& dom, int count,
                                           std::uint64_t seed = 0) {
  require(count >= 0, ErrorKind::Input, "interior_samples: count must be nonnegative");
  const int d = dimension(dom);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  Rng rng(seed, 0x5a4d);
  auto in_ball = [&](const Point& c, double r, double r0) {
    // radius law r^(d-1) on [r0, r]
    const double u = rng.uniform();
    const double rad = std::pow(std::pow(r0, d) + u * (std::pow(r, d) - std::pow(r0, d)), 1.0 / d);
    return c + rng.unit_vector(d) * rad;
  };
  long attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    require(++attempts < 1000L * (count + 10), ErrorKind::Degenerate,
            "interior_samples: domain too thin to sample");
    Point p;
    if (const auto* b = std::get_if<BallDomain>(&dom))
      p = in_ball(b->center, b->radius, 0.0);
    else if (const auto* a = std::get_if<AnnulusDomain>(&dom))
      p = in_ball(a->center, a->outer, a->inner);
    else if (const auto* g = std::get_if<GridRegion>(&dom)) {
      const auto& m = g->mask();
      const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(m.size()));
      if (k >= m.size() || !m[k]) continue;
      const int i = static_cast<int>(k % g->nx()), j = static_cast<int>(k / g->nx());
      p = g->center(i, j) + Point((rng.uniform() - 0.5) * g->spacing(), (rng.uniform() - 0.5) * g->spacing());
    } else {
      p = in_ball(Point::zero(d), 1.0, 0.0);
    }
    if (signed_distance(dom, p) < 0.0) out.push_back(p);
  }
  return out;
}

/// Cells of an n x n grid on [-1, 1]^2 whose closure lies in the domain
/// (and strictly inside the unit ball).
inline GridRegion rasterize(const DomainDescriptor& dom, int n) {
  require(dimension(dom) == 2, ErrorKind::Input, "rasterize: only d = 2 is supported");
  const double h = 2.0 / n;
  const double half_diag = h * std::numbers::sqrt2 / 2.0;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * n, 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Point c(-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h);
      if (c.norm() + half_diag < 1.0 && signed_distance(dom, c) < 0.0)
        mask[static_cast<std::size_t>(j) * n + i] = 1;
    }
  return GridRegion::centered(n, std::move(mask));
}

/// Number of 4-connected components of cells with inside == `value`; the
/// band of cells outside the grid counts as outside.
inline int count_components(const GridRegion& g, bool value) {
  const int w = g.nx() + 2, hgt = g.ny() + 2;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * hgt, 0);
  auto cell = [&](int I, int J) { return g.inside(I - 1, J - 1) == value; };
  int comps = 0;
  std::vector<std::pair<int, int>> stack;
  for (int J = 0; J < hgt; ++J)
    for (int I = 0; I < w; ++I) {
      if (!cell(I, J) || seen[static_cast<std::size_t>(J) * w + I]) continue;
      ++comps;
      stack.assign(1, {I, J});
      seen[static_cast<std::size_t>(J) * w + I] = 1;
      while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        const int nb[4][2] = {{a + 1, b}, {a - 1, b}, {a, b + 1}, {a, b - 1}};
        for (auto& q : nb) {
          if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= hgt) continue;
          auto& s = seen[static_cast<std::size_t>(q[1]) * w + q[0]];
          if (s || !cell(q[0], q[1])) continue;
          s = 1;
          stack.push_back({q[0], q[1]});
        }
      }
    }
  return comps;
}

/// Inner approximation of A: the sublevel set {phi_smooth < -delta/2} of the
/// Gaussian-mollified (sigma = delta/4) distance transform of A.
/// Requires 0 < delta < inradius(A)/2.
inline GridRegion smooth_inner_approximation(const GridRegion& a, double delta) {
  require(delta > 0.0, ErrorKind::Degenerate, "smooth_inner_approximation: delta must be positive");
  const double delta0 = 0.5 * a.inradius();
  require(delta < delta0, ErrorKind::Degenerate,
          "smooth_inner_approximation: delta must be below half the inradius (" +
              std::to_string(delta0) + ")");
  const int nx = a.nx(), ny = a.ny();
  const double h = a.spacing();
  const double sigma = delta / 4.0;
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma / h)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double ksum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double x = k * h / sigma;
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * x * x);
    ksum += kernel[static_cast<std::size_t>(k + radius)];
  }
  for (double& k : kernel) k /= ksum;

  auto phi = [&](int i, int j) {
    i = std::clamp(i, -1, nx);
    j = std::clamp(j, -1, ny);
    return a.cell_distance(i, j);
  };
  std::vector<double> tmp(static_cast<std::size_t>(nx) * (ny + 2 * radius));
  // horizontal pass over rows j in [-radius, ny + radius)
  for (int j = -radius; j < ny + radius; ++j)
    for (int i = 0; i < nx; ++i) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += kernel[static_cast<std::size_t>(k + radius)] * phi(i + k, j);
      tmp[static_cast<std::size_t>(j + radius) * nx + i] = s;
    }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * ny, 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k)
        s += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(j + k + radius) * nx + i];
      if (s < -0.5 * delta && a.inside(i, j)) mask[static_cast<std::size_t>(j) * nx + i] = 1;
    }
  GridRegion out(nx, ny, h, a.x0(), a.y0(), std::move(mask));
  require(out.cell_count() > 0, ErrorKind::Degenerate, "smooth_inner_approximation: empty result");
  return out;
}

// ---------------------------------------------------------------------------
// Mask files: a comment line, a header line "2,nx,ny,spacing", then ny rows
// of nx comma-separated 0/1 values (row j = 0 first). The grid is centred on
// the origin.

inline void write_mask_csv(const GridRegion& g, std::ostream& os) {
  os << "# grid region mask: 1 = inside; spacing in unit-ball lengths, grid centred at origin\n";
  os << "2," << g.nx() << ',' << g.ny() << ',';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", g.spacing());
  os << buf << '\n';
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) os << (i ? "," : "") << (g.inside(i, j) ? 1 : 0);
    os << '\n';
  }
}

inline GridRegion read_mask_csv(std::istream& is) {
  std::string line;
  auto next = [&]() -> bool {
    while (std::getline(is, line))
      if (!line.empty() && line[0] != '#') return true;
    return false;
  };
  require(next(), ErrorKind::Input, "mask csv: missing header");
  if (line[0] == 'd') require(next(), ErrorKind::Input, "mask csv: missing header values");
  int d = 0, nx = 0, ny = 0;
  double h = 0.0;
  char c1, c2, c3;
  std::istringstream hs(line);
  require(static_cast<bool>(hs >> d >> c1 >> nx >> c2 >> ny >> c3 >> h) && d == 2,
          ErrorKind::Input, "mask csv: header must be 2,nx,ny,spacing");
  std::vector<std::uint8_t> mask;
  mask.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    require(next(), ErrorKind::Input, "mask csv: too few rows");
    std::istringstream rs(line);
    std::string cell;
    int count = 0;
    while (std::getline(rs, cell, ',')) {
      require(cell == "0" || cell == "1", ErrorKind::Input, "mask csv: cells must be 0 or 1");
      mask.push_back(cell == "1" ? 1 : 0);
      ++count;
    }
    require(count == nx, ErrorKind::Input, "mask csv: row has wrong length");
  }
  return GridRegion(nx, ny, h, -0.5 * nx * h, -0.5 * ny * h, std::move(mask));
}

}  // namespace bhm
