#pragma once

// Cartesian node grids on [-1, 1]^2 restricted to the open unit disc, with
// a Shortley-Weller 5-point Laplacian (Dirichlet 0 on the circle) and
// red-black (projected) SOR sweeps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bhm/core.hpp"

namespace bhm {

struct DiscStencil {
  int n = 0;      // nodes per side
  double h = 0;   // node spacing 2 / (n - 1)
  std::vector<std::uint8_t> active;           // |x| < 1
  std::vector<std::array<int, 4>> neighbour;  // -1: boundary (value 0)
  std::vector<std::array<double, 4>> weight;  // -Lap u = diag u - sum weight * u_nb
  std::vector<double> diag;

  Point node(std::size_t k) const {
    const int i = static_cast<int>(k % n), j = static_cast<int>(k / n);
    return Point(-1.0 + i * h, -1.0 + j * h);
  }
  std::size_t size() const { return active.size(); }

  double apply(const std::vector<double>& u, std::size_t k) const {
    double s = diag[k] * u[k];
    for (int q = 0; q < 4; ++q)
      if (neighbour[k][q] >= 0) s -= weight[k][q] * u[static_cast<std::size_t>(neighbour[k][q])];
    return s;
  }
  /// Gauss-Seidel target value at node k.
  double gs_value(const std::vector<double>& u, std::size_t k) const {
    double s = 0.0;
    for (int q = 0; q < 4; ++q)
      if (neighbour[k][q] >= 0) s += weight[k][q] * u[static_cast<std::size_t>(neighbour[k][q])];
    return s / diag[k];
  }
};

inline DiscStencil make_disc_stencil(int n) {
  require(n >= 5 && n % 2 == 1, ErrorKind::Input, "Cartesian grid: n must be odd and >= 5");
  DiscStencil st;
  st.n = n;
  st.h = 2.0 / (n - 1);
  const std::size_t N = static_cast<std::size_t>(n) * n;
  st.active.assign(N, 0);
  st.neighbour.assign(N, {-1, -1, -1, -1});
  st.weight.assign(N, {0, 0, 0, 0});
  st.diag.assign(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) st.active[k] = st.node(k).norm() < 1.0 - 1e-12;
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (std::size_t k = 0; k < N; ++k) {
    if (!st.active[k]) continue;
    const int i = static_cast<int>(k % n), j = static_cast<int>(k / n);
    const Point x = st.node(k);
    double arm[4];
    for (int q = 0; q < 4; ++q) {
      const int ii = i + di[q], jj = j + dj[q];
      const std::size_t kk = static_cast<std::size_t>(jj) * n + ii;
      if (st.active[kk]) {
        st.neighbour[k][q] = static_cast<int>(kk);
        arm[q] = st.h;
      } else {
        // distance along the axis to the unit circle
        const double xe = di[q] * x[0] + dj[q] * x[1];
        const double t = -xe + std::sqrt(xe * xe + 1.0 - x.dot(x));
        arm[q] = std::clamp(t, 1e-6 * st.h, st.h);
      }
    }
    for (int axis = 0; axis < 2; ++axis) {
      const double hp = arm[2 * axis], hm = arm[2 * axis + 1];
      st.weight[k][2 * axis] = 2.0 / (hp * (hp + hm));
      st.weight[k][2 * axis + 1] = 2.0 / (hm * (hp + hm));
      st.diag[k] += 2.0 / (hp * hm);
    }
  }
  return st;
}

struct SorResult {
  long sweeps = 0;
  double last_change = 0.0;
  bool converged = false;
};

/// Red-black SOR on nodes with free[k] != 0; other nodes keep their values.
/// With an obstacle, each update is projected onto u >= obstacle.
inline SorResult sor_solve(const DiscStencil& st, std::vector<double>& u,
                           const std::vector<std::uint8_t>& free, const std::vector<double>* obstacle,
                           double omega, double tol, long max_sweeps) {
  require(omega > 0.0 && omega < 2.0, ErrorKind::Input, "SOR: omega must lie in (0, 2)");
  SorResult res;
  const int n = st.n;
  std::vector<double> row_change(static_cast<std::size_t>(n));
  for (res.sweeps = 0; res.sweeps < max_sweeps;) {
    double change = 0.0;
    for (int colour = 0; colour < 2; ++colour) {
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        double local = colour == 0 ? 0.0 : row_change[j];
        for (int i = static_cast<int>((j + colour) % 2); i < n; i += 2) {
          const std::size_t k = j * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
          if (!free[k]) continue;
          double v = u[k] + omega * (st.gs_value(u, k) - u[k]);
          if (obstacle) v = std::max(v, (*obstacle)[k]);
          local = std::max(local, std::abs(v - u[k]));
          u[k] = v;
        }
        row_change[j] = local;
      });
    }
    for (double c : row_change) change = std::max(change, c);
    ++res.sweeps;
    res.last_change = change;
    if (change < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace bhm
