#pragma once

// Unbranched envelope over a parametric patch dictionary, contact sets,
// balayage, the decreasing sequence of envelopes and branched witnesses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "bhm/core.hpp"
#include "bhm/gain.hpp"
#include "bhm/laplace.hpp"
#include "bhm/majorant.hpp"

namespace bhm {

enum class GridKind { Radial, Cartesian };

/// Scalar field on a radial grid r_0 < ... < r_{K-1} = 1 or on the nodes of
/// an n x n Cartesian grid over [-1, 1]^2 (inactive nodes |x| >= 1 hold 0).
struct GridField {
  GridKind kind = GridKind::Radial;
  int dim = 2;
  std::vector<double> radii;
  std::shared_ptr<const DiscStencil> stencil;
  std::vector<double> values;
  std::string tag;

  std::size_t size() const { return values.size(); }
  bool active(std::size_t k) const {
    return kind == GridKind::Radial || stencil->active[k] != 0;
  }
  Point node(std::size_t k) const {
    return kind == GridKind::Radial ? Point::on_axis(dim, radii[k]) : stencil->node(k);
  }
  double radius(std::size_t k) const { return kind == GridKind::Radial ? radii[k] : node(k).norm(); }
  double spacing() const {
    if (kind == GridKind::Cartesian) return stencil->h;
    double h = 0.0;
    for (std::size_t k = 0; k + 1 < radii.size(); ++k) h = std::max(h, radii[k + 1] - radii[k]);
    return h;
  }
};

/// K log-uniform radii from r_min to 1 (uniform in ln r).
inline GridField radial_grid(int K, double r_min, int dim) {
  require(K >= 3, ErrorKind::Input, "radial grid: need at least 3 nodes");
  require(r_min > 0.0 && r_min < 1.0, ErrorKind::Input, "radial grid: r_min must lie in (0, 1)");
  require(dim >= 2, ErrorKind::Input, "radial grid: dimension must be >= 2");
  GridField f;
  f.kind = GridKind::Radial;
  f.dim = dim;
  f.radii.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) f.radii[k] = std::exp(std::log(r_min) * (K - 1 - k) / (K - 1));
  f.radii.back() = 1.0;
  f.values.assign(static_cast<std::size_t>(K), 0.0);
  return f;
}

inline GridField cartesian_grid(int n) {
  GridField f;
  f.kind = GridKind::Cartesian;
  f.dim = 2;
  f.stencil = std::make_shared<const DiscStencil>(make_disc_stencil(n));
  f.values.assign(f.stencil->size(), 0.0);
  return f;
}

inline std::vector<double> gain_on_grid(const GainField& g, const GridField& f) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t k = 0; k < f.size(); ++k)
    if (f.active(k)) out[k] = g(f.node(k));
  return out;
}

struct ContactSet {
  std::vector<std::uint8_t> contact;  // 1 = contact (w - g <= tol) or inactive node
  std::vector<int> label;             // component index of non-contact nodes, -1 otherwise
  int components = 0;

  std::size_t noncontact_count() const {
    return static_cast<std::size_t>(std::count(contact.begin(), contact.end(), std::uint8_t{0}));
  }
};

/// Non-contact where w - g > tol; components are runs of consecutive radii
/// or 4-connected node sets.
inline ContactSet contact_set(const GridField& w, const std::vector<double>& g, double tol) {
  require(g.size() == w.size(), ErrorKind::Input, "contact_set: gain and field sizes differ");
  ContactSet c;
  const std::size_t N = w.size();
  c.contact.assign(N, 1);
  c.label.assign(N, -1);
  for (std::size_t k = 0; k < N; ++k)
    if (w.active(k) && w.values[k] - g[k] > tol) c.contact[k] = 0;
  if (w.kind == GridKind::Radial) {
    for (std::size_t k = 0; k < N; ++k) {
      if (c.contact[k]) continue;
      if (k == 0 || c.contact[k - 1]) ++c.components;
      c.label[k] = c.components - 1;
    }
    return c;
  }
  const int n = w.stencil->n;
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < N; ++k) {
    if (c.contact[k] || c.label[k] >= 0) continue;
    const int id = c.components++;
    c.label[k] = id;
    stack.assign(1, k);
    while (!stack.empty()) {
      const std::size_t q = stack.back();
      stack.pop_back();
      const int i = static_cast<int>(q % n), j = static_cast<int>(q / n);
      const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
      for (auto& p : nb) {
        if (p[0] < 0 || p[1] < 0 || p[0] >= n || p[1] >= n) continue;
        const std::size_t r = static_cast<std::size_t>(p[1]) * n + p[0];
        if (c.contact[r] || c.label[r] >= 0) continue;
        c.label[r] = id;
        stack.push_back(r);
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Unbranched envelope

/// Dictionary member achieving the envelope at a point.
struct DictionaryChoice {
  enum Kind { Constant, Cap, Annulus } kind = Constant;
  double value = 0.0;
  double c = 0.0;  // cap offset
  double k = 0.0;  // cap slope 1/z
  double a = 0.0;  // annulus inner radius
  Point direction;  // cap direction
};

struct DictionaryOptions {
  std::vector<double> cap_offsets;  // empty: 1, 1.05, ..., 3
  int annulus_candidates = 2048;    // log-uniform inner radii
  int directions = 64;              // cap directions for non-radial gains
};

/// Patch dictionary: constants, caps (c - u.v)/z and, for radial gains,
/// annuli {a < |u| < 1} with data g* inside and 0 outside. Only patches that
/// majorise g and are M-Lipschitz are kept.
class Dictionary {
 public:
  Dictionary(const GainField& g, DictionaryOptions opt = {}) : dim_(g.dim) {
    require(std::isfinite(g.gstar), ErrorKind::Input, "dictionary: gain has no g* (use with_gstar)");
    gbar_ = g.max_gain;
    gstar_ = g.gstar;
    M_ = lipschitz_bound(g);
    radial_ = g.radial;
    if (opt.cap_offsets.empty())
      for (int j = 0; j <= 40; ++j) opt.cap_offsets.push_back(1.0 + 0.05 * j);
    if (radial_) build_radial(g, opt);
    else build_general(g, opt);
  }

  double gstar() const { return gstar_; }
  double M() const { return M_; }
  int dim() const { return dim_; }
  double annulus_inner() const { return a_best_; }

  DictionaryChoice best(const Point& x) const {
    DictionaryChoice best;
    best.kind = DictionaryChoice::Constant;
    best.value = gbar_;
    const double r = x.norm();
    if (radial_) {
      const Point v = r > 0.0 ? x * (1.0 / r) : Point::on_axis(dim_, 1.0);
      for (std::size_t j = 0; j < caps_c_.size(); ++j) {
        const double val = std::min(gstar_, (caps_c_[j] - r) * caps_k_[j]);
        if (val < best.value) best = {DictionaryChoice::Cap, val, caps_c_[j], caps_k_[j], 0.0, v};
      }
      if (a_best_ <= r) {
        const double val = radial_annulus_harmonic(a_best_, 1.0, gstar_, 0.0, std::min(r, 1.0), dim_);
        if (val < best.value) best = {DictionaryChoice::Annulus, val, 0.0, 0.0, a_best_, Point()};
      }
    } else {
      for (const auto& cap : general_caps_) {
        const double val = std::min(gstar_, (cap.c - x.dot(cap.v)) * cap.k);
        if (val < best.value) best = {DictionaryChoice::Cap, val, cap.c, cap.k, 0.0, cap.v};
      }
    }
    return best;
  }

  HarmonicPatch patch(const DictionaryChoice& ch) const {
    switch (ch.kind) {
      case DictionaryChoice::Cap: return cap_patch(ch.direction, 1.0 / ch.k, ch.c, gstar_);
      case DictionaryChoice::Annulus: return annulus_to_boundary_patch(ch.a, gstar_, dim_);
      default: return constant_patch(dim_, gbar_, gstar_);
    }
  }

 private:
  struct GeneralCap {
    Point v;
    double c, k;
  };

  void build_radial(const GainField& g, const DictionaryOptions& opt) {
    // G(t) = max of g over radii in [t, 1)
    const int N = 8192;
    std::vector<double> gmax(static_cast<std::size_t>(N) + 1);
    for (int m = N; m >= 0; --m) {
      const double v = g.at_radius(static_cast<double>(m) / N);
      gmax[m] = m == N ? v : std::max(v, gmax[m + 1]);
    }
    for (double c : opt.cap_offsets) {
      double k = 0.0;
      for (int m = 0; m < N; ++m) {
        // conservative: the max over [m/N, 1) bounds G on [m/N, (m+1)/N)
        const double t = static_cast<double>(m + 1) / N;
        k = std::max(k, gmax[m] / (c - std::min(t, 1.0 - 1e-15)));
      }
      if (k > 0.0 && k <= M_ * (1.0 + 1e-12)) {
        caps_c_.push_back(c);
        caps_k_.push_back(k);
      }
    }
    // annulus inner radius: smallest log-grid a with h_a >= g on [a, 1) and Lip(h_a) <= M
    const int K = opt.annulus_candidates;
    std::vector<double> as(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) as[k] = std::exp(std::log(1e-4) * (K - 1 - k) / K);
    auto feasible = [&](double a) {
      const double sa = scale_coordinate(a, dim_), s1 = scale_coordinate(1.0, dim_);
      for (int m = static_cast<int>(std::floor(a * N)); m < N; ++m) {
        const double rho = std::max(a, static_cast<double>(m) / N);
        const double hi = std::min(1.0, static_cast<double>(m + 1) / N);
        // h_a is decreasing in r: its minimum on the cell is at the right end
        const double h = gstar_ * (scale_coordinate(hi, dim_) - s1) / (sa - s1);
        if (h < std::max(g.at_radius(rho), g.at_radius(hi))) return false;
      }
      return true;
    };
    int lo = 0, hi = K;  // first feasible index (feasibility is monotone in a)
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (feasible(as[mid])) hi = mid;
      else lo = mid + 1;
    }
    a_best_ = kInf;
    for (int k = lo; k < K; ++k) {
      const double a = as[k];
      const double ds = dim_ == 2 ? 1.0 / a : (dim_ - 2.0) * std::pow(a, 1.0 - dim_);
      const double lip = gstar_ * ds / std::abs(scale_coordinate(a, dim_) - scale_coordinate(1.0, dim_));
      if (lip <= M_) {
        a_best_ = a;
        break;
      }
    }
  }

  void build_general(const GainField& g, const DictionaryOptions& opt) {
    require(dim_ == 2, ErrorKind::Input, "dictionary: non-radial gains are supported for d = 2 only");
    // gain samples on a fine grid covering its support
    std::vector<std::pair<Point, double>> samples;
    const int n = 256;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Point x(-1.0 + (i + 0.5) * 2.0 / n, -1.0 + (j + 0.5) * 2.0 / n);
        if (x.norm() >= 1.0) continue;
        const double v = g(x);
        if (v > 0.0) samples.push_back({x, v});
      }
    // cell-size slack keeps the sampled cap feasibility conservative
    const double slack = std::isfinite(g.lipschitz) ? g.lipschitz * 2.0 / n : 0.0;
    for (int q = 0; q < opt.directions; ++q) {
      const double ang = 2.0 * std::numbers::pi * q / opt.directions;
      const Point v(std::cos(ang), std::sin(ang));
      for (double c : opt.cap_offsets) {
        double k = 0.0;
        for (const auto& [x, val] : samples)
          k = std::max(k, (val + slack) / std::max(1e-12, c - x.dot(v) - 2.0 / n));
        if (k > 0.0 && k <= M_) general_caps_.push_back({v, c, k});
      }
    }
  }

  int dim_ = 2;
  bool radial_ = true;
  double gbar_ = 0.0, gstar_ = 0.0, M_ = 0.0;
  std::vector<double> caps_c_, caps_k_;
  double a_best_ = kInf;
  std::vector<GeneralCap> general_caps_;
};

/// w1 = pointwise minimum over the feasible dictionary, on the nodes of `grid`.
inline GridField unbranched_envelope(const Dictionary& dict, const GridField& grid) {
  GridField w = grid;
  w.tag = "w1";
  for (std::size_t k = 0; k < w.size(); ++k)
    w.values[k] = w.active(k) ? dict.best(w.node(k)).value : 0.0;
  return w;
}

inline GridField unbranched_envelope(const GainField& g, const GridField& grid,
                                     DictionaryOptions opt = {}) {
  return unbranched_envelope(Dictionary(g, std::move(opt)), grid);
}

// ---------------------------------------------------------------------------
// Balayage and the envelope sequence

struct EnvelopeConfig {
  int max_iter = 100;
  double tol = 1e-10;          // stop when sup |u_{n+1} - u_n| < tol
  double contact_tol = 1e-9;   // non-contact iff u - g > contact_tol
  double omega = 1.7;          // Cartesian relaxation factor
  double solver_tol = 1e-10;   // Cartesian sweep change tolerance
  long max_sweeps = 400000;
};

namespace detail {

inline double max_gain_near_origin(const GainField& g, double r0, int dim) {
  double m = 0.0;
  for (int k = 0; k <= 256; ++k) m = std::max(m, g(Point::on_axis(dim, r0 * k / 256.0)));
  return m;
}

}  // namespace detail

/// Harmonic replacement of w on each non-contact component with data w on
/// the component boundary (0 on the unit sphere), clipped above by w.
inline GridField balayage_step(const GridField& w, const ContactSet& c, const EnvelopeConfig& cfg = {}) {
  GridField out = w;
  out.tag = "balayage";
  const std::size_t N = w.size();
  if (w.kind == GridKind::Radial) {
    std::vector<double> s(N);
    for (std::size_t k = 0; k < N; ++k) s[k] = scale_coordinate(w.radii[k], w.dim);
    std::size_t k = 0;
    while (k < N) {
      if (c.contact[k]) {
        ++k;
        continue;
      }
      const std::size_t lo = k;
      while (k < N && !c.contact[k]) ++k;
      const std::size_t hi = k - 1;  // component [lo, hi]; hi + 1 is contact (r = 1 always is)
      const std::size_t B = std::min(hi + 1, N - 1);
      for (std::size_t i = lo; i <= hi; ++i) {
        double v;
        if (lo == 0) {
          v = w.values[B];  // ball around the (polar) origin: constant data
        } else {
          const std::size_t A = lo - 1;
          v = w.values[A] + (w.values[B] - w.values[A]) * (s[i] - s[A]) / (s[B] - s[A]);
        }
        out.values[i] = std::min(w.values[i], v);
      }
    }
    return out;
  }
  std::vector<std::uint8_t> free(N);
  for (std::size_t k = 0; k < N; ++k) free[k] = !c.contact[k];
  std::vector<double> u = w.values;
  const auto res = sor_solve(*w.stencil, u, free, nullptr, cfg.omega, cfg.solver_tol, cfg.max_sweeps);
  require(res.converged, ErrorKind::NonConvergence,
          "balayage_step: Laplace relaxation stopped at sweep limit, last change " +
              std::to_string(res.last_change));
  for (std::size_t k = 0; k < N; ++k) out.values[k] = std::min(w.values[k], u[k]);
  return out;
}

/// How a radial node value was lowered at a level: a harmonic on the annulus
/// (r_a, r_b) with data u_{n-1}, or a constant on the ball of radius r_b
/// (a = -1). b = -1: unchanged.
/// Harmonic interpolant used at a node: affine in s between nodes a and b
/// with end values va >= u(a) and vb >= u(b), or a constant vb on the centred
/// ball of radius r_b when a < 0.
struct RadialMove {
  int a = -1;
  int b = -1;
  double va = 0.0;
  double vb = 0.0;
};

struct EnvelopeLevel {
  GridField field;
  ContactSet contact;
  std::vector<RadialMove> moves;  // radial only; empty at level 1
  double sup_change = 0.0;        // sup |u_n - u_{n-1}|
};

struct EnvelopeSequence {
  std::vector<EnvelopeLevel> levels;  // levels[0] = w1
  std::vector<double> gain;           // g on the grid
  bool converged = false;
  std::shared_ptr<const Dictionary> dictionary;
  double gmax_inner = 0.0;  // max of g on [0, r_0] (radial)
  EnvelopeConfig config;
};

namespace detail {

// One relaxation level on a radial grid: each non-contact node is lowered to
// the smallest admissible harmonic (affine in s) interpolant of u between
// two nodes in the closure of its component, or to the value of an
// admissible constant on a centred ball. Admissible: >= g at the nodes in
// between. A node also drops to g when an affine interpolant through g
// there lies above u at both neighbours; this lets isolated tangency
// circles of the concave hull enter the contact set.
inline std::vector<RadialMove> radial_relax(const std::vector<double>& u, const std::vector<double>& g,
                                            const std::vector<double>& s, const ContactSet& c,
                                            double gmax_inner, double gstar, std::vector<double>& out) {
  const std::size_t N = u.size();
  out = u;
  std::vector<RadialMove> moves(N);
  std::vector<double> slope(N), suffix(N + 1);
  std::vector<int> suffix_b(N + 1);
  std::size_t k = 0;
  while (k < N) {
    if (c.contact[k]) {
      ++k;
      continue;
    }
    const std::size_t lo = k;
    while (k < N && !c.contact[k]) ++k;
    const std::size_t hi = k - 1;
    const std::size_t E0 = lo == 0 ? 0 : lo - 1, E1 = std::min(hi + 1, N - 1);
    for (std::size_t a = E0; a < E1; ++a) {
      double runmax = -kInf;
      for (std::size_t b = a + 1; b <= E1; ++b) {
        const double su = (u[b] - u[a]) / (s[b] - s[a]);
        slope[b] = su >= runmax ? su : kInf;
        runmax = std::max(runmax, (g[b] - u[a]) / (s[b] - s[a]));
      }
      suffix[E1 + 1] = kInf;
      suffix_b[E1 + 1] = -1;
      for (std::size_t b = E1 + 1; b-- > a + 1;) {
        if (slope[b] < suffix[b + 1]) {
          suffix[b] = slope[b];
          suffix_b[b] = static_cast<int>(b);
        } else {
          suffix[b] = suffix[b + 1];
          suffix_b[b] = suffix_b[b + 1];
        }
      }
      for (std::size_t i = a + 1; i < E1; ++i) {
        if (suffix_b[i + 1] < 0) continue;
        const double cand = u[a] + suffix[i + 1] * (s[i] - s[a]);
        if (cand < out[i]) {
          out[i] = cand;
          const int b = suffix_b[i + 1];
          moves[i] = {static_cast<int>(a), b, u[a], u[static_cast<std::size_t>(b)]};
        }
      }
    }
    if (lo == 0) {
      // constants on centred balls of radius r_b
      double pm = gmax_inner;
      std::vector<double> ok(E1 + 1, kInf);
      for (std::size_t b = 0; b <= E1; ++b) {
        pm = std::max(pm, g[b]);
        if (u[b] >= pm) ok[b] = u[b];
      }
      double best = kInf;
      int best_b = -1;
      for (std::size_t i = E1 + 1; i-- > 0;) {
        if (i < E1 && ok[i + 1] < best) {
          best = ok[i + 1];
          best_b = static_cast<int>(i + 1);
        }
        if (i <= hi && best_b >= 0 && best < out[i]) {
          out[i] = best;
          moves[i] = {-1, best_b, 0.0, best};
        }
      }
    }
    for (std::size_t i = std::max<std::size_t>(lo, 1); i <= hi && i + 1 < N; ++i) {
      // line through (s_i, g_i) meeting u at i + 1; the left end is translated up
      const double m = (u[i + 1] - g[i]) / (s[i + 1] - s[i]);
      const double va = g[i] - m * (s[i] - s[i - 1]);
      if (va >= u[i - 1] && va <= gstar && g[i] < out[i]) {
        out[i] = g[i];
        moves[i] = {static_cast<int>(i - 1), static_cast<int>(i + 1), va, u[i + 1]};
      }
    }
  }
  return moves;
}

}  // namespace detail

/// Decreasing sequence u_1 = w1 >= u_2 >= ... with nested non-contact sets.
/// Radial grids: exact per-level relaxation along admissible harmonic
/// interpolants on each non-contact component. Cartesian grids: obstacle
/// problem restricted to the non-contact set with data u_n outside it.
inline EnvelopeSequence iterate_envelopes(const GainField& g, const GridField& w1,
                                          const EnvelopeConfig& cfg,
                                          std::shared_ptr<const Dictionary> dict = nullptr) {
  require(cfg.max_iter >= 0, ErrorKind::Input, "iterate_envelopes: max_iter must be >= 0");
  EnvelopeSequence seq;
  seq.config = cfg;
  seq.dictionary = std::move(dict);
  seq.gain = gain_on_grid(g, w1);
  if (w1.kind == GridKind::Radial) seq.gmax_inner = detail::max_gain_near_origin(g, w1.radii[0], w1.dim);
  EnvelopeLevel first;
  first.field = w1;
  first.field.tag = "u1";
  first.contact = contact_set(first.field, seq.gain, cfg.contact_tol);
  seq.levels.push_back(std::move(first));
  std::vector<double> s;
  if (w1.kind == GridKind::Radial)
    for (double r : w1.radii)  // oriented so that s increases with r
      s.push_back(w1.dim == 2 ? scale_coordinate(r, 2) : -scale_coordinate(r, w1.dim));
  for (int it = 0; it < cfg.max_iter; ++it) {
    const EnvelopeLevel& cur = seq.levels.back();
    EnvelopeLevel next;
    next.field = cur.field;
    next.field.tag = "u" + std::to_string(seq.levels.size() + 1);
    if (w1.kind == GridKind::Radial) {
      next.moves = detail::radial_relax(cur.field.values, seq.gain, s, cur.contact, seq.gmax_inner,
                                        seq.dictionary ? seq.dictionary->gstar() : g.gstar, next.field.values);
    } else {
      std::vector<std::uint8_t> free(cur.field.size());
      for (std::size_t k = 0; k < free.size(); ++k) free[k] = !cur.contact.contact[k];
      std::vector<double> u = cur.field.values;
      const auto res = sor_solve(*w1.stencil, u, free, &seq.gain, cfg.omega, cfg.solver_tol, cfg.max_sweeps);
      require(res.converged, ErrorKind::NonConvergence,
              "iterate_envelopes: projected relaxation stopped at sweep limit, last change " +
                  std::to_string(res.last_change));
      for (std::size_t k = 0; k < u.size(); ++k)
        next.field.values[k] = std::min(cur.field.values[k], u[k]);
    }
    double change = 0.0;
    for (std::size_t k = 0; k < next.field.size(); ++k)
      change = std::max(change, std::abs(next.field.values[k] - cur.field.values[k]));
    next.sup_change = change;
    next.contact = contact_set(next.field, seq.gain, cfg.contact_tol);
    seq.levels.push_back(std::move(next));
    if (change < cfg.tol) {
      seq.converged = true;
      break;
    }
  }
  return seq;
}

/// Full pipeline: dictionary, w1 and its relaxation sequence.
inline EnvelopeSequence compute_envelopes(const GainField& g, const GridField& grid,
                                          const EnvelopeConfig& cfg, DictionaryOptions opt = {}) {
  auto dict = std::make_shared<const Dictionary>(g, std::move(opt));
  return iterate_envelopes(g, unbranched_envelope(*dict, grid), cfg, dict);
}

// ---------------------------------------------------------------------------
// Branched witnesses (radial sequences)

namespace detail {

inline std::size_t nearest_radial_node(const std::vector<double>& radii, double r) {
  auto it = std::lower_bound(radii.begin(), radii.end(), r);
  if (it == radii.end()) return radii.size() - 1;
  const std::size_t k = static_cast<std::size_t>(it - radii.begin());
  if (k == 0) return 0;
  return std::log(radii[k] / r) < std::log(r / radii[k - 1]) ? k : k - 1;
}

inline MajorantPtr witness_at(const std::shared_ptr<const EnvelopeSequence>& seq, int level, const Point& x) {
  const auto& radii = seq->levels[0].field.radii;
  const int dim = seq->levels[0].field.dim;
  const std::size_t i = nearest_radial_node(radii, x.norm());
  int j = level;
  while (j >= 2 && seq->levels[j - 1].moves[i].b < 0) --j;
  if (j < 2) {
    const auto& dict = *seq->dictionary;
    return make_leaf(dict.patch(dict.best(x)), "dictionary");
  }
  const RadialMove mv = seq->levels[j - 1].moves[i];
  const auto& prev = seq->levels[j - 2].field.values;
  const double gstar = seq->dictionary->gstar();
  HarmonicPatch base = mv.a < 0 ? flat_ball_patch(radii[mv.b], mv.vb, gstar, dim)
                                : radial_annulus_patch(radii[mv.a], radii[mv.b], mv.va, mv.vb, gstar, dim);
  const int child_level = j - 1;
  // children on a circle carrying data above u_{j-1} are translated up to match
  const double lift_a = mv.a < 0 ? 0.0 : mv.va - prev[mv.a], lift_b = mv.vb - prev[mv.b];
  const double r_split = mv.a < 0 ? 0.0 : 0.5 * (radii[mv.a] + radii[mv.b]);
  ExtensionMap ext = [seq, child_level, lift_a, lift_b, r_split](const Point& v) {
    const MajorantPtr k = witness_at(seq, child_level, v);
    const double lift = v.norm() < r_split ? lift_a : lift_b;
    return lift > 0.0 ? upward_translate(k, lift) : k;
  };
  return make_branch(std::move(base), std::move(ext), j, 0.0, "level " + std::to_string(j));
}

}  // namespace detail

/// Branched majorant realising u_{n+1}(x) (u_L at the last level L): a
/// radial harmonic on a sub-annulus (or ball) of the level-n non-contact
/// component of x with data u_n, extended recursively by witnesses of the
/// previous levels and, at the bottom, by dictionary patches achieving w1.
inline MajorantPtr build_branched_witness(const std::shared_ptr<const EnvelopeSequence>& seq, int n,
                                          const Point& x) {
  require(seq && !seq->levels.empty(), ErrorKind::Input, "witness: empty sequence");
  require(seq->levels[0].field.kind == GridKind::Radial && seq->dictionary, ErrorKind::Input,
          "witness: only radial sequences with a dictionary are supported");
  const int L = static_cast<int>(seq->levels.size());
  require(n >= 1 && n <= L, ErrorKind::Input, "witness: level out of range");
  require(x.dim == seq->levels[0].field.dim && x.norm() <= 1.0, ErrorKind::Input,
          "witness: point must lie in the closed unit ball of the grid dimension");
  const std::size_t i = detail::nearest_radial_node(seq->levels[0].field.radii, x.norm());
  if (seq->levels[n - 1].contact.contact[i])
    throw Error(ErrorKind::NoWitness, "witness: point lies in the level-" + std::to_string(n) + " contact set");
  return detail::witness_at(seq, std::min(n + 1, L), x);
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_field_csv(const GridField& f, std::ostream& os, const std::string& column = "value") {
  char buf[96];
  if (f.kind == GridKind::Radial) {
    os << "# " << f.tag << " on a radial grid; r in unit-ball lengths, " << column << " in payoff units\n";
    os << "r," << column << '\n';
    for (std::size_t k = 0; k < f.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.radii[k], f.values[k]);
      os << buf;
    }
    return;
  }
  os << "# " << f.tag << " on a Cartesian grid; x, y in unit-ball lengths, " << column << " in payoff units\n";
  os << "x,y," << column << '\n';
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!f.active(k)) continue;
    const Point p = f.node(k);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p[0], p[1], f.values[k]);
    os << buf;
  }
}

inline void write_contact_csv(const GridField& f, const ContactSet& c, std::ostream& os) {
  GridField m = f;
  for (std::size_t k = 0; k < f.size(); ++k) m.values[k] = c.contact[k];
  m.tag = f.tag + " contact mask (1 = contact)";
  char buf[96];
  if (f.kind == GridKind::Radial) {
    os << "# " << m.tag << "; r in unit-ball lengths\n";
    os << "r,contact\n";
    for (std::size_t k = 0; k < f.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%d\n", f.radii[k], static_cast<int>(c.contact[k]));
      os << buf;
    }
    return;
  }
  os << "# " << m.tag << "; x, y in unit-ball lengths\n";
  os << "x,y,contact\n";
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!f.active(k)) continue;
    const Point p = f.node(k);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", p[0], p[1], static_cast<int>(c.contact[k]));
    os << buf;
  }
}

}  // namespace bhm
