#pragma once

// Brownian paths absorbed on the unit sphere: stopping rules, Euler and
// walk-on-spheres simulation, Monte Carlo payoffs, and pathwise execution
// of branched majorants (Algorithm 1).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "bhm/core.hpp"
#include "bhm/envelope.hpp"
#include "bhm/gain.hpp"
#include "bhm/geometry.hpp"
#include "bhm/majorant.hpp"

namespace bhm {

enum class Scheme { Euler, WosJump };

struct PathConfig {
  double dt = 1e-5;
  std::uint64_t seed = 1;
  double max_time = 100.0;
  Scheme scheme = Scheme::WosJump;
  double eps_wos = 1e-4;
  long max_steps = 10000000;  // jumps or Euler steps per path
  bool record_states = false;
};

inline void validate(const PathConfig& cfg) {
  require(cfg.dt > 0.0 && std::isfinite(cfg.dt), ErrorKind::Input, "PathConfig: dt must be > 0");
  require(cfg.max_time > 0.0, ErrorKind::Input, "PathConfig: max_time must be > 0");
  require(cfg.eps_wos > 0.0 && cfg.eps_wos < 0.1, ErrorKind::Input, "PathConfig: eps_wos must lie in (0, 0.1)");
  require(cfg.max_steps >= 1, ErrorKind::Input, "PathConfig: max_steps must be >= 1");
}

/// Non-contact region of a contact set, queried pointwise. Radial sets are
/// unions of open annuli (r_lo, r_hi); a component containing the first
/// node has no inner boundary. Cartesian sets use the bilinear mask.
class ContactRegion {
 public:
  ContactRegion(const GridField& grid, const ContactSet& c) : kind_(grid.kind), dim_(grid.dim) {
    require(c.contact.size() == grid.size(), ErrorKind::Input, "ContactRegion: mask size mismatch");
    if (grid.kind == GridKind::Radial) {
      const std::size_t N = grid.size();
      for (std::size_t k = 0; k < N;) {
        if (c.contact[k]) {
          ++k;
          continue;
        }
        const std::size_t lo = k;
        while (k < N && !c.contact[k]) ++k;
        lo_.push_back(lo == 0 ? 0.0 : grid.radii[lo - 1]);
        hi_.push_back(k < N ? grid.radii[k] : 1.0);
      }
    } else {
      n_ = grid.stencil->n;
      h_ = grid.stencil->h;
      mask_.resize(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) mask_[k] = grid.active(k) ? c.contact[k] : 1.0;
    }
  }

  int dim() const { return dim_; }
  bool radial() const { return kind_ == GridKind::Radial; }

  bool stopped(const Point& x) const {
    if (x.norm() >= 1.0) return true;
    if (radial()) return component(x.norm()) < 0;
    const double fx = (x[0] + 1.0) / h_, fy = (x[1] + 1.0) / h_;
    const int i = std::clamp(static_cast<int>(fx), 0, n_ - 2), j = std::clamp(static_cast<int>(fy), 0, n_ - 2);
    const double tx = fx - i, ty = fy - j;
    auto m = [&](int a, int b) { return mask_[static_cast<std::size_t>(b) * n_ + a]; };
    const double v = (1 - tx) * (1 - ty) * m(i, j) + tx * (1 - ty) * m(i + 1, j) + (1 - tx) * ty * m(i, j + 1) +
                     tx * ty * m(i + 1, j + 1);
    return v >= 0.5;
  }

  /// Distance from x to the contact set (radial only); 0 inside it.
  double distance(const Point& x) const {
    const double r = x.norm();
    const int c = component(r);
    if (c < 0) return 0.0;
    const double out = hi_[c] - r;
    return lo_[c] > 0.0 ? std::min(out, r - lo_[c]) : out;
  }

  /// Nearest point of the contact set (radial only).
  Point project(const Point& x) const {
    const double r = x.norm();
    const int c = component(r);
    if (c < 0) return x;
    const double target = lo_[c] > 0.0 && r - lo_[c] < hi_[c] - r ? lo_[c] : hi_[c];
    if (r == 0.0) return Point::on_axis(dim_, target);
    return x * (target / r);
  }

 private:
  int component(double r) const {
    auto it = std::upper_bound(lo_.begin(), lo_.end(), r);
    if (it == lo_.begin()) return -1;
    const int c = static_cast<int>(it - lo_.begin()) - 1;
    const bool inner_ok = lo_[c] == 0.0 ? r >= 0.0 : r > lo_[c];
    return inner_ok && r < hi_[c] ? c : -1;
  }

  GridKind kind_;
  int dim_ = 2;
  std::vector<double> lo_, hi_;
  int n_ = 0;
  double h_ = 0.0;
  std::vector<double> mask_;
};

struct StoppingRule {
  enum class Kind { FirstExit, FixedTime, ContactHit, Earliest };
  Kind kind = Kind::FixedTime;
  DomainDescriptor domain = BallDomain{};
  double time = 0.0;
  std::shared_ptr<const ContactRegion> contact;
  std::vector<StoppingRule> parts;
  std::string name;

  static StoppingRule first_exit(DomainDescriptor d, std::string name = "first_exit") {
    StoppingRule r;
    r.kind = Kind::FirstExit;
    r.domain = std::move(d);
    r.name = std::move(name);
    return r;
  }
  static StoppingRule fixed_time(double t) {
    require(t >= 0.0 && std::isfinite(t), ErrorKind::Input, "fixed_time: t must be finite and >= 0");
    StoppingRule r;
    r.kind = Kind::FixedTime;
    r.time = t;
    r.name = "fixed_time(" + std::to_string(t) + ")";
    return r;
  }
  static StoppingRule contact_hit(const GridField& grid, const ContactSet& c, std::string name = "contact_hit") {
    StoppingRule r;
    r.kind = Kind::ContactHit;
    r.contact = std::make_shared<const ContactRegion>(grid, c);
    r.name = std::move(name);
    return r;
  }
  static StoppingRule earliest(std::vector<StoppingRule> rules, std::string name = {}) {
    require(!rules.empty(), ErrorKind::Input, "earliest: needs at least one rule");
    StoppingRule r;
    r.kind = Kind::Earliest;
    if (name.empty()) {
      name = "min(";
      for (std::size_t i = 0; i < rules.size(); ++i) name += (i ? ", " : "") + rules[i].name;
      name += ")";
    }
    r.parts = std::move(rules);
    r.name = std::move(name);
    return r;
  }

  /// True if the rule can be resolved by walk-on-spheres jumps.
  bool spatial() const {
    switch (kind) {
      case Kind::FirstExit: return true;
      case Kind::FixedTime: return time == 0.0;
      case Kind::ContactHit: return contact->radial();
      case Kind::Earliest:
        return std::all_of(parts.begin(), parts.end(), [](const StoppingRule& p) { return p.spatial(); });
    }
    return false;
  }
};

enum class Termination { Stopped, HitBoundary, HitGstar, Exhausted };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Stopped: return "stopped";
    case Termination::HitBoundary: return "hit_boundary";
    case Termination::HitGstar: return "hit_gstar";
    case Termination::Exhausted: return "exhausted";
  }
  return "?";
}

struct PathState {
  double t = 0.0;
  Point x;
  int patch = 0;
};

struct PatchVisit {
  int patch = 0;
  double activated = 0.0;  // activation time
  Point start;             // activation point
  Point exit;              // exit point v_k
  std::string kind;
};

struct PathRecord {
  std::vector<PathState> states;
  Point final_point;
  double final_time = 0.0;  // Euler: elapsed time; wos-jump: sum of mean jump durations rho^2 / d
  bool absorbed = false;
  Termination termination = Termination::Stopped;
  std::vector<PatchVisit> patch_trace;
  long steps = 0;
};

namespace detail {

// points this close to the unit sphere count as absorbed
inline constexpr double kSphereTol = 1e-12;

// Signed distance to the stopping set of a spatial rule (> 0 outside it),
// together with the nearest point of that set.
inline double rule_distance(const StoppingRule& r, const Point& x, Point& nearest) {
  switch (r.kind) {
    case StoppingRule::Kind::FirstExit: {
      const double d = -signed_distance(r.domain, x);
      if (d > 0.0) nearest = project_to_boundary(r.domain, x);
      return d;
    }
    case StoppingRule::Kind::FixedTime:
      nearest = x;
      return 0.0;
    case StoppingRule::Kind::ContactHit: {
      const double d = r.contact->distance(x);
      if (d > 0.0) nearest = r.contact->project(x);
      return d;
    }
    case StoppingRule::Kind::Earliest: {
      double best = kInf;
      for (const auto& p : r.parts) {
        Point q;
        const double d = rule_distance(p, x, q);
        if (d < best) {
          best = d;
          nearest = q;
        }
      }
      return best;
    }
  }
  return 0.0;
}

// True if the rule has fired at x (spatial parts only; times are handled by the caller).
inline bool rule_fired(const StoppingRule& r, const Point& x) {
  switch (r.kind) {
    case StoppingRule::Kind::FirstExit: return signed_distance(r.domain, x) >= 0.0;
    case StoppingRule::Kind::FixedTime: return false;
    case StoppingRule::Kind::ContactHit: return r.contact->stopped(x);
    case StoppingRule::Kind::Earliest:
      return std::any_of(r.parts.begin(), r.parts.end(), [&](const StoppingRule& p) { return rule_fired(p, x); });
  }
  return false;
}

inline double rule_time(const StoppingRule& r) {
  switch (r.kind) {
    case StoppingRule::Kind::FixedTime: return r.time;
    case StoppingRule::Kind::Earliest: {
      double t = kInf;
      for (const auto& p : r.parts) t = std::min(t, rule_time(p));
      return t;
    }
    default: return kInf;
  }
}

inline void push_state(PathRecord& rec, const PathConfig& cfg, double t, const Point& x, int patch) {
  if (cfg.record_states) rec.states.push_back({t, x, patch});
}

// Walk-on-spheres from x until the rule fires or the unit sphere is reached.
inline void wos_path(const Point& x0, const StoppingRule& rule, const PathConfig& cfg, Rng& rng, PathRecord& rec,
                     double t0, int patch) {
  Point x = x0;
  double t = t0;
  const double d = x.dim;
  for (;;) {
    Point q;
    const double db = 1.0 - x.norm();
    if (db <= kSphereTol) {
      if (db != 0.0) x = x * (1.0 / x.norm());
      rec.absorbed = true;
      break;
    }
    const double dr = rule_distance(rule, x, q);
    if (dr <= 0.0) break;
    if (std::min(dr, db) <= cfg.eps_wos) {
      if (db <= dr) {
        x = x * (1.0 / x.norm());
        rec.absorbed = true;
      } else {
        x = q;
      }
      break;
    }
    if (rec.steps >= cfg.max_steps) {
      rec.termination = Termination::Exhausted;
      break;
    }
    const double rho = std::min(dr, db);
    x = x + rng.unit_vector(x.dim) * rho;
    t += rho * rho / d;
    ++rec.steps;
    push_state(rec, cfg, t, x, patch);
  }
  rec.final_point = x;
  rec.final_time = t;
  push_state(rec, cfg, t, x, patch);
}

// Last point on the segment a -> b (a outside the stopping set) before `inside` turns true.
template <class Pred>
Point crossing(const Point& a, const Point& b, Pred inside) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(a + (b - a) * mid) ? hi : lo) = mid;
  }
  return a + (b - a) * hi;
}

inline void euler_path(const Point& x0, const StoppingRule& rule, const PathConfig& cfg, Rng& rng, PathRecord& rec,
                       double t0, int patch) {
  Point x = x0;
  double t = t0;
  const double t_stop = t0 + rule_time(rule);
  const double sq = std::sqrt(cfg.dt);
  for (;;) {
    if (x.norm() >= 1.0 - kSphereTol) {
      x = x * (1.0 / x.norm());
      rec.absorbed = true;
      break;
    }
    if (rule_fired(rule, x) || t >= t_stop) break;
    if (t - t0 >= cfg.max_time || rec.steps >= cfg.max_steps) {
      rec.termination = Termination::Exhausted;
      break;
    }
    const double step = std::min(cfg.dt, t_stop - t);
    const double scale = step == cfg.dt ? sq : std::sqrt(step);
    Point y = x;
    for (int i = 0; i < x.dim; ++i) y[i] += scale * rng.normal();
    ++rec.steps;
    if (y.norm() >= 1.0) {
      // linear interpolation to the sphere
      const Point e = y - x;
      const double a = e.dot(e), b = 2.0 * x.dot(e), c = x.dot(x) - 1.0;
      const double s = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
      const Point z = x + e * std::clamp(s, 0.0, 1.0);
      const bool fired_first = rule_fired(rule, z * (1.0 - 1e-15));
      x = fired_first ? crossing(x, z, [&](const Point& p) { return rule_fired(rule, p); })
                      : z * (1.0 / z.norm());
      rec.absorbed = !fired_first;
      t += step * std::clamp(s, 0.0, 1.0);
      break;
    }
    if (rule_fired(rule, y)) {
      const bool has_domain = rule.kind == StoppingRule::Kind::FirstExit;
      x = has_domain ? crossing(x, y, [&](const Point& p) { return rule_fired(rule, p); }) : y;
      t += step;
      break;
    }
    x = y;
    t += step;
    push_state(rec, cfg, t, x, patch);
  }
  rec.final_point = x;
  rec.final_time = t;
  push_state(rec, cfg, t, x, patch);
}

}  // namespace detail

/// One path from x, stopped by `rule` or absorbed on the unit sphere. The
/// random stream is Rng(cfg.seed, index).
inline PathRecord simulate_path(const Point& x, const PathConfig& cfg, const StoppingRule& rule,
                                std::uint64_t index = 0) {
  validate(cfg);
  require(x.norm() <= 1.0 + detail::kSphereTol, ErrorKind::Input, "simulate_path: |x| must be <= 1");
  Rng rng(cfg.seed, index);
  PathRecord rec;
  detail::push_state(rec, cfg, 0.0, x, 0);
  if (cfg.scheme == Scheme::WosJump && rule.spatial())
    detail::wos_path(x, rule, cfg, rng, rec, 0.0, 0);
  else
    detail::euler_path(x, rule, cfg, rng, rec, 0.0, 0);
  if (rec.absorbed && rec.termination != Termination::Exhausted) rec.termination = Termination::HitBoundary;
  return rec;
}

struct PayoffEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
  std::size_t exhausted = 0;
};

/// Monte Carlo estimate of E[g(X_tau)]. Path i uses Rng(cfg.seed, i).
inline PayoffEstimate payoff_estimate(const Point& x, const StoppingRule& rule, const GainField& g,
                                      std::size_t n_paths, PathConfig cfg) {
  require(n_paths >= 100, ErrorKind::Input, "payoff_estimate: n_paths must be >= 100");
  cfg.record_states = false;
  std::vector<double> payoff(n_paths);
  std::vector<std::uint8_t> exhausted(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t i) {
    const PathRecord rec = simulate_path(x, cfg, rule, i);
    payoff[i] = g(rec.final_point);
    exhausted[i] = rec.termination == Termination::Exhausted;
  });
  const Estimate e = summarize(payoff);
  PayoffEstimate out{e.mean, e.std_error, n_paths, 0};
  for (auto v : exhausted) out.exhausted += v;
  return out;
}

struct RivalReport {
  std::string name;
  PayoffEstimate rival;
  PayoffEstimate truncated;  // rival stopped no later than tau_inf
  bool dominated = false;    // tau_inf >= rival - 3 sigma
  bool truncation_ok = false;  // truncated >= rival - 3 sigma
};

struct OptimalityReport {
  PayoffEstimate tau_inf;
  std::vector<RivalReport> rivals;
  bool ok() const {
    return std::all_of(rivals.begin(), rivals.end(),
                       [](const RivalReport& r) { return r.dominated && r.truncation_ok; });
  }
};

/// Compares the payoff of the first hitting time of the contact set with
/// each rival and with each rival truncated at that hitting time.
inline OptimalityReport optimality_test(const Point& x, const GridField& grid, const ContactSet& c_inf,
                                        const std::vector<StoppingRule>& rivals, const GainField& g,
                                        std::size_t n_paths, const PathConfig& cfg) {
  const StoppingRule tau = StoppingRule::contact_hit(grid, c_inf, "tau_inf");
  OptimalityReport rep;
  rep.tau_inf = payoff_estimate(x, tau, g, n_paths, cfg);
  for (const auto& r : rivals) {
    RivalReport rr;
    rr.name = r.name;
    rr.rival = payoff_estimate(x, r, g, n_paths, cfg);
    rr.truncated = payoff_estimate(x, StoppingRule::earliest({r, tau}), g, n_paths, cfg);
    const double s1 = std::hypot(rep.tau_inf.std_error, rr.rival.std_error);
    const double s2 = std::hypot(rr.truncated.std_error, rr.rival.std_error);
    rr.dominated = rep.tau_inf.mean >= rr.rival.mean - 3.0 * s1;
    rr.truncation_ok = rr.truncated.mean >= rr.rival.mean - 3.0 * s2;
    rep.rivals.push_back(std::move(rr));
  }
  return rep;
}

/// Algorithm 1: run the path in the base patch; at each exit point stop if
/// the patch value there is g* or the point is on the unit sphere, else
/// continue in the successor patch given by the extension map.
inline PathRecord run_algorithm1(const MajorantPtr& h, const Point& x, const PathConfig& cfg,
                                 std::uint64_t index = 0) {
  validate(cfg);
  require(static_cast<bool>(h), ErrorKind::Input, "run_algorithm1: null majorant");
  require(h->contains(x), ErrorKind::Precondition, "run_algorithm1: x is not in the base patch domain");
  Rng rng(cfg.seed, index);
  PathRecord rec;
  MajorantPtr cur = h;
  Point pos = x;
  double t = 0.0;
  detail::push_state(rec, cfg, 0.0, x, 0);
  for (int id = 0;; ++id) {
    const StoppingRule exit_rule = StoppingRule::first_exit(cur->base.domain(), cur->base.kind());
    PathRecord leg;
    leg.steps = rec.steps;
    if (cfg.scheme == Scheme::WosJump)
      detail::wos_path(pos, exit_rule, cfg, rng, leg, t, id);
    else
      detail::euler_path(pos, exit_rule, cfg, rng, leg, t, id);
    rec.steps = leg.steps;
    rec.states.insert(rec.states.end(), leg.states.begin(), leg.states.end());
    rec.patch_trace.push_back({id, t, pos, leg.final_point, cur->base.kind()});
    pos = leg.final_point;
    t = leg.final_time;
    rec.final_point = pos;
    rec.final_time = t;
    if (leg.termination == Termination::Exhausted) {
      rec.termination = Termination::Exhausted;
      return rec;
    }
    if (leg.absorbed || pos.norm() >= 1.0 - cfg.eps_wos) {
      rec.absorbed = true;
      rec.termination = Termination::HitBoundary;
      return rec;
    }
    const double gstar = cur->base.gstar();
    if (cur->value(pos) >= gstar * (1.0 - 1e-9)) {
      rec.termination = Termination::HitGstar;
      return rec;
    }
    if (!cur->extension) {
      rec.termination = Termination::Exhausted;
      return rec;
    }
    MajorantPtr next = cur->extension(pos);
    require(next && signed_distance(next->base.domain(), pos) <= kDomainTol, ErrorKind::Structural,
            "run_algorithm1: successor patch does not contain the exit point (contiguity)");
    cur = std::move(next);
  }
}

/// Path trace as `t,x,y,patch_id` rows (d = 2).
inline void write_trace_csv(const PathRecord& rec, std::ostream& os) {
  os << "# Algorithm 1 path trace; t in time units (wos-jump: cumulative mean jump duration), x, y in "
        "unit-ball lengths\n";
  os << "t,x,y,patch_id\n";
  char buf[128];
  for (const auto& s : rec.states) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", s.t, s.x[0], s.x[1], s.patch);
    os << buf;
  }
}

}  // namespace bhm
