// Acceptance gate: one PASS/FAIL line per criterion AC-1 .. AC-9. Exit code 1
// if any criterion fails.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bhm/bhm.hpp"
#include "bhm/config.hpp"

#ifndef BHM_PRESET_DIR
#define BHM_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace bhm;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

fs::path preset_dir() {
  const char* v = std::getenv("BHM_PRESETS");
  return v ? fs::path(v) : fs::path(BHM_PRESET_DIR);
}

std::vector<fs::path> all_presets() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(preset_dir()))
    if (e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  require(!out.empty(), ErrorKind::Input, "no presets in " + preset_dir().string());
  return out;
}

nlohmann::json raw_preset(const fs::path& p) {
  std::ifstream is(p);
  return nlohmann::json::parse(is);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const EnvelopeSequence> envelopes(const RunConfig& c) {
  return std::make_shared<const EnvelopeSequence>(compute_envelopes(c.gain, make_grid(c), c.env));
}

// ---------------------------------------------------------------------------

Verdict ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024, 0);
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double cr = 0.4 * std::sqrt(rng.uniform());
    const Point c = rng.unit_vector(2) * cr;
    const double radius = 0.1 + (1.0 - cr - 0.1) * rng.uniform();
    const Point x = c + rng.unit_vector(2) * (radius * 0.9 * rng.uniform());
    const double a = 6.0 * rng.uniform() - 3.0, b = 6.0 * rng.uniform() - 3.0, phi = 2.0 * std::numbers::pi * rng.uniform();
    const BoundaryData f{[=](const Point& y) { return std::sin(a * y[0] + b * y[1] + phi) + 0.5 * y[0] * y[1]; }};
    const auto dom = make_ball(c, radius);
    WosConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i + 1);
    const auto w = wos_harmonic_eval(make_region(dom), f, x, cfg);
    const double exact = poisson_ball_eval(c, radius, f, x);
    const double z = std::abs(w.mean - exact) / w.std_error;
    worst = std::max(worst, z);
    ok += z <= 3.0;
  }
  const BoundaryData cosine{[](const Point& y) { return y[0] / y.norm(); }};
  WosConfig cfg;
  cfg.seed = 99;
  const auto w = wos_harmonic_eval(make_region(make_ball(Point(0, 0), 1.0)), cosine, Point(0.3, 0), cfg);
  const double cos_err = std::abs(w.mean - 0.3);
  const double t = seconds_since(t0);
  return {ok == 20 && cos_err <= 0.005 && t < 60.0,
          std::to_string(ok) + "/20 fixtures within 3 sigma (worst " + num(worst) + " sigma), cos fixture error " +
              num(cos_err) + ", " + num(t) + " s"};
}

Verdict ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path p = preset_dir() / "spiked-ball.json";
  const RunConfig c = load_config(p);
  const auto gj = raw_preset(p)["gain"];
  const double eps = gj.value("epsilon", 0.0), mollify = gj.value("mollify", 0.0);
  require(eps == 0.05 && mollify == 0.01 && c.dim == 2 && c.radial_grid && c.nodes == 2048, ErrorKind::Input,
          "spiked-ball preset must be eps 0.05, mollify 0.01, d 2, 2048 radial nodes");
  const auto seq = compute_envelopes(c.gain, make_grid(c), c.env);
  const auto& w1 = seq.levels[0];
  const auto wbar = balayage_step(w1.field, w1.contact, c.env);
  const auto& radii = w1.field.radii;
  const std::size_t N = radii.size();

  // (a) the non-contact component of C1 through the Harnack radius covers (spike edge, R)
  const double R = harnack_radius(1.25, 2);
  const std::size_t kR = detail::nearest_radial_node(radii, R);
  if (w1.contact.contact[kR]) return {false, "node at Harnack radius " + num(R) + " is in contact"};
  std::size_t lo = kR, hi = kR;
  while (lo > 0 && !w1.contact.contact[lo - 1]) --lo;
  while (hi + 1 < N && !w1.contact.contact[hi + 1]) ++hi;
  const double inner = lo > 0 ? radii[lo - 1] : 0.0;
  const double outer = hi + 1 < N ? radii[hi + 1] : 1.0;
  const double edge = eps + mollify;
  const bool a_ok = inner <= edge && outer >= R && harnack_constant(R, 2) < 1.25 + 1e-12;

  // (b) balayage gap on the annular component
  std::size_t gap_nodes = 0;
  double max_gap = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double gap = w1.field.values[k] - wbar.values[k];
    max_gap = std::max(max_gap, gap);
    gap_nodes += gap > c.gap_margin;
  }
  const std::size_t annular = hi - lo + 1;
  const bool b_ok = 10 * gap_nodes >= annular;
  const double t = seconds_since(t0);
  return {a_ok && b_ok && t < 60.0,
          "C1 component (" + num(inner) + ", " + num(outer) + ") vs spike edge " + num(edge) + " and R " + num(R) +
              "; gap > " + num(c.gap_margin) + " at " + std::to_string(gap_nodes) + "/" + std::to_string(annular) +
              " nodes, max gap " + num(max_gap) + ", " + num(t) + " s"};
}

// non-contact nodes of `next` all lie within one cell of non-contact nodes of `prev`
bool nested_after_dilation(const GridField& f, const ContactSet& prev, const ContactSet& next) {
  const std::size_t N = f.size();
  for (std::size_t k = 0; k < N; ++k) {
    if (next.contact[k]) continue;
    bool near = false;
    if (f.kind == GridKind::Radial) {
      for (std::size_t j = k == 0 ? 0 : k - 1; j <= std::min(N - 1, k + 1); ++j) near |= !prev.contact[j];
    } else {
      const int n = f.stencil->n;
      const int i = static_cast<int>(k) % n, jj = static_cast<int>(k) / n;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int a = i + di, b = jj + dj;
          if (a >= 0 && a < n && b >= 0 && b < n) near |= !prev.contact[static_cast<std::size_t>(b) * n + a];
        }
    }
    if (!near) return false;
  }
  return true;
}

Verdict ac3() {
  bool ok = true;
  std::string detail;
  for (const auto& p : all_presets()) {
    const RunConfig c = load_config(p);
    const auto seq = compute_envelopes(c.gain, make_grid(c), c.env);
    double worst_rise = -kInf;
    bool nested = true;
    for (std::size_t n = 1; n < seq.levels.size(); ++n) {
      const auto& a = seq.levels[n - 1].field.values;
      const auto& b = seq.levels[n].field.values;
      for (std::size_t k = 0; k < a.size(); ++k) worst_rise = std::max(worst_rise, b[k] - a[k]);
      nested &= nested_after_dilation(seq.levels[n].field, seq.levels[n - 1].contact, seq.levels[n].contact);
    }
    const bool good = seq.converged && worst_rise <= 1e-12 && nested;
    ok &= good;
    detail += (detail.empty() ? "" : "; ") + c.name + ": " + std::to_string(seq.levels.size()) + " levels, max rise " +
              num(std::max(worst_rise, 0.0)) + (nested ? ", nested" : ", NOT nested") +
              (seq.converged ? "" : ", not converged");
  }
  return {ok, detail};
}

Verdict ac4() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& p : all_presets()) {
    const RunConfig c = load_config(p);
    const auto seq = compute_envelopes(c.gain, make_grid(c), c.env);
    const GridField& u = seq.levels.back().field;
    bool good = seq.converged;
    std::string d = c.name + ": ";
    if (c.radial_grid) {
      good &= u.size() == 2048;
      const double sup = cross_validate(u, radial_value_oracle(c.gain, c.dim, u.radii)).sup;
      good &= sup <= 1e-3;
      d += "radial oracle sup " + num(sup);
    } else {
      good &= c.n == 257;
      const auto ps = psor_obstacle_solve(c.gain, 257, c.psor_omega, c.psor_tol);
      const double sup = cross_validate(u, ps.field).sup;
      good &= sup <= 5e-3;
      d += "PSOR sup " + num(sup);
      if (c.gain.radial) {
        const auto ref = radial_grid(2048, 1e-3, 2);
        d += " (radial oracle sup " + num(cross_validate(u, radial_value_oracle(c.gain, 2, ref.radii)).sup) +
             ", information only)";
      }
    }
    ok &= good;
    detail += (detail.empty() ? "" : "; ") + d;
  }
  const double t = seconds_since(t0);
  return {ok && t < 300.0, detail + ", " + num(t) + " s"};
}

Verdict ac5() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig c = load_config(preset_dir() / "spiked-ball.json");
  const auto seq = compute_envelopes(c.gain, make_grid(c), c.env);
  const auto& last = seq.levels.back();
  const auto V = radial_value_oracle(c.gain, c.dim, last.field.radii);
  const std::vector<StoppingRule> rivals = {
      StoppingRule::fixed_time(0.0),
      StoppingRule::first_exit(make_ball(Point(0, 0), 0.9), "exit B(0,0.9)"),
      StoppingRule::first_exit(make_ball(Point(0, 0), 0.3), "exit B(0,0.3)"),
      StoppingRule::first_exit(make_annulus(Point(0, 0), 0.02, 0.45), "exit A(0;0.02,0.45)")};
  const std::vector<Point> probes = {Point(0.08, 0), Point(0.15, 0.1), Point(0, 0.3), Point(-0.4, 0.2), Point(0.5, -0.5)};
  PathConfig cfg = c.path;
  cfg.scheme = Scheme::WosJump;
  bool ok = true;
  double worst_z = 0.0;
  std::string failures;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    cfg.seed = c.path.seed + 1000 * i;
    const auto rep = optimality_test(probes[i], last.field, last.contact, rivals, c.gain, 100000, cfg);
    const double z = std::abs(rep.tau_inf.mean - V(probes[i].norm())) / rep.tau_inf.std_error;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) {
      ok = false;
      failures += " probe " + std::to_string(i) + " off oracle by " + num(z) + " sigma;";
    }
    for (const auto& r : rep.rivals) {
      if (!r.dominated) failures += " probe " + std::to_string(i) + " beaten by " + r.name + ";";
      if (!r.truncation_ok) failures += " probe " + std::to_string(i) + " truncated " + r.name + " worse;";
    }
    ok &= rep.ok();
  }
  const double t = seconds_since(t0);
  return {ok && t < 600.0, "5 probes x 4 rivals at 1e5 paths, worst |tau_inf - V| " + num(worst_z) + " sigma," +
                               (failures.empty() ? std::string(" all rivals dominated") : failures) + ", " + num(t) +
                               " s"};
}

// (h, x) fixtures: dictionary leaves, witnesses of levels 1 and 2 (lifted
// to majorise g between grid nodes), and explicit radial chains with a
// nonzero matching error
struct TreeFixture {
  std::string name;
  MajorantPtr h;
  Point x;
  GainField gain;
  std::shared_ptr<const EnvelopeSequence> seq;
};

MajorantPtr radial_chain(const std::vector<double>& inner, const std::vector<double>& outer, double offset,
                         double gstar) {
  const std::size_t L = inner.size();
  MajorantPtr cur = make_leaf(annulus_to_boundary_patch(inner[L - 1], gstar, 2), "leaf");
  for (std::size_t k = L - 1; k-- > 0;) {
    const double vb = std::min(gstar, cur->value(Point(outer[k], 0)) + offset);
    MajorantPtr child = cur;
    cur = make_branch(radial_annulus_patch(inner[k], outer[k], gstar, vb, gstar, 2),
                      [child](const Point&) { return child; }, static_cast<int>(L - k), 0.0, "chain");
  }
  return cur;
}

std::vector<TreeFixture> tree_fixtures() {
  std::vector<TreeFixture> out;
  std::vector<std::pair<RunConfig, std::vector<Point>>> gains;
  gains.push_back({load_config(preset_dir() / "spiked-ball.json"), {Point(0.08, 0), Point(0.2, 0.2)}});
  gains.push_back({load_config(preset_dir() / "annulus-gain.json"), {Point(0.1, 0), Point(0.5, 0.3)}});
  RunConfig plateau = load_config(preset_dir() / "spiked-ball.json");
  plateau.name = "plateau";
  plateau.gain = with_gstar(plateau_gain(0.2, 0.25), plateau.gstar_margin);
  gains.push_back({plateau, {Point(0.5, 0), Point(0, -0.8)}});
  for (const auto& [c, xs] : gains) {
    const auto seq = envelopes(c);
    for (const Point& x : xs) {
      const auto& dict = *seq->dictionary;
      out.push_back({c.name + " leaf", make_leaf(dict.patch(dict.best(x)), "dictionary"), x, c.gain, seq});
      for (int n : {1, 2}) {
        try {
          const auto h = lift_to_majorant(build_branched_witness(seq, n, x), c.gain);
          out.push_back({c.name + " witness " + std::to_string(n), h, x, c.gain, seq});
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NoWitness) throw;
        }
      }
    }
  }
  const GainField g = with_gstar(plateau_gain(0.1, 0.15), 0.25);
  RunConfig chain_cfg = load_config(preset_dir() / "spiked-ball.json");
  chain_cfg.gain = g;
  const auto chain_seq = envelopes(chain_cfg);
  for (double offset : {0.01, 0.02, 0.05}) {
    out.push_back({"chain2+" + num(offset), radial_chain({0.3, 0.5}, {0.7, 1.0}, offset, g.gstar), Point(0.4, 0.1), g,
                   chain_seq});
    out.push_back({"chain3+" + num(offset), radial_chain({0.2, 0.3, 0.5}, {0.4, 0.6, 1.0}, offset, g.gstar),
                   Point(0, 0.25), g, chain_seq});
  }
  return out;
}

Verdict ac6(const std::vector<TreeFixture>& fixtures) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n_paths = 10000;
  int triples = 0, passed = 0;
  bool depth_seen[4] = {false, false, false, false};
  double worst = -kInf;
  std::string failures;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto& fx = fixtures[f];
    if (fx.h->depth > 3) continue;
    depth_seen[fx.h->depth] = true;
    const double hx = fx.h->value(fx.x);
    const double norm = matching_error(*fx.h).norm;
    PathConfig cfg;
    cfg.seed = 7000 + f;
    const auto& last = fx.seq->levels.back();
    std::vector<std::pair<std::string, Estimate>> runs;
    {
      std::vector<double> pay(n_paths);
      parallel_for(n_paths, [&](std::size_t i) { pay[i] = fx.gain(run_algorithm1(fx.h, fx.x, cfg, i).final_point); });
      runs.push_back({"algorithm 1", summarize(pay)});
    }
    for (const auto& rule : {StoppingRule::first_exit(make_ball(Point(0, 0), 0.9), "exit B(0,0.9)"),
                             StoppingRule::contact_hit(last.field, last.contact, "tau_inf")}) {
      const auto e = payoff_estimate(fx.x, rule, fx.gain, n_paths, cfg);
      runs.push_back({rule.name, Estimate{e.mean, e.std_error}});
    }
    for (const auto& [name, e] : runs) {
      ++triples;
      const double excess = e.mean - (hx + norm + 3.0 * e.std_error);
      worst = std::max(worst, excess);
      if (excess <= 0.0) ++passed;
      else failures += " " + fx.name + "/" + name + " exceeds by " + num(excess) + ";";
    }
  }
  const bool depths = depth_seen[1] && depth_seen[2] && depth_seen[3];
  const double t = seconds_since(t0);
  return {triples >= 30 && passed == triples && depths,
          std::to_string(passed) + "/" + std::to_string(triples) + " triples within h(x) + |h| + 3 sigma" +
              (depths ? " across depths 1-3" : " (depths 1-3 NOT all covered)") + ", worst margin " + num(worst) +
              failures + ", " + num(t) + " s"};
}

Verdict ac7(const std::vector<TreeFixture>& fixtures) {
  int ok = 0;
  double worst_norm = 0.0, worst_sandwich = 0.0;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto& fx = fixtures[f];
    const auto h0 = continuous_regularisation(fx.h, fx.gain);
    const double norm = matching_error(*fx.h).norm;
    const double norm0 = matching_error(*h0).norm;
    double viol = 0.0;
    for (const Point& y : interior_samples(fx.h->base.domain(), 1000, 31 + f)) {
      const double a = fx.h->value(y), b = h0->value(y);
      if (!std::isfinite(a)) continue;
      viol = std::max({viol, a - b, b - (a + norm)});
    }
    worst_norm = std::max(worst_norm, norm0);
    worst_sandwich = std::max(worst_sandwich, viol);
    ok += norm0 <= 1e-9 && viol <= 1e-12;
  }
  return {ok == static_cast<int>(fixtures.size()),
          std::to_string(ok) + "/" + std::to_string(fixtures.size()) + " trees regularised, max |h0| " +
              num(worst_norm) + ", max sandwich violation " + num(worst_sandwich)};
}

Verdict ac8() {
  const std::vector<std::pair<std::string, DomainDescriptor>> shapes = {
      {"disc", make_ball(Point(0, 0), 0.5)},
      {"offset disc", make_ball(Point(0.3, 0.2), 0.4)},
      {"annulus", make_annulus(Point(0, 0), 0.1, 0.6)},
      {"cap", make_cap(Point(1, 0), -0.2)},
      {"unit ball", FullBallDomain{2}}};
  int ok = 0, total = 0;
  double worst_ratio = 0.0;
  for (const auto& [name, dom] : shapes) {
    const GridRegion a = rasterize(dom, 400);
    const auto ba = boundary_samples(a, 1 << 20);
    for (double delta : {0.05, 0.02}) {
      ++total;
      const GridRegion ad = smooth_inner_approximation(a, delta);
      const double dh = hausdorff_distance(ba, boundary_samples(ad, 1 << 20));
      worst_ratio = std::max(worst_ratio, dh / delta);
      ok += dh < delta;
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " shape fixtures, max d_H/delta " + num(worst_ratio)};
}

Verdict ac9() {
  bool ok = true;
  std::string detail;
  for (const auto& p : all_presets()) {
    const RunConfig c = load_config(p);
    const GridField grid = make_grid(c);
    const double M = Dictionary(c.gain).M();
    const GridField w1 = unbranched_envelope(c.gain, grid);
    const double h = grid.spacing();
    double worst = -kInf;
    int nodes = 0;
    for (std::size_t k = 0; k < w1.size(); ++k) {
      if (!w1.active(k)) continue;
      const double r = w1.radius(k);
      if (1.0 - r > h) continue;
      ++nodes;
      worst = std::max(worst, w1.values[k] - M * (1.0 - r));
    }
    const bool good = nodes > 0 && worst <= 1e-9;
    ok &= good;
    detail += (detail.empty() ? "" : "; ") + c.name + ": " + std::to_string(nodes) + " nodes, max excess " + num(worst);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](const char* id, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    std::cout << id << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    failed += !v.pass;
  };
  report("AC-1", ac1);
  report("AC-2", ac2);
  report("AC-3", ac3);
  report("AC-4", ac4);
  report("AC-5", ac5);
  std::vector<TreeFixture> fixtures;
  try {
    fixtures = tree_fixtures();
  } catch (const std::exception& e) {
    std::cout << "fixture corpus failed: " << e.what() << std::endl;
  }
  report("AC-6", [&] { return fixtures.empty() ? Verdict{false, "no fixtures"} : ac6(fixtures); });
  report("AC-7", [&] { return fixtures.empty() ? Verdict{false, "no fixtures"} : ac7(fixtures); });
  report("AC-8", ac8);
  report("AC-9", ac9);
  return failed ? 1 : 0;
}
