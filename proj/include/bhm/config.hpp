#pragma once

// JSON run configurations (presets): gain, grid, envelope, oracle, path and
// reproduction settings.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bhm/envelope.hpp"
#include "bhm/gain.hpp"
#include "bhm/pathsim.hpp"

namespace bhm {

struct RunConfig {
  std::string name = "run";
  int dim = 2;
  GainField gain;
  double gstar_margin = 0.25;
  bool radial_grid = true;
  int nodes = 2048;
  double r_min = 1e-3;
  int n = 257;
  EnvelopeConfig env;
  int max_depth = 16;
  PathConfig path;
  std::size_t n_paths = 0;
  std::vector<Point> probes;
  int trace_files = 2;
  bool oracle_radial = false;
  bool oracle_psor = false;
  int psor_n = 257;
  double psor_omega = 1.7;
  double psor_tol = 1e-10;
  double gap_margin = 1e-3;
  double oracle_tol = 1e-3;
  std::filesystem::path out = "out";
};

namespace config_detail {

using json = nlohmann::ordered_json;

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Input, std::string("config: field '") + key + "' has the wrong type");
  }
}

inline const json& block(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  require(j.at(key).is_object(), ErrorKind::Input, std::string("config: '") + key + "' must be an object");
  return j.at(key);
}

inline Point point_from(const json& a, int dim) {
  require(a.is_array() && static_cast<int>(a.size()) == dim, ErrorKind::Input,
          "config: points need exactly d coordinates");
  Point p = Point::zero(dim);
  for (int i = 0; i < dim; ++i) p[i] = a.at(static_cast<std::size_t>(i)).get<double>();
  return p;
}

inline GainField build_gain(const json& gj, int dim) {
  const std::string type = get<std::string>(gj, "type", "");
  GainField g;
  if (type == "spiked") {
    g = spiked_gain(get(gj, "epsilon", 0.05), dim);
  } else if (type == "plateau") {
    g = plateau_gain(get(gj, "r0", 0.2), get(gj, "r1", 0.25), get(gj, "height", 1.0), dim);
  } else if (type == "ring") {
    g = ring_gain(get(gj, "center", 0.3), get(gj, "half_width", 0.1), get(gj, "height", 1.0), dim);
  } else if (type == "bump") {
    require(dim == 2, ErrorKind::Input, "config: bump gains need d = 2");
    require(gj.contains("center"), ErrorKind::Input, "config: bump gain needs 'center'");
    g = bump_gain(point_from(gj.at("center"), 2), get(gj, "radius", 0.2), get(gj, "height", 1.0));
  } else {
    throw Error(ErrorKind::Input, "config: gain.type must be spiked, plateau, ring or bump (got '" + type + "')");
  }
  const double w = get(gj, "mollify", 0.0);
  require(w >= 0.0, ErrorKind::Input, "config: gain.mollify must be >= 0");
  if (w > 0.0) g = mollify(g, w);
  return g;
}

}  // namespace config_detail

inline RunConfig load_config(const std::filesystem::path& path) {
  using namespace config_detail;
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::Input, "config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("config: invalid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorKind::Input, "config: top level must be an object");
  RunConfig c;
  c.name = get<std::string>(j, "name", path.stem().string());
  c.dim = get(j, "dimension", 2);
  require(c.dim == 2 || c.dim == 3, ErrorKind::Input, "config: dimension must be 2 or 3");
  const json& gj = block(j, "gain");
  c.gstar_margin = get(gj, "gstar_margin", 0.25);
  c.gain = with_gstar(build_gain(gj, c.dim), c.gstar_margin);

  const json& grid = block(j, "grid");
  const std::string kind = get<std::string>(grid, "kind", "radial");
  require(kind == "radial" || kind == "cartesian", ErrorKind::Input, "config: grid.kind must be radial or cartesian");
  c.radial_grid = kind == "radial";
  c.nodes = get(grid, "nodes", c.nodes);
  c.r_min = get(grid, "r_min", c.r_min);
  c.n = get(grid, "n", c.n);
  require(c.radial_grid || c.dim == 2, ErrorKind::Input, "config: Cartesian grids need d = 2");
  require(c.radial_grid || c.gain.dim == 2, ErrorKind::Input, "config: Cartesian grids need a 2D gain");
  require(!c.radial_grid || c.gain.radial, ErrorKind::Input, "config: radial grids need a radial gain");

  const json& ej = block(j, "envelope");
  c.env.max_iter = get(ej, "max_iter", c.env.max_iter);
  c.env.tol = get(ej, "tol", c.env.tol);
  c.env.contact_tol = get(ej, "contact_tol", c.env.contact_tol);
  c.env.omega = get(ej, "omega", c.env.omega);
  c.env.solver_tol = get(ej, "solver_tol", c.env.solver_tol);
  c.env.max_sweeps = get(ej, "max_sweeps", c.env.max_sweeps);
  c.max_depth = get(ej, "max_depth", c.max_depth);
  require(c.max_depth >= 1, ErrorKind::Input, "config: envelope.max_depth must be >= 1");
  require(c.env.max_iter >= 0, ErrorKind::Input, "config: envelope.max_iter must be >= 0");
  require(c.env.tol > 0.0 && c.env.contact_tol >= 0.0, ErrorKind::Input, "config: envelope tolerances must be positive");
  require(c.env.omega > 0.0 && c.env.omega < 2.0, ErrorKind::Input, "config: envelope.omega must lie in (0, 2)");

  const json& oj = block(j, "oracle");
  c.oracle_radial = get(oj, "radial", false);
  c.oracle_psor = get(oj, "psor", false);
  c.psor_n = get(oj, "psor_n", c.psor_n);
  c.psor_omega = get(oj, "omega", c.psor_omega);
  c.psor_tol = get(oj, "tol", c.psor_tol);

  const json& pj = block(j, "paths");
  c.path.dt = get(pj, "dt", c.path.dt);
  c.path.seed = get<std::uint64_t>(pj, "seed", c.path.seed);
  c.path.max_time = get(pj, "max_time", c.path.max_time);
  c.path.eps_wos = get(pj, "eps_wos", c.path.eps_wos);
  const std::string scheme = get<std::string>(pj, "scheme", "wos-jump");
  require(scheme == "wos-jump" || scheme == "euler", ErrorKind::Input, "config: paths.scheme must be euler or wos-jump");
  c.path.scheme = scheme == "euler" ? Scheme::Euler : Scheme::WosJump;
  validate(c.path);
  const long n_paths = get(pj, "n_paths", 0L);
  require(n_paths >= 0, ErrorKind::Input, "config: paths.n_paths must be >= 0");
  c.n_paths = static_cast<std::size_t>(n_paths);
  c.trace_files = get(pj, "trace_files", c.trace_files);
  if (pj.contains("probes")) {
    require(pj.at("probes").is_array(), ErrorKind::Input, "config: paths.probes must be an array");
    for (const auto& p : pj.at("probes")) {
      c.probes.push_back(point_from(p, c.dim));
      require(c.probes.back().norm() < 1.0, ErrorKind::Input, "config: probes must lie in the open unit ball");
    }
  }

  const json& rj = block(j, "reproduce");
  c.gap_margin = get(rj, "gap_margin", c.gap_margin);
  c.oracle_tol = get(rj, "oracle_tol", c.oracle_tol);
  c.out = get<std::string>(j, "output", c.out.string());
  return c;
}

inline GridField make_grid(const RunConfig& c) {
  return c.radial_grid ? radial_grid(c.nodes, c.r_min, c.dim) : cartesian_grid(c.n);
}

}  // namespace bhm
