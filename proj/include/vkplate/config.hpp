#pragma once

// Run configuration: benchmark presets, key=value config files, and the
// assembled mesh/model/constraint bundle a run operates on.

#include <vkplate/gradient_flow.hpp>
#include <vkplate/mesh.hpp>
#include <vkplate/plate_model.hpp>

#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vkplate {

enum class PresetKind { benchmark1, benchmark2, custom };

class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Everything a run needs, resolved and validated.
struct RunConfig {
  PresetKind preset = PresetKind::custom;
  DomainSpec domain;
  int nx = 8;
  int ny = 8;
  MaterialParams params;
  BoundarySelector boundary = BoundarySelector::all_edges;
  QuadratureMode quadrature = QuadratureMode::gauss2;
  EvolutionConfig solver;
  std::string out_dir = "out";
  double mag = 1.0;  ///< display magnification for VTK geometry only

  void validate() const {
    if (nx < 1) throw config_error("nx: must be >= 1");
    if (ny < 1) throw config_error("ny: must be >= 1");
    if (!(domain.x1_min < domain.x1_max))
      throw config_error("x1_min/x1_max: empty interval");
    if (!(domain.x2_min < domain.x2_max))
      throw config_error("x2_min/x2_max: empty interval");
    if (!(mag > 0)) throw config_error("mag: must be > 0");
    try {
      params.validate();
      solver.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());  // messages name the offending field
    }
  }
};

inline std::string to_string(PresetKind p) {
  switch (p) {
    case PresetKind::benchmark1: return "benchmark1";
    case PresetKind::benchmark2: return "benchmark2";
    default: return "custom";
  }
}
inline std::string to_string(BoundarySelector b) {
  return b == BoundarySelector::all_edges ? "all_edges" : "top_and_bottom";
}
inline std::string to_string(QuadratureMode m) {
  switch (m) {
    case QuadratureMode::paper: return "paper";
    case QuadratureMode::gauss3: return "gauss3";
    default: return "gauss2";
  }
}

/// Square plate benchmark, fully clamped: the initially bent sheet pressed
/// down by a uniform load, relaxing toward equilibrium.
inline RunConfig benchmark1_config() {
  RunConfig cfg;
  cfg.preset = PresetKind::benchmark1;
  cfg.domain = {-1.0, 1.0, -1.0, 1.0};
  cfg.nx = cfg.ny = 8;
  cfg.params = {1e3, 1e3, 3e3, -1e3};
  cfg.boundary = BoundarySelector::all_edges;
  cfg.quadrature = QuadratureMode::gauss2;
  cfg.solver.tau = 1.0;
  cfg.solver.n_max = 8;
  cfg.out_dir = "out";
  cfg.mag = 4.0;
  return cfg;
}

/// Same plate clamped only along x2 = +-1, pushed up from the flat state.
inline RunConfig benchmark2_config() {
  RunConfig cfg = benchmark1_config();
  cfg.preset = PresetKind::benchmark2;
  cfg.params.f = 1e2;
  cfg.boundary = BoundarySelector::top_and_bottom;
  cfg.mag = 7.0;
  return cfg;
}

inline RunConfig preset_config(PresetKind p) {
  switch (p) {
    case PresetKind::benchmark1: return benchmark1_config();
    case PresetKind::benchmark2: return benchmark2_config();
    default: return RunConfig{};
  }
}

/// Initial deflection of the first benchmark, v0 = (1-x1^2)^2 (1-x2^2)^2,
/// with the nodal derivative data the BFS space needs.
inline double benchmark1_v0(const Eigen::Vector2d& x) {
  const double a = 1 - x[0] * x[0], b = 1 - x[1] * x[1];
  return a * a * b * b;
}
inline Eigen::Vector2d benchmark1_v0_grad(const Eigen::Vector2d& x) {
  const double a = 1 - x[0] * x[0], b = 1 - x[1] * x[1];
  return {-4 * x[0] * a * b * b, -4 * x[1] * b * a * a};
}
inline double benchmark1_v0_mixed(const Eigen::Vector2d& x) {
  const double a = 1 - x[0] * x[0], b = 1 - x[1] * x[1];
  return 16 * x[0] * x[1] * a * b;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw config_error(key + ": cannot parse '" + value + "' as a number");
  }
}

inline int parse_int(const std::string& key, const std::string& value) {
  int x = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc{} || res.ptr != last)
    throw config_error(key + ": cannot parse '" + value + "' as an integer");
  return x;
}

inline void apply_key(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key == "preset") {
    if (value == "benchmark1")
      cfg = benchmark1_config();
    else if (value == "benchmark2")
      cfg = benchmark2_config();
    else if (value == "custom")
      cfg = RunConfig{};
    else
      throw config_error("preset: unknown preset '" + value + "'");
  } else if (key == "x1_min") cfg.domain.x1_min = parse_double(key, value);
  else if (key == "x1_max") cfg.domain.x1_max = parse_double(key, value);
  else if (key == "x2_min") cfg.domain.x2_min = parse_double(key, value);
  else if (key == "x2_max") cfg.domain.x2_max = parse_double(key, value);
  else if (key == "nx") cfg.nx = parse_int(key, value);
  else if (key == "ny") cfg.ny = parse_int(key, value);
  else if (key == "tau") cfg.solver.tau = parse_double(key, value);
  else if (key == "n_max") cfg.solver.n_max = parse_int(key, value);
  else if (key == "lambda") cfg.params.lambda = parse_double(key, value);
  else if (key == "mu") cfg.params.mu = parse_double(key, value);
  else if (key == "c") cfg.params.c = parse_double(key, value);
  else if (key == "f") cfg.params.f = parse_double(key, value);
  else if (key == "grad_tol") cfg.solver.grad_tol = parse_double(key, value);
  else if (key == "max_iter") cfg.solver.max_iter = parse_int(key, value);
  else if (key == "ls_shrink") cfg.solver.ls_shrink = parse_double(key, value);
  else if (key == "ls_slope") cfg.solver.ls_slope = parse_double(key, value);
  else if (key == "memory") cfg.solver.memory = parse_int(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "mag") cfg.mag = parse_double(key, value);
  else if (key == "boundary") {
    if (value == "all_edges") cfg.boundary = BoundarySelector::all_edges;
    else if (value == "top_and_bottom")
      cfg.boundary = BoundarySelector::top_and_bottom;
    else throw config_error("boundary: unknown selector '" + value + "'");
  } else if (key == "quadrature") {
    if (value == "paper") cfg.quadrature = QuadratureMode::paper;
    else if (value == "gauss2") cfg.quadrature = QuadratureMode::gauss2;
    else if (value == "gauss3") cfg.quadrature = QuadratureMode::gauss3;
    else throw config_error("quadrature: unknown mode '" + value + "'");
  } else {
    throw config_error("unknown key '" + key + "'");
  }
}

}  // namespace detail

/// Ordered key=value pairs, e.g. from command-line flags.
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Resolves a config from an optional file plus overrides (applied after the
/// file, in order).  Lines are key=value; blank lines and '#' comments are
/// skipped.  A preset key resets every field the preset pins; later lines
/// override individual values.
inline RunConfig load_config(const std::string& path,
                             const ConfigOverrides& overrides = {}) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string text = detail::trim(line.substr(0, line.find('#')));
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        throw config_error("line " + std::to_string(lineno) +
                           ": expected key=value, got '" + text + "'");
      detail::apply_key(cfg, detail::trim(text.substr(0, eq)),
                        detail::trim(text.substr(eq + 1)));
    }
  }
  for (const auto& [key, value] : overrides) detail::apply_key(cfg, key, value);
  cfg.validate();
  return cfg;
}

/// A run's working objects.  The mesh lives on the heap so states and the
/// model stay valid when the bundle is moved.
struct RunSetup {
  std::unique_ptr<MeshGrid> mesh;
  PlateModel model;
  ConstraintSet constraints;
  PlateState initial;
};

inline RunSetup make_setup(const RunConfig& cfg) {
  cfg.validate();
  auto mesh = std::make_unique<MeshGrid>(
      build_uniform_mesh(cfg.domain, cfg.nx, cfg.ny));
  ConstraintSet cs = build_constraints(*mesh, cfg.boundary);
  PlateState z0 = cfg.preset == PresetKind::benchmark1
                      ? interpolate_initial(*mesh, benchmark1_v0,
                                            benchmark1_v0_grad,
                                            benchmark1_v0_mixed)
                      : PlateState::zero(*mesh);
  PlateModel model(*mesh, cfg.params, cfg.quadrature);
  return RunSetup{std::move(mesh), std::move(model), std::move(cs),
                  std::move(z0)};
}

}  // namespace vkplate
