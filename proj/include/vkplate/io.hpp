#pragma once

// Exporters and run orchestration: per-step CSV, legacy ASCII VTK snapshots
// of the displaced plate, and the refinement-study table.

#include <vkplate/config.hpp>
#include <vkplate/gradient_flow.hpp>
#include <vkplate/plate_model.hpp>
#include <vkplate/verification.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vkplate {

/// Shortest decimal text that round-trips the double exactly.
inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Writes the per-step table; one row per accepted step, '\n' endings.
inline void write_steps_csv(const EvolutionTrace& trace, double tau,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "n,t,phi,diss,incr_value,iters,grad_norm,descent_slack\n";
  for (const StepRecord& r : trace.records) {
    out << r.n << ',' << fmt_g17(r.n * tau) << ',' << fmt_g17(r.phi) << ','
        << fmt_g17(r.diss) << ',' << fmt_g17(r.incr_value) << ',' << r.iters
        << ',' << fmt_g17(r.grad_norm) << ',' << fmt_g17(r.descent_slack)
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

/// Parses a steps.csv back into records (the warned flag is not serialized).
inline std::vector<StepRecord> parse_steps_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty CSV '" + path + "'");
  if (line != "n,t,phi,diss,incr_value,iters,grad_norm,descent_slack")
    throw std::runtime_error("unexpected CSV header in '" + path + "'");
  std::vector<StepRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8)
      throw std::runtime_error("malformed CSV row: '" + line + "'");
    StepRecord r;
    r.n = std::stoi(fields[0]);
    r.phi = std::stod(fields[2]);
    r.diss = std::stod(fields[3]);
    r.incr_value = std::stod(fields[4]);
    r.iters = std::stoi(fields[5]);
    r.grad_norm = std::stod(fields[6]);
    r.descent_slack = std::stod(fields[7]);
    records.push_back(r);
  }
  return records;
}

/// Legacy ASCII VTK structured grid: nodes displaced by (mag*u, mag*v), with
/// point data u (3 components, third zero), v, and grad_v.  Magnification
/// affects geometry only, never the stored DOFs.
inline void write_vtk(const PlateState& state, double mag,
                      const std::string& path) {
  if (!(mag > 0)) throw std::invalid_argument("write_vtk: mag must be > 0");
  if (state.mesh == nullptr)
    throw std::invalid_argument("write_vtk: state has no mesh");
  const MeshGrid& mesh = *state.mesh;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

  const int n = mesh.n_nodes();
  out << "# vtk DataFile Version 3.0\n";
  out << "vkplate deformed configuration\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << mesh.nx + 1 << ' ' << mesh.ny + 1 << " 1\n";
  out << "POINTS " << n << " double\n";
  for (int node = 0; node < n; ++node) {
    const Eigen::Vector2d& x = mesh.node_coords[node];
    out << fmt_g17(x[0] + mag * state.u_dofs[2 * node]) << ' '
        << fmt_g17(x[1] + mag * state.u_dofs[2 * node + 1]) << ' '
        << fmt_g17(mag * state.v_dofs[4 * node]) << '\n';
  }
  out << "POINT_DATA " << n << '\n';
  out << "VECTORS u double\n";
  for (int node = 0; node < n; ++node)
    out << fmt_g17(state.u_dofs[2 * node]) << ' '
        << fmt_g17(state.u_dofs[2 * node + 1]) << " 0\n";
  out << "SCALARS v double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (int node = 0; node < n; ++node)
    out << fmt_g17(state.v_dofs[4 * node]) << '\n';
  out << "VECTORS grad_v double\n";
  for (int node = 0; node < n; ++node)
    out << fmt_g17(state.v_dofs[4 * node + 1]) << ' '
        << fmt_g17(state.v_dofs[4 * node + 2]) << " 0\n";
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

inline std::string step_vtk_name(int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%04d.vtk", n);
  return buf;
}

/// Writes the refinement table; distances are blank on the coarsest level.
inline void write_refinement_csv(const RefinementReport& rep,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "level,nx,tau,t,phi,dist_to_prev\n";
  for (std::size_t l = 0; l < rep.ladder.size(); ++l) {
    for (std::size_t k = 0; k < rep.sample_times.size(); ++k) {
      out << l << ',' << rep.ladder[l].nx << ',' << fmt_g17(rep.ladder[l].tau)
          << ',' << fmt_g17(rep.sample_times[k]) << ','
          << fmt_g17(rep.energies[l][k]) << ',';
      if (l > 0) out << fmt_g17(rep.distances[l - 1][k]);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

/// Executes a configured evolution and writes steps.csv plus one VTK snapshot
/// per step (only the initial snapshot when n_max = 0).  Returns a process
/// exit status; failures are diagnosed on err.
inline int run(const RunConfig& cfg, std::ostream& log = std::cout,
               std::ostream& err = std::cerr) {
  try {
    RunSetup setup = make_setup(cfg);
    const PlateSystem sys(setup.model, setup.constraints);
    log << "preset=" << to_string(cfg.preset) << " mesh=" << cfg.nx << 'x'
        << cfg.ny << " tau=" << cfg.solver.tau << " n_max=" << cfg.solver.n_max
        << " quadrature=" << to_string(cfg.quadrature)
        << " boundary=" << to_string(cfg.boundary) << '\n';
    log << "initial energy " << fmt_g17(sys.energy(sys.from_state(setup.initial)))
        << '\n';

    const EvolutionTrace trace =
        run_evolution(sys, sys.from_state(setup.initial), cfg.solver);

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    write_steps_csv(trace, cfg.solver.tau, (dir / "steps.csv").string());
    if (trace.n_steps() == 0) {
      write_vtk(setup.initial, cfg.mag, (dir / step_vtk_name(0)).string());
    } else {
      for (int n = 1; n <= trace.n_steps(); ++n)
        write_vtk(sys.to_state(trace.states[n - 1]), cfg.mag,
                  (dir / step_vtk_name(n)).string());
    }
    for (const StepRecord& r : trace.records) {
      log << "step " << r.n << ": phi=" << fmt_g17(r.phi)
          << " diss=" << fmt_g17(r.diss) << " iters=" << r.iters
          << " grad_norm=" << fmt_g17(r.grad_norm)
          << (r.warned ? " [warned]" : "") << '\n';
    }
    log << "wrote " << (trace.n_steps() == 0 ? 1 : trace.n_steps())
        << " VTK snapshot(s) and steps.csv to " << cfg.out_dir << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace vkplate
