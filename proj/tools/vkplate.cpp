// Command-line front end: run a configured evolution, verify the variational
// structure on the configured problem, or run the refinement study.

#include <vkplate/io.hpp>
#include <vkplate/verification.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>
#include <string>

namespace {

struct CommonFlags {
  std::string config;
  std::string preset;
  std::string out;
  std::string quadrature;
  int nx = 0;
  int ny = 0;
  int steps = 0;
  double tau = 0.0;
  double mag = 0.0;

  CLI::Option* o_preset = nullptr;
  CLI::Option* o_nx = nullptr;
  CLI::Option* o_ny = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_tau = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_quad = nullptr;
  CLI::Option* o_mag = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "key=value config file");
    o_preset = cmd->add_option("--preset", preset, "benchmark1|benchmark2|custom")
                   ->check(CLI::IsMember({"benchmark1", "benchmark2", "custom"}));
    o_nx = cmd->add_option("--nx", nx, "cells along x1");
    o_ny = cmd->add_option("--ny", ny, "cells along x2");
    o_tau = cmd->add_option("--tau", tau, "time step");
    o_steps = cmd->add_option("--steps", steps, "number of time steps (n_max)");
    o_out = cmd->add_option("--out", out, "output directory");
    o_quad = cmd->add_option("--quadrature", quadrature, "paper|gauss2|gauss3")
                 ->check(CLI::IsMember({"paper", "gauss2", "gauss3"}));
    o_mag = cmd->add_option("--mag", mag, "display magnification for VTK");
  }

  vkplate::RunConfig resolve() const {
    vkplate::ConfigOverrides ov;
    if (o_preset->count()) ov.push_back({"preset", preset});
    if (o_nx->count()) ov.push_back({"nx", std::to_string(nx)});
    if (o_ny->count()) ov.push_back({"ny", std::to_string(ny)});
    if (o_tau->count()) ov.push_back({"tau", vkplate::fmt_g17(tau)});
    if (o_steps->count()) ov.push_back({"n_max", std::to_string(steps)});
    if (o_out->count()) ov.push_back({"out_dir", out});
    if (o_quad->count()) ov.push_back({"quadrature", quadrature});
    if (o_mag->count()) ov.push_back({"mag", vkplate::fmt_g17(mag)});
    return vkplate::load_config(config, ov);
  }
};

int cmd_verify(const vkplate::RunConfig& cfg) {
  using namespace vkplate;
  RunSetup setup = make_setup(cfg);
  const PlateSystem sys(setup.model, setup.constraints);
  bool ok = true;
  const auto report = [&](const std::string& name, bool pass,
                          const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << "  " << name << "  " << detail
              << '\n';
    ok = ok && pass;
  };

  std::mt19937 rng(2027u);
  const Eigen::VectorXd za = detail::random_vector(sys.dimension(), 0.1, rng);
  const Eigen::VectorXd zb = detail::random_vector(sys.dimension(), 0.1, rng);

  const double e_phi = fd_gradient_check(sys, za);
  report("energy gradient vs central differences", e_phi <= 1e-6,
         "max rel err " + fmt_g17(e_phi));
  const double e_d2 = fd_metric_sq_gradient_check(sys, zb, za);
  report("squared-distance gradient vs central differences", e_d2 <= 1e-6,
         "max rel err " + fmt_g17(e_d2));

  const MetricAxiomReport ax = metric_axioms_sample(sys, 100, 2028u, 0.5);
  report("metric axioms on 100 random triples",
         ax.max_self_distance == 0.0 && ax.symmetry_bitexact &&
             ax.triangle_violations == 0,
         "self " + fmt_g17(ax.max_self_distance) + ", symmetry " +
             (ax.symmetry_bitexact ? std::string("bit-exact")
                                   : std::string("BROKEN")) +
             ", triangle violations " + std::to_string(ax.triangle_violations));

  const Eigen::VectorXd z0 = sys.from_state(setup.initial);
  const auto [z1, rec] = minimize_step(sys, cfg.solver.tau, z0, cfg.solver, 1);
  const ResidualReport res = weak_residual(
      setup.model, setup.constraints, setup.initial, sys.to_state(z1),
      cfg.solver.tau);
  const double gap_tol = 1e-10 * (1.0 + res.norm_inf);
  report("weak residual equals incremental gradient",
         res.identity_gap <= gap_tol, "gap " + fmt_g17(res.identity_gap));
  const double stat_tol =
      cfg.solver.grad_tol * (1.0 + std::abs(rec.incr_value));
  report("weak residual small at accepted minimizer",
         res.norm_inf <= stat_tol,
         "|r|_inf " + fmt_g17(res.norm_inf) + " vs " + fmt_g17(stat_tol) +
             (rec.warned ? " [step warned]" : ""));

  std::cout << (ok ? "verify: all checks passed"
                   : "verify: some checks FAILED")
            << '\n';
  return ok ? 0 : 1;
}

int cmd_refine(const vkplate::RunConfig& cfg) {
  using namespace vkplate;
  const double horizon = cfg.solver.n_max * cfg.solver.tau;
  const std::vector<RefinementLevel> ladder = {
      {cfg.nx, cfg.solver.tau},
      {2 * cfg.nx, cfg.solver.tau / 2},
      {4 * cfg.nx, cfg.solver.tau / 4}};
  std::cout << "refinement ladder to T=" << fmt_g17(horizon) << ":";
  for (const auto& lvl : ladder)
    std::cout << " (" << lvl.nx << ", " << fmt_g17(lvl.tau) << ")";
  std::cout << '\n';

  const RefinementReport rep = refinement_study(cfg, ladder, horizon);

  std::filesystem::create_directories(cfg.out_dir);
  const std::string path =
      (std::filesystem::path(cfg.out_dir) / "refinement.csv").string();
  write_refinement_csv(rep, path);

  bool monotone = true;
  for (std::size_t k = 0; k < rep.sample_times.size(); ++k) {
    std::cout << "t=" << fmt_g17(rep.sample_times[k]) << ":";
    for (std::size_t l = 0; l < rep.distances.size(); ++l) {
      std::cout << "  D(level" << l << "->" << l + 1
                << ")=" << fmt_g17(rep.distances[l][k]);
      if (l > 0 && !(rep.distances[l][k] < rep.distances[l - 1][k]))
        monotone = false;
    }
    std::cout << '\n';
  }
  std::cout << "consecutive-level distances "
            << (monotone ? "decrease monotonically" : "do NOT decrease")
            << "; table written to " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasistatic evolution of a viscoelastic von Karman plate"};
  app.require_subcommand(1);

  CommonFlags run_flags, verify_flags, refine_flags;
  CLI::App* cmd_run_p = app.add_subcommand("run", "run a configured evolution");
  run_flags.attach(cmd_run_p);
  CLI::App* cmd_verify_p = app.add_subcommand(
      "verify", "gradient checks, metric axioms, weak-residual identity");
  verify_flags.attach(cmd_verify_p);
  CLI::App* cmd_refine_p = app.add_subcommand(
      "refine", "mesh/time-step refinement study from the configured base");
  refine_flags.attach(cmd_refine_p);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run_p->parsed()) return vkplate::run(run_flags.resolve());
    if (cmd_verify_p->parsed()) return cmd_verify(verify_flags.resolve());
    if (cmd_refine_p->parsed()) return cmd_refine(refine_flags.resolve());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
