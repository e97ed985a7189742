// Acceptance gate: one pass/fail line per criterion, pinned tolerances.
// Criteria 5, 6, and 8 share a single Benchmark I evolution; its cost is
// charged to the first of them that runs (criterion 5 in declaration order).

#include <vkplate/config.hpp>
#include <vkplate/elements.hpp>
#include <vkplate/gradient_flow.hpp>
#include <vkplate/io.hpp>
#include <vkplate/plate_model.hpp>
#include <vkplate/verification.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

using namespace vkplate;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

// limit <= 0 means the criterion carries no runtime bound of its own.
bool report(int id, const std::string& label, bool ok, double secs,
            double limit, const std::string& detail = "") {
  const bool in_time = limit <= 0.0 || secs < limit;
  const bool pass = ok && in_time;
  std::ostringstream line;
  line << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << label;
  if (!detail.empty()) line << " (" << detail << ")";
  line << " [" << std::fixed << std::setprecision(2) << secs << " s";
  if (limit > 0 && !in_time) line << ", over the " << limit << " s budget";
  line << "]";
  std::printf("%s\n", line.str().c_str());
  std::fflush(stdout);
  return pass;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

const RunConfig kBench1 = benchmark1_config();
const RunConfig kBench2 = benchmark2_config();

struct BenchRun {
  RunSetup setup;
  PlateSystem sys;
  EvolutionTrace trace;
  double secs;

  explicit BenchRun(const RunConfig& cfg)
      : setup(make_setup(cfg)), sys(setup.model, setup.constraints), secs(0) {
    const Stopwatch watch;
    trace = run_evolution(sys, sys.from_state(setup.initial), cfg.solver);
    secs = watch.seconds();
  }
};

const BenchRun& bench1() {
  static BenchRun run(kBench1);
  return run;
}

double center_deflection(const BenchRun& run, const Eigen::VectorXd& z) {
  const MeshGrid& mesh = *run.setup.mesh;
  const int center = mesh.node_index(mesh.nx / 2, mesh.ny / 2);
  return run.sys.to_state(z).v_dofs[4 * center];
}

}  // namespace

TEST_CASE("criterion 1: gradient consistency") {
  const Stopwatch watch;
  const MeshGrid mesh = build_uniform_mesh({-1, 1, -1, 1}, 4, 4);
  const ConstraintSet cs = build_constraints(mesh, BoundarySelector::all_edges);
  const PlateModel model(mesh, kBench1.params, kBench1.quadrature);
  const PlateSystem sys(model, cs);

  std::mt19937 rng(2027u);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd z = detail::random_vector(sys.dimension(), 0.1, rng);
    const Eigen::VectorXd prev =
        detail::random_vector(sys.dimension(), 0.1, rng);
    worst = std::max(worst, fd_gradient_check(sys, z));
    worst = std::max(worst, fd_metric_sq_gradient_check(sys, prev, z));
  }
  CHECK(report(1, "energy and squared-distance gradients match central FD",
               worst <= 1e-6, watch.seconds(), 5.0,
               "max rel err " + fmt(worst)));
}

TEST_CASE("criterion 2: deflection element fidelity") {
  const Stopwatch watch;
  const double hx = 0.25, hy = 0.5;  // binary-exact cell sizes

  // Nodal duality: each DOF functional picks out exactly its own basis
  // function, to the bit.
  bool kronecker = true;
  const double cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
  for (int corner = 0; corner < 4; ++corner) {
    const BFSEval at = bfs_eval(cx[corner], cy[corner], hx, hy);
    for (int a = 0; a < 4; ++a)
      for (int m = 0; m < 4; ++m) {
        const int b = 4 * a + m;
        const double want = a == corner ? 1.0 : 0.0;
        kronecker &= at.values[b] == (m == 0 ? want : 0.0);
        kronecker &= at.grads[b][0] == (m == 1 ? want : 0.0);
        kronecker &= at.grads[b][1] == (m == 2 ? want : 0.0);
        kronecker &= at.hessians[b](0, 1) == (m == 3 ? want : 0.0);
      }
  }

  // A random bicubic lies in the element space and must be reproduced.
  std::mt19937 rng(101u);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  double cubic[4][4];
  for (auto& row : cubic)
    for (double& c : row) c = coef(rng);
  const double gx = 0.31, gy = 0.57;  // physical cell (0,gx) x (0,gy)
  const auto poly = [&](double x, double y, int dx, int dy) {
    double acc = 0.0;
    for (int i = dx; i < 4; ++i)
      for (int j = dy; j < 4; ++j) {
        double term = cubic[i][j];
        for (int r = 0; r < dx; ++r) term *= i - r;
        for (int r = 0; r < dy; ++r) term *= j - r;
        acc += term * std::pow(x, i - dx) * std::pow(y, j - dy);
      }
    return acc;
  };
  double dofs[16];
  for (int a = 0; a < 4; ++a) {
    const double x = cx[a] * gx, y = cy[a] * gy;
    dofs[4 * a] = poly(x, y, 0, 0);
    dofs[4 * a + 1] = poly(x, y, 1, 0);
    dofs[4 * a + 2] = poly(x, y, 0, 1);
    dofs[4 * a + 3] = poly(x, y, 1, 1);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_rel = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double xi = unit(rng), eta = unit(rng);
    const BFSEval at = bfs_eval(xi, eta, gx, gy);
    double val = 0.0;
    for (int b = 0; b < 16; ++b) val += dofs[b] * at.values[b];
    const double want = poly(xi * gx, eta * gy, 0, 0);
    worst_rel =
        std::max(worst_rel, std::abs(val - want) / (1.0 + std::abs(want)));
  }

  // Value and full gradient agree across a shared vertical edge.
  double worst_jump = 0.0;
  std::uniform_real_distribution<double> coef2(-2.0, 2.0);
  double left[16], right[16];
  for (double& c : left) c = coef2(rng);
  // Shared edge DOFs: left corners 1,2 coincide with right corners 0,3.
  for (double& c : right) c = coef2(rng);
  for (int m = 0; m < 4; ++m) {
    right[0 + m] = left[4 + m];    // right corner 0 = left corner 1
    right[12 + m] = left[8 + m];   // right corner 3 = left corner 2
  }
  for (int k = 0; k < 10; ++k) {
    const double eta = unit(rng);
    const BFSEval el = bfs_eval(1.0, eta, gx, gy);
    const BFSEval er = bfs_eval(0.0, eta, gx, gy);
    double vl = 0, vr = 0;
    Eigen::Vector2d gl = Eigen::Vector2d::Zero(), gr = gl;
    for (int b = 0; b < 16; ++b) {
      vl += left[b] * el.values[b];
      gl += left[b] * el.grads[b];
      vr += right[b] * er.values[b];
      gr += right[b] * er.grads[b];
    }
    worst_jump = std::max(worst_jump, std::abs(vl - vr));
    worst_jump = std::max(worst_jump, (gl - gr).cwiseAbs().maxCoeff());
  }

  CHECK(report(2, "bicubic reproduction, C1 continuity, nodal duality",
               kronecker && worst_rel <= 1e-11 && worst_jump <= 1e-12,
               watch.seconds(), 1.0,
               "rel err " + fmt(worst_rel) + ", edge jump " + fmt(worst_jump) +
                   ", duality " + (kronecker ? "exact" : "BROKEN")));
}

TEST_CASE("criterion 3: through-thickness representation") {
  const Stopwatch watch;
  const MeshGrid mesh = build_uniform_mesh({-1, 1, -1, 1}, 8, 8);
  MaterialParams prm = kBench1.params;
  prm.f = 0.0;

  std::mt19937 rng(311u);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  double worst = 0.0;
  for (QuadratureMode mode :
       {QuadratureMode::gauss2, QuadratureMode::paper}) {
    const PlateModel model(mesh, prm, mode);
    for (int k = 0; k < 10; ++k) {
      PlateState a = PlateState::zero(mesh);
      PlateState b = PlateState::zero(mesh);
      for (Eigen::Index i = 0; i < a.u_dofs.size(); ++i) {
        a.u_dofs[i] = dist(rng);
        b.u_dofs[i] = dist(rng);
      }
      for (Eigen::Index i = 0; i < a.v_dofs.size(); ++i) {
        a.v_dofs[i] = dist(rng);
        b.v_dofs[i] = dist(rng);
      }
      const double e = model.energy(a);
      worst = std::max(worst, std::abs(model.energy_via_thickness(a) - e) /
                                  std::abs(e));
      const double d = model.dissipation(a, b);
      worst = std::max(worst,
                       std::abs(model.dissipation_via_thickness(a, b) - d) / d);
    }
  }
  CHECK(report(3, "midsurface forms equal the 3D thickness integral",
               worst <= 1e-10, watch.seconds(), 5.0,
               "max rel err " + fmt(worst)));
}

TEST_CASE("criterion 4: metric axioms") {
  const Stopwatch watch;
  const MeshGrid mesh = build_uniform_mesh({-1, 1, -1, 1}, 4, 4);
  const ConstraintSet cs = build_constraints(mesh, BoundarySelector::all_edges);
  const PlateModel model(mesh, kBench1.params, kBench1.quadrature);
  const PlateSystem sys(model, cs);

  const MetricAxiomReport rep = metric_axioms_sample(sys, 100, 2028u);
  const bool ok = rep.max_self_distance == 0.0 && rep.symmetry_bitexact &&
                  rep.triangle_violations == 0;
  CHECK(report(4, "identity, bit-exact symmetry, triangle inequality", ok,
               watch.seconds(), 10.0,
               "worst normalized triangle slack " +
                   fmt(rep.worst_normalized_violation)));
}

TEST_CASE("criterion 5: minimizing-movement descent") {
  const Stopwatch watch;
  const BenchRun& run = bench1();

  bool descent = true, decreasing = true;
  double phi_prev = run.trace.initial_energy;
  for (const StepRecord& r : run.trace.records) {
    const double lhs = r.phi + r.diss * r.diss / (2.0 * run.trace.tau);
    if (!(lhs <= phi_prev + 1e-9 * (1.0 + std::abs(phi_prev))))
      descent = false;
    const bool stationary =
        r.grad_norm <= kBench1.solver.grad_tol * (1.0 + std::abs(r.incr_value));
    if (!(r.phi < phi_prev) && !stationary) decreasing = false;
    phi_prev = r.phi;
  }
  CHECK(report(5, "every step pays its dissipation and lowers the energy",
               descent && decreasing, run.secs + watch.seconds(), 120.0,
               "final phi " + fmt(run.trace.records.back().phi)));
}

TEST_CASE("criterion 6: weak-residual identity") {
  const Stopwatch watch;
  const BenchRun& run = bench1();
  const PlateModel& model = run.setup.model;
  const ConstraintSet& cs = run.setup.constraints;

  bool ok = true;
  double worst_gap = 0.0, worst_norm = 0.0;
  PlateState prev = run.setup.initial;
  for (int n = 0; n < run.trace.n_steps(); ++n) {
    const PlateState cur = run.sys.to_state(run.trace.states[n]);
    const ResidualReport rep =
        weak_residual(model, cs, prev, cur, run.trace.tau);
    const double phi = run.trace.records[n].incr_value;
    worst_gap = std::max(worst_gap, rep.identity_gap / (1.0 + rep.norm_inf));
    worst_norm =
        std::max(worst_norm, rep.norm_inf / (1.0 + std::abs(phi)));
    if (rep.identity_gap > 1e-10 * (1.0 + rep.norm_inf)) ok = false;
    if (rep.norm_inf > kBench1.solver.grad_tol * (1.0 + std::abs(phi)))
      ok = false;
    prev = cur;
  }
  CHECK(report(6, "assembled weak residual equals the step gradient", ok,
               watch.seconds(), 0.0,
               "worst normalized gap " + fmt(worst_gap) +
                   ", worst residual/tol scale " + fmt(worst_norm)));
}

TEST_CASE("criterion 7: quadratic-well oracle") {
  const Stopwatch watch;
  struct Toy {
    Eigen::VectorXd b;
    Eigen::Index dimension() const { return b.size(); }
    double energy(const Eigen::VectorXd& z) const {
      return 0.5 * (z - b).squaredNorm();
    }
    double metric(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
      return (x - y).norm();
    }
    Eigen::VectorXd energy_gradient(const Eigen::VectorXd& z) const {
      return z - b;
    }
    Eigen::VectorXd metric_sq_gradient(const Eigen::VectorXd& prev,
                                       const Eigen::VectorXd& z) const {
      return 2.0 * (z - prev);
    }
  };
  Eigen::VectorXd b(3);
  b << 2.0, -0.5, 1.25;
  const Toy sys{b};

  EvolutionConfig cfg;
  cfg.tau = 1.0;
  cfg.n_max = 10;
  const EvolutionTrace trace =
      run_evolution(sys, Eigen::VectorXd::Zero(3), cfg);

  double worst = 0.0;
  for (int n = 1; n <= 10; ++n) {
    const Eigen::VectorXd want = b * (1.0 - std::pow(2.0, -n));
    worst = std::max(worst, (trace.states[n - 1] - want).norm());
  }
  CHECK(report(7, "implicit-Euler iterates match the closed form",
               worst <= 10.0 * cfg.grad_tol, watch.seconds(), 1.0,
               "max per-step error " + fmt(worst)));
}

TEST_CASE("criterion 8: first benchmark shape") {
  const Stopwatch watch;
  const BenchRun& run = bench1();

  bool monotone = true;
  double v_prev = center_deflection(run, run.sys.from_state(run.setup.initial));
  double v_final = v_prev;
  for (const Eigen::VectorXd& z : run.trace.states) {
    v_final = center_deflection(run, z);
    if (!(v_final < v_prev)) monotone = false;
    v_prev = v_final;
  }
  const bool negative = v_final < 0.0;

  const PlateState final_state = run.sys.to_state(run.trace.states.back());
  const double grad_norm =
      run.setup.model.energy_gradient(final_state, run.setup.constraints)
          .norm();
  const double near_eq_tol =
      100.0 * kBench1.solver.grad_tol *
      (1.0 + std::abs(run.trace.records.back().phi));
  const bool near_equilibrium = grad_norm <= near_eq_tol;

  CHECK(report(
      8, "center deflection sinks below zero near equilibrium",
      monotone && negative && near_equilibrium, watch.seconds(), 0.0,
      std::string("monotone decrease ") + (monotone ? "yes" : "NO") +
          ", final v(0,0) " + fmt(v_final) + (negative ? " < 0" : " not < 0") +
          ", |grad phi| " + fmt(grad_norm) +
          (near_equilibrium ? " <= " : " > ") + fmt(near_eq_tol)));
}

TEST_CASE("criterion 9: second benchmark shape") {
  const Stopwatch watch;
  const BenchRun run(kBench2);

  const MeshGrid& mesh = *run.setup.mesh;
  const PlateState final_state = run.sys.to_state(run.trace.states.back());
  const double v_left =
      final_state.v_dofs[4 * mesh.node_index(0, mesh.ny / 2)];
  const double v_right =
      final_state.v_dofs[4 * mesh.node_index(mesh.nx, mesh.ny / 2)];
  const double v_bottom =
      final_state.v_dofs[4 * mesh.node_index(mesh.nx / 2, 0)];
  const double v_top =
      final_state.v_dofs[4 * mesh.node_index(mesh.nx / 2, mesh.ny)];

  const bool ok = v_left > 0.0 && v_right > 0.0 && v_bottom == 0.0 &&
                  v_top == 0.0 && v_left > v_bottom && v_right > v_top;
  CHECK(report(9, "load lifts the free edges above the clamped ones", ok,
               watch.seconds(), 120.0,
               "free-edge midpoint v " + fmt(v_left) + " and " + fmt(v_right) +
                   ", clamped-edge midpoint v " + fmt(v_bottom) + " and " +
                   fmt(v_top)));
}

TEST_CASE("criterion 10: refinement behavior") {
  const Stopwatch watch;
  const RefinementReport rep = refinement_study(
      kBench1, {{8, 1.0}, {16, 0.5}, {32, 0.25}}, 4.0, {1.0, 2.0, 4.0});

  bool shrinking = true;
  for (std::size_t k = 0; k < rep.sample_times.size(); ++k)
    if (!(rep.distances[1][k] < rep.distances[0][k])) shrinking = false;

  std::ostringstream detail;
  detail << "distances at t=1,2,4: coarse pair";
  for (double d : rep.distances[0]) detail << ' ' << fmt(d);
  detail << ", fine pair";
  for (double d : rep.distances[1]) detail << ' ' << fmt(d);
  CHECK(report(10, "level-to-level distances shrink under refinement",
               shrinking, watch.seconds(), 900.0, detail.str()));
}
