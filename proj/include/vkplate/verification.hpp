#pragma once

// Property-test instruments: finite-difference gradient checks, metric-axiom
// sampling, the weak-form residual identity, nested-grid prolongation, and
// the mesh/time-step refinement study.

#include <vkplate/config.hpp>
#include <vkplate/elements.hpp>
#include <vkplate/gradient_flow.hpp>
#include <vkplate/mesh.hpp>
#include <vkplate/plate_model.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace vkplate {

namespace detail {

/// Worst componentwise deviation between an analytic gradient and central
/// finite differences, over a seeded sample of at least min_samples DOFs.
/// Deviations are measured relative to 1 + the entry magnitude, so entries
/// near zero are compared absolutely.
template <class Value>
double fd_compare(Value&& value, const Eigen::VectorXd& analytic,
                  Eigen::VectorXd z, double step_scale, int min_samples,
                  unsigned seed) {
  const int dim = static_cast<int>(z.size());
  std::vector<int> idx(dim);
  std::iota(idx.begin(), idx.end(), 0);
  if (dim > min_samples) {
    std::mt19937 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(min_samples);
  }
  double worst = 0.0;
  for (int i : idx) {
    const double h = step_scale * (1.0 + std::abs(z[i]));
    const double zi = z[i];
    z[i] = zi + h;
    const double fp = value(z);
    z[i] = zi - h;
    const double fm = value(z);
    z[i] = zi;
    const double fd = (fp - fm) / (2.0 * h);
    const double err =
        std::abs(fd - analytic[i]) /
        (1.0 + std::max(std::abs(fd), std::abs(analytic[i])));
    worst = std::max(worst, err);
  }
  return worst;
}

inline Eigen::VectorXd random_vector(Eigen::Index dim, double amplitude,
                                     std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  Eigen::VectorXd z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z[i] = dist(rng);
  return z;
}

}  // namespace detail

/// Finite-difference check of the energy gradient; returns the worst
/// relative error over the sampled DOFs.  The default step balances central
/// truncation against roundoff for objective values up to ~1e5, where a
/// smaller step would drown the difference quotient in eps*|f| noise.
template <MetricEnergySystem S>
double fd_gradient_check(const S& sys, const Eigen::VectorXd& z,
                         double step_scale = 1e-5, int min_samples = 50,
                         unsigned seed = 947u) {
  if (!(step_scale > 0))
    throw std::invalid_argument("fd_gradient_check: step_scale must be > 0");
  return detail::fd_compare([&](const Eigen::VectorXd& w) { return sys.energy(w); },
                            sys.energy_gradient(z), z, step_scale, min_samples,
                            seed);
}

/// Same check for the gradient of z -> metric(prev, z)^2.
template <MetricEnergySystem S>
double fd_metric_sq_gradient_check(const S& sys, const Eigen::VectorXd& prev,
                                   const Eigen::VectorXd& z,
                                   double step_scale = 1e-5,
                                   int min_samples = 50, unsigned seed = 947u) {
  if (!(step_scale > 0))
    throw std::invalid_argument(
        "fd_metric_sq_gradient_check: step_scale must be > 0");
  const auto value = [&](const Eigen::VectorXd& w) {
    const double d = sys.metric(prev, w);
    return d * d;
  };
  return detail::fd_compare(value, sys.metric_sq_gradient(prev, z), z,
                            step_scale, min_samples, seed);
}

/// Summary of sampled metric-axiom checks.
struct MetricAxiomReport {
  int n_triples = 0;
  double max_self_distance = 0.0;  ///< worst metric(z, z)
  bool symmetry_bitexact = true;   ///< metric(a,b) == metric(b,a) bitwise
  int triangle_violations = 0;     ///< count beyond the roundoff slack
  double worst_normalized_violation =
      -std::numeric_limits<double>::infinity();
  ///< max of (d13 - d12 - d23) / scale; negative when the inequality holds
};

/// Samples seeded random state triples and checks identity of
/// indiscernibles (on the diagonal), symmetry, and the triangle inequality
/// with slack 1e-12 * (d12 + d23 + d13).
template <MetricEnergySystem S>
MetricAxiomReport metric_axioms_sample(const S& sys, int n_triples,
                                       unsigned seed,
                                       double amplitude = 1.0) {
  if (n_triples < 1)
    throw std::invalid_argument("metric_axioms_sample: n_triples must be >= 1");
  std::mt19937 rng(seed);
  MetricAxiomReport rep;
  rep.n_triples = n_triples;
  for (int k = 0; k < n_triples; ++k) {
    const Eigen::VectorXd z1 = detail::random_vector(sys.dimension(), amplitude, rng);
    const Eigen::VectorXd z2 = detail::random_vector(sys.dimension(), amplitude, rng);
    const Eigen::VectorXd z3 = detail::random_vector(sys.dimension(), amplitude, rng);
    rep.max_self_distance = std::max(rep.max_self_distance, sys.metric(z1, z1));
    const double d12 = sys.metric(z1, z2);
    const double d21 = sys.metric(z2, z1);
    if (std::memcmp(&d12, &d21, sizeof(double)) != 0)
      rep.symmetry_bitexact = false;
    const double d23 = sys.metric(z2, z3);
    const double d13 = sys.metric(z1, z3);
    const double scale = d12 + d23 + d13;
    const double violation = d13 - d12 - d23;
    if (scale > 0)
      rep.worst_normalized_violation =
          std::max(rep.worst_normalized_violation, violation / scale);
    if (violation > 1e-12 * scale) ++rep.triangle_violations;
  }
  return rep;
}

/// Discrete weak-form residual of one incremental step.
struct ResidualReport {
  Eigen::VectorXd residual;  ///< over free DOFs
  double norm_inf = 0.0;
  double identity_gap = 0.0;  ///< max |residual - grad Phi| entrywise
};

/// Assembles the weak residual of the time-discrete evolution at (prev, cur):
/// the membrane stress (elastic + viscous difference quotient) paired with
/// e(phi_u) and with grad v . grad phi_v, the bending stress paired with the
/// Hessian of phi_v, minus the load pairing -- one entry per free basis
/// function.  By construction this equals the gradient of the incremental
/// functional; identity_gap reports the roundoff-level difference.
inline ResidualReport weak_residual(const PlateModel& model,
                                    const ConstraintSet& cs,
                                    const PlateState& prev,
                                    const PlateState& cur, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("weak_residual: tau must be > 0");
  const MeshGrid& mesh = model.mesh();
  if (cs.total_dofs != total_dof_count(mesh))
    throw std::invalid_argument("weak_residual: constraint/mesh mismatch");
  for (const PlateState* s : {&prev, &cur})
    if (s->mesh == nullptr || !s->mesh->same_grid(mesh) ||
        s->u_dofs.size() != 2 * mesh.n_nodes() ||
        s->v_dofs.size() != 4 * mesh.n_nodes())
      throw std::invalid_argument("weak_residual: state/mesh mismatch");
  const MaterialParams& prm = model.params();
  const double jac = mesh.hx * mesh.hy;
  const int n_nodes = mesh.n_nodes();

  const auto cw = [&](const Eigen::Matrix2d& G) -> Eigen::Matrix2d {
    return prm.lambda * G.trace() * Eigen::Matrix2d::Identity() + 2.0 * prm.mu * G;
  };
  const auto cd = [&](const Eigen::Matrix2d& G) -> Eigen::Matrix2d {
    return 4.0 * prm.c * G;
  };

  struct Sampled {
    double v;
    Eigen::Vector2d grad_v;
    Eigen::Matrix2d Eu, G0, H;
  };
  const auto sample = [&](const PlateState& s, int el, const Q1Eval& q1,
                          const BFSEval& bfs) {
    Sampled out;
    const auto& nodes = mesh.elements[el];
    Eigen::Matrix2d grad_u = Eigen::Matrix2d::Zero();
    for (int a = 0; a < 4; ++a) {
      const Eigen::Vector2d g(q1.grads[a][0] / mesh.hx,
                              q1.grads[a][1] / mesh.hy);
      grad_u.row(0) += s.u_dofs[2 * nodes[a]] * g.transpose();
      grad_u.row(1) += s.u_dofs[2 * nodes[a] + 1] * g.transpose();
    }
    out.Eu = 0.5 * (grad_u + grad_u.transpose());
    out.v = 0.0;
    out.grad_v.setZero();
    out.H.setZero();
    for (int a = 0; a < 4; ++a)
      for (int m = 0; m < 4; ++m) {
        const int b = 4 * a + m;
        const double coef = s.v_dofs[4 * nodes[a] + m];
        out.v += coef * bfs.values[b];
        out.grad_v += coef * bfs.grads[b];
        out.H += coef * bfs.hessians[b];
      }
    out.G0 = out.Eu + 0.5 * out.grad_v * out.grad_v.transpose();
    return out;
  };

  const bool split = model.mode() == QuadratureMode::paper;
  const QuadratureRule main_rule =
      quadrature(model.mode() == QuadratureMode::gauss3
                     ? QuadRuleKind::gauss_3x3
                     : QuadRuleKind::gauss_2x2);
  const QuadratureRule mid_rule = quadrature(QuadRuleKind::midpoint_1pt);

  Eigen::VectorXd full = Eigen::VectorXd::Zero(total_dof_count(mesh));
  for (int el = 0; el < mesh.n_elements(); ++el) {
    const auto& nodes = mesh.elements[el];

    const auto pair_u = [&](const Eigen::Matrix2d& S, const Q1Eval& q1,
                            double wjac) {
      for (int a = 0; a < 4; ++a) {
        const Eigen::Vector2d g(q1.grads[a][0] / mesh.hx,
                                q1.grads[a][1] / mesh.hy);
        const Eigen::Vector2d Sg = S * g;
        full[2 * nodes[a]] += wjac * Sg[0];
        full[2 * nodes[a] + 1] += wjac * Sg[1];
      }
    };

    for (const QuadPoint& p : main_rule.points) {
      const Q1Eval q1 = q1_eval(p.xi, p.eta);
      const BFSEval bfs = bfs_eval(p.xi, p.eta, mesh.hx, mesh.hy);
      const Sampled zc = sample(cur, el, q1, bfs);
      const Sampled zp = sample(prev, el, q1, bfs);
      const double wjac = p.weight * jac;

      const Eigen::Matrix2d S_mem = cw(zc.G0) + cd((zc.G0 - zp.G0) / tau);
      const Eigen::Matrix2d S_bend =
          (1.0 / 12.0) * (cw(zc.H) + cd((zc.H - zp.H) / tau));

      pair_u(S_mem, q1, wjac);
      const Eigen::Vector2d Sgv = S_mem * zc.grad_v;
      for (int a = 0; a < 4; ++a)
        for (int m = 0; m < 4; ++m) {
          const int b = 4 * a + m;
          double val = Sgv.dot(bfs.grads[b]);
          val += S_bend.cwiseProduct(bfs.hessians[b]).sum();
          val -= prm.f * bfs.values[b];
          full[2 * n_nodes + 4 * nodes[a] + m] += wjac * val;
        }
      if (split) {
        const Eigen::Matrix2d S_q1 = cw(zc.Eu) + cd((zc.Eu - zp.Eu) / tau);
        pair_u(S_q1, q1, -wjac);  // relocated to the midpoint rule below
      }
    }
    if (split) {
      for (const QuadPoint& p : mid_rule.points) {
        const Q1Eval q1 = q1_eval(p.xi, p.eta);
        const BFSEval bfs = bfs_eval(p.xi, p.eta, mesh.hx, mesh.hy);
        const Sampled zc = sample(cur, el, q1, bfs);
        const Sampled zp = sample(prev, el, q1, bfs);
        const Eigen::Matrix2d S_q1 = cw(zc.Eu) + cd((zc.Eu - zp.Eu) / tau);
        pair_u(S_q1, q1, p.weight * jac);
      }
    }
  }

  ResidualReport rep;
  rep.residual = cs.reduce(full);
  rep.norm_inf = rep.residual.size() == 0
                     ? 0.0
                     : rep.residual.cwiseAbs().maxCoeff();
  const Eigen::VectorXd grad_phi =
      model.energy_gradient(cur, cs) +
      model.dissipation_sq_gradient(prev, cur, cs) / (2.0 * tau);
  rep.identity_gap = rep.residual.size() == 0
                         ? 0.0
                         : (rep.residual - grad_phi).cwiseAbs().maxCoeff();
  return rep;
}

/// Re-interpolates a state onto a finer nested grid (same domain, cell counts
/// integer multiples).  Exact for every field the coarse space represents.
inline PlateState prolong_state(const PlateState& coarse,
                                const MeshGrid& fine) {
  const MeshGrid& cm = *coarse.mesh;
  if (fine.domain.x1_min != cm.domain.x1_min ||
      fine.domain.x1_max != cm.domain.x1_max ||
      fine.domain.x2_min != cm.domain.x2_min ||
      fine.domain.x2_max != cm.domain.x2_max)
    throw std::invalid_argument("prolong_state: domains differ");
  if (fine.nx % cm.nx != 0 || fine.ny % cm.ny != 0)
    throw std::invalid_argument("prolong_state: grids are not nested");
  const int rx = fine.nx / cm.nx;
  const int ry = fine.ny / cm.ny;

  PlateState out = PlateState::zero(fine);
  for (int j = 0; j <= fine.ny; ++j) {
    for (int i = 0; i <= fine.nx; ++i) {
      int ex = std::min(i / rx, cm.nx - 1);
      int ey = std::min(j / ry, cm.ny - 1);
      const double xi = static_cast<double>(i - ex * rx) / rx;
      const double eta = static_cast<double>(j - ey * ry) / ry;
      const auto& nodes = cm.elements[ey * cm.nx + ex];
      const Q1Eval q1 = q1_eval(xi, eta);
      const BFSEval bfs = bfs_eval(xi, eta, cm.hx, cm.hy);

      const int fnode = fine.node_index(i, j);
      for (int a = 0; a < 4; ++a) {
        out.u_dofs[2 * fnode] += coarse.u_dofs[2 * nodes[a]] * q1.values[a];
        out.u_dofs[2 * fnode + 1] +=
            coarse.u_dofs[2 * nodes[a] + 1] * q1.values[a];
      }
      double v = 0.0, vxy = 0.0;
      Eigen::Vector2d gv = Eigen::Vector2d::Zero();
      for (int a = 0; a < 4; ++a)
        for (int m = 0; m < 4; ++m) {
          const int b = 4 * a + m;
          const double coef = coarse.v_dofs[4 * nodes[a] + m];
          v += coef * bfs.values[b];
          gv += coef * bfs.grads[b];
          vxy += coef * bfs.hessians[b](0, 1);
        }
      out.v_dofs[4 * fnode] = v;
      out.v_dofs[4 * fnode + 1] = gv[0];
      out.v_dofs[4 * fnode + 2] = gv[1];
      out.v_dofs[4 * fnode + 3] = vxy;
    }
  }
  return out;
}

struct RefinementLevel {
  int nx = 0;
  double tau = 0.0;
};

struct RefinementReport {
  std::vector<RefinementLevel> ladder;
  std::vector<double> sample_times;
  std::vector<std::vector<double>> energies;   ///< [level][time]
  std::vector<std::vector<double>> distances;  ///< [level-1][time]
};

/// Runs a preset across a refining (nx doubling, tau halving) ladder up to a
/// common horizon and measures the dissipation distances between
/// consecutive-level interpolants (coarse prolonged to fine) at the sample
/// times, along with energies per level.
inline RefinementReport refinement_study(
    const RunConfig& base, const std::vector<RefinementLevel>& ladder,
    double horizon, std::vector<double> sample_times = {}) {
  if (ladder.size() < 2)
    throw std::invalid_argument("refinement_study: need at least two levels");
  for (std::size_t l = 0; l + 1 < ladder.size(); ++l) {
    if (ladder[l + 1].nx != 2 * ladder[l].nx ||
        ladder[l + 1].tau != 0.5 * ladder[l].tau)
      throw std::invalid_argument(
          "refinement_study: ladder must double nx and halve tau per level");
  }
  if (!(horizon > 0))
    throw std::invalid_argument("refinement_study: horizon must be > 0");
  if (sample_times.empty())
    sample_times = {horizon / 4.0, horizon / 2.0, horizon};

  RefinementReport rep;
  rep.ladder = ladder;
  rep.sample_times = sample_times;

  std::vector<RunSetup> setups;
  std::vector<EvolutionTrace> traces;
  for (const RefinementLevel& level : ladder) {
    RunConfig cfg = base;
    cfg.nx = level.nx;
    cfg.ny = base.nx == base.ny ? level.nx
                                : level.nx * base.ny / base.nx;
    cfg.solver.tau = level.tau;
    const double steps = horizon / level.tau;
    cfg.solver.n_max = static_cast<int>(std::llround(steps));
    if (std::abs(cfg.solver.n_max * level.tau - horizon) >
        1e-9 * std::max(1.0, horizon))
      throw std::invalid_argument(
          "refinement_study: horizon is not a multiple of tau");
    setups.push_back(make_setup(cfg));
    const RunSetup& setup = setups.back();
    const PlateSystem sys(setup.model, setup.constraints);
    traces.push_back(
        run_evolution(sys, sys.from_state(setup.initial), cfg.solver));

    std::vector<double> phis;
    for (double t : sample_times) {
      const Eigen::VectorXd& z = interpolant(traces.back(), t);
      phis.push_back(sys.energy(z));
    }
    rep.energies.push_back(std::move(phis));
  }

  for (std::size_t l = 0; l + 1 < ladder.size(); ++l) {
    const PlateSystem coarse_sys(setups[l].model, setups[l].constraints);
    const PlateSystem fine_sys(setups[l + 1].model, setups[l + 1].constraints);
    std::vector<double> dists;
    for (double t : sample_times) {
      const PlateState zc = coarse_sys.to_state(interpolant(traces[l], t));
      const PlateState zf = fine_sys.to_state(interpolant(traces[l + 1], t));
      const PlateState zc_on_fine = prolong_state(zc, *setups[l + 1].mesh);
      dists.push_back(setups[l + 1].model.dissipation(zc_on_fine, zf));
    }
    rep.distances.push_back(std::move(dists));
  }
  return rep;
}

}  // namespace vkplate
