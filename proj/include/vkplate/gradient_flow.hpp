#pragma once

// Minimizing-movements engine over an abstract energy/metric pair: each time
// step minimizes Phi(tau, prev; z) = metric(prev, z)^2 / (2 tau) + energy(z)
// with a limited-memory quasi-Newton descent warm-started at prev, producing
// the piecewise-constant discrete trajectory.

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vkplate {

/// Anything that provides an energy, a metric, and consistent gradients over
/// a flat DOF vector space.
template <typename S>
concept MetricEnergySystem =
    requires(const S& sys, const Eigen::VectorXd& z) {
      { sys.dimension() } -> std::convertible_to<Eigen::Index>;
      { sys.energy(z) } -> std::convertible_to<double>;
      { sys.metric(z, z) } -> std::convertible_to<double>;
      { sys.energy_gradient(z) } -> std::convertible_to<Eigen::VectorXd>;
      { sys.metric_sq_gradient(z, z) } -> std::convertible_to<Eigen::VectorXd>;
    };

struct EvolutionConfig {
  double tau = 1.0;        ///< time step
  int n_max = 8;           ///< number of incremental steps
  double grad_tol = 1e-8;  ///< stop at |grad Phi| <= grad_tol * (1 + |Phi|)
  int max_iter = 20000;    ///< per-step iteration cap
  double ls_shrink = 0.5;  ///< backtracking contraction factor
  double ls_slope = 1e-4;  ///< Armijo sufficient-decrease fraction
  int memory = 20;         ///< quasi-Newton history length

  void validate() const {
    if (!(tau > 0)) throw std::invalid_argument("EvolutionConfig: tau must be > 0");
    if (n_max < 0) throw std::invalid_argument("EvolutionConfig: n_max must be >= 0");
    if (!(grad_tol > 0))
      throw std::invalid_argument("EvolutionConfig: grad_tol must be > 0");
    if (max_iter < 1)
      throw std::invalid_argument("EvolutionConfig: max_iter must be >= 1");
    if (!(ls_shrink > 0 && ls_shrink < 1))
      throw std::invalid_argument("EvolutionConfig: ls_shrink must be in (0,1)");
    if (!(ls_slope > 0 && ls_slope < 0.5))
      throw std::invalid_argument("EvolutionConfig: ls_slope must be in (0,1/2)");
    if (memory < 1)
      throw std::invalid_argument("EvolutionConfig: memory must be >= 1");
  }
};

/// Diagnostics of one accepted incremental step.
struct StepRecord {
  int n = 0;                  ///< step index, 1-based
  double phi = 0.0;           ///< energy after the step
  double diss = 0.0;          ///< metric(prev, cur)
  double incr_value = 0.0;    ///< Phi(tau, prev; cur)
  int iters = 0;              ///< solver iterations spent
  double grad_norm = 0.0;     ///< |grad Phi| at acceptance
  double descent_slack = 0.0; ///< energy(prev) - incr_value, >= 0 up to roundoff
  bool warned = false;        ///< hit max_iter or a stalled line search
};

struct EvolutionTrace {
  double tau = 0.0;
  Eigen::VectorXd initial_state;
  double initial_energy = 0.0;
  std::vector<Eigen::VectorXd> states;  ///< z_1 .. z_{n_max}
  std::vector<StepRecord> records;      ///< aligned with states

  int n_steps() const { return static_cast<int>(states.size()); }
};

/// Thrown when an evaluation turns non-finite; carries the failing step.
class numerical_failure : public std::runtime_error {
 public:
  numerical_failure(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Incremental functional Phi(tau, prev; z).
template <MetricEnergySystem S>
double incremental_value(const S& sys, double tau, const Eigen::VectorXd& prev,
                         const Eigen::VectorXd& z) {
  const double d = sys.metric(prev, z);
  return d * d / (2.0 * tau) + sys.energy(z);
}

/// Solves one incremental minimization, warm-started at prev.
///
/// L-BFGS two-loop recursion with Armijo backtracking.  Once trial values
/// sit within roundoff of the current one the Armijo test cannot certify
/// decrease, so a collapsed directional derivative at the trial point is
/// accepted instead (approximate Wolfe); that keeps the iteration moving
/// down to gradient norms near the floating-point floor of the objective.
/// A stalled search wipes the quasi-Newton history and retries along
/// steepest descent before giving up.  Returned is the visited point with
/// the smallest gradient norm among those satisfying
/// Phi(tau, prev; z) <= energy(prev), so the descent inequality holds
/// exactly; max_iter or a persistent stall is reported through the warning
/// flag.
template <MetricEnergySystem S>
std::pair<Eigen::VectorXd, StepRecord> minimize_step(
    const S& sys, double tau, const Eigen::VectorXd& prev,
    const EvolutionConfig& cfg, int step_index = 1) {
  cfg.validate();
  const auto value = [&](const Eigen::VectorXd& z) {
    return incremental_value(sys, tau, prev, z);
  };
  const auto gradient = [&](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(sys.energy_gradient(z) +
                           sys.metric_sq_gradient(prev, z) / (2.0 * tau));
  };
  const auto tol = [&](double f) { return cfg.grad_tol * (1.0 + std::abs(f)); };

  Eigen::VectorXd z = prev;
  double fz = value(z);  // equals energy(prev): the metric term vanishes
  if (!std::isfinite(fz))
    throw numerical_failure(step_index, "non-finite incremental value at start");
  const double phi_prev = fz;
  Eigen::VectorXd g = gradient(z);
  if (!g.allFinite())
    throw numerical_failure(step_index, "non-finite gradient at start");
  double gnorm = g.norm();

  // Best visited point: smallest gradient norm subject to fz <= phi_prev.
  // The start qualifies, so the set is never empty.
  Eigen::VectorXd z_best = z;
  Eigen::VectorXd g_best = g;
  double f_best = fz;
  double gnorm_best = gnorm;

  std::deque<Eigen::VectorXd> S_hist, Y_hist;
  std::deque<double> rho;
  int iters = 0;

  while (gnorm > tol(fz) && iters < cfg.max_iter) {
    // Two-loop recursion for the quasi-Newton direction.
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(S_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S_hist[i].dot(q);
      q -= alpha[i] * Y_hist[i];
    }
    if (m > 0) q *= S_hist.back().dot(Y_hist.back()) / Y_hist.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho[i] * Y_hist[i].dot(q);
      q += (alpha[i] - beta) * S_hist[i];
    }
    Eigen::VectorXd d = -q;
    double slope = g.dot(d);
    bool fresh = m == 0;
    if (!(slope < 0)) {  // safeguard: fall back to steepest descent
      d = -g;
      slope = -gnorm * gnorm;
      fresh = true;
    }

    // Trial values this close to fz are indistinguishable from it; only the
    // directional derivative can still certify progress there.
    const double f_noise =
        4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fz));

    Eigen::VectorXd z_new, g_trial;
    double f_new = 0.0;
    bool stalled = false;
    bool have_trial_grad = false;
    for (int attempt = 0;; ++attempt) {
      // A conservative first trial before any curvature information exists.
      double step = fresh ? 1.0 / std::max(1.0, gnorm) : 1.0;
      stalled = false;
      have_trial_grad = false;
      for (;;) {
        z_new = z + step * d;
        f_new = value(z_new);
        if (std::isfinite(f_new)) {
          if (f_new <= fz + cfg.ls_slope * step * slope) break;
          if (f_new <= fz + f_noise) {
            g_trial = gradient(z_new);
            if (g_trial.allFinite() &&
                std::abs(g_trial.dot(d)) <= 0.9 * std::abs(slope)) {
              have_trial_grad = true;
              break;
            }
          }
        }
        step *= cfg.ls_shrink;
        if (step * d.norm() < 1e-16 * (1.0 + z.norm())) {
          stalled = true;
          break;
        }
      }
      if (!stalled || attempt == 1 || S_hist.empty()) break;
      // The accumulated curvature model produced a dead direction; drop it
      // and try once more along steepest descent.
      S_hist.clear();
      Y_hist.clear();
      rho.clear();
      d = -g;
      slope = -gnorm * gnorm;
      fresh = true;
    }
    ++iters;
    if (stalled) break;  // no measurable descent in any direction tried
    Eigen::VectorXd g_new =
        have_trial_grad ? std::move(g_trial) : gradient(z_new);
    if (!g_new.allFinite())
      throw numerical_failure(step_index, "non-finite gradient");
    Eigen::VectorXd s = z_new - z;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {  // keep the inverse Hessian SPD
      S_hist.push_back(std::move(s));
      Y_hist.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S_hist.size()) > cfg.memory) {
        S_hist.pop_front();
        Y_hist.pop_front();
        rho.pop_front();
      }
    }
    z = std::move(z_new);
    fz = f_new;
    g = std::move(g_new);
    gnorm = g.norm();
    if (fz <= phi_prev &&
        (gnorm < gnorm_best || (gnorm == gnorm_best && fz < f_best))) {
      z_best = z;
      g_best = g;
      f_best = fz;
      gnorm_best = gnorm;
    }
  }
  if (fz > phi_prev || gnorm_best < gnorm ||
      (gnorm_best == gnorm && f_best < fz)) {
    z = std::move(z_best);
    g = std::move(g_best);
    fz = f_best;
    gnorm = gnorm_best;
  }
  const bool warned = gnorm > tol(fz);  // stall or max_iter

  StepRecord rec;
  rec.n = step_index;
  rec.phi = sys.energy(z);
  rec.diss = sys.metric(prev, z);
  rec.incr_value = fz;
  rec.iters = iters;
  rec.grad_norm = gnorm;
  rec.descent_slack = phi_prev - fz;
  rec.warned = warned;
  return {std::move(z), rec};
}

/// Chains n_max incremental steps from z0.
template <MetricEnergySystem S>
EvolutionTrace run_evolution(const S& sys, const Eigen::VectorXd& z0,
                             const EvolutionConfig& cfg) {
  cfg.validate();
  EvolutionTrace trace;
  trace.tau = cfg.tau;
  trace.initial_state = z0;
  trace.initial_energy = sys.energy(z0);
  if (!std::isfinite(trace.initial_energy))
    throw numerical_failure(0, "non-finite energy of the initial state");
  Eigen::VectorXd prev = z0;
  for (int n = 1; n <= cfg.n_max; ++n) {
    auto [z, rec] = minimize_step(sys, cfg.tau, prev, cfg, n);
    prev = z;
    trace.states.push_back(std::move(z));
    trace.records.push_back(rec);
  }
  return trace;
}

/// Piecewise-constant interpolant: z0 at t = 0, z_n on ((n-1) tau, n tau],
/// the final state beyond the horizon.
inline const Eigen::VectorXd& interpolant(const EvolutionTrace& trace,
                                          double t) {
  if (t < 0) throw std::invalid_argument("interpolant: negative time");
  if (t == 0.0 || trace.states.empty()) return trace.initial_state;
  int n = static_cast<int>(std::ceil(t / trace.tau));
  // Right-closed intervals under floating-point division fuzz.
  if (n >= 1 && (n - 1) * trace.tau >= t) --n;
  if (n < 1) return trace.initial_state;
  if (n > trace.n_steps()) n = trace.n_steps();
  return trace.states[static_cast<std::size_t>(n - 1)];
}

/// One row of the descent table: slack_n = phi_{n-1} - phi_n - D_n^2/(2 tau).
struct DescentRow {
  int n;
  double phi;
  double diss;
  double slack;
};

inline std::vector<DescentRow> energy_dissipation_report(
    const EvolutionTrace& trace, double tau) {
  std::vector<DescentRow> rows;
  rows.reserve(trace.records.size());
  double phi_prev = trace.initial_energy;
  for (const StepRecord& r : trace.records) {
    rows.push_back({r.n, r.phi, r.diss,
                    phi_prev - r.phi - r.diss * r.diss / (2.0 * tau)});
    phi_prev = r.phi;
  }
  return rows;
}

}  // namespace vkplate
