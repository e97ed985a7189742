#pragma once

// Viscoelastic von Karman plate: stored energy, dissipation distance, their
// gradients over free DOFs, clamped-boundary constraint handling, and the
// through-thickness representation used as an independent cross-check.
//
// Displacement fields: in-plane u in a Q1 space (2 DOFs/node), deflection v
// in the Bogner-Fox-Schmit C1 space (4 DOFs/node).  The membrane strain is
// G0 = e(u) + 1/2 grad v (x) grad v, the bending strain is the Hessian of v.

#include <vkplate/elements.hpp>
#include <vkplate/mesh.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vkplate {

/// Isotropic material and load data.
struct MaterialParams {
  double lambda = 1.0;  ///< Lame first parameter, >= 0
  double mu = 1.0;      ///< shear modulus, > 0
  double c = 1.0;       ///< viscosity coefficient, > 0
  double f = 0.0;       ///< constant transverse load density

  void validate() const {
    if (!(mu > 0)) throw std::invalid_argument("MaterialParams: mu must be > 0");
    if (!(c > 0)) throw std::invalid_argument("MaterialParams: c must be > 0");
    if (!(lambda >= 0))
      throw std::invalid_argument("MaterialParams: lambda must be >= 0");
  }
};

/// Elastic quadratic form Q_W^2(G) = lambda tr(G)^2 + 2 mu |G|^2.
inline double qw2(const Eigen::Matrix2d& G, double lambda, double mu) {
  const double tr = G.trace();
  return lambda * tr * tr + 2.0 * mu * G.squaredNorm();
}

/// Viscous quadratic form Q_D^2(G) = 4c |G|^2.
inline double qd2(const Eigen::Matrix2d& G, double c) {
  return 4.0 * c * G.squaredNorm();
}

/// Nodal coefficients of one plate configuration.
///
/// u_dofs interleaves (u1, u2) per node; v_dofs interleaves
/// (v, dv/dx1, dv/dx2, d2v/dx1dx2) per node.  The mesh pointer is non-owning;
/// the grid must outlive the state.
struct PlateState {
  const MeshGrid* mesh = nullptr;
  Eigen::VectorXd u_dofs;
  Eigen::VectorXd v_dofs;

  static PlateState zero(const MeshGrid& mesh) {
    PlateState s;
    s.mesh = &mesh;
    s.u_dofs = Eigen::VectorXd::Zero(2 * mesh.n_nodes());
    s.v_dofs = Eigen::VectorXd::Zero(4 * mesh.n_nodes());
    return s;
  }

  bool is_finite() const {
    return u_dofs.allFinite() && v_dofs.allFinite();
  }
};

/// Global DOF numbering: all u-DOFs first, then all v-DOFs.
inline int u_dof_index(const MeshGrid&, int node, int comp) {
  return 2 * node + comp;
}
inline int v_dof_index(const MeshGrid& mesh, int node, int kind) {
  return 2 * mesh.n_nodes() + 4 * node + kind;
}
inline int total_dof_count(const MeshGrid& mesh) { return 6 * mesh.n_nodes(); }

inline Eigen::VectorXd pack_state(const PlateState& s) {
  Eigen::VectorXd full(s.u_dofs.size() + s.v_dofs.size());
  full << s.u_dofs, s.v_dofs;
  return full;
}

inline PlateState unpack_state(const MeshGrid& mesh,
                               const Eigen::VectorXd& full) {
  if (full.size() != total_dof_count(mesh))
    throw std::invalid_argument("unpack_state: DOF vector length mismatch");
  PlateState s;
  s.mesh = &mesh;
  s.u_dofs = full.head(2 * mesh.n_nodes());
  s.v_dofs = full.tail(4 * mesh.n_nodes());
  return s;
}

/// Partition of the global DOFs into pinned-to-zero and free ones.
struct ConstraintSet {
  int total_dofs = 0;
  std::vector<int> fixed;          ///< ascending
  std::vector<int> free;           ///< ascending complement of fixed
  std::vector<int> free_index_of;  ///< full index -> free index, -1 if fixed

  int n_free() const { return static_cast<int>(free.size()); }

  Eigen::VectorXd reduce(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(free.size());
    for (std::size_t k = 0; k < free.size(); ++k) out[k] = full[free[k]];
    return out;
  }

  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(total_dofs);
    for (std::size_t k = 0; k < free.size(); ++k) full[free[k]] = reduced[k];
    return full;
  }
};

/// Clamps every selected boundary node completely: u1, u2, v, both first
/// derivatives of v, and the mixed second derivative (the tangential
/// derivative of the vanishing edge-normal derivative along a straight
/// clamped edge, hence zero as well).
inline ConstraintSet build_constraints(const MeshGrid& mesh,
                                       BoundarySelector which) {
  ConstraintSet cs;
  cs.total_dofs = total_dof_count(mesh);
  for (int node : boundary_nodes(mesh, which)) {
    for (int comp = 0; comp < 2; ++comp)
      cs.fixed.push_back(u_dof_index(mesh, node, comp));
    for (int kind = 0; kind < 4; ++kind)
      cs.fixed.push_back(v_dof_index(mesh, node, kind));
  }
  std::sort(cs.fixed.begin(), cs.fixed.end());
  cs.free_index_of.assign(cs.total_dofs, -1);
  for (int d : cs.fixed) cs.free_index_of[d] = -2;  // mark
  for (int d = 0; d < cs.total_dofs; ++d) {
    if (cs.free_index_of[d] == -1) {
      cs.free_index_of[d] = static_cast<int>(cs.free.size());
      cs.free.push_back(d);
    } else {
      cs.free_index_of[d] = -1;
    }
  }
  return cs;
}

/// Membrane and bending strain at one point.
struct StrainSample {
  Eigen::Matrix2d G0;  ///< e(u) + 1/2 grad v (x) grad v
  Eigen::Matrix2d H;   ///< Hessian of v
};

/// Quadrature policy for all integrals.
///
/// gauss2/gauss3 use a single tensor rule everywhere.  paper evaluates the
/// purely bilinear membrane contribution (the e(u)-only part, elastic and
/// viscous) at cell midpoints and everything else with the 2x2 Gauss rule,
/// mirroring a per-element-type rule assignment.
enum class QuadratureMode { paper, gauss2, gauss3 };

/// Assembles energy, dissipation, and gradients on one fixed grid.
///
/// Pure value semantics: every method is a pure function of its arguments
/// and the construction-time (mesh, params, mode); safe to share across
/// threads.  Element loops run in a fixed order so results are bit-identical
/// between repeated calls.
class PlateModel {
 public:
  PlateModel(const MeshGrid& mesh, MaterialParams params,
             QuadratureMode mode = QuadratureMode::gauss2)
      : mesh_(&mesh), params_(params), mode_(mode) {
    params_.validate();
    const QuadRuleKind main_kind = mode == QuadratureMode::gauss3
                                       ? QuadRuleKind::gauss_3x3
                                       : QuadRuleKind::gauss_2x2;
    build_table(quadrature(main_kind), main_pts_);
    if (mode == QuadratureMode::paper)
      build_table(quadrature(QuadRuleKind::midpoint_1pt), q1_pts_);
  }

  const MeshGrid& mesh() const { return *mesh_; }
  const MaterialParams& params() const { return params_; }
  QuadratureMode mode() const { return mode_; }

  /// Strains of a state at one reference point of one element.
  StrainSample strain_at(const PlateState& state, int element, double xi,
                         double eta) const {
    check_state(state);
    const auto dofs = gather(state, element);
    QP qp;
    qp.w = 1.0;
    fill_qp(qp, xi, eta);
    Fields f = eval_fields(dofs, qp);
    return {f.G0, f.H};
  }

  /// Total energy: membrane + bending elastic terms minus the load term.
  double energy(const PlateState& state) const {
    check_state(state);
    const double jac = mesh_->hx * mesh_->hy;
    double acc = 0.0;
    for (int el = 0; el < mesh_->n_elements(); ++el) {
      const auto dofs = gather(state, el);
      for (const QP& qp : main_pts_) {
        const Fields f = eval_fields(dofs, qp);
        double val = 0.5 * qw2(f.G0, params_.lambda, params_.mu) +
                     (1.0 / 24.0) * qw2(f.H, params_.lambda, params_.mu) -
                     params_.f * f.v;
        if (!q1_pts_.empty())
          val -= 0.5 * qw2(f.Eu, params_.lambda, params_.mu);
        acc += qp.w * jac * val;
      }
      for (const QP& qp : q1_pts_) {
        const Fields f = eval_fields(dofs, qp);
        acc += qp.w * jac * 0.5 * qw2(f.Eu, params_.lambda, params_.mu);
      }
    }
    return acc;
  }

  /// Squared dissipation distance between two states on this mesh.
  double dissipation_sq(const PlateState& a, const PlateState& b) const {
    check_pair(a, b);
    const double jac = mesh_->hx * mesh_->hy;
    double acc = 0.0;
    for (int el = 0; el < mesh_->n_elements(); ++el) {
      const auto da = gather(a, el);
      const auto db = gather(b, el);
      for (const QP& qp : main_pts_) {
        const Fields fa = eval_fields(da, qp);
        const Fields fb = eval_fields(db, qp);
        double val = qd2(fb.G0 - fa.G0, params_.c) +
                     (1.0 / 12.0) * qd2(fb.H - fa.H, params_.c);
        if (!q1_pts_.empty()) val -= qd2(fb.Eu - fa.Eu, params_.c);
        acc += qp.w * jac * val;
      }
      for (const QP& qp : q1_pts_) {
        const Fields fa = eval_fields(da, qp);
        const Fields fb = eval_fields(db, qp);
        acc += qp.w * jac * qd2(fb.Eu - fa.Eu, params_.c);
      }
    }
    return acc;
  }

  /// Dissipation distance D(a, b) = sqrt of the quadratic integral.
  double dissipation(const PlateState& a, const PlateState& b) const {
    return std::sqrt(std::max(0.0, dissipation_sq(a, b)));
  }

  /// Gradient of energy over all DOFs (fixed ones included).
  Eigen::VectorXd energy_gradient_full(const PlateState& state) const {
    check_state(state);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(total_dof_count(*mesh_));
    const double jac = mesh_->hx * mesh_->hy;
    for (int el = 0; el < mesh_->n_elements(); ++el) {
      const auto dofs = gather(state, el);
      for (const QP& qp : main_pts_) {
        const Fields f = eval_fields(dofs, qp);
        const Eigen::Matrix2d S_mem = cw(f.G0);
        const Eigen::Matrix2d S_bend = (1.0 / 12.0) * cw(f.H);
        scatter_membrane(grad, el, qp, S_mem, f, qp.w * jac);
        scatter_bending_and_load(grad, el, qp, S_bend, params_.f, qp.w * jac);
        // The Q1-pure membrane term depends on u alone; its relocation to the
        // midpoint rule only reshuffles the u-DOF pairings.
        if (!q1_pts_.empty())
          scatter_membrane_u_only(grad, el, qp, cw(f.Eu), -qp.w * jac);
      }
      for (const QP& qp : q1_pts_) {
        const Fields f = eval_fields(dofs, qp);
        scatter_membrane_u_only(grad, el, qp, cw(f.Eu), qp.w * jac);
      }
    }
    return grad;
  }

  /// Gradient of z -> D(prev, z)^2 over all DOFs.
  Eigen::VectorXd dissipation_sq_gradient_full(const PlateState& prev,
                                               const PlateState& state) const {
    check_pair(prev, state);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(total_dof_count(*mesh_));
    const double jac = mesh_->hx * mesh_->hy;
    for (int el = 0; el < mesh_->n_elements(); ++el) {
      const auto dp = gather(prev, el);
      const auto dz = gather(state, el);
      for (const QP& qp : main_pts_) {
        const Fields fp = eval_fields(dp, qp);
        const Fields fz = eval_fields(dz, qp);
        const Eigen::Matrix2d S_mem = 2.0 * cd(fz.G0 - fp.G0);
        const Eigen::Matrix2d S_bend = (1.0 / 6.0) * cd(fz.H - fp.H);
        scatter_membrane(grad, el, qp, S_mem, fz, qp.w * jac);
        scatter_bending_and_load(grad, el, qp, S_bend, 0.0, qp.w * jac);
        if (!q1_pts_.empty())
          scatter_membrane_u_only(grad, el, qp, 2.0 * cd(fz.Eu - fp.Eu),
                                  -qp.w * jac);
      }
      for (const QP& qp : q1_pts_) {
        const Fields fp = eval_fields(dp, qp);
        const Fields fz = eval_fields(dz, qp);
        scatter_membrane_u_only(grad, el, qp, 2.0 * cd(fz.Eu - fp.Eu),
                                qp.w * jac);
      }
    }
    return grad;
  }

  Eigen::VectorXd energy_gradient(const PlateState& state,
                                  const ConstraintSet& cs) const {
    return cs.reduce(energy_gradient_full(state));
  }

  Eigen::VectorXd dissipation_sq_gradient(const PlateState& prev,
                                          const PlateState& state,
                                          const ConstraintSet& cs) const {
    return cs.reduce(dissipation_sq_gradient_full(prev, state));
  }

  /// Load-free energy evaluated in its through-thickness form
  /// int 1/2 Q_W^2(G0 - x3 H) dx3 with 2-point Gauss in x3 (exact: the
  /// integrand is quadratic in x3).  Agrees with energy() at f = 0.
  double energy_via_thickness(const PlateState& state) const {
    check_state(state);
    return thickness_integral(
        state, state,
        [this](const Eigen::Matrix2d& G) {
          return 0.5 * qw2(G, params_.lambda, params_.mu);
        },
        /*difference=*/false);
  }

  /// Dissipation distance via the same through-thickness representation.
  double dissipation_via_thickness(const PlateState& a,
                                   const PlateState& b) const {
    check_pair(a, b);
    const double sq = thickness_integral(
        a, b, [this](const Eigen::Matrix2d& G) { return qd2(G, params_.c); },
        /*difference=*/true);
    return std::sqrt(std::max(0.0, sq));
  }

 private:
  struct QP {
    double w;
    std::array<double, 4> q1_val;
    std::array<Eigen::Vector2d, 4> q1_grad;  // physical
    BFSEval bfs;                             // physical derivatives
  };

  struct Fields {
    double v;
    Eigen::Vector2d grad_v;
    Eigen::Matrix2d Eu;  // symmetrized in-plane gradient e(u)
    Eigen::Matrix2d G0;
    Eigen::Matrix2d H;
  };

  struct ElementDofs {
    Eigen::Matrix<double, 8, 1> u;
    Eigen::Matrix<double, 16, 1> v;
  };

  void fill_qp(QP& qp, double xi, double eta) const {
    const Q1Eval q1 = q1_eval(xi, eta);
    qp.q1_val = q1.values;
    for (int a = 0; a < 4; ++a)
      qp.q1_grad[a] = {q1.grads[a][0] / mesh_->hx, q1.grads[a][1] / mesh_->hy};
    qp.bfs = bfs_eval(xi, eta, mesh_->hx, mesh_->hy);
  }

  void build_table(const QuadratureRule& rule, std::vector<QP>& out) const {
    out.clear();
    out.reserve(rule.points.size());
    for (const QuadPoint& p : rule.points) {
      QP qp;
      qp.w = p.weight;
      fill_qp(qp, p.xi, p.eta);
      out.push_back(qp);
    }
  }

  ElementDofs gather(const PlateState& s, int el) const {
    const auto& nodes = mesh_->elements[el];
    ElementDofs d;
    for (int a = 0; a < 4; ++a) {
      d.u[2 * a] = s.u_dofs[2 * nodes[a]];
      d.u[2 * a + 1] = s.u_dofs[2 * nodes[a] + 1];
      for (int m = 0; m < 4; ++m) d.v[4 * a + m] = s.v_dofs[4 * nodes[a] + m];
    }
    return d;
  }

  Fields eval_fields(const ElementDofs& d, const QP& qp) const {
    Fields f;
    Eigen::Matrix2d grad_u = Eigen::Matrix2d::Zero();
    for (int a = 0; a < 4; ++a) {
      grad_u.row(0) += d.u[2 * a] * qp.q1_grad[a].transpose();
      grad_u.row(1) += d.u[2 * a + 1] * qp.q1_grad[a].transpose();
    }
    f.Eu = 0.5 * (grad_u + grad_u.transpose());
    f.v = 0.0;
    f.grad_v.setZero();
    f.H.setZero();
    for (int b = 0; b < 16; ++b) {
      f.v += d.v[b] * qp.bfs.values[b];
      f.grad_v += d.v[b] * qp.bfs.grads[b];
      f.H += d.v[b] * qp.bfs.hessians[b];
    }
    f.G0 = f.Eu + 0.5 * f.grad_v * f.grad_v.transpose();
    return f;
  }

  Eigen::Matrix2d cw(const Eigen::Matrix2d& G) const {
    return params_.lambda * G.trace() * Eigen::Matrix2d::Identity() +
           2.0 * params_.mu * G;
  }

  Eigen::Matrix2d cd(const Eigen::Matrix2d& G) const { return 4.0 * params_.c * G; }

  // Pairs a membrane stress with e(phi_u) (u-DOFs) and with
  // grad v . grad phi_v (v-DOFs).
  void scatter_membrane(Eigen::VectorXd& grad, int el, const QP& qp,
                        const Eigen::Matrix2d& S, const Fields& f,
                        double wjac) const {
    const auto& nodes = mesh_->elements[el];
    for (int a = 0; a < 4; ++a) {
      const Eigen::Vector2d Sg = S * qp.q1_grad[a];
      grad[2 * nodes[a]] += wjac * Sg[0];
      grad[2 * nodes[a] + 1] += wjac * Sg[1];
    }
    const Eigen::Vector2d Sgv = S * f.grad_v;
    const int off = 2 * mesh_->n_nodes();
    for (int a = 0; a < 4; ++a)
      for (int m = 0; m < 4; ++m)
        grad[off + 4 * nodes[a] + m] +=
            wjac * Sgv.dot(qp.bfs.grads[4 * a + m]);
  }

  void scatter_membrane_u_only(Eigen::VectorXd& grad, int el, const QP& qp,
                               const Eigen::Matrix2d& S, double wjac) const {
    const auto& nodes = mesh_->elements[el];
    for (int a = 0; a < 4; ++a) {
      const Eigen::Vector2d Sg = S * qp.q1_grad[a];
      grad[2 * nodes[a]] += wjac * Sg[0];
      grad[2 * nodes[a] + 1] += wjac * Sg[1];
    }
  }

  // Pairs a bending stress with the Hessian of each v basis function and adds
  // the (negative) load pairing.
  void scatter_bending_and_load(Eigen::VectorXd& grad, int el, const QP& qp,
                                const Eigen::Matrix2d& S_bend, double load,
                                double wjac) const {
    const auto& nodes = mesh_->elements[el];
    const int off = 2 * mesh_->n_nodes();
    for (int a = 0; a < 4; ++a) {
      for (int m = 0; m < 4; ++m) {
        const int b = 4 * a + m;
        double val = S_bend.cwiseProduct(qp.bfs.hessians[b]).sum();
        val -= load * qp.bfs.values[b];
        grad[off + 4 * nodes[a] + m] += wjac * val;
      }
    }
  }

  template <class Form>
  double thickness_integral(const PlateState& a, const PlateState& b,
                            Form&& form, bool diff) const {
    // 2-point Gauss on (-1/2, 1/2).
    const double x3[2] = {-0.5 / std::sqrt(3.0), 0.5 / std::sqrt(3.0)};
    const double jac = mesh_->hx * mesh_->hy;
    double acc = 0.0;
    for (int el = 0; el < mesh_->n_elements(); ++el) {
      const auto da = gather(a, el);
      const auto db = gather(b, el);
      auto accumulate = [&](const std::vector<QP>& pts, bool q1_only,
                            double sign) {
        for (const QP& qp : pts) {
          const Fields fa = eval_fields(da, qp);
          double val = 0.0;
          if (q1_only) {
            Eigen::Matrix2d E = fa.Eu;
            if (diff) E = eval_fields(db, qp).Eu - fa.Eu;
            val = form(E);  // x3-independent: both Gauss weights sum to 1
          } else {
            Eigen::Matrix2d G0 = fa.G0, H = fa.H;
            if (diff) {
              const Fields fb = eval_fields(db, qp);
              G0 = fb.G0 - fa.G0;
              H = fb.H - fa.H;
            }
            for (double x : x3) val += 0.5 * form((G0 - x * H).eval());
          }
          acc += sign * qp.w * jac * val;
        }
      };
      accumulate(main_pts_, false, 1.0);
      if (!q1_pts_.empty()) {
        accumulate(main_pts_, true, -1.0);
        accumulate(q1_pts_, true, 1.0);
      }
    }
    return acc;
  }

  void check_state(const PlateState& s) const {
    if (s.mesh == nullptr || !s.mesh->same_grid(*mesh_))
      throw std::invalid_argument("PlateModel: state discretizes a different mesh");
    if (s.u_dofs.size() != 2 * mesh_->n_nodes() ||
        s.v_dofs.size() != 4 * mesh_->n_nodes())
      throw std::invalid_argument("PlateModel: state DOF lengths mismatch mesh");
  }

  void check_pair(const PlateState& a, const PlateState& b) const {
    check_state(a);
    check_state(b);
  }

  const MeshGrid* mesh_;
  MaterialParams params_;
  QuadratureMode mode_;
  std::vector<QP> main_pts_;
  std::vector<QP> q1_pts_;  // nonempty only in paper mode
};

/// Fills the BFS nodal data of the deflection from analytic fields; u = 0.
template <class FVal, class FGrad, class FMixed>
PlateState interpolate_initial(const MeshGrid& mesh, FVal&& value,
                               FGrad&& grad, FMixed&& mixed) {
  PlateState s = PlateState::zero(mesh);
  for (int node = 0; node < mesh.n_nodes(); ++node) {
    const Eigen::Vector2d& x = mesh.node_coords[node];
    const Eigen::Vector2d g = grad(x);
    s.v_dofs[4 * node] = value(x);
    s.v_dofs[4 * node + 1] = g[0];
    s.v_dofs[4 * node + 2] = g[1];
    s.v_dofs[4 * node + 3] = mixed(x);
  }
  return s;
}

/// Free-DOF view of a PlateModel: the metric/energy system fed to the
/// minimizing-movements engine.  Holds non-owning pointers; model and
/// constraints must outlive the system.
class PlateSystem {
 public:
  PlateSystem(const PlateModel& model, const ConstraintSet& cs)
      : model_(&model), cs_(&cs) {
    if (cs.total_dofs != total_dof_count(model.mesh()))
      throw std::invalid_argument("PlateSystem: constraints sized for a different mesh");
  }

  Eigen::Index dimension() const { return cs_->n_free(); }

  PlateState to_state(const Eigen::VectorXd& z) const {
    return unpack_state(model_->mesh(), cs_->expand(z));
  }

  Eigen::VectorXd from_state(const PlateState& s) const {
    return cs_->reduce(pack_state(s));
  }

  double energy(const Eigen::VectorXd& z) const {
    return model_->energy(to_state(z));
  }

  double metric(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return model_->dissipation(to_state(a), to_state(b));
  }

  Eigen::VectorXd energy_gradient(const Eigen::VectorXd& z) const {
    return model_->energy_gradient(to_state(z), *cs_);
  }

  Eigen::VectorXd metric_sq_gradient(const Eigen::VectorXd& prev,
                                     const Eigen::VectorXd& z) const {
    return model_->dissipation_sq_gradient(to_state(prev), to_state(z), *cs_);
  }

  const PlateModel& model() const { return *model_; }
  const ConstraintSet& constraints() const { return *cs_; }

 private:
  const PlateModel* model_;
  const ConstraintSet* cs_;
};

}  // namespace vkplate
