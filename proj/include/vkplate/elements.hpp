#pragma once

// Reference-element machinery: quadrature on the unit square, bilinear Q1
// shape functions for in-plane displacement, and the 16-DOF Bogner-Fox-Schmit
// bicubic Hermite element for the deflection.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vkplate {

enum class QuadRuleKind { midpoint_1pt, gauss_2x2, gauss_3x3 };

struct QuadPoint {
  double xi;
  double eta;
  double weight;  ///< reference-area measure; weights of a rule sum to 1
};

struct QuadratureRule {
  QuadRuleKind kind;
  std::vector<QuadPoint> points;
};

/// Tensor-product Gauss rules on [0,1]^2.
inline QuadratureRule quadrature(QuadRuleKind kind) {
  QuadratureRule rule{kind, {}};
  switch (kind) {
    case QuadRuleKind::midpoint_1pt:
      rule.points.push_back({0.5, 0.5, 1.0});
      break;
    case QuadRuleKind::gauss_2x2: {
      const double d = 0.5 / std::sqrt(3.0);
      const double p[2] = {0.5 - d, 0.5 + d};
      for (double eta : p)
        for (double xi : p) rule.points.push_back({xi, eta, 0.25});
      break;
    }
    case QuadRuleKind::gauss_3x3: {
      const double d = 0.5 * std::sqrt(3.0 / 5.0);
      const double p[3] = {0.5 - d, 0.5, 0.5 + d};
      const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
          rule.points.push_back({p[i], p[j], w[i] * w[j]});
      break;
    }
  }
  return rule;
}

/// Values and reference-coordinate gradients of the 4 bilinear shape
/// functions, ordered counter-clockwise from the (0,0) corner.
struct Q1Eval {
  std::array<double, 4> values;
  std::array<Eigen::Vector2d, 4> grads;
};

inline Q1Eval q1_eval(double xi, double eta) {
  Q1Eval e;
  e.values = {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
  e.grads[0] = {-(1 - eta), -(1 - xi)};
  e.grads[1] = {(1 - eta), -xi};
  e.grads[2] = {eta, xi};
  e.grads[3] = {-eta, (1 - xi)};
  return e;
}

namespace detail {

// 1D Hermite cubics on [0,1]: value at 0, slope at 0, value at 1, slope at 1.
inline std::array<double, 4> hermite(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {1 - 3 * t2 + 2 * t3, t - 2 * t2 + t3, 3 * t2 - 2 * t3, -t2 + t3};
}

inline std::array<double, 4> hermite_d1(double t) {
  const double t2 = t * t;
  return {-6 * t + 6 * t2, 1 - 4 * t + 3 * t2, 6 * t - 6 * t2, -2 * t + 3 * t2};
}

inline std::array<double, 4> hermite_d2(double t) {
  return {-6 + 12 * t, -4 + 6 * t, 6 - 12 * t, -2 + 6 * t};
}

}  // namespace detail

/// Bogner-Fox-Schmit basis evaluated at one reference point.
///
/// Local DOF ordering is corner-major, kind-minor: for corner a = 0..3
/// (counter-clockwise from the (0,0) corner) the four consecutive entries
/// 4a+0..4a+3 carry value, d/dx1, d/dx2, d^2/dx1 dx2.  Derivative DOFs are
/// scaled by hx, hy, hx*hy so coefficient vectors hold physical derivatives,
/// and grads/hessians are returned in physical coordinates.
struct BFSEval {
  std::array<double, 16> values;
  std::array<Eigen::Vector2d, 16> grads;
  std::array<Eigen::Matrix2d, 16> hessians;
};

inline BFSEval bfs_eval(double xi, double eta, double hx, double hy) {
  if (!(hx > 0) || !(hy > 0))
    throw std::invalid_argument("bfs_eval: hx and hy must be positive");

  const auto fx = detail::hermite(xi), fy = detail::hermite(eta);
  const auto dfx = detail::hermite_d1(xi), dfy = detail::hermite_d1(eta);
  const auto ddfx = detail::hermite_d2(xi), ddfy = detail::hermite_d2(eta);

  // Per corner: index of the value-type / slope-type 1D function on each axis.
  static constexpr int corner_x[4] = {0, 1, 1, 0};  // 0 -> (h1,h2), 1 -> (h3,h4)
  static constexpr int corner_y[4] = {0, 0, 1, 1};

  BFSEval e;
  for (int a = 0; a < 4; ++a) {
    const int ix_val = 2 * corner_x[a], ix_slope = ix_val + 1;
    const int iy_val = 2 * corner_y[a], iy_slope = iy_val + 1;
    // kind -> (1D function index in x, in y, DOF scale)
    const struct {
      int ix, iy;
      double scale;
    } kinds[4] = {{ix_val, iy_val, 1.0},
                  {ix_slope, iy_val, hx},
                  {ix_val, iy_slope, hy},
                  {ix_slope, iy_slope, hx * hy}};
    for (int m = 0; m < 4; ++m) {
      const auto [ix, iy, s] = kinds[m];
      const int dof = 4 * a + m;
      e.values[dof] = s * fx[ix] * fy[iy];
      e.grads[dof] = {s * dfx[ix] * fy[iy] / hx, s * fx[ix] * dfy[iy] / hy};
      const double hxx = s * ddfx[ix] * fy[iy] / (hx * hx);
      const double hyy = s * fx[ix] * ddfy[iy] / (hy * hy);
      const double hxy = s * dfx[ix] * dfy[iy] / (hx * hy);
      e.hessians[dof] << hxx, hxy, hxy, hyy;
    }
  }
  return e;
}

}  // namespace vkplate
