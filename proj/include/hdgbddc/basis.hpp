#pragma once

// P^k bases on triangles and edges, tabulated at quadrature points, plus the per-element
// physical evaluation used by assembly, projections, and error norms.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "hdgbddc/error.hpp"
#include "hdgbddc/mesh.hpp"
#include "hdgbddc/quadrature.hpp"

namespace hdgbddc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline int cell_dim(int k) { return (k + 1) * (k + 2) / 2; }
inline int edge_dim(int k) { return k + 1; }

/// Monomials xi^a eta^b (a + b <= k) on the reference triangle, ordered by total degree.
struct CellMonomials {
  int k;
  std::vector<std::array<int, 2>> exponents;

  explicit CellMonomials(int degree) : k(degree) {
    for (int d = 0; d <= k; ++d)
      for (int b = 0; b <= d; ++b) exponents.push_back({d - b, b});
  }

  int size() const { return static_cast<int>(exponents.size()); }

  void eval(Point ref, double* val, double* dxi, double* deta) const {
    for (int i = 0; i < size(); ++i) {
      const int a = exponents[i][0], b = exponents[i][1];
      const double xa = std::pow(ref.x, a), yb = std::pow(ref.y, b);
      val[i] = xa * yb;
      dxi[i] = a > 0 ? a * std::pow(ref.x, a - 1) * yb : 0.0;
      deta[i] = b > 0 ? b * xa * std::pow(ref.y, b - 1) : 0.0;
    }
  }
};

/// Shifted Legendre polynomials on [0, 1]; mode 0 is the constant 1, higher modes have zero mean.
inline void legendre01(int k, double s, double* out) {
  const double x = 2.0 * s - 1.0;
  out[0] = 1.0;
  if (k >= 1) out[1] = x;
  for (int j = 2; j <= k; ++j) out[j] = ((2.0 * j - 1.0) * x * out[j - 1] - (j - 1.0) * out[j - 2]) / j;
}

/// Reference point on local edge j at local parameter t (from local vertex j to j+1).
inline Point reference_edge_point(int j, double t) {
  switch (j) {
    case 0: return {t, 0.0};
    case 1: return {1.0 - t, t};
    default: return {0.0, 1.0 - t};
  }
}

class ElementBasis {
 public:
  int k;
  int n_cell;
  int n_edge;
  TriangleRule cell_rule;
  LineRule edge_rule;
  Mat cell_values;  // n_cell x nq
  Mat cell_dxi;
  Mat cell_deta;
  // trace[j][r]: cell basis on local edge j at edge points ordered by the global edge
  // parameter; r = 1 when the local direction opposes the global one.
  std::array<std::array<Mat, 2>, 3> trace;
  Mat edge_values;  // n_edge x nqe

  ElementBasis(int degree, int quadrature_degree)
      : k(degree),
        n_cell(cell_dim(degree)),
        n_edge(edge_dim(degree)),
        cell_rule(triangle_rule(quadrature_degree)),
        edge_rule(line_rule(quadrature_degree)) {
    require(degree >= 0, ErrorCode::InvalidArgument, "polynomial degree must be nonnegative");
    const CellMonomials mono(k);
    const int nq = static_cast<int>(cell_rule.points.size());
    cell_values.resize(n_cell, nq);
    cell_dxi.resize(n_cell, nq);
    cell_deta.resize(n_cell, nq);
    std::vector<double> v(n_cell), dx(n_cell), dy(n_cell);
    for (int q = 0; q < nq; ++q) {
      mono.eval(cell_rule.points[q], v.data(), dx.data(), dy.data());
      for (int i = 0; i < n_cell; ++i) {
        cell_values(i, q) = v[i];
        cell_dxi(i, q) = dx[i];
        cell_deta(i, q) = dy[i];
      }
    }
    const int nqe = static_cast<int>(edge_rule.points.size());
    for (int j = 0; j < 3; ++j) {
      for (int r = 0; r < 2; ++r) {
        Mat& tab = trace[j][r];
        tab.resize(n_cell, nqe);
        for (int q = 0; q < nqe; ++q) {
          const double s = edge_rule.points[q];
          mono.eval(reference_edge_point(j, r == 0 ? s : 1.0 - s), v.data(), dx.data(), dy.data());
          for (int i = 0; i < n_cell; ++i) tab(i, q) = v[i];
        }
      }
    }
    edge_values.resize(n_edge, nqe);
    std::vector<double> le(n_edge);
    for (int q = 0; q < nqe; ++q) {
      legendre01(k, edge_rule.points[q], le.data());
      for (int i = 0; i < n_edge; ++i) edge_values(i, q) = le[i];
    }
  }

  /// Default assembly rule degree 2k+3.
  static ElementBasis with_default_rule(int degree) { return ElementBasis(degree, 2 * degree + 3); }
};

/// Affine map of a triangle and its cell basis evaluated in physical coordinates.
struct CellEval {
  Point x0;
  Eigen::Matrix2d jac;      // columns v1 - v0, v2 - v0
  Eigen::Matrix2d jac_inv;  // inverse of jac
  double area = 0.0;
  std::vector<Point> points;
  Vec weights;  // physical quadrature weights
  Mat phi;      // n_cell x nq
  Mat dphidx;
  Mat dphidy;

  Point to_reference(Point x) const {
    const Eigen::Vector2d r = jac_inv * Eigen::Vector2d(x.x - x0.x, x.y - x0.y);
    return {r(0), r(1)};
  }
};

/// One local edge of a triangle, with the cell basis traced onto it and the edge basis.
struct EdgeEval {
  int edge = -1;
  Point normal;  // outward for the triangle
  double length = 0.0;
  std::vector<Point> points;  // ordered by the global edge parameter
  Vec weights;
  Mat phi;  // cell basis traces, n_cell x nqe
  Mat psi;  // edge basis, n_edge x nqe
};

inline CellEval eval_cell(const MeshTopology& mesh, int t, const ElementBasis& basis) {
  CellEval ce;
  const auto& v = mesh.triangles[t];
  ce.x0 = mesh.vertices[v[0]];
  const Point a = mesh.vertices[v[1]] - ce.x0;
  const Point b = mesh.vertices[v[2]] - ce.x0;
  ce.jac << a.x, b.x, a.y, b.y;
  const double det = ce.jac.determinant();
  ce.area = 0.5 * det;
  require(ce.area > 1e-14, ErrorCode::SingularMass, "degenerate triangle " + std::to_string(t));
  ce.jac_inv = ce.jac.inverse();
  const int nq = static_cast<int>(basis.cell_rule.points.size());
  ce.points.resize(nq);
  ce.weights.resize(nq);
  for (int q = 0; q < nq; ++q) {
    const Point r = basis.cell_rule.points[q];
    ce.points[q] = ce.x0 + r.x * a + r.y * b;
    ce.weights(q) = basis.cell_rule.weights[q] * det;
  }
  ce.phi = basis.cell_values;
  // grad phi = J^{-T} grad_ref phi
  ce.dphidx = ce.jac_inv(0, 0) * basis.cell_dxi + ce.jac_inv(1, 0) * basis.cell_deta;
  ce.dphidy = ce.jac_inv(0, 1) * basis.cell_dxi + ce.jac_inv(1, 1) * basis.cell_deta;
  return ce;
}

inline EdgeEval eval_edge(const MeshTopology& mesh, int t, int j, const ElementBasis& basis) {
  EdgeEval ee;
  const auto& te = mesh.edge_of_triangle[t];
  ee.edge = te.edge[j];
  const Edge& ed = mesh.edges[ee.edge];
  ee.normal = mesh.outward_normal(t, j);
  ee.length = ed.length;
  const int local_start = mesh.triangles[t][j];
  const int reversed = (local_start == ed.vertices[0]) ? 0 : 1;
  const Point lo = mesh.vertices[ed.vertices[0]];
  const Point hi = mesh.vertices[ed.vertices[1]];
  const int nqe = static_cast<int>(basis.edge_rule.points.size());
  ee.points.resize(nqe);
  ee.weights.resize(nqe);
  for (int q = 0; q < nqe; ++q) {
    ee.points[q] = lo + basis.edge_rule.points[q] * (hi - lo);
    ee.weights(q) = basis.edge_rule.weights[q] * ed.length;
  }
  ee.phi = basis.trace[j][reversed];
  ee.psi = basis.edge_values;
  return ee;
}

/// Value of a cellwise polynomial with coefficients c at physical point x of triangle t.
inline double eval_cell_field(const CellEval& ce, const CellMonomials& mono, const double* c, Point x) {
  std::vector<double> v(mono.size()), dx(mono.size()), dy(mono.size());
  mono.eval(ce.to_reference(x), v.data(), dx.data(), dy.data());
  double s = 0.0;
  for (int i = 0; i < mono.size(); ++i) s += c[i] * v[i];
  return s;
}

}  // namespace hdgbddc
