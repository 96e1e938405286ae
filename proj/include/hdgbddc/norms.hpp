#pragma once

// Error norms of a discrete solution against an exact oracle.
//
// Energy norm of a triple (r, w, mu):
//   ||(r,w,mu)||^2 = sqrt(beta) (||r||^2 + ||w||^2 + || |tau1 - zeta.n/2|^(1/2) (w - mu) ||^2_{dT}) + ||w||^2

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "hdgbddc/assembly.hpp"
#include "hdgbddc/basis.hpp"
#include "hdgbddc/mesh.hpp"
#include "hdgbddc/problem.hpp"
#include "hdgbddc/stabilizer.hpp"

namespace hdgbddc {

struct ErrorReport {
  double energy = 0.0;      // sqrt(energy_y^2 + energy_p^2)
  double energy_sum = 0.0;  // energy_y + energy_p
  double energy_y = 0.0;
  double energy_p = 0.0;
  double l2_y = 0.0;
  double l2_p = 0.0;
};

/// Squared pieces of the triple norm, kept apart so the beta weighting can be checked.
struct TripleNormParts {
  double flux = 0.0;   // ||r||^2
  double cell = 0.0;   // ||w||^2
  double jump = 0.0;   // weighted ||w - mu||^2 on element boundaries

  double weighted(double sqrt_beta) const { return sqrt_beta * (flux + cell + jump) + cell; }
};

/// Compares (q_h, y_h, yhat_h) and (pv_h, p_h, phat_h) with q = -grad y, pv = -grad p.
/// Quadrature uses degree 2k+4 unless overridden; triangles are processed in batches so the
/// exact oracle can share work between nearby points.
inline ErrorReport compute_errors(const MeshTopology& mesh, const ProblemSpec& problem, const CondensedSystem& sys,
                                  const FieldSolution& sol, int quadrature_degree = -1,
                                  std::array<TripleNormParts, 2>* parts_out = nullptr) {
  require(problem.has_exact(), ErrorCode::InvalidArgument, "problem has no exact solution");
  const int k = sys.k;
  const ElementBasis eb(k, quadrature_degree >= 0 ? quadrature_degree : 2 * k + 4);
  const int m = eb.n_edge;
  const int nq = static_cast<int>(eb.cell_rule.points.size());
  const int nqe = static_cast<int>(eb.edge_rule.points.size());
  const int per_tri = nq + 3 * nqe;
  const int T = mesh.num_triangles();
  const int batch = 2048;
  std::array<TripleNormParts, 2> parts;
  std::vector<Point> pts;
  std::vector<ExactValues> ex;
  for (int t0 = 0; t0 < T; t0 += batch) {
    const int t1 = std::min(T, t0 + batch);
    pts.clear();
    std::vector<CellEval> cells;
    std::vector<std::array<EdgeEval, 3>> edges;
    cells.reserve(t1 - t0);
    edges.reserve(t1 - t0);
    for (int t = t0; t < t1; ++t) {
      cells.push_back(eval_cell(mesh, t, eb));
      edges.push_back({eval_edge(mesh, t, 0, eb), eval_edge(mesh, t, 1, eb), eval_edge(mesh, t, 2, eb)});
      pts.insert(pts.end(), cells.back().points.begin(), cells.back().points.end());
      for (int j = 0; j < 3; ++j) pts.insert(pts.end(), edges.back()[j].points.begin(), edges.back()[j].points.end());
    }
    ex.resize(pts.size());
    problem.exact_batch(pts, ex);
    for (int t = t0; t < t1; ++t) {
      const CellEval& ce = cells[t - t0];
      const ExactValues* xv = ex.data() + static_cast<size_t>(t - t0) * per_tri;
      const Vec lam = gather_traces(sys, t, sol.lambda);
      for (int f = 0; f < 2; ++f) {
        const Vec wcoef = f == 0 ? Vec(sol.y(t)) : Vec(sol.p(t));
        const Vec rx = f == 0 ? Vec(sol.q(t, 0)) : Vec(sol.pv(t, 0));
        const Vec ry = f == 0 ? Vec(sol.q(t, 1)) : Vec(sol.pv(t, 1));
        const Vec wv = ce.phi.transpose() * wcoef;
        const Vec qx = ce.phi.transpose() * rx;
        const Vec qy = ce.phi.transpose() * ry;
        for (int q = 0; q < nq; ++q) {
          const double u = f == 0 ? xv[q].y : xv[q].p;
          const Point gu = f == 0 ? xv[q].grad_y : xv[q].grad_p;
          const double ew = u - wv(q);
          const double ex_ = -gu.x - qx(q), ey_ = -gu.y - qy(q);
          parts[f].cell += ce.weights(q) * ew * ew;
          parts[f].flux += ce.weights(q) * (ex_ * ex_ + ey_ * ey_);
        }
        for (int j = 0; j < 3; ++j) {
          const EdgeEval& ee = edges[t - t0][j];
          const Vec wtr = ee.phi.transpose() * wcoef;
          const Vec mtr = ee.psi.transpose() * lam.segment(f * 3 * m + j * m, m);
          const double tau = sys.stab.tau1[t][j];
          for (int q = 0; q < nqe; ++q) {
            const ExactValues& v = xv[nq + j * nqe + q];
            const double u = f == 0 ? v.y : v.p;
            const double d = (u - wtr(q)) - (u - mtr(q));
            const double wgt = std::abs(tau - 0.5 * dot(problem.zeta(ee.points[q]), ee.normal));
            parts[f].jump += ee.weights(q) * wgt * d * d;
          }
        }
      }
    }
  }
  ErrorReport r;
  r.energy_y = std::sqrt(parts[0].weighted(sys.sqrt_beta));
  r.energy_p = std::sqrt(parts[1].weighted(sys.sqrt_beta));
  r.energy = std::hypot(r.energy_y, r.energy_p);
  r.energy_sum = r.energy_y + r.energy_p;
  r.l2_y = std::sqrt(parts[0].cell);
  r.l2_p = std::sqrt(parts[1].cell);
  if (parts_out) *parts_out = parts;
  return r;
}

/// Per-vertex averages of y_h and p_h over the triangles sharing each vertex.
struct NodalValues {
  std::vector<double> y, p;
};

inline NodalValues nodal_values(const MeshTopology& mesh, const CondensedSystem& sys, const FieldSolution& sol) {
  NodalValues nv;
  nv.y.assign(mesh.vertices.size(), 0.0);
  nv.p.assign(mesh.vertices.size(), 0.0);
  std::vector<int> count(mesh.vertices.size(), 0);
  const CellMonomials mono(sys.k);
  std::vector<double> v(mono.size()), dx(mono.size()), dy(mono.size());
  const std::array<Point, 3> ref{Point{0.0, 0.0}, Point{1.0, 0.0}, Point{0.0, 1.0}};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int a = 0; a < 3; ++a) {
      mono.eval(ref[a], v.data(), dx.data(), dy.data());
      const Eigen::Map<const Vec> phi(v.data(), mono.size());
      const int vid = mesh.triangles[t][a];
      nv.y[vid] += phi.dot(sol.y(t));
      nv.p[vid] += phi.dot(sol.p(t));
      ++count[vid];
    }
  }
  for (size_t i = 0; i < count.size(); ++i) {
    nv.y[i] /= count[i];
    nv.p[i] /= count[i];
  }
  return nv;
}

}  // namespace hdgbddc
