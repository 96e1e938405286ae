#pragma once

// Edgewise stabilization parameters tau1 (constant per element edge) and tau2 = tau1 - zeta.n.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hdgbddc/basis.hpp"
#include "hdgbddc/error.hpp"
#include "hdgbddc/mesh.hpp"
#include "hdgbddc/problem.hpp"

namespace hdgbddc {

/// tau1 = max(sup_e zeta.n, 0) + offset; the standard choice is offset = 1.
struct StabilizerPolicy {
  double offset = 1.0;
};

class StabilizerSpec {
 public:
  std::vector<std::array<double, 3>> tau1;    // per (triangle, local edge)
  std::vector<std::array<Vec, 3>> zeta_n;     // zeta . n_K at the edge rule points (global edge order)
  double C1 = 0.0;                            // max tau1
  double C_star = std::numeric_limits<double>::infinity();  // min over edges of inf(tau1 - zn/2) / max|zn|
  double min_margin = std::numeric_limits<double>::infinity();  // min over edges of inf(tau1 - zn/2)

  /// tau2 at the edge rule points of local edge j.
  Vec tau2(int t, int j) const { return Vec::Constant(zeta_n[t][j].size(), tau1[t][j]) - zeta_n[t][j]; }
};

inline StabilizerSpec make_stabilizers(const MeshTopology& mesh, const VectorField& zeta, const ElementBasis& basis,
                                       StabilizerPolicy policy = {}) {
  StabilizerSpec s;
  s.tau1.resize(mesh.triangles.size());
  s.zeta_n.resize(mesh.triangles.size());
  const int nqe = static_cast<int>(basis.edge_rule.points.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int j = 0; j < 3; ++j) {
      const int e = mesh.edge_of_triangle[t].edge[j];
      const Point n = mesh.outward_normal(t, j);
      const Point lo = mesh.vertices[mesh.edges[e].vertices[0]];
      const Point hi = mesh.vertices[mesh.edges[e].vertices[1]];
      Vec zn(nqe);
      for (int q = 0; q < nqe; ++q) zn(q) = dot(zeta(lo + basis.edge_rule.points[q] * (hi - lo)), n);
      const double zlo = dot(zeta(lo), n), zhi = dot(zeta(hi), n);
      const double sup = std::max({zn.maxCoeff(), zlo, zhi});
      const double tau = std::max(sup, 0.0) + policy.offset;
      const double inf_margin = std::min({(tau - 0.5 * zn.array()).minCoeff(), tau - 0.5 * zlo, tau - 0.5 * zhi});
      const double zmax = std::max({zn.cwiseAbs().maxCoeff(), std::abs(zlo), std::abs(zhi)});
      if (inf_margin <= 0.0)
        fail(ErrorCode::AssumptionViolation, "tau1 - zeta.n/2 <= 0 on edge " + std::to_string(e) + " of triangle " +
                                                 std::to_string(t));
      s.tau1[t][j] = tau;
      s.zeta_n[t][j] = std::move(zn);
      s.C1 = std::max(s.C1, tau);
      s.min_margin = std::min(s.min_margin, inf_margin);
      if (zmax > 0.0) s.C_star = std::min(s.C_star, inf_margin / zmax);
    }
  }
  return s;
}

}  // namespace hdgbddc
