#pragma once

// Cellwise and edgewise L2 projections onto P^k.

#include <functional>

#include <Eigen/Dense>

#include "hdgbddc/basis.hpp"
#include "hdgbddc/error.hpp"
#include "hdgbddc/mesh.hpp"

namespace hdgbddc {

using ScalarField = std::function<double(Point)>;

/// Per-triangle L2 projection; coefficients are stored triangle-major, n_cell per triangle.
inline Vec project_cell(const ScalarField& f, const MeshTopology& mesh, const ElementBasis& basis) {
  const int n = basis.n_cell;
  Vec coeffs(static_cast<Eigen::Index>(mesh.num_triangles()) * n);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    require(std::abs(mesh.area(t)) > 1e-14, ErrorCode::SingularMass, "degenerate triangle " + std::to_string(t));
    const CellEval ce = eval_cell(mesh, t, basis);
    const Mat mass = ce.phi * ce.weights.asDiagonal() * ce.phi.transpose();
    Vec rhs = Vec::Zero(n);
    for (size_t q = 0; q < ce.points.size(); ++q) rhs += (ce.weights(q) * f(ce.points[q])) * ce.phi.col(q);
    coeffs.segment(static_cast<Eigen::Index>(t) * n, n) = mass.llt().solve(rhs);
  }
  return coeffs;
}

/// Per-edge L2 projection in the edge basis (global edge orientation), n_edge per edge.
inline Vec project_edge(const ScalarField& g, const MeshTopology& mesh, const ElementBasis& basis) {
  const int m = basis.n_edge;
  Vec coeffs(static_cast<Eigen::Index>(mesh.num_edges()) * m);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& ed = mesh.edges[e];
    require(ed.length > 1e-14, ErrorCode::SingularMass, "degenerate edge " + std::to_string(e));
    const Point lo = mesh.vertices[ed.vertices[0]];
    const Point hi = mesh.vertices[ed.vertices[1]];
    Mat mass = Mat::Zero(m, m);
    Vec rhs = Vec::Zero(m);
    for (size_t q = 0; q < basis.edge_rule.points.size(); ++q) {
      const double w = basis.edge_rule.weights[q] * ed.length;
      const auto psi = basis.edge_values.col(static_cast<Eigen::Index>(q));
      mass += w * psi * psi.transpose();
      rhs += (w * g(lo + basis.edge_rule.points[q] * (hi - lo))) * psi;
    }
    coeffs.segment(static_cast<Eigen::Index>(e) * m, m) = mass.llt().solve(rhs);
  }
  return coeffs;
}

}  // namespace hdgbddc
