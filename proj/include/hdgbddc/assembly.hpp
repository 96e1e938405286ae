#pragma once

// Skeleton numbering, assembly of the condensed trace system, interior recovery and the
// per-subdomain splitting used by substructuring.

#include <array>
#include <memory>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hdgbddc/basis.hpp"
#include "hdgbddc/error.hpp"
#include "hdgbddc/hdg_local.hpp"
#include "hdgbddc/mesh.hpp"
#include "hdgbddc/problem.hpp"
#include "hdgbddc/stabilizer.hpp"

namespace hdgbddc {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Trace unknowns of every non-Dirichlet edge, edge-major: m modes of yhat, then m of phat.
struct SkeletonDofMap {
  int m = 0;
  int num_dofs = 0;
  std::vector<int> edge_offset;  // -1 on Dirichlet edges

  struct Entry {
    int edge;
    int field;  // 0 = yhat, 1 = phat
    int mode;
  };
  std::vector<Entry> inverse;

  int dof(int edge, int field, int mode) const {
    const int o = edge_offset[edge];
    return o < 0 ? -1 : o + field * m + mode;
  }
};

inline SkeletonDofMap number_skeleton(const MeshTopology& mesh, int k) {
  SkeletonDofMap d;
  d.m = edge_dim(k);
  d.edge_offset.assign(mesh.edges.size(), -1);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.boundary_edge[e]) continue;
    d.edge_offset[e] = d.num_dofs;
    for (int f = 0; f < 2; ++f)
      for (int a = 0; a < d.m; ++a) d.inverse.push_back({e, f, a});
    d.num_dofs += 2 * d.m;
  }
  return d;
}

/// Global dof of each local trace slot of triangle t (SystemLayout order: yhat edges 0..2, then phat), or -1.
inline std::vector<int> local_trace_dofs(const MeshTopology& mesh, const SkeletonDofMap& dofs, int t) {
  const int m = dofs.m;
  std::vector<int> g(6 * m);
  for (int f = 0; f < 2; ++f)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < m; ++a) g[f * 3 * m + j * m + a] = dofs.dof(mesh.edge_of_triangle[t].edge[j], f, a);
  return g;
}

struct AssemblyOptions {
  int quadrature_degree = -1;  // default 2k+3
  StabilizerPolicy stabilizer;
};

struct CondensedSystem {
  int k = 1;
  std::shared_ptr<const ElementBasis> basis;
  StabilizerSpec stab;
  SkeletonDofMap dofs;
  double sqrt_beta = 1.0;
  SpMat A;
  Vec b;
  std::vector<CondensedElement> elements;
  std::vector<std::vector<int>> trace_dofs;   // per triangle, see local_trace_dofs
  std::vector<std::array<Mat, 3>> robin;      // per triangle, <zeta.n_K psi, psi> per local edge

  int num_dofs() const { return dofs.num_dofs; }
};

inline CondensedSystem assemble(const MeshTopology& mesh, const ProblemSpec& problem, int k,
                                const AssemblyOptions& opt = {}) {
  require(k >= 0, ErrorCode::InvalidArgument, "polynomial degree must be nonnegative");
  CondensedSystem sys;
  sys.k = k;
  sys.basis = std::make_shared<const ElementBasis>(k, opt.quadrature_degree >= 0 ? opt.quadrature_degree : 2 * k + 3);
  sys.stab = make_stabilizers(mesh, problem.zeta, *sys.basis, opt.stabilizer);
  sys.dofs = number_skeleton(mesh, k);
  sys.sqrt_beta = std::sqrt(problem.beta);
  const int T = mesh.num_triangles();
  const int m = sys.dofs.m;
  sys.elements.resize(T);
  sys.trace_dofs.resize(T);
  sys.robin.resize(T);
  sys.b = Vec::Zero(sys.dofs.num_dofs);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(T) * 36 * m * m);
  for (int t = 0; t < T; ++t) {
    const ElementOperatorBundle bundle = build_element_bundle(mesh, t, problem, sys.stab, *sys.basis);
    sys.elements[t] = condense_element(bundle);
    sys.robin[t] = bundle.robin;
    sys.trace_dofs[t] = local_trace_dofs(mesh, sys.dofs, t);
    const auto& g = sys.trace_dofs[t];
    const CondensedElement& ce = sys.elements[t];
    for (int a = 0; a < 6 * m; ++a) {
      if (g[a] < 0) continue;
      sys.b(g[a]) += ce.rhs(a);
      for (int c = 0; c < 6 * m; ++c)
        if (g[c] >= 0) trip.emplace_back(g[a], g[c], ce.schur(a, c));
    }
  }
  sys.A.resize(sys.dofs.num_dofs, sys.dofs.num_dofs);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

/// Local trace vector of triangle t gathered from a global skeleton vector (zeros on Dirichlet slots).
inline Vec gather_traces(const CondensedSystem& sys, int t, const Vec& lambda) {
  const auto& g = sys.trace_dofs[t];
  Vec loc(static_cast<Eigen::Index>(g.size()));
  for (size_t a = 0; a < g.size(); ++a) loc(static_cast<Eigen::Index>(a)) = g[a] < 0 ? 0.0 : lambda(g[a]);
  return loc;
}

/// Interior fields per triangle: column t holds (q, pv, y, p) in SystemLayout order.
struct FieldSolution {
  int n = 0;
  int m = 0;
  Mat interior;
  Vec lambda;

  auto q(int t, int c) const { return interior.col(t).segment(c * n, n); }
  auto pv(int t, int c) const { return interior.col(t).segment(2 * n + c * n, n); }
  auto y(int t) const { return interior.col(t).segment(4 * n, n); }
  auto p(int t) const { return interior.col(t).segment(5 * n, n); }
};

inline FieldSolution recover_fields(const CondensedSystem& sys, const Vec& lambda) {
  require(lambda.size() == sys.num_dofs(), ErrorCode::DimensionMismatch,
          "skeleton vector has " + std::to_string(lambda.size()) + " entries, expected " +
              std::to_string(sys.num_dofs()));
  FieldSolution s;
  s.n = sys.basis->n_cell;
  s.m = sys.basis->n_edge;
  const int T = static_cast<int>(sys.elements.size());
  s.interior.resize(6 * s.n, T);
  for (int t = 0; t < T; ++t) s.interior.col(t) = sys.elements[t].recover(gather_traces(sys, t, lambda));
  s.lambda = lambda;
  return s;
}

/// Plain-text triplet dump: "matrix rows cols nnz" followed by `i j value` rows (0-based),
/// then "rhs n" followed by `i value` rows.
inline void dump_system(std::ostream& os, const CondensedSystem& sys) {
  os.precision(17);
  os << "matrix " << sys.A.rows() << ' ' << sys.A.cols() << ' ' << sys.A.nonZeros() << "\n";
  for (int c = 0; c < sys.A.outerSize(); ++c)
    for (SpMat::InnerIterator it(sys.A, c); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << "\n";
  os << "rhs " << sys.b.size() << "\n";
  for (Eigen::Index i = 0; i < sys.b.size(); ++i) os << i << ' ' << sys.b(i) << "\n";
}

/// Skeleton blocks of one subdomain, assembled only from its own triangles. Local dofs are
/// ordered interior first, then interface.
struct SubdomainBlocks {
  std::vector<int> interior_dofs;  // global skeleton dofs
  std::vector<int> gamma_dofs;     // global skeleton dofs
  std::vector<int> gamma_index;    // position in the global interface numbering
  std::vector<int> triangles;
  SpMat A_II, A_IG, A_GI;
  Mat A_GG;
  Vec b_I, b_G;
};

struct InterfaceSplit {
  std::vector<SubdomainBlocks> subdomains;
  std::vector<int> interface_dofs;     // global dof of each interface index
  std::vector<int> interface_index;    // per global dof, -1 when not on the interface
  int num_interface() const { return static_cast<int>(interface_dofs.size()); }
};

inline InterfaceSplit split_interface(const CondensedSystem& sys, const MeshTopology& mesh,
                                      const SubdomainPartition& part) {
  const SkeletonClassification cls = classify_skeleton(mesh, part);
  const int nd = sys.num_dofs();
  InterfaceSplit sp;
  sp.interface_index.assign(nd, -1);
  for (int d = 0; d < nd; ++d) {
    if (cls.edge_class[sys.dofs.inverse[d].edge] == EdgeClass::Interface) {
      sp.interface_index[d] = static_cast<int>(sp.interface_dofs.size());
      sp.interface_dofs.push_back(d);
    }
  }
  sp.subdomains.resize(part.num_subdomains);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const int s = part.subdomain_of_triangle[t];
    require(s >= 0 && s < part.num_subdomains, ErrorCode::InconsistentPartition,
            "triangle " + std::to_string(t) + " has no valid subdomain");
    sp.subdomains[s].triangles.push_back(t);
  }
  std::vector<int> local(nd, -1);
  for (int s = 0; s < part.num_subdomains; ++s) {
    SubdomainBlocks& B = sp.subdomains[s];
    // Collect dofs in ascending global order, interior before interface.
    std::vector<char> touched(nd, 0);
    for (int t : B.triangles)
      for (int g : sys.trace_dofs[t])
        if (g >= 0) touched[g] = 1;
    for (int d = 0; d < nd; ++d) {
      if (!touched[d]) continue;
      if (sp.interface_index[d] >= 0) {
        B.gamma_dofs.push_back(d);
        B.gamma_index.push_back(sp.interface_index[d]);
      } else {
        require(cls.owner[sys.dofs.inverse[d].edge] == s, ErrorCode::InconsistentPartition,
                "interior dof " + std::to_string(d) + " touched by a foreign subdomain");
        B.interior_dofs.push_back(d);
      }
    }
    const int nI = static_cast<int>(B.interior_dofs.size()), nG = static_cast<int>(B.gamma_dofs.size());
    for (int i = 0; i < nI; ++i) local[B.interior_dofs[i]] = i;
    for (int i = 0; i < nG; ++i) local[B.gamma_dofs[i]] = nI + i;
    std::vector<Triplet> tII, tIG, tGI;
    B.A_GG = Mat::Zero(nG, nG);
    B.b_I = Vec::Zero(nI);
    B.b_G = Vec::Zero(nG);
    for (int t : B.triangles) {
      const auto& g = sys.trace_dofs[t];
      const CondensedElement& ce = sys.elements[t];
      for (size_t a = 0; a < g.size(); ++a) {
        if (g[a] < 0) continue;
        const int la = local[g[a]];
        if (la < nI)
          B.b_I(la) += ce.rhs(static_cast<Eigen::Index>(a));
        else
          B.b_G(la - nI) += ce.rhs(static_cast<Eigen::Index>(a));
        for (size_t c = 0; c < g.size(); ++c) {
          if (g[c] < 0) continue;
          const int lc = local[g[c]];
          const double v = ce.schur(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
          if (la < nI && lc < nI)
            tII.emplace_back(la, lc, v);
          else if (la < nI)
            tIG.emplace_back(la, lc - nI, v);
          else if (lc < nI)
            tGI.emplace_back(la - nI, lc, v);
          else
            B.A_GG(la - nI, lc - nI) += v;
        }
      }
    }
    B.A_II.resize(nI, nI);
    B.A_II.setFromTriplets(tII.begin(), tII.end());
    B.A_IG.resize(nI, nG);
    B.A_IG.setFromTriplets(tIG.begin(), tIG.end());
    B.A_GI.resize(nG, nI);
    B.A_GI.setFromTriplets(tGI.begin(), tGI.end());
    for (int d : B.interior_dofs) local[d] = -1;
    for (int d : B.gamma_dofs) local[d] = -1;
  }
  return sp;
}

}  // namespace hdgbddc
