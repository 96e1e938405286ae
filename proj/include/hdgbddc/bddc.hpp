#pragma once

// Substructuring of the condensed skeleton system and the BDDC preconditioner for the
// interface Schur complement problem.
//
// The partially assembled space keeps one shared coordinate per (macro edge, field) carrying
// the length-weighted mean of the lowest trace mode; every other interface coordinate is
// duplicated per subdomain. An orthogonal change of basis makes the shared coordinate explicit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hdgbddc/assembly.hpp"
#include "hdgbddc/error.hpp"
#include "hdgbddc/gmres.hpp"
#include "hdgbddc/mesh.hpp"

namespace hdgbddc {

using SparseLUSolver = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

enum class PrimalMode {
  EdgeAverages,  // one average per macro edge and field
  AllPrimal,     // every interface coordinate shared (the preconditioner becomes the exact inverse)
};

/// Edge-average functionals and the orthogonal change of interface basis.
struct PrimalSpace {
  PrimalMode mode = PrimalMode::EdgeAverages;
  int num_primal = 0;
  // Per (macro edge, field): interface indices of the lowest mode on each fine edge, and the
  // fine-edge lengths serving as functional weights.
  struct Group {
    int macro_edge = -1;
    int field = 0;
    std::vector<int> indices;
    Vec weights;
    Vec householder;  // v of H = I - 2 v v^T / (v^T v); empty when H = I
  };
  std::vector<Group> groups;
  std::vector<int> primal_of_index;  // per interface index, primal id or -1 (after the change of basis)

  /// Functional value sum_e |e| c_{e,0} of group g for an interface vector in original coordinates.
  double functional(int g, const Vec& x) const {
    double s = 0.0;
    for (size_t i = 0; i < groups[g].indices.size(); ++i) s += groups[g].weights(i) * x(groups[g].indices[i]);
    return s;
  }

  /// x -> T^T x (original to transformed coordinates); T is symmetric per group so T^T = T.
  void to_transformed(Vec& x) const { reflect(x); }
  void to_original(Vec& x) const { reflect(x); }

 private:
  void reflect(Vec& x) const {
    for (const Group& g : groups) {
      if (g.householder.size() == 0) continue;
      Vec seg(g.indices.size());
      for (size_t i = 0; i < g.indices.size(); ++i) seg(i) = x(g.indices[i]);
      const double vv = g.householder.squaredNorm();
      seg -= (2.0 * g.householder.dot(seg) / vv) * g.householder;
      for (size_t i = 0; i < g.indices.size(); ++i) x(g.indices[i]) = seg(i);
    }
  }
};

inline PrimalSpace make_primal_space(const CondensedSystem& sys, const MeshTopology& mesh,
                                     const SubdomainPartition& part, const InterfaceSplit& split,
                                     PrimalMode mode = PrimalMode::EdgeAverages) {
  PrimalSpace ps;
  ps.mode = mode;
  const int nG = split.num_interface();
  ps.primal_of_index.assign(nG, -1);
  if (mode == PrimalMode::AllPrimal) {
    for (int i = 0; i < nG; ++i) ps.primal_of_index[i] = i;
    ps.num_primal = nG;
    return ps;
  }
  for (int me = 0; me < static_cast<int>(part.macro_edges.size()); ++me) {
    for (int f = 0; f < 2; ++f) {
      PrimalSpace::Group g;
      g.macro_edge = me;
      g.field = f;
      const auto& fine = part.macro_edges[me].fine_edges;
      g.weights.resize(static_cast<Eigen::Index>(fine.size()));
      for (size_t i = 0; i < fine.size(); ++i) {
        const int d = sys.dofs.dof(fine[i], f, 0);
        require(d >= 0 && split.interface_index[d] >= 0, ErrorCode::InconsistentPartition,
                "macro edge dof is not an interface dof");
        g.indices.push_back(split.interface_index[d]);
        g.weights(static_cast<Eigen::Index>(i)) = mesh.edges[fine[i]].length;
      }
      Vec u = g.weights / g.weights.norm();
      Vec v = u;
      v(0) -= 1.0;
      if (v.norm() > 1e-14) g.householder = v;  // H u = e_1
      ps.primal_of_index[g.indices[0]] = ps.num_primal++;
      ps.groups.push_back(std::move(g));
    }
  }
  return ps;
}

struct SubdomainData {
  std::vector<int> gamma_index;     // interface index of each local interface dof
  std::vector<int> interior_dofs;   // global skeleton dofs
  SpMat A_IG, A_GI;
  Vec b_I;
  std::shared_ptr<SparseLUSolver> lu_II;  // null when there are no interior dofs
  Mat S;        // unmodified local Schur complement
  Mat S_robin;  // with the interface Robin terms
  Vec g;        // b_G - A_GI A_II^{-1} b_I

  Vec solve_II(const Vec& r) const { return lu_II ? Vec(lu_II->solve(r)) : Vec(); }
};

struct BDDCDiagnostics {
  std::vector<double> schur_condition;  // per subdomain, 2-norm condition of S_robin
  std::vector<int> interface_size;
  std::vector<int> primal_count;        // primal coordinates touched per subdomain
  int num_primal = 0;
  int num_interface = 0;
  int partially_assembled_size = 0;
};

class BDDCContext {
 public:
  std::vector<SubdomainData> subdomains;
  PrimalSpace primal;
  int num_interface = 0;
  std::vector<int> interface_dofs;
  int num_dofs = 0;
  std::vector<double> scaling;  // delta^dagger per interface index: 1 / (number of sharing subdomains)
  // Partially assembled space: primal coordinates first, then per-subdomain dual copies.
  std::vector<std::vector<int>> tilde_index;  // per subdomain, per local interface dof
  int tilde_size = 0;
  SpMat S_tilde;
  std::shared_ptr<SparseLUSolver> lu_tilde;

  /// Assembled interface operator: sum_i R_i^T S_i R_i x.
  Vec apply_S(const Vec& x) const {
    Vec y = Vec::Zero(num_interface);
    for (const SubdomainData& sd : subdomains) {
      const int n = static_cast<int>(sd.gamma_index.size());
      if (n == 0) continue;
      Vec xl(n);
      for (int i = 0; i < n; ++i) xl(i) = x(sd.gamma_index[i]);
      const Vec yl = sd.S * xl;
      for (int i = 0; i < n; ++i) y(sd.gamma_index[i]) += yl(i);
    }
    return y;
  }

  /// R_tilde: interface vector (original coordinates) to the partially assembled space, unscaled.
  Vec restrict_tilde(const Vec& x, bool scaled) const {
    Vec xt = x;
    primal.to_transformed(xt);
    Vec z = Vec::Zero(tilde_size);
    std::vector<char> primal_done(primal.num_primal, 0);
    for (size_t s = 0; s < subdomains.size(); ++s) {
      const auto& gi = subdomains[s].gamma_index;
      for (size_t i = 0; i < gi.size(); ++i) {
        const int ti = tilde_index[s][i];
        const int p = primal.primal_of_index[gi[i]];
        if (p >= 0) {
          if (!primal_done[p]) z(ti) = xt(gi[i]);
          primal_done[p] = 1;
        } else {
          z(ti) = (scaled ? scaling[gi[i]] : 1.0) * xt(gi[i]);
        }
      }
    }
    return z;
  }

  /// Transpose of restrict_tilde: sums dual copies (optionally scaled) back to the interface.
  Vec extend_tilde(const Vec& z, bool scaled) const {
    Vec xt = Vec::Zero(num_interface);
    std::vector<char> primal_done(primal.num_primal, 0);
    for (size_t s = 0; s < subdomains.size(); ++s) {
      const auto& gi = subdomains[s].gamma_index;
      for (size_t i = 0; i < gi.size(); ++i) {
        const int ti = tilde_index[s][i];
        const int p = primal.primal_of_index[gi[i]];
        if (p >= 0) {
          if (!primal_done[p]) xt(gi[i]) = z(ti);
          primal_done[p] = 1;
        } else {
          xt(gi[i]) += (scaled ? scaling[gi[i]] : 1.0) * z(ti);
        }
      }
    }
    primal.to_original(xt);
    return xt;
  }

  /// M^{-1} r = R_D^T S_tilde^{-1} R_D r.
  Vec apply_preconditioner(const Vec& r) const {
    require(r.size() == num_interface, ErrorCode::DimensionMismatch, "interface residual size mismatch");
    if (num_interface == 0) return Vec();
    const Vec rt = restrict_tilde(r, true);
    const Vec zt = lu_tilde->solve(rt);
    return extend_tilde(zt, true);
  }

  /// g_Gamma = sum_i R_i^T g_i.
  Vec reduce_rhs() const {
    Vec g = Vec::Zero(num_interface);
    for (const SubdomainData& sd : subdomains)
      for (size_t i = 0; i < sd.gamma_index.size(); ++i) g(sd.gamma_index[i]) += sd.g(static_cast<Eigen::Index>(i));
    return g;
  }

  /// Full skeleton vector from the interface solution by interior back-substitution.
  Vec expand_solution(const Vec& lambda_gamma) const {
    require(lambda_gamma.size() == num_interface, ErrorCode::DimensionMismatch, "interface solution size mismatch");
    Vec lambda = Vec::Zero(num_dofs);
    for (int i = 0; i < num_interface; ++i) lambda(interface_dofs[i]) = lambda_gamma(i);
    for (const SubdomainData& sd : subdomains) {
      if (sd.interior_dofs.empty()) continue;
      Vec xl(static_cast<Eigen::Index>(sd.gamma_index.size()));
      for (size_t i = 0; i < sd.gamma_index.size(); ++i) xl(static_cast<Eigen::Index>(i)) = lambda_gamma(sd.gamma_index[i]);
      Vec rhs = sd.b_I;
      if (xl.size() > 0) rhs -= sd.A_IG * xl;
      const Vec li = sd.solve_II(rhs);
      for (size_t i = 0; i < sd.interior_dofs.size(); ++i) lambda(sd.interior_dofs[i]) = li(static_cast<Eigen::Index>(i));
    }
    return lambda;
  }

  BDDCDiagnostics diagnostics() const {
    BDDCDiagnostics d;
    d.num_primal = primal.num_primal;
    d.num_interface = num_interface;
    d.partially_assembled_size = tilde_size;
    for (const SubdomainData& sd : subdomains) {
      d.interface_size.push_back(static_cast<int>(sd.gamma_index.size()));
      int np = 0;
      for (int gi : sd.gamma_index) np += primal.mode == PrimalMode::AllPrimal || primal.primal_of_index[gi] >= 0;
      d.primal_count.push_back(np);
      if (sd.S_robin.size() == 0) {
        d.schur_condition.push_back(1.0);
        continue;
      }
      const Eigen::JacobiSVD<Mat> svd(sd.S_robin);
      const auto& sv = svd.singularValues();
      d.schur_condition.push_back(sv(0) / sv(sv.size() - 1));
    }
    return d;
  }
};

/// Per-subdomain factorizations, Schur complements, Robin terms, and the factored partially
/// assembled interface operator.
inline BDDCContext build_context(const CondensedSystem& sys, const MeshTopology& mesh, const SubdomainPartition& part,
                                 const InterfaceSplit& split, PrimalMode mode = PrimalMode::EdgeAverages) {
  BDDCContext ctx;
  ctx.num_interface = split.num_interface();
  ctx.interface_dofs = split.interface_dofs;
  ctx.num_dofs = sys.num_dofs();
  ctx.primal = make_primal_space(sys, mesh, part, split, mode);
  ctx.scaling.assign(ctx.num_interface, 0.0);
  const int m = sys.dofs.m;
  ctx.subdomains.resize(split.subdomains.size());
  std::vector<int> local(sys.num_dofs(), -1);
  for (size_t s = 0; s < split.subdomains.size(); ++s) {
    const SubdomainBlocks& B = split.subdomains[s];
    SubdomainData& sd = ctx.subdomains[s];
    sd.gamma_index = B.gamma_index;
    sd.interior_dofs = B.interior_dofs;
    sd.A_IG = B.A_IG;
    sd.A_GI = B.A_GI;
    sd.b_I = B.b_I;
    const int nI = static_cast<int>(B.interior_dofs.size()), nG = static_cast<int>(B.gamma_dofs.size());
    sd.S = B.A_GG;
    sd.g = B.b_G;
    if (nI > 0) {
      sd.lu_II = std::make_shared<SparseLUSolver>();
      sd.lu_II->compute(B.A_II);
      if (sd.lu_II->info() != Eigen::Success)
        fail(ErrorCode::SingularLocal, "interior factorization failed in subdomain " + std::to_string(s));
      if (nG > 0) {
        const Mat X = sd.lu_II->solve(Mat(B.A_IG));
        sd.S -= B.A_GI * X;
      }
      sd.g -= B.A_GI * Vec(sd.lu_II->solve(B.b_I));
    }
    // Robin terms on the subdomain boundary: +1/2 sqrt(beta) <zeta.n yhat, mu1>, -1/2 sqrt(beta) <zeta.n phat, mu2>.
    sd.S_robin = sd.S;
    for (int i = 0; i < nG; ++i) local[B.gamma_dofs[i]] = i;
    for (int t : B.triangles) {
      for (int j = 0; j < 3; ++j) {
        const int e = mesh.edge_of_triangle[t].edge[j];
        if (mesh.boundary_edge[e] || part.macro_edge_of_edge[e] < 0) continue;
        for (int f = 0; f < 2; ++f) {
          const double sign = f == 0 ? 0.5 : -0.5;
          for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c)
              sd.S_robin(local[sys.dofs.dof(e, f, a)], local[sys.dofs.dof(e, f, c)]) +=
                  sign * sys.sqrt_beta * sys.robin[t][j](a, c);
        }
      }
    }
    for (int i = 0; i < nG; ++i) local[B.gamma_dofs[i]] = -1;
    for (int gi : sd.gamma_index) ctx.scaling[gi] += 1.0;
  }
  for (double& v : ctx.scaling) v = 1.0 / v;

  // Partially assembled space numbering.
  ctx.tilde_size = ctx.primal.num_primal;
  ctx.tilde_index.resize(ctx.subdomains.size());
  for (size_t s = 0; s < ctx.subdomains.size(); ++s) {
    const auto& gi = ctx.subdomains[s].gamma_index;
    ctx.tilde_index[s].resize(gi.size());
    for (size_t i = 0; i < gi.size(); ++i) {
      const int p = ctx.primal.primal_of_index[gi[i]];
      ctx.tilde_index[s][i] = p >= 0 ? p : ctx.tilde_size++;
    }
  }
  if (ctx.num_interface == 0) return ctx;

  // S_tilde = sum_i P_i^T (T_i^T S_robin_i T_i) P_i, with T_i the change of basis restricted to subdomain i.
  std::vector<std::vector<int>> groups_of(ctx.subdomains.size());
  for (size_t g = 0; g < ctx.primal.groups.size(); ++g)
    for (int s : part.macro_edges[ctx.primal.groups[g].macro_edge].subdomains) groups_of[s].push_back(static_cast<int>(g));
  std::vector<int> pos(ctx.num_interface, -1);
  std::vector<Triplet> trip;
  for (size_t s = 0; s < ctx.subdomains.size(); ++s) {
    const SubdomainData& sd = ctx.subdomains[s];
    const int nG = static_cast<int>(sd.gamma_index.size());
    if (nG == 0) continue;
    for (int i = 0; i < nG; ++i) pos[sd.gamma_index[i]] = i;
    Mat T = Mat::Identity(nG, nG);
    for (int gid : groups_of[s]) {
      const PrimalSpace::Group& g = ctx.primal.groups[gid];
      if (g.householder.size() == 0) continue;
      const double vv = g.householder.squaredNorm();
      for (size_t a = 0; a < g.indices.size(); ++a)
        for (size_t c = 0; c < g.indices.size(); ++c)
          T(pos[g.indices[a]], pos[g.indices[c]]) =
              (a == c ? 1.0 : 0.0) - 2.0 * g.householder(a) * g.householder(c) / vv;
    }
    for (int i = 0; i < nG; ++i) pos[sd.gamma_index[i]] = -1;
    const Mat St = T.transpose() * sd.S_robin * T;
    for (int a = 0; a < nG; ++a)
      for (int c = 0; c < nG; ++c)
        if (St(a, c) != 0.0) trip.emplace_back(ctx.tilde_index[s][a], ctx.tilde_index[s][c], St(a, c));
  }
  ctx.S_tilde.resize(ctx.tilde_size, ctx.tilde_size);
  ctx.S_tilde.setFromTriplets(trip.begin(), trip.end());
  ctx.S_tilde.makeCompressed();
  ctx.lu_tilde = std::make_shared<SparseLUSolver>();
  ctx.lu_tilde->compute(ctx.S_tilde);
  if (ctx.lu_tilde->info() != Eigen::Success)
    fail(ErrorCode::SingularCoarse, "partially assembled interface operator could not be factored");
  return ctx;
}

struct SkeletonSolve {
  Vec lambda;
  SolveReport report;
};

/// Interface GMRES with the BDDC preconditioner, followed by interior back-substitution.
inline SkeletonSolve solve_bddc(const BDDCContext& ctx, const GmresConfig& cfg = {}, bool check_orthogonality = false) {
  const Vec g = ctx.reduce_rhs();
  SkeletonSolve out;
  if (ctx.num_interface == 0) {
    out.lambda = ctx.expand_solution(Vec());
    out.report.converged = true;
    out.report.residual_history = {0.0};
    return out;
  }
  GmresResult r = gmres([&](const Vec& x) { return ctx.apply_S(x); },
                        [&](const Vec& x) { return ctx.apply_preconditioner(x); }, g, cfg, check_orthogonality);
  out.lambda = ctx.expand_solution(r.x);
  out.report = std::move(r.report);
  return out;
}

/// Direct sparse solve of the full skeleton system.
inline SkeletonSolve solve_direct(const CondensedSystem& sys) {
  const auto start = std::chrono::steady_clock::now();
  SkeletonSolve out;
  if (sys.num_dofs() == 0) {
    out.lambda = Vec();
    out.report.converged = true;
    return out;
  }
  SparseLUSolver lu;
  lu.compute(sys.A);
  if (lu.info() != Eigen::Success) fail(ErrorCode::SingularCoarse, "skeleton system factorization failed");
  out.lambda = lu.solve(sys.b);
  out.report.converged = true;
  out.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Text diagnostics for --bddc-diagnostics.
inline void write_diagnostics(std::ostream& os, const BDDCDiagnostics& d) {
  os << "interface_dofs " << d.num_interface << "\n";
  os << "primal_dofs " << d.num_primal << "\n";
  os << "partially_assembled_dofs " << d.partially_assembled_size << "\n";
  os << "subdomain interface_dofs primal_touched schur_condition\n";
  for (size_t s = 0; s < d.interface_size.size(); ++s)
    os << s << ' ' << d.interface_size[s] << ' ' << d.primal_count[s] << ' ' << d.schur_condition[s] << "\n";
}

}  // namespace hdgbddc
