#pragma once

// Element-local HDG operators for the coupled state/adjoint system and their static condensation.
//
// Each scalar equation uses a mixed triple (flux, cell value, edge trace). For test functions
// (r, w, mu) and trial (q, v, lambda) on a triangle K:
//
//   a1 = (q,r) - (v,div r) + <lambda, r.n> + (div q, w) - (v, zeta.grad w) + ((gamma - div zeta) v, w)
//        + <(zeta.n - tau1) lambda + tau1 v, w> - <q.n + (zeta.n - tau1) lambda + tau1 v, mu>
//   a2 = (q,r) - (v,div r) + <lambda, r.n> + (div q, w) + (v, zeta.grad w) + (gamma v, w)
//        + <-(zeta.n + tau2) lambda + tau2 v, w> - <q.n - (zeta.n + tau2) lambda + tau2 v, mu>
//
// The coupled element system is
//   sqrt(beta) a1((q,y,yhat),(r1,w1,mu1)) - (p,w1) = (g,w1)
//   sqrt(beta) a2((pv,p,phat),(r2,w2,mu2)) + (y,w2) = (f,w2)
// with the flux rows negated so that the vector mass blocks read -sqrt(beta) M.

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "hdgbddc/basis.hpp"
#include "hdgbddc/error.hpp"
#include "hdgbddc/mesh.hpp"
#include "hdgbddc/problem.hpp"
#include "hdgbddc/stabilizer.hpp"

namespace hdgbddc {

/// Index layout of one scalar triple [r (2n) | w (n) | mu (3m)].
struct TripleLayout {
  int n, m;
  int r(int c, int i) const { return c * n + i; }
  int w(int i) const { return 2 * n + i; }
  int mu(int j, int a) const { return 3 * n + j * m + a; }
  int size() const { return 3 * n + 3 * m; }
};

/// Index layout of the coupled element system
/// [q (2n) | pv (2n) | y (n) | p (n) | yhat (3m) | phat (3m)], L = (q, pv), u = (y, p), lambda = (yhat, phat).
struct SystemLayout {
  int n, m;
  int q0() const { return 0; }
  int pv0() const { return 2 * n; }
  int y0() const { return 4 * n; }
  int p0() const { return 5 * n; }
  int yhat0() const { return 6 * n; }
  int phat0() const { return 6 * n + 3 * m; }
  int nL() const { return 4 * n; }
  int nu() const { return 2 * n; }
  int ni() const { return 6 * n; }   // L and u together
  int nlam() const { return 6 * m; }
  int size() const { return 6 * n + 6 * m; }
};

struct ElementOperatorBundle {
  int triangle = -1;
  int n = 0, m = 0;
  double sqrt_beta = 1.0;
  Mat a1;    // unscaled local form, rows = test, cols = trial, TripleLayout
  Mat a2;
  Mat mass;  // scalar cell mass (n x n)
  Mat K;     // coupled element matrix, SystemLayout
  Vec Z;     // element load on the (L, u) rows: zeros on L, (g, w) on y rows, (f, w) on p rows
  std::array<Mat, 3> robin;  // <zeta.n_K psi_b, psi_a> per local edge (m x m)

  SystemLayout layout() const { return {n, m}; }

  auto block_LL() const { return K.topLeftCorner(4 * n, 4 * n); }
  auto block_Lu() const { return K.block(0, 4 * n, 4 * n, 2 * n); }
  auto block_Llam() const { return K.block(0, 6 * n, 4 * n, 6 * m); }
  auto block_uL() const { return K.block(4 * n, 0, 2 * n, 4 * n); }
  auto block_uu() const { return K.block(4 * n, 4 * n, 2 * n, 2 * n); }
  auto block_ulam() const { return K.block(4 * n, 6 * n, 2 * n, 6 * m); }
  auto block_lamL() const { return K.block(6 * n, 0, 6 * m, 4 * n); }
  auto block_lamu() const { return K.block(6 * n, 4 * n, 6 * m, 2 * n); }
  auto block_lamlam() const { return K.bottomRightCorner(6 * m, 6 * m); }
};

namespace hdg_detail {

enum class Form { A1, A2 };

inline Mat local_form(Form form, const CellEval& ce, const std::array<EdgeEval, 3>& ee, const std::array<Vec, 3>& zn,
                      const std::array<double, 3>& tau1, const Vec& zeta_x, const Vec& zeta_y, const Vec& reaction) {
  const int n = static_cast<int>(ce.phi.rows());
  const int m = static_cast<int>(ee[0].psi.rows());
  const TripleLayout L{n, m};
  Mat T = Mat::Zero(L.size(), L.size());
  const auto& W = ce.weights;
  const Mat M = ce.phi * W.asDiagonal() * ce.phi.transpose();
  const std::array<const Mat*, 2> d{&ce.dphidx, &ce.dphidy};
  for (int c = 0; c < 2; ++c) {
    T.block(L.r(c, 0), L.r(c, 0), n, n) = M;
    const Mat D = (*d[c]) * W.asDiagonal() * ce.phi.transpose();  // (d_c phi_i, phi_l)
    T.block(L.r(c, 0), L.w(0), n, n) = -D;                          // -(v, div r)
    T.block(L.w(0), L.r(c, 0), n, n) = D.transpose();               // (div q, w)
  }
  // (zeta . grad phi_i, phi_l): test index i, trial index l
  const Mat adv = (ce.dphidx * (W.array() * zeta_x.array()).matrix().asDiagonal() +
                   ce.dphidy * (W.array() * zeta_y.array()).matrix().asDiagonal()) *
                  ce.phi.transpose();
  const Mat react = ce.phi * (W.array() * reaction.array()).matrix().asDiagonal() * ce.phi.transpose();
  T.block(L.w(0), L.w(0), n, n) = (form == Form::A1 ? -adv : adv) + react;

  for (int j = 0; j < 3; ++j) {
    const EdgeEval& e = ee[j];
    const Vec& w = e.weights;
    const Vec t1 = Vec::Constant(w.size(), tau1[j]);
    // Coefficient of lambda in the w row and v in both rows.
    Vec lam_w, v_w;
    if (form == Form::A1) {
      lam_w = zn[j] - t1;
      v_w = t1;
    } else {
      const Vec t2 = t1 - zn[j];
      lam_w = -(zn[j] + t2);
      v_w = t2;
    }
    const Mat phipsi = e.phi * w.asDiagonal() * e.psi.transpose();  // <psi_a, phi_i>
    const std::array<double, 2> nc{e.normal.x, e.normal.y};
    for (int c = 0; c < 2; ++c) {
      T.block(L.r(c, 0), L.mu(j, 0), n, m) += nc[c] * phipsi;             // <lambda, r.n>
      T.block(L.mu(j, 0), L.r(c, 0), m, n) -= nc[c] * phipsi.transpose();  // -<q.n, mu>
    }
    const Mat pw_lam = e.phi * (w.array() * lam_w.array()).matrix().asDiagonal() * e.psi.transpose();
    const Mat pw_v = e.phi * (w.array() * v_w.array()).matrix().asDiagonal() * e.phi.transpose();
    const Mat ps_lam = e.psi * (w.array() * lam_w.array()).matrix().asDiagonal() * e.psi.transpose();
    T.block(L.w(0), L.mu(j, 0), n, m) += pw_lam;
    T.block(L.w(0), L.w(0), n, n) += pw_v;
    T.block(L.mu(j, 0), L.mu(j, 0), m, m) -= ps_lam;
    T.block(L.mu(j, 0), L.w(0), m, n) -= (e.phi * (w.array() * v_w.array()).matrix().asDiagonal() * e.psi.transpose())
                                             .transpose();
  }
  return T;
}

}  // namespace hdg_detail

/// Dense operator blocks and load vector of triangle t.
inline ElementOperatorBundle build_element_bundle(const MeshTopology& mesh, int t, const ProblemSpec& problem,
                                                  const StabilizerSpec& stab, const ElementBasis& basis) {
  require(problem.beta > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
  const int n = basis.n_cell, m = basis.n_edge;
  const CellEval ce = eval_cell(mesh, t, basis);
  const std::array<EdgeEval, 3> ee{eval_edge(mesh, t, 0, basis), eval_edge(mesh, t, 1, basis),
                                   eval_edge(mesh, t, 2, basis)};
  const int nq = static_cast<int>(ce.points.size());
  Vec zx(nq), zy(nq), r1(nq), r2(nq), fv(nq), gv(nq);
  for (int q = 0; q < nq; ++q) {
    const Point x = ce.points[q];
    const Point z = problem.zeta(x);
    const double gam = problem.gamma(x), dz = problem.div_zeta(x);
    if (gam - 0.5 * dz <= 0.0)
      fail(ErrorCode::AssumptionViolation, "gamma - div(zeta)/2 <= 0 in triangle " + std::to_string(t));
    zx(q) = z.x;
    zy(q) = z.y;
    r1(q) = gam - dz;
    r2(q) = gam;
    fv(q) = problem.f(x);
    gv(q) = problem.g(x);
  }

  ElementOperatorBundle b;
  b.triangle = t;
  b.n = n;
  b.m = m;
  b.sqrt_beta = std::sqrt(problem.beta);
  b.a1 = hdg_detail::local_form(hdg_detail::Form::A1, ce, ee, stab.zeta_n[t], stab.tau1[t], zx, zy, r1);
  b.a2 = hdg_detail::local_form(hdg_detail::Form::A2, ce, ee, stab.zeta_n[t], stab.tau1[t], zx, zy, r2);
  b.mass = ce.phi * ce.weights.asDiagonal() * ce.phi.transpose();
  for (int j = 0; j < 3; ++j)
    b.robin[j] = ee[j].psi * (ee[j].weights.array() * stab.zeta_n[t][j].array()).matrix().asDiagonal() *
                 ee[j].psi.transpose();

  // Scatter both triples into the coupled layout, negating flux rows.
  const SystemLayout S{n, m};
  const TripleLayout Tl{n, m};
  b.K = Mat::Zero(S.size(), S.size());
  const std::array<int, 2> flux0{S.q0(), S.pv0()}, cell0{S.y0(), S.p0()}, trace0{S.yhat0(), S.phat0()};
  const std::array<const Mat*, 2> forms{&b.a1, &b.a2};
  auto map = [&](int f, int idx) {
    if (idx < 2 * n) return flux0[f] + idx;
    if (idx < 3 * n) return cell0[f] + idx - 2 * n;
    return trace0[f] + idx - 3 * n;
  };
  for (int f = 0; f < 2; ++f) {
    const Mat& A = *forms[f];
    for (int i = 0; i < Tl.size(); ++i) {
      const double rs = (i < 2 * n ? -1.0 : 1.0) * b.sqrt_beta;
      const int gi = map(f, i);
      for (int l = 0; l < Tl.size(); ++l) b.K(gi, map(f, l)) = rs * A(i, l);
    }
  }
  b.K.block(S.y0(), S.p0(), n, n) = -b.mass;
  b.K.block(S.p0(), S.y0(), n, n) = b.mass;

  b.Z = Vec::Zero(S.ni());
  b.Z.segment(S.y0(), n) = ce.phi * (ce.weights.array() * gv.array()).matrix();
  b.Z.segment(S.p0(), n) = ce.phi * (ce.weights.array() * fv.array()).matrix();
  return b;
}

/// Condensed element: schur acts on the local traces, and the interior fields follow from
/// (L, u) = x0 + X lambda_K.
struct CondensedElement {
  Mat schur;  // 6m x 6m
  Vec rhs;    // 6m
  Mat X;      // 6n x 6m
  Vec x0;     // 6n

  Vec recover(const Vec& lambda_local) const { return x0 + X * lambda_local; }
};

inline CondensedElement condense_element(const ElementOperatorBundle& b, double rcond_min = 1e-14) {
  const SystemLayout S = b.layout();
  const Mat Kii = b.K.topLeftCorner(S.ni(), S.ni());
  const Eigen::PartialPivLU<Mat> lu(Kii);
  const double rc = lu.rcond();
  if (!(rc >= rcond_min))
    fail(ErrorCode::SingularLocalBlock, "local (L,u) block of triangle " + std::to_string(b.triangle) +
                                            " is singular (rcond " + std::to_string(rc) + ")");
  Mat rhs(S.ni(), S.nlam() + 1);
  rhs.leftCols(S.nlam()) = b.K.topRightCorner(S.ni(), S.nlam());
  rhs.col(S.nlam()) = b.Z;
  const Mat sol = lu.solve(rhs);
  CondensedElement c;
  c.X = -sol.leftCols(S.nlam());
  c.x0 = sol.col(S.nlam());
  const auto Kli = b.K.bottomLeftCorner(S.nlam(), S.ni());
  c.schur = b.K.bottomRightCorner(S.nlam(), S.nlam()) + Kli * c.X;
  c.rhs = -(Kli * c.x0);
  return c;
}

}  // namespace hdgbddc
