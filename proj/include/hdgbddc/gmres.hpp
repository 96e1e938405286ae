#pragma once

// Full left-preconditioned GMRES with modified Gram-Schmidt and conditional reorthogonalization.

#include <chrono>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hdgbddc/basis.hpp"
#include "hdgbddc/error.hpp"

namespace hdgbddc {

using LinearOperator = std::function<Vec(const Vec&)>;

struct GmresConfig {
  double tolerance = 1e-11;  // on ||M^{-1}(b - A x)|| / ||M^{-1} b||
  int max_iterations = 1000;
  int restart = 0;           // 0 = full GMRES; other values are rejected
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // preconditioned residual norms, index 0 = initial
  bool converged = false;
  double wall_seconds = 0.0;
  double orthogonality_error = 0.0;      // max |V^T V - I|, filled when requested
};

/// Thrown on breakdown or iteration exhaustion; carries the partial report and iterate.
class GmresError : public Error {
 public:
  GmresError(ErrorCode code, const std::string& what, SolveReport report, Vec x)
      : Error(code, what), report_(std::move(report)), x_(std::move(x)) {}
  const SolveReport& report() const { return report_; }
  const Vec& iterate() const { return x_; }

 private:
  SolveReport report_;
  Vec x_;
};

struct GmresResult {
  Vec x;
  SolveReport report;
};

inline void validate(const GmresConfig& cfg) {
  require(cfg.tolerance > 0.0 && cfg.tolerance < 1.0, ErrorCode::InvalidArgument, "GMRES tolerance must be in (0,1)");
  require(cfg.max_iterations >= 1, ErrorCode::InvalidArgument, "GMRES max_iterations must be >= 1");
  require(cfg.restart == 0, ErrorCode::InvalidArgument, "only full (unrestarted) GMRES is supported");
}

/// Solves A x = b from x0 = 0. Convergence: ||M^{-1}(b - A x)|| <= tol ||M^{-1} b||.
inline GmresResult gmres(const LinearOperator& apply_A, const LinearOperator& apply_Minv, const Vec& b,
                         const GmresConfig& cfg = {}, bool check_orthogonality = false) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = Vec::Zero(n);
  SolveReport& rep = res.report;
  auto finish = [&] {
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  Vec r0 = apply_Minv(b);
  require(r0.size() == n, ErrorCode::DimensionMismatch, "preconditioner output size mismatch");
  const double beta0 = r0.norm();
  rep.residual_history.push_back(beta0);
  if (n == 0 || beta0 == 0.0) {
    rep.converged = true;
    finish();
    return res;
  }
  const double target = cfg.tolerance * beta0;
  const int kmax = static_cast<int>(std::min<Eigen::Index>(cfg.max_iterations, n));

  std::vector<Vec> V;
  V.reserve(kmax + 1);
  V.push_back(r0 / beta0);
  Mat H = Mat::Zero(kmax + 1, kmax);
  std::vector<double> cs(kmax), sn(kmax);
  Vec g = Vec::Zero(kmax + 1);
  g(0) = beta0;

  auto solve_ls = [&](int j) {
    Vec y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    for (int i = 0; i < j; ++i) res.x += y(i) * V[i];
  };
  auto ortho = [&] {
    if (!check_orthogonality) return;
    double err = 0.0;
    for (size_t i = 0; i < V.size(); ++i)
      for (size_t l = 0; l < V.size(); ++l) err = std::max(err, std::abs(V[i].dot(V[l]) - (i == l ? 1.0 : 0.0)));
    rep.orthogonality_error = err;
  };

  for (int j = 0; j < kmax; ++j) {
    Vec w = apply_Minv(apply_A(V[j]));
    const double before = w.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const double h = V[i].dot(w);
        H(i, j) += h;
        w -= h * V[i];
      }
      if (w.norm() > 0.7 * before) break;  // second pass only when cancellation was severe
    }
    const double hn = w.norm();
    H(j + 1, j) = hn;
    for (int i = 0; i < j; ++i) {
      const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
      H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
      H(i, j) = t;
    }
    const double d = std::hypot(H(j, j), H(j + 1, j));
    cs[j] = H(j, j) / d;
    sn[j] = H(j + 1, j) / d;
    H(j, j) = d;
    H(j + 1, j) = 0.0;
    g(j + 1) = -sn[j] * g(j);
    g(j) = cs[j] * g(j);
    const double resid = std::abs(g(j + 1));
    rep.residual_history.push_back(resid);
    rep.iterations = j + 1;
    if (resid <= target) {
      solve_ls(j + 1);
      rep.converged = true;
      ortho();
      finish();
      return res;
    }
    if (hn <= 1e-14 * before || hn == 0.0) {
      // Invariant subspace reached with a nonzero least-squares residual.
      solve_ls(j + 1);
      ortho();
      finish();
      throw GmresError(ErrorCode::Breakdown, "Arnoldi breakdown at iteration " + std::to_string(j + 1), rep, res.x);
    }
    V.push_back(w / hn);
  }
  solve_ls(kmax);
  ortho();
  finish();
  throw GmresError(ErrorCode::MaxIterations, "GMRES did not converge in " + std::to_string(kmax) + " iterations", rep,
                   res.x);
}

}  // namespace hdgbddc
