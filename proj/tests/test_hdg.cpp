// Local HDG operators, static condensation, skeleton assembly and recovery.

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace hdgbddc;

namespace {

std::vector<ElementOperatorBundle> bundles(const MeshTopology& mesh, const ProblemSpec& p, int k) {
  const ElementBasis basis = ElementBasis::with_default_rule(k);
  const StabilizerSpec stab = make_stabilizers(mesh, p.zeta, basis);
  std::vector<ElementOperatorBundle> out;
  for (int t = 0; t < mesh.num_triangles(); ++t) out.push_back(build_element_bundle(mesh, t, p, stab, basis));
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(LocalForms, QuadraticIdentityPerElement) {
  std::mt19937 rng(42);
  for (int k : {1, 2})
    for (const ProblemSpec& p : {problems::example1(1.0), problems::example2(1e-4)}) {
      auto [mesh, part] = build_structured_mesh(1, 2);
      const auto b = bundles(mesh, p, k);
      for (int i = 0; i < 40; ++i) {
        const int t = i % mesh.num_triangles();
        const Vec x = oracle::random_vector(static_cast<int>(b[t].a1.rows()), rng);
        EXPECT_LT(rel(x.dot(b[t].a1 * x), oracle::quadratic_rhs(mesh, t, p, k, x, oracle::Form::A1, true)), 1e-11);
        EXPECT_LT(rel(x.dot(b[t].a2 * x), oracle::quadratic_rhs(mesh, t, p, k, x, oracle::Form::A2, true)), 1e-11);
      }
    }
}

TEST(LocalForms, QuadraticIdentityGlobal) {
  std::mt19937 rng(3);
  for (int k : {1, 2})
    for (const ProblemSpec& p : {problems::example1(1.0), problems::example2(1.0)}) {
      auto [mesh, part] = build_structured_mesh(2, 3);
      const auto b = bundles(mesh, p, k);
      const int n = b[0].n, m = b[0].m;
      for (oracle::Form f : {oracle::Form::A1, oracle::Form::A2}) {
        oracle::GlobalNumbering num(mesh, 1, 1, 1);
        const oracle::SpMat A = oracle::assemble_form(mesh, b, k, f, num);
        const Vec X = oracle::random_vector(num.size, rng);
        double rhs = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
          Vec x(3 * n + 3 * m);
          x.head(3 * n) = X.segment(num.interior(t, 0), 3 * n);
          for (int j = 0; j < 3; ++j)
            for (int a = 0; a < m; ++a) {
              const int g = num.trace(mesh.edge_of_triangle[t].edge[j], 0, a);
              x(3 * n + j * m + a) = g < 0 ? 0.0 : X(g);
            }
          rhs += oracle::quadratic_rhs(mesh, t, p, k, x, f, false);
        }
        EXPECT_LT(rel(X.dot(A * X), rhs), 1e-11);
      }
    }
}

TEST(LocalForms, LocalDualityDefectIsTheEdgeConvectionBlock) {
  auto [mesh, part] = build_structured_mesh(1, 2);
  const ProblemSpec p = problems::example2(1.0);
  const int k = 2;
  const auto b = bundles(mesh, p, k);
  const int n = b[0].n, m = b[0].m;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Vec s = Vec::Ones(3 * n + 3 * m);
    s.head(2 * n).setConstant(-1.0);
    Mat defect = b[t].a2 - s.asDiagonal() * b[t].a1.transpose() * s.asDiagonal();
    for (int j = 0; j < 3; ++j) defect.block(3 * n + j * m, 3 * n + j * m, m, m) -= b[t].robin[j];
    EXPECT_LT(defect.cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(LocalForms, GlobalDuality) {
  for (int k : {1, 2})
    for (const ProblemSpec& p : {problems::example1(1.0), problems::example2(1.0)}) {
      auto [mesh, part] = build_structured_mesh(2, 6);
      const auto b = bundles(mesh, p, k);
      oracle::GlobalNumbering num(mesh, 1, 1, 1);
      const oracle::SpMat A1 = oracle::assemble_form(mesh, b, k, oracle::Form::A1, num);
      const oracle::SpMat A2 = oracle::assemble_form(mesh, b, k, oracle::Form::A2, num);
      const Vec s = oracle::duality_signs(num, b[0].n);
      const oracle::SpMat J1 = s.asDiagonal() * oracle::SpMat(A1.transpose()) * s.asDiagonal();
      const oracle::SpMat D = A2 - J1;
      double dmax = 0.0, amax = 0.0;
      for (int c = 0; c < D.outerSize(); ++c)
        for (oracle::SpMat::InnerIterator it(D, c); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
      for (int c = 0; c < A2.outerSize(); ++c)
        for (oracle::SpMat::InnerIterator it(A2, c); it; ++it) amax = std::max(amax, std::abs(it.value()));
      EXPECT_LT(dmax / amax, 1e-11);
    }
}

TEST(LocalForms, ViolatedReactionAssumptionIsRejected) {
  auto [mesh, part] = build_structured_mesh(1, 1);
  ProblemSpec p = problems::example1(1.0);
  p.gamma = [](Point) { return 0.0; };
  const ElementBasis basis = ElementBasis::with_default_rule(1);
  const StabilizerSpec stab = make_stabilizers(mesh, p.zeta, basis);
  try {
    build_element_bundle(mesh, 0, p, stab, basis);
    FAIL() << "expected AssumptionViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AssumptionViolation);
  }
}

TEST(LocalForms, CoupledMatrixLayout) {
  auto [mesh, part] = build_structured_mesh(1, 1);
  const ProblemSpec p = problems::example1(0.25);
  const auto b = bundles(mesh, p, 1);
  const ElementOperatorBundle& e = b[0];
  const SystemLayout L = e.layout();
  // Flux rows are negated, so the vector mass blocks read -sqrt(beta) M.
  EXPECT_LT((e.K.block(L.q0(), L.q0(), e.n, e.n) + 0.5 * e.mass).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((e.K.block(L.y0(), L.p0(), e.n, e.n) + e.mass).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((e.K.block(L.p0(), L.y0(), e.n, e.n) - e.mass).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(e.block_lamlam().rows(), 6 * e.m);
  EXPECT_EQ(e.Z.size(), L.ni());
}

TEST(Condensation, MatchesUncondensedSolve) {
  for (int k : {1, 2})
    for (double beta : {1.0, 1e-4, 1e-8})
      for (auto [ns, r] : {std::pair{1, 2}, std::pair{2, 3}}) {
        auto [mesh, part] = build_structured_mesh(ns, r);
        const ProblemSpec p = problems::example2(beta);
        const CondensedSystem sys = assemble(mesh, p, k);
        const SkeletonSolve s = solve_direct(sys);
        const FieldSolution sol = recover_fields(sys, s.lambda);
        const oracle::UncondensedSolution ref = oracle::solve_uncondensed(mesh, p, k);
        double dmax = 0.0, rmax = 0.0;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
          dmax = std::max(dmax, (sol.interior.col(t) - ref.interior[t]).cwiseAbs().maxCoeff());
          rmax = std::max(rmax, ref.interior[t].cwiseAbs().maxCoeff());
        }
        for (int e = 0; e < mesh.num_edges(); ++e)
          for (int f = 0; f < 2; ++f)
            for (int a = 0; a < sys.dofs.m; ++a) {
              const int d = sys.dofs.dof(e, f, a);
              const double v = d < 0 ? 0.0 : s.lambda(d);
              dmax = std::max(dmax, std::abs(v - ref.trace[e][f](a)));
            }
        EXPECT_LT(dmax / rmax, 1e-8) << "k=" << k << " beta=" << beta << " mesh " << ns << "x" << r;
      }
}

TEST(Condensation, RecoveredLocalResidual) {
  auto [mesh, part] = build_structured_mesh(2, 4);
  for (double beta : {1.0, 1e-6}) {
    const ProblemSpec p = problems::example1(beta);
    const int k = 2;
    const CondensedSystem sys = assemble(mesh, p, k);
    const FieldSolution sol = recover_fields(sys, solve_direct(sys).lambda);
    const ElementBasis basis = ElementBasis::with_default_rule(k);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const ElementOperatorBundle b = build_element_bundle(mesh, t, p, sys.stab, basis);
      const SystemLayout L = b.layout();
      const Vec lam = gather_traces(sys, t, sol.lambda);
      const Vec res = b.K.topLeftCorner(L.ni(), L.ni()) * sol.interior.col(t) + b.K.topRightCorner(L.ni(), L.nlam()) * lam - b.Z;
      const double scale = b.K.topRows(L.ni()).cwiseAbs().maxCoeff() * std::max(sol.interior.col(t).cwiseAbs().maxCoeff(), lam.cwiseAbs().maxCoeff()) + b.Z.cwiseAbs().maxCoeff();
      EXPECT_LT(res.cwiseAbs().maxCoeff() / scale, 1e-9);
    }
  }
}

TEST(Condensation, SingularLocalBlockIsReported) {
  auto [mesh, part] = build_structured_mesh(1, 1);
  const ProblemSpec p = problems::example1(1.0);
  const ElementBasis basis = ElementBasis::with_default_rule(1);
  const StabilizerSpec stab = make_stabilizers(mesh, p.zeta, basis);
  ElementOperatorBundle b = build_element_bundle(mesh, 0, p, stab, basis);
  b.K.topLeftCorner(b.layout().ni(), b.layout().ni()).setZero();
  try {
    condense_element(b);
    FAIL() << "expected SingularLocalBlock";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularLocalBlock);
  }
}

TEST(Assembly, SkeletonNumbering) {
  auto [mesh, part] = build_structured_mesh(2, 3);
  const SkeletonDofMap d = number_skeleton(mesh, 2);
  int interior_edges = 0;
  for (int e = 0; e < mesh.num_edges(); ++e) interior_edges += !mesh.boundary_edge[e];
  EXPECT_EQ(d.num_dofs, interior_edges * 2 * 3);
  for (int i = 0; i < d.num_dofs; ++i) EXPECT_EQ(d.dof(d.inverse[i].edge, d.inverse[i].field, d.inverse[i].mode), i);
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (mesh.boundary_edge[e]) {
      EXPECT_EQ(d.dof(e, 0, 0), -1);
    }
}

TEST(Assembly, RecoverRejectsWrongSize) {
  auto [mesh, part] = build_structured_mesh(1, 2);
  const CondensedSystem sys = assemble(mesh, problems::example1(1.0), 1);
  try {
    recover_fields(sys, Vec::Zero(sys.num_dofs() + 1));
    FAIL() << "expected DimensionMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Assembly, DumpFormat) {
  auto [mesh, part] = build_structured_mesh(1, 2);
  const CondensedSystem sys = assemble(mesh, problems::example1(1.0), 1);
  std::ostringstream os;
  dump_system(os, sys);
  std::istringstream is(os.str());
  std::string tag;
  long r, c, nnz;
  is >> tag >> r >> c >> nnz;
  EXPECT_EQ(tag, "matrix");
  EXPECT_EQ(r, sys.num_dofs());
  EXPECT_EQ(nnz, sys.A.nonZeros());
  SpMat A(r, c);
  std::vector<Triplet> trip;
  for (long i = 0; i < nnz; ++i) {
    long a, b;
    double v;
    is >> a >> b >> v;
    trip.emplace_back(a, b, v);
  }
  A.setFromTriplets(trip.begin(), trip.end());
  EXPECT_LT(Mat(A - sys.A).cwiseAbs().maxCoeff(), 1e-15);
  long nb;
  is >> tag >> nb;
  EXPECT_EQ(tag, "rhs");
  EXPECT_EQ(nb, sys.b.size());
}

TEST(Assembly, SmallBetaStaysAccurate) {
  // With beta -> 0 the state approaches the data-driven limit; the solve must stay finite and the
  // error must decrease with beta at a fixed mesh.
  auto [mesh, part] = build_structured_mesh(2, 3);
  double prev = 1e300;
  for (double beta : {1.0, 1e-2, 1e-4, 1e-8}) {
    const ProblemSpec p = problems::example1(beta);
    const CondensedSystem sys = assemble(mesh, p, 1);
    const FieldSolution sol = recover_fields(sys, solve_direct(sys).lambda);
    const ErrorReport e = compute_errors(mesh, p, sys, sol);
    EXPECT_TRUE(std::isfinite(e.energy));
    EXPECT_LT(e.energy, prev);
    prev = e.energy;
  }
}
