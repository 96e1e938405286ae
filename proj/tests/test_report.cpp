// Configuration parsing, CSV output and error norms.

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace hdgbddc;

namespace {

ExperimentConfig parse(const std::string& text) {
  ExperimentConfig c;
  std::istringstream is(text);
  parse_config(is, c);
  return c;
}

// Interpolant of the exact pair: cellwise projections of (-grad y, -grad p, y, p) and edgewise
// projections of the traces.
FieldSolution projected_solution(const MeshTopology& mesh, const CondensedSystem& sys, const ProblemSpec& p) {
  const ElementBasis& eb = *sys.basis;
  const ManufacturedSolution& ms = *p.manufactured;
  const int n = eb.n_cell, m = eb.n_edge;
  std::array<Vec, 6> cell{
      project_cell([&](Point x) { return -ms.grad_y(x).x; }, mesh, eb),
      project_cell([&](Point x) { return -ms.grad_y(x).y; }, mesh, eb),
      project_cell([&](Point x) { return -ms.grad_p(x).x; }, mesh, eb),
      project_cell([&](Point x) { return -ms.grad_p(x).y; }, mesh, eb),
      project_cell(ms.y, mesh, eb),
      project_cell(ms.p, mesh, eb),
  };
  const std::array<Vec, 2> edge{project_edge(ms.y, mesh, eb), project_edge(ms.p, mesh, eb)};
  FieldSolution s;
  s.n = n;
  s.m = m;
  s.interior.resize(6 * n, mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int b = 0; b < 6; ++b) s.interior.col(t).segment(b * n, n) = cell[b].segment(t * n, n);
  s.lambda = Vec::Zero(sys.num_dofs());
  for (int e = 0; e < mesh.num_edges(); ++e)
    for (int f = 0; f < 2; ++f)
      for (int a = 0; a < m; ++a) {
        const int d = sys.dofs.dof(e, f, a);
        if (d >= 0) s.lambda(d) = edge[f](e * m + a);
      }
  return s;
}

ProblemSpec linear_problem() {
  ProblemSpec s = problems::example1(1.0);
  ManufacturedSolution ms;
  ms.y = [](Point x) { return 1.0 + 2.0 * x.x - x.y; };
  ms.p = [](Point x) { return 0.5 * x.x + 3.0 * x.y; };
  ms.grad_y = [](Point) { return Point{2.0, -1.0}; };
  ms.grad_p = [](Point) { return Point{0.5, 3.0}; };
  ms.lap_y = [](Point) { return 0.0; };
  ms.lap_p = [](Point) { return 0.0; };
  s.manufactured = ms;
  return s;
}

}  // namespace

TEST(Config, ParsesListsRangesAndComments) {
  const ExperimentConfig c = parse(
      "# convergence study\n"
      "problem = example2\n"
      "k = 2   # degree\n"
      "beta = 1, 1e-4 ,1e-8\n"
      "levels = 1-3\n"
      "subdomains = 2, 4-5\n"
      "ratio = 4,8\n"
      "tol = 1e-9\n"
      "solver = direct\n"
      "\n"
      "deep = yes\n");
  EXPECT_EQ(c.problem, "example2");
  EXPECT_EQ(c.k, 2);
  EXPECT_EQ(c.betas, (std::vector<double>{1.0, 1e-4, 1e-8}));
  EXPECT_EQ(c.levels, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(c.subdomains, (std::vector<int>{2, 4, 5}));
  EXPECT_EQ(c.ratios, (std::vector<int>{4, 8}));
  EXPECT_DOUBLE_EQ(c.gmres.tolerance, 1e-9);
  EXPECT_EQ(c.solver, SolverKind::Direct);
  EXPECT_TRUE(c.deep);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse("colour = blue\n"), Error);
  EXPECT_THROW(parse("k 2\n"), Error);
  EXPECT_THROW(parse("k = two\n"), Error);
  EXPECT_THROW(parse("levels = 3-1\n"), Error);
  EXPECT_THROW(parse("beta = \n"), Error);
  EXPECT_THROW(parse("solver = cg\n"), Error);
  EXPECT_THROW(validate(parse("problem = example9\n")), Error);
  EXPECT_THROW(validate(parse("k = 4\n")), Error);
  EXPECT_THROW(validate(parse("beta = -1\n")), Error);
  EXPECT_THROW(validate(parse("tol = 2\n")), Error);
  // Deep levels need an explicit opt-in.
  EXPECT_THROW(validate(parse("levels = 5\n")), Error);
  EXPECT_THROW(validate(parse("k = 2\nlevels = 4\n")), Error);
  EXPECT_NO_THROW(validate(parse("k = 2\nlevels = 4\ndeep = true\n")));
}

TEST(Config, LevelGeometry) {
  EXPECT_DOUBLE_EQ(level_h(1), 1.0 / 24.0);
  EXPECT_DOUBLE_EQ(level_h(4), 1.0 / 192.0);
  EXPECT_EQ(level_subdomains(1), 4);
  EXPECT_EQ(level_subdomains(3), 16);
  auto [mesh, part] = build_structured_mesh(level_subdomains(2), 6);
  EXPECT_DOUBLE_EQ(mesh.h, level_h(2));
}

TEST(Csv, RatesFromConsecutiveLevels) {
  NormReport rep;
  auto row = [](double beta, int level, double e, double y, double p) {
    ConvergenceRow r;
    r.beta = beta;
    r.level = level;
    r.errors.energy = e;
    r.errors.l2_y = y;
    r.errors.l2_p = p;
    return r;
  };
  rep.rows = {row(1, 1, 8e-3, 1e-3, 2e-3), row(1, 2, 2e-3, 2.5e-4, 1e-3), row(1, 4, 1e-4, 1e-5, 1e-5),
              row(0.5, 5, 1e-4, 1e-5, 1e-5)};
  fill_rates(rep);
  EXPECT_FALSE(rep.rows[0].energy_rate);
  EXPECT_NEAR(*rep.rows[1].energy_rate, 2.0, 1e-14);
  EXPECT_NEAR(*rep.rows[1].l2_y_rate, 2.0, 1e-14);
  EXPECT_NEAR(*rep.rows[1].l2_p_rate, 1.0, 1e-14);
  EXPECT_FALSE(rep.rows[2].energy_rate);  // level gap
  EXPECT_FALSE(rep.rows[3].energy_rate);  // new beta
  std::ostringstream os;
  write_convergence_csv(os, rep);
  std::istringstream is(os.str());
  std::string header, first, second;
  std::getline(is, header);
  std::getline(is, first);
  std::getline(is, second);
  EXPECT_EQ(header, "beta,level,h,energy_err,energy_rate,l2_y,l2_y_rate,l2_p,l2_p_rate,status");
  EXPECT_EQ(first, "1,1,0,8.00e-03,-,1.00e-03,-,2.00e-03,-,ok");
  EXPECT_EQ(second, "1,2,0,2.00e-03,2.00,2.50e-04,2.00,1.00e-03,1.00,ok");
}

TEST(Csv, ConvergenceOutputIsDeterministic) {
  ExperimentConfig c = parse("problem = example1\nbeta = 1, 1e-4\nlevels = 1-2\nsolver = bddc\n");
  std::ostringstream a, b;
  write_convergence_csv(a, run_convergence(c));
  write_convergence_csv(b, run_convergence(c));
  EXPECT_EQ(a.str(), b.str());
  int lines = 0;
  for (char ch : a.str()) lines += ch == '\n';
  EXPECT_EQ(lines, 5);
  EXPECT_EQ(a.str().find("nan"), std::string::npos);
}

TEST(Csv, ScanOutputAndFailureStatus) {
  ExperimentConfig c = parse("problem = example2\nbeta = 1e-2\nsubdomains = 2,3\nratio = 2\n");
  const ScanReport rep = run_bddc_scan(c);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const ScanRow& r : rep.rows) {
    EXPECT_TRUE(r.converged);
    EXPECT_GT(r.iterations, 0);
  }
  std::ostringstream os;
  write_scan_csv(os, rep);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "beta,subdomains_per_side,ratio,iterations,converged,status");
  GmresConfig tight;
  tight.max_iterations = 1;
  const ScanRow fail = bddc_iterations(problems::example1(1.0), 3, 3, 1, tight);
  EXPECT_EQ(fail.status, "MaxIterations");
  EXPECT_FALSE(fail.converged);
  EXPECT_EQ(fail.iterations, 1);
}

TEST(Csv, NodalValuesOfLinearInterpolant) {
  const ProblemSpec p = linear_problem();
  auto [mesh, part] = build_structured_mesh(2, 2);
  const CondensedSystem sys = assemble(mesh, p, 1);
  const FieldSolution sol = projected_solution(mesh, sys, p);
  const NodalValues nv = nodal_values(mesh, sys, sol);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    EXPECT_NEAR(nv.y[i], p.manufactured->y(mesh.vertices[i]), 1e-12);
    EXPECT_NEAR(nv.p[i], p.manufactured->p(mesh.vertices[i]), 1e-12);
  }
  std::ostringstream os;
  write_nodal_csv(os, mesh, nv);
  std::istringstream is(os.str());
  std::string line;
  int count = -1;
  while (std::getline(is, line)) ++count;
  EXPECT_EQ(count, mesh.num_vertices());
  EXPECT_EQ(os.str().substr(0, 12), "x,y,y_h,p_h\n");
}

TEST(Norms, VanishForRepresentableSolution) {
  const ProblemSpec p = linear_problem();
  auto [mesh, part] = build_structured_mesh(2, 3);
  const CondensedSystem sys = assemble(mesh, p, 1);
  std::array<TripleNormParts, 2> parts;
  const ErrorReport r = compute_errors(mesh, p, sys, projected_solution(mesh, sys, p), -1, &parts);
  EXPECT_LT(r.l2_y, 1e-12);
  EXPECT_LT(r.l2_p, 1e-12);
  // Dirichlet traces are fixed at zero, so only the jump term sees this nonzero boundary data.
  for (const TripleNormParts& t : parts) {
    EXPECT_LT(t.flux, 1e-24);
    EXPECT_LT(t.cell, 1e-24);
  }
}

TEST(Norms, BetaWeightingAndCombination) {
  const ProblemSpec p = problems::example1(1.0);
  auto [mesh, part] = build_structured_mesh(2, 3);
  const CondensedSystem sys = assemble(mesh, p, 1);
  const FieldSolution sol = recover_fields(sys, solve_direct(sys).lambda);
  std::array<TripleNormParts, 2> parts;
  const ErrorReport r = compute_errors(mesh, p, sys, sol, -1, &parts);
  for (int f = 0; f < 2; ++f) {
    const TripleNormParts& t = parts[f];
    EXPECT_GT(t.flux, 0.0);
    EXPECT_GT(t.jump, 0.0);
    // The sqrt(beta)-weighted group doubles when sqrt(beta) doubles; ||w||^2 is unweighted.
    EXPECT_NEAR(t.weighted(2.0) - t.cell, 2.0 * (t.weighted(1.0) - t.cell), 1e-14 * t.weighted(2.0));
    EXPECT_NEAR(t.weighted(0.0), t.cell, 0.0);
  }
  EXPECT_NEAR(r.energy_y, std::sqrt(parts[0].weighted(1.0)), 1e-14);
  EXPECT_NEAR(r.energy, std::hypot(r.energy_y, r.energy_p), 1e-15);
  EXPECT_NEAR(r.energy_sum, r.energy_y + r.energy_p, 1e-15);
  EXPECT_NEAR(r.l2_p, std::sqrt(parts[1].cell), 1e-15);
}

TEST(Norms, ProjectionErrorOrder) {
  for (int k : {1, 2}) {
    const ProblemSpec p = problems::example1(1.0);
    std::array<ErrorReport, 2> e;
    for (int i = 0; i < 2; ++i) {
      auto [mesh, part] = build_structured_mesh(2, 4 << i);
      const CondensedSystem sys = assemble(mesh, p, k);
      e[i] = compute_errors(mesh, p, sys, projected_solution(mesh, sys, p));
    }
    EXPECT_NEAR(std::log2(e[0].l2_y / e[1].l2_y), k + 1.0, 0.1) << "k=" << k;
    EXPECT_NEAR(std::log2(e[0].l2_p / e[1].l2_p), k + 1.0, 0.1) << "k=" << k;
    // The trace jump term of an interpolant converges half an order slower than the cell terms.
    EXPECT_GT(std::log2(e[0].energy / e[1].energy), k + 0.4) << "k=" << k;
  }
}

TEST(Norms, RequiresExactSolution) {
  ProblemSpec p = problems::example1(1.0);
  p.manufactured.reset();
  auto [mesh, part] = build_structured_mesh(1, 2);
  const CondensedSystem sys = assemble(mesh, p, 1);
  EXPECT_THROW(compute_errors(mesh, p, sys, recover_fields(sys, solve_direct(sys).lambda)), Error);
}
