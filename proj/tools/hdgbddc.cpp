// Command-line driver: single solves, convergence tables and BDDC iteration scans.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hdgbddc/hdgbddc.hpp"

using namespace hdgbddc;

namespace {

// Values given on the command line, applied on top of an optional config file.
struct Overrides {
  std::string config;
  std::string problem, k, beta, levels, subdomains, ratio, tol, max_iterations, solver, out, series_modes;
  bool deep = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key = value config file (flags override it)")->check(CLI::ExistingFile);
  app->add_option("--problem", o.problem, "example1 | example2 | example3");
  app->add_option("--k", o.k, "polynomial degree (1-3)");
  app->add_option("--tol", o.tol, "GMRES relative tolerance on the preconditioned residual");
  app->add_option("--max-iterations", o.max_iterations, "GMRES iteration limit");
  app->add_option("--solver", o.solver, "bddc | direct");
  app->add_option("--series-modes", o.series_modes, "example3 exact solution: 0 separated series, N double series");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  const std::pair<const char*, const std::string*> keys[] = {
      {"problem", &o.problem},   {"k", &o.k},         {"beta", &o.beta},
      {"levels", &o.levels},     {"subdomains", &o.subdomains}, {"ratio", &o.ratio},
      {"tol", &o.tol},           {"max_iterations", &o.max_iterations}, {"solver", &o.solver},
      {"out", &o.out},           {"series_modes", &o.series_modes}};
  for (const auto& [key, value] : keys)
    if (!value->empty()) set_config_value(c, key, *value);
  if (o.deep) c.deep = true;
  validate(c);
  return c;
}

std::string to_text(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

struct SolveFlags {
  std::string dump_mesh, dump_system, nodal;
  bool diagnostics = false;
};

int run_solve(const Overrides& o, const SolveFlags& f) {
  const ExperimentConfig c = resolve(o);
  require(c.betas.size() == 1 && c.subdomains.size() == 1 && c.ratios.size() == 1, ErrorCode::InvalidArgument,
          "solve takes a single beta, subdomain count and ratio");
  const ProblemSpec problem = make_problem(c, c.betas[0]);
  const SolveOutcome out =
      solve_problem(problem, c.subdomains[0], c.ratios[0], c.k, c.solver, c.gmres, f.diagnostics);
  std::printf("problem %s  k=%d  beta=%g  subdomains %dx%d  H/h=%d  h=%.6g\n", c.problem.c_str(), c.k, c.betas[0],
              c.subdomains[0], c.subdomains[0], c.ratios[0], out.mesh.h);
  std::printf("triangles %d  skeleton dofs %d\n", out.mesh.num_triangles(), out.sys.num_dofs());
  if (c.solver == SolverKind::Bddc)
    std::printf("gmres iterations %d  converged %s  time %.3f s\n", out.report.iterations,
                out.report.converged ? "yes" : "no", out.report.wall_seconds);
  if (problem.has_exact()) {
    const ErrorReport e = compute_errors(out.mesh, problem, out.sys, out.solution);
    std::printf("energy %.3e (y %.3e, p %.3e)  L2 y %.3e  L2 p %.3e\n", e.energy, e.energy_y, e.energy_p, e.l2_y,
                e.l2_p);
  }
  if (f.diagnostics && out.diagnostics) write_diagnostics(std::cout, *out.diagnostics);
  if (!f.dump_mesh.empty())
    write_file(f.dump_mesh, to_text([&](std::ostream& os) { dump_mesh(os, out.mesh, out.part); }));
  if (!f.dump_system.empty())
    write_file(f.dump_system, to_text([&](std::ostream& os) { dump_system(os, out.sys); }));
  if (!f.nodal.empty()) {
    const NodalValues nv = nodal_values(out.mesh, out.sys, out.solution);
    write_file(f.nodal, to_text([&](std::ostream& os) { write_nodal_csv(os, out.mesh, nv); }));
  }
  return 0;
}

int run_convergence_cmd(const Overrides& o) {
  const ExperimentConfig c = resolve(o);
  const std::string csv = to_text([&](std::ostream& os) { write_convergence_csv(os, run_convergence(c)); });
  const std::filesystem::path path = std::filesystem::path(c.out_dir) / convergence_csv_name(c.problem, c.k);
  write_file(path, csv);
  std::cout << csv << "written " << path.string() << "\n";
  return 0;
}

int run_scan_cmd(const Overrides& o) {
  const ExperimentConfig c = resolve(o);
  const std::string csv = to_text([&](std::ostream& os) { write_scan_csv(os, run_bddc_scan(c)); });
  const std::filesystem::path path = std::filesystem::path(c.out_dir) / scan_csv_name(c.problem, c.k);
  write_file(path, csv);
  std::cout << csv << "written " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HDG discretization of the optimality system with a BDDC-preconditioned GMRES solver"};
  app.require_subcommand(1);

  Overrides so, co, bo;
  SolveFlags sf;

  CLI::App* solve = app.add_subcommand("solve", "solve one configuration and report errors");
  add_common(solve, so);
  solve->add_option("--beta", so.beta, "regularization parameter");
  solve->add_option("--subdomains", so.subdomains, "subdomains per side");
  solve->add_option("--ratio", so.ratio, "H/h, mesh cells per subdomain side");
  solve->add_option("--dump-mesh", sf.dump_mesh, "write the mesh and partition to this file");
  solve->add_option("--dump-system", sf.dump_system, "write the condensed skeleton system to this file");
  solve->add_option("--nodal", sf.nodal, "write vertex values of y_h and p_h as CSV");
  solve->add_flag("--bddc-diagnostics", sf.diagnostics, "print per-subdomain BDDC diagnostics");

  CLI::App* conv = app.add_subcommand("convergence", "errors and rates over mesh levels (H/h = 6)");
  add_common(conv, co);
  conv->add_option("--beta", co.beta, "comma-separated beta values");
  conv->add_option("--levels", co.levels, "levels, e.g. 1-4 or 1,2,3");
  conv->add_option("--out", co.out, "output directory");
  conv->add_flag("--deep", co.deep, "allow levels beyond 4 (k=1) or 3 (k>=2)");

  CLI::App* scan = app.add_subcommand("bddc-scan", "BDDC-GMRES iteration counts");
  add_common(scan, bo);
  scan->add_option("--beta", bo.beta, "comma-separated beta values");
  scan->add_option("--subdomains", bo.subdomains, "subdomains per side, list or range");
  scan->add_option("--ratio", bo.ratio, "H/h values, list or range");
  scan->add_option("--out", bo.out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return run_solve(so, sf);
    if (*conv) return run_convergence_cmd(co);
    return run_scan_cmd(bo);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
