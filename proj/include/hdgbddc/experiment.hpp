#pragma once

// Experiment driver: one-shot solves, convergence studies and BDDC iteration scans.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hdgbddc/assembly.hpp"
#include "hdgbddc/bddc.hpp"
#include "hdgbddc/error.hpp"
#include "hdgbddc/gmres.hpp"
#include "hdgbddc/mesh.hpp"
#include "hdgbddc/norms.hpp"
#include "hdgbddc/problem.hpp"

namespace hdgbddc {

enum class SolverKind { Bddc, Direct };

inline SolverKind parse_solver(const std::string& s) {
  if (s == "bddc") return SolverKind::Bddc;
  if (s == "direct") return SolverKind::Direct;
  fail(ErrorCode::InvalidArgument, "unknown solver '" + s + "' (expected bddc | direct)");
}

struct ExperimentConfig {
  std::string problem = "example1";
  int k = 1;
  std::vector<double> betas{1.0};
  std::vector<int> levels{1, 2, 3};
  std::vector<int> subdomains{4};  // per side
  std::vector<int> ratios{6};      // H / h
  GmresConfig gmres;
  SolverKind solver = SolverKind::Bddc;
  std::string out_dir = ".";
  bool deep = false;
  int series_modes = 0;  // 0: separated series; > 0: double series with this many modes
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& s) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, "bad number '" + s + "' for key '" + key + "'");
}

inline int to_int(const std::string& key, const std::string& s) {
  try {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::InvalidArgument, "bad integer '" + s + "' for key '" + key + "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace config_detail

/// Integer list "1,2,3" or inclusive range "1-3" (ranges may be mixed with commas).
inline std::vector<int> parse_int_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  for (const std::string& item : config_detail::split_list(s)) {
    const auto dash = item.find('-', 1);
    if (dash != std::string::npos) {
      const int a = config_detail::to_int(key, config_detail::trim(item.substr(0, dash)));
      const int b = config_detail::to_int(key, config_detail::trim(item.substr(dash + 1)));
      require(a <= b, ErrorCode::InvalidArgument, "empty range '" + item + "' for key '" + key + "'");
      for (int v = a; v <= b; ++v) out.push_back(v);
    } else {
      out.push_back(config_detail::to_int(key, item));
    }
  }
  require(!out.empty(), ErrorCode::InvalidArgument, "empty list for key '" + key + "'");
  return out;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : config_detail::split_list(s)) out.push_back(config_detail::to_double(key, item));
  require(!out.empty(), ErrorCode::InvalidArgument, "empty list for key '" + key + "'");
  return out;
}

/// Applies one key/value pair; unknown keys are rejected.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace config_detail;
  if (key == "problem")
    c.problem = value;
  else if (key == "k")
    c.k = to_int(key, value);
  else if (key == "beta")
    c.betas = parse_double_list(key, value);
  else if (key == "levels")
    c.levels = parse_int_list(key, value);
  else if (key == "subdomains")
    c.subdomains = parse_int_list(key, value);
  else if (key == "ratio")
    c.ratios = parse_int_list(key, value);
  else if (key == "tol")
    c.gmres.tolerance = to_double(key, value);
  else if (key == "max_iterations")
    c.gmres.max_iterations = to_int(key, value);
  else if (key == "solver")
    c.solver = parse_solver(value);
  else if (key == "out")
    c.out_dir = value;
  else if (key == "deep")
    c.deep = value == "1" || value == "true" || value == "yes";
  else if (key == "series_modes")
    c.series_modes = to_int(key, value);
  else
    fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

/// Plain-text config: one `key = value` per line, `#` starts a comment.
inline void parse_config(std::istream& is, ExperimentConfig& c) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::InvalidArgument,
            "config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(c, config_detail::trim(line.substr(0, eq)), config_detail::trim(line.substr(eq + 1)));
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open config file '" + path + "'");
  ExperimentConfig c;
  parse_config(in, c);
  return c;
}

inline void validate(const ExperimentConfig& c) {
  require(c.k >= 1 && c.k <= 3, ErrorCode::InvalidArgument, "k must be 1, 2 or 3");
  for (double b : c.betas) require(b > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
  for (int l : c.levels) {
    require(l >= 1, ErrorCode::InvalidArgument, "levels must be >= 1");
    const int limit = c.k >= 2 ? 3 : 4;
    require(c.deep || l <= limit, ErrorCode::InvalidArgument,
            "level " + std::to_string(l) + " with k=" + std::to_string(c.k) + " needs --deep");
  }
  for (int s : c.subdomains) require(s >= 1, ErrorCode::InvalidArgument, "subdomains per side must be >= 1");
  for (int r : c.ratios) require(r >= 1, ErrorCode::InvalidArgument, "ratio must be >= 1");
  validate(c.gmres);
  (void)problems::by_name(c.problem, 1.0);
}

inline ProblemSpec make_problem(const ExperimentConfig& c, double beta) {
  if (c.problem == "example3") return problems::example3(beta, c.series_modes);
  return problems::by_name(c.problem, beta);
}

inline double level_h(int level) { return 1.0 / (6.0 * std::pow(2.0, level + 1)); }
inline int level_subdomains(int level) { return 1 << (level + 1); }

struct SolveOutcome {
  MeshTopology mesh;
  SubdomainPartition part;
  CondensedSystem sys;
  FieldSolution solution;
  SolveReport report;
  std::optional<BDDCDiagnostics> diagnostics;
};

/// Mesh, assemble, solve and recover for one configuration.
inline SolveOutcome solve_problem(const ProblemSpec& problem, int n_sub, int ratio, int k, SolverKind solver,
                                  const GmresConfig& gmres_cfg, bool want_diagnostics = false) {
  SolveOutcome out;
  auto [mesh, part] = build_structured_mesh(n_sub, ratio);
  out.mesh = std::move(mesh);
  out.part = std::move(part);
  out.sys = assemble(out.mesh, problem, k);
  SkeletonSolve s;
  if (solver == SolverKind::Direct) {
    s = solve_direct(out.sys);
  } else {
    const InterfaceSplit split = split_interface(out.sys, out.mesh, out.part);
    const BDDCContext ctx = build_context(out.sys, out.mesh, out.part, split);
    if (want_diagnostics) out.diagnostics = ctx.diagnostics();
    s = solve_bddc(ctx, gmres_cfg);
  }
  out.report = s.report;
  out.solution = recover_fields(out.sys, s.lambda);
  return out;
}

struct ConvergenceRow {
  double beta = 1.0;
  int level = 1;
  double h = 0.0;
  ErrorReport errors;
  std::optional<double> energy_rate, l2_y_rate, l2_p_rate;
  int iterations = 0;
  std::string status = "ok";
};

struct NormReport {
  std::string problem;
  int k = 1;
  std::vector<ConvergenceRow> rows;
};

inline double rate(double coarse, double fine) { return std::log2(coarse / fine); }

/// Rates between rows of equal beta whose levels are consecutive.
inline void fill_rates(NormReport& rep) {
  for (size_t i = 1; i < rep.rows.size(); ++i) {
    ConvergenceRow& r = rep.rows[i];
    const ConvergenceRow& c = rep.rows[i - 1];
    if (c.beta != r.beta || c.level + 1 != r.level || c.status != "ok" || r.status != "ok") continue;
    r.energy_rate = rate(c.errors.energy, r.errors.energy);
    r.l2_y_rate = rate(c.errors.l2_y, r.errors.l2_y);
    r.l2_p_rate = rate(c.errors.l2_p, r.errors.l2_p);
  }
}

inline NormReport run_convergence(const ExperimentConfig& cfg) {
  validate(cfg);
  NormReport rep;
  rep.problem = cfg.problem;
  rep.k = cfg.k;
  for (double beta : cfg.betas) {
    const ProblemSpec problem = make_problem(cfg, beta);
    for (int level : cfg.levels) {
      ConvergenceRow row;
      row.beta = beta;
      row.level = level;
      row.h = level_h(level);
      try {
        const SolveOutcome o = solve_problem(problem, level_subdomains(level), 6, cfg.k, cfg.solver, cfg.gmres);
        row.errors = compute_errors(o.mesh, problem, o.sys, o.solution);
        row.iterations = o.report.iterations;
      } catch (const Error& e) {
        row.status = std::string(to_string(e.code()));
        row.errors = {NAN, NAN, NAN, NAN, NAN, NAN};
      }
      rep.rows.push_back(row);
    }
  }
  fill_rates(rep);
  return rep;
}

namespace csv_detail {

inline std::string fmt(const char* f, double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string opt(const std::optional<double>& v) { return v ? fmt("%.2f", *v) : "-"; }

}  // namespace csv_detail

/// Columns: beta,level,h,energy_err,energy_rate,l2_y,l2_y_rate,l2_p,l2_p_rate,status
inline void write_convergence_csv(std::ostream& os, const NormReport& rep) {
  using csv_detail::fmt;
  os << "beta,level,h,energy_err,energy_rate,l2_y,l2_y_rate,l2_p,l2_p_rate,status\n";
  for (const ConvergenceRow& r : rep.rows) {
    os << fmt("%g", r.beta) << ',' << r.level << ',' << fmt("%.6g", r.h) << ',' << fmt("%.2e", r.errors.energy) << ','
       << csv_detail::opt(r.energy_rate) << ',' << fmt("%.2e", r.errors.l2_y) << ',' << csv_detail::opt(r.l2_y_rate)
       << ',' << fmt("%.2e", r.errors.l2_p) << ',' << csv_detail::opt(r.l2_p_rate) << ',' << r.status << "\n";
  }
}

struct ScanRow {
  double beta = 1.0;
  int subdomains = 1;
  int ratio = 1;
  int iterations = 0;
  bool converged = false;
  std::string status = "ok";
};

struct ScanReport {
  std::string problem;
  int k = 1;
  std::vector<ScanRow> rows;
};

/// Iteration count of the BDDC-preconditioned interface solve for one mesh.
inline ScanRow bddc_iterations(const ProblemSpec& problem, int n_sub, int ratio, int k, const GmresConfig& cfg) {
  ScanRow row;
  row.beta = problem.beta;
  row.subdomains = n_sub;
  row.ratio = ratio;
  try {
    auto [mesh, part] = build_structured_mesh(n_sub, ratio);
    const CondensedSystem sys = assemble(mesh, problem, k);
    const InterfaceSplit split = split_interface(sys, mesh, part);
    const BDDCContext ctx = build_context(sys, mesh, part, split);
    const SkeletonSolve s = solve_bddc(ctx, cfg);
    row.iterations = s.report.iterations;
    row.converged = s.report.converged;
  } catch (const GmresError& e) {
    row.iterations = e.report().iterations;
    row.status = std::string(to_string(e.code()));
  } catch (const Error& e) {
    row.status = std::string(to_string(e.code()));
  }
  return row;
}

inline ScanReport run_bddc_scan(const ExperimentConfig& cfg) {
  validate(cfg);
  ScanReport rep;
  rep.problem = cfg.problem;
  rep.k = cfg.k;
  for (double beta : cfg.betas) {
    const ProblemSpec problem = make_problem(cfg, beta);
    for (int n_sub : cfg.subdomains)
      for (int ratio : cfg.ratios) rep.rows.push_back(bddc_iterations(problem, n_sub, ratio, cfg.k, cfg.gmres));
  }
  return rep;
}

/// Columns: beta,subdomains_per_side,ratio,iterations,converged,status
inline void write_scan_csv(std::ostream& os, const ScanReport& rep) {
  os << "beta,subdomains_per_side,ratio,iterations,converged,status\n";
  for (const ScanRow& r : rep.rows)
    os << csv_detail::fmt("%g", r.beta) << ',' << r.subdomains << ',' << r.ratio << ',' << r.iterations << ','
       << (r.converged ? 1 : 0) << ',' << r.status << "\n";
}

/// Columns: x,y,y_h,p_h (vertex averages).
inline void write_nodal_csv(std::ostream& os, const MeshTopology& mesh, const NodalValues& nv) {
  os << "x,y,y_h,p_h\n";
  for (int i = 0; i < mesh.num_vertices(); ++i)
    os << csv_detail::fmt("%.6f", mesh.vertices[i].x) << ',' << csv_detail::fmt("%.6f", mesh.vertices[i].y) << ','
       << csv_detail::fmt("%.6e", nv.y[i]) << ',' << csv_detail::fmt("%.6e", nv.p[i]) << "\n";
}

inline std::string convergence_csv_name(const std::string& problem, int k) {
  return "convergence_" + problem + "_k" + std::to_string(k) + ".csv";
}
inline std::string scan_csv_name(const std::string& problem, int k) {
  return "bddc_scan_" + problem + "_k" + std::to_string(k) + ".csv";
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace hdgbddc
