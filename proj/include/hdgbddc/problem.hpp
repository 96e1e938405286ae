#pragma once

// Optimality-system test problems on the unit square:
//   sqrt(beta) (-lap p - div(zeta p) + gamma p) + y = f,
//   sqrt(beta) (-lap y + zeta . grad y + gamma y) - p = g,   y = p = 0 on the boundary.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hdgbddc/error.hpp"
#include "hdgbddc/mesh.hpp"

namespace hdgbddc {

using ScalarField = std::function<double(Point)>;
using VectorField = std::function<Point(Point)>;

struct ExactValues {
  double y = 0.0;
  double p = 0.0;
  Point grad_y;
  Point grad_p;
};

/// Closed-form state and adjoint with the derivatives the right-hand side needs.
struct ManufacturedSolution {
  ScalarField y, p;
  VectorField grad_y, grad_p;
  ScalarField lap_y, lap_p;
};

/// Pointwise exact (y, p) with gradients.
class ExactOracle {
 public:
  virtual ~ExactOracle() = default;
  virtual void eval_batch(std::span<const Point> pts, std::span<ExactValues> out) const = 0;

  ExactValues eval(Point x) const {
    ExactValues v;
    eval_batch(std::span<const Point>(&x, 1), std::span<ExactValues>(&v, 1));
    return v;
  }
};

/// Double sine series solution for zeta = 0, gamma = 1, f = 1, g = 0. For odd m, n:
/// a = sqrt(beta) ((m^2 + n^2) pi^2 + 1), c = 16 / (m n pi^2), y_mn = c / (1 + a^2), p_mn = a y_mn.
class SeriesOracle : public ExactOracle {
 public:
  explicit SeriesOracle(double beta, int max_mode = 399, double tail_tolerance = 1e-12) : beta_(beta) {
    require(beta > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
    require(max_mode >= 1, ErrorCode::InvalidArgument, "max_mode must be >= 1");
    if (max_mode % 2 == 0) --max_mode;
    // Tail weights |y_mn| summed over shells max(m, n) = M, out to a reference cutoff.
    const int reference = std::max(max_mode, 4001);
    std::vector<double> shell(reference / 2 + 1, 0.0);
    for (int m = 1; m <= reference; m += 2)
      for (int n = 1; n <= reference; n += 2) shell[std::max(m, n) / 2] += std::abs(coefficient_y(m, n));
    double tail = 0.0;
    std::vector<double> tail_after(shell.size() + 1, 0.0);
    for (int s = static_cast<int>(shell.size()) - 1; s >= 0; --s) {
      tail += shell[s];
      tail_after[s] = tail;  // sum over shells >= s
    }
    modes_ = max_mode;
    if (tail_tolerance > 0.0) {
      for (int M = 1; M <= max_mode; M += 2) {
        if (tail_after[M / 2 + 1] < tail_tolerance) {
          modes_ = M;
          break;
        }
      }
    }
    tail_bound_ = tail_after[modes_ / 2 + 1];
    const int nm = (modes_ + 1) / 2;
    cy_.resize(static_cast<size_t>(nm) * nm);
    cp_.resize(cy_.size());
    for (int i = 0; i < nm; ++i)
      for (int j = 0; j < nm; ++j) {
        cy_[i * nm + j] = coefficient_y(2 * i + 1, 2 * j + 1);
        cp_[i * nm + j] = coefficient_p(2 * i + 1, 2 * j + 1);
      }
  }

  double beta() const { return beta_; }
  int max_mode() const { return modes_; }
  /// Sum of |y_mn| over the discarded modes (sup-norm bound on the truncation error of y).
  double tail_bound() const { return tail_bound_; }

  double mode_a(int m, int n) const {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return std::sqrt(beta_) * ((static_cast<double>(m) * m + static_cast<double>(n) * n) * pi2 + 1.0);
  }
  static double mode_c(int m, int n) {
    if (m % 2 == 0 || n % 2 == 0) return 0.0;
    return 16.0 / (m * n * std::numbers::pi * std::numbers::pi);
  }
  double coefficient_y(int m, int n) const {
    const double a = mode_a(m, n);
    return mode_c(m, n) / (1.0 + a * a);
  }
  double coefficient_p(int m, int n) const { return mode_a(m, n) * coefficient_y(m, n); }

  /// Batched evaluation; rows of points sharing a y coordinate reuse the inner sums.
  void eval_batch(std::span<const Point> pts, std::span<ExactValues> out) const override {
    require(pts.size() == out.size(), ErrorCode::DimensionMismatch, "series batch size mismatch");
    const int nm = (modes_ + 1) / 2;
    const double pi = std::numbers::pi;
    std::unordered_map<double, size_t> row_of;
    std::vector<double> rows;  // per unique y: Y_m, dY_m, P_m, dP_m (4 * nm)
    std::vector<double> sn(nm), cn(nm);
    for (const Point& x : pts) {
      if (row_of.count(x.y)) continue;
      const size_t r = row_of.size();
      row_of.emplace(x.y, r);
      rows.resize((r + 1) * 4 * nm);
      odd_harmonics(pi * x.y, sn.data(), cn.data(), nm);
      for (int j = 0; j < nm; ++j) cn[j] *= (2 * j + 1) * pi;
      double* row = rows.data() + r * 4 * nm;
      for (int i = 0; i < nm; ++i) {
        double Y = 0.0, dY = 0.0, P = 0.0, dP = 0.0;
        const double* cy = cy_.data() + static_cast<size_t>(i) * nm;
        const double* cp = cp_.data() + static_cast<size_t>(i) * nm;
        for (int j = 0; j < nm; ++j) {
          Y += cy[j] * sn[j];
          dY += cy[j] * cn[j];
          P += cp[j] * sn[j];
          dP += cp[j] * cn[j];
        }
        row[i] = Y;
        row[nm + i] = dY;
        row[2 * nm + i] = P;
        row[3 * nm + i] = dP;
      }
    }
    std::vector<double> sm(nm), cm(nm);
    for (size_t k = 0; k < pts.size(); ++k) {
      const Point x = pts[k];
      const double* row = rows.data() + row_of.at(x.y) * 4 * nm;
      odd_harmonics(pi * x.x, sm.data(), cm.data(), nm);
      ExactValues v;
      for (int i = 0; i < nm; ++i) {
        const double s = sm[i], c = (2 * i + 1) * pi * cm[i];
        v.y += s * row[i];
        v.grad_y.x += c * row[i];
        v.grad_y.y += s * row[nm + i];
        v.p += s * row[2 * nm + i];
        v.grad_p.x += c * row[2 * nm + i];
        v.grad_p.y += s * row[3 * nm + i];
      }
      out[k] = v;
    }
  }

 private:
  // sin(m t), cos(m t) for m = 1, 3, ..., 2 count - 1 by repeated rotation through 2t.
  static void odd_harmonics(double t, double* s, double* c, int count) {
    const double s2 = std::sin(2.0 * t), c2 = std::cos(2.0 * t);
    double sv = std::sin(t), cv = std::cos(t);
    for (int i = 0; i < count; ++i) {
      s[i] = sv;
      c[i] = cv;
      const double sn = sv * c2 + cv * s2;
      cv = cv * c2 - sv * s2;
      sv = sn;
    }
  }

  double beta_;
  int modes_ = 1;
  double tail_bound_ = 0.0;
  std::vector<double> cy_, cp_;
};

/// The same solution with the inner sine sum done in closed form. With z = y + i p the system
/// reads (-lap + kappa^2) z = s, kappa^2 = 1 + i beta^(-1/2), s = i beta^(-1/2), so z = (s / kappa^2) phi
/// with -lap phi + kappa^2 phi = kappa^2, phi = 0 on the boundary, and
///   phi(x, y) = v(x) - sum_{m odd} b_m sin(m pi x) cosh(k_m (y - 1/2)) / cosh(k_m / 2),
///   v(x) = 1 - cosh(kappa (x - 1/2)) / cosh(kappa / 2),  b_m = 4 kappa^2 / (m pi k_m^2),  k_m^2 = m^2 pi^2 + kappa^2.
/// The terms decay like exp(-m pi d) with d the distance to the nearer of y = 0, 1; each point uses
/// the orientation (this one or x <-> y) with the larger d and stops once the remaining terms fall
/// below the tolerance.
class SeparatedSeriesOracle : public ExactOracle {
 public:
  explicit SeparatedSeriesOracle(double beta, double tolerance = 1e-15, double truncation_scale = 1.0,
                                 int max_terms = 10'000'000)
      : beta_(beta), tol_(tolerance), scale_(truncation_scale), max_terms_(max_terms) {
    require(beta > 0.0, ErrorCode::InvalidArgument, "beta must be positive");
    require(tolerance > 0.0, ErrorCode::InvalidArgument, "series tolerance must be positive");
    require(truncation_scale >= 1.0, ErrorCode::InvalidArgument, "truncation scale must be >= 1");
    kappa2_ = {1.0, 1.0 / std::sqrt(beta)};
    kappa_ = std::sqrt(kappa2_);
    factor_ = std::complex<double>(0.0, 1.0 / std::sqrt(beta)) / kappa2_;
  }

  double beta() const { return beta_; }
  int max_terms() const { return max_terms_; }

  void eval_batch(std::span<const Point> pts, std::span<ExactValues> out) const override {
    require(pts.size() == out.size(), ErrorCode::DimensionMismatch, "series batch size mismatch");
    for (size_t i = 0; i < pts.size(); ++i) out[i] = eval_point(pts[i]);
  }

  /// Outer terms needed at x (after scaling); exposed for diagnostics.
  int terms_at(Point x) const {
    const double dx = std::min(x.x, 1.0 - x.x), dy = std::min(x.y, 1.0 - x.y);
    return count_terms(std::max(dx, dy));
  }

 private:
  using C = std::complex<double>;

  // cosh(k t) / cosh(k / 2) and k sinh(k t) / cosh(k / 2) for |t| <= 1/2, Re k > 0.
  static void ratio(C k, double t, C& r, C& dr) {
    const double a = std::abs(t);
    const C e1 = std::exp(k * (a - 0.5)), e2 = std::exp(-k * (a + 0.5)), den = 1.0 + std::exp(-k);
    r = (e1 + e2) / den;
    dr = (t < 0.0 ? -1.0 : 1.0) * k * (e1 - e2) / den;
  }

  int count_terms(double d) const {
    if (d <= 0.0) return 0;
    const double pi = std::numbers::pi;
    const double q = std::exp(-2.0 * pi * d);
    int n = 0;
    for (int m = 1; n < max_terms_; m += 2, ++n) {
      const C km = std::sqrt(static_cast<double>(m) * m * pi * pi + kappa2_);
      const double bm = std::abs(4.0 * kappa2_ / (m * pi * km * km));
      const double bound = bm * std::max(m * pi, std::abs(km)) * std::exp(-km.real() * d) / (1.0 - q);
      if (bound < tol_) break;
    }
    return std::min(max_terms_, static_cast<int>(std::ceil(scale_ * (n + 1))));
  }

  // phi and its gradient in the orientation that decays in the second coordinate.
  void phi(double x, double y, int terms, C& f, C& fx, C& fy) const {
    const double pi = std::numbers::pi;
    C r, dr;
    ratio(kappa_, x - 0.5, r, dr);
    f = 1.0 - r;
    fx = -dr;
    fy = 0.0;
    const double t = pi * x, s2 = std::sin(2.0 * t), c2 = std::cos(2.0 * t);
    double sv = std::sin(t), cv = std::cos(t);
    for (int i = 0; i < terms; ++i) {
      const int m = 2 * i + 1;
      const C km = std::sqrt(static_cast<double>(m) * m * pi * pi + kappa2_);
      const C bm = 4.0 * kappa2_ / (m * pi * km * km);
      C cy, dcy;
      ratio(km, y - 0.5, cy, dcy);
      f -= bm * sv * cy;
      fx -= bm * (m * pi) * cv * cy;
      fy -= bm * sv * dcy;
      const double sn = sv * c2 + cv * s2;
      cv = cv * c2 - sv * s2;
      sv = sn;
    }
  }

  ExactValues eval_point(Point x) const {
    const double dx = std::min(x.x, 1.0 - x.x), dy = std::min(x.y, 1.0 - x.y);
    require(dx >= -1e-14 && dy >= -1e-14, ErrorCode::InvalidArgument, "series point outside the unit square");
    ExactValues v;
    if (std::max(dx, dy) <= 0.0) return v;  // corner: values and gradient vanish
    C f, fx, fy;
    if (dy >= dx) {
      phi(x.x, x.y, count_terms(dy), f, fx, fy);
    } else {
      phi(x.y, x.x, count_terms(dx), f, fy, fx);
    }
    if (std::min(dx, dy) <= 0.0) f = 0.0;  // on the boundary
    const C z = factor_ * f, zx = factor_ * fx, zy = factor_ * fy;
    v.y = z.real();
    v.p = z.imag();
    v.grad_y = {zx.real(), zy.real()};
    v.grad_p = {zx.imag(), zy.imag()};
    return v;
  }

  double beta_;
  double tol_;
  double scale_;
  int max_terms_;
  C kappa2_, kappa_, factor_;
};

struct ProblemSpec {
  std::string name;
  double beta = 1.0;
  VectorField zeta;
  ScalarField div_zeta;
  ScalarField gamma;
  ScalarField f;
  ScalarField g;
  std::optional<ManufacturedSolution> manufactured;
  std::shared_ptr<const ExactOracle> series;

  bool has_exact() const { return manufactured.has_value() || series != nullptr; }

  void exact_batch(std::span<const Point> pts, std::span<ExactValues> out) const {
    require(pts.size() == out.size(), ErrorCode::DimensionMismatch, "exact batch size mismatch");
    if (series) {
      series->eval_batch(pts, out);
      return;
    }
    require(manufactured.has_value(), ErrorCode::InvalidArgument, "problem has no exact solution");
    const auto& ms = *manufactured;
    for (size_t i = 0; i < pts.size(); ++i)
      out[i] = {ms.y(pts[i]), ms.p(pts[i]), ms.grad_y(pts[i]), ms.grad_p(pts[i])};
  }
};

/// f and g from a manufactured (y, p) pair:
///   f = sqrt(beta) (-lap p - zeta . grad p - div(zeta) p + gamma p) + y
///   g = sqrt(beta) (-lap y + zeta . grad y + gamma y) - p
inline std::pair<ScalarField, ScalarField> manufactured_rhs(const ProblemSpec& spec) {
  require(spec.manufactured.has_value(), ErrorCode::InvalidArgument, "manufactured_rhs needs a manufactured solution");
  const ManufacturedSolution ms = *spec.manufactured;
  const double sb = std::sqrt(spec.beta);
  const VectorField zeta = spec.zeta;
  const ScalarField divz = spec.div_zeta, gamma = spec.gamma;
  ScalarField f = [=](Point x) {
    const double adv = dot(zeta(x), ms.grad_p(x)) + divz(x) * ms.p(x);
    return sb * (-ms.lap_p(x) - adv + gamma(x) * ms.p(x)) + ms.y(x);
  };
  ScalarField g = [=](Point x) {
    return sb * (-ms.lap_y(x) + dot(zeta(x), ms.grad_y(x)) + gamma(x) * ms.y(x)) - ms.p(x);
  };
  return {std::move(f), std::move(g)};
}

namespace problems {

inline ManufacturedSolution sine_product() {
  const double pi = std::numbers::pi;
  auto s = [pi](Point x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
  auto grad = [pi](Point x) {
    return Point{pi * std::cos(pi * x.x) * std::sin(pi * x.y), pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
  };
  auto lap = [pi](Point x) { return -2.0 * pi * pi * std::sin(pi * x.x) * std::sin(pi * x.y); };
  return {s, s, grad, grad, lap, lap};
}

inline ProblemSpec with_manufactured(ProblemSpec spec) {
  auto [f, g] = manufactured_rhs(spec);
  spec.f = std::move(f);
  spec.g = std::move(g);
  return spec;
}

/// Constant convection zeta = (1, 0), gamma = 1, y = p = sin(pi x) sin(pi y).
inline ProblemSpec example1(double beta) {
  ProblemSpec s;
  s.name = "example1";
  s.beta = beta;
  s.zeta = [](Point) { return Point{1.0, 0.0}; };
  s.div_zeta = [](Point) { return 0.0; };
  s.gamma = [](Point) { return 1.0; };
  s.manufactured = sine_product();
  return with_manufactured(std::move(s));
}

/// Rotating convection zeta = (y, -x), gamma = 1, same exact pair.
inline ProblemSpec example2(double beta) {
  ProblemSpec s;
  s.name = "example2";
  s.beta = beta;
  s.zeta = [](Point x) { return Point{x.y, -x.x}; };
  s.div_zeta = [](Point) { return 0.0; };
  s.gamma = [](Point) { return 1.0; };
  s.manufactured = sine_product();
  return with_manufactured(std::move(s));
}

/// zeta = 0, gamma = 1, f = 1, g = 0; boundary layers of width ~ beta^(1/4).
/// max_mode = 0 selects the separated series; a positive value the truncated double series.
inline ProblemSpec example3(double beta, int max_mode = 0) {
  ProblemSpec s;
  s.name = "example3";
  s.beta = beta;
  s.zeta = [](Point) { return Point{0.0, 0.0}; };
  s.div_zeta = [](Point) { return 0.0; };
  s.gamma = [](Point) { return 1.0; };
  s.f = [](Point) { return 1.0; };
  s.g = [](Point) { return 0.0; };
  if (max_mode > 0)
    s.series = std::make_shared<const SeriesOracle>(beta, max_mode);
  else
    s.series = std::make_shared<const SeparatedSeriesOracle>(beta);
  return s;
}

inline ProblemSpec by_name(const std::string& name, double beta) {
  if (name == "example1") return example1(beta);
  if (name == "example2") return example2(beta);
  if (name == "example3") return example3(beta);
  fail(ErrorCode::InvalidArgument, "unknown problem '" + name + "' (expected example1 | example2 | example3)");
}

}  // namespace problems

/// Smallest sampled value of gamma - div(zeta)/2 on an n x n grid of the closed unit square.
inline double min_reaction_margin(const ProblemSpec& spec, int n = 100) {
  double gmin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Point x{static_cast<double>(i) / (n - 1), static_cast<double>(j) / (n - 1)};
      gmin = std::min(gmin, spec.gamma(x) - 0.5 * spec.div_zeta(x));
    }
  return gmin;
}

}  // namespace hdgbddc
