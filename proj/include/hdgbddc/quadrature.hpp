#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "hdgbddc/error.hpp"
#include "hdgbddc/mesh.hpp"

namespace hdgbddc {

/// Rule on the unit interval [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;  // exact for polynomials up to this degree
};

/// Rule on the reference triangle {(xi, eta) : xi, eta >= 0, xi + eta <= 1}.
struct TriangleRule {
  std::vector<Point> points;
  std::vector<double> weights;
  int degree = 0;
};

namespace quadrature_detail {

// (P_n(x), P_{n-1}(x)) by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

}  // namespace quadrature_detail

/// n-point Gauss-Legendre rule mapped to [0, 1], nodes by Newton iteration on P_n.
inline LineRule gauss_legendre(int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "gauss_legendre needs n >= 1");
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  rule.degree = 2 * n - 1;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [pn, pm] = quadrature_detail::legendre_pair(n, x);
      const double dx = pn / (n * (x * pn - pm) / (x * x - 1.0));
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [pn, pm] = quadrature_detail::legendre_pair(n, x);
    const double dp = n * (x * pn - pm) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

inline LineRule line_rule(int degree) {
  return gauss_legendre(std::max(1, degree / 2 + 1));
}

/// Collapsed tensor Gauss rule: weights positive, all points interior.
inline TriangleRule triangle_rule(int degree) {
  require(degree >= 0, ErrorCode::InvalidArgument, "triangle_rule needs degree >= 0");
  // xi^a eta^b times the collapse Jacobian has degree a + b + 1 in u.
  const int n = (degree + 3) / 2;
  const LineRule g = gauss_legendre(n);
  TriangleRule rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.points[i], v = g.points[j];
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - u));
    }
  }
  return rule;
}

/// Integral of f over triangle t.
template <class F>
double integrate_cell(const MeshTopology& mesh, int t, const TriangleRule& rule, F&& f) {
  const auto& v = mesh.triangles[t];
  const Point x0 = mesh.vertices[v[0]];
  const Point a = mesh.vertices[v[1]] - x0;
  const Point b = mesh.vertices[v[2]] - x0;
  const double det = std::abs(a.x * b.y - a.y * b.x);
  double sum = 0.0;
  for (size_t q = 0; q < rule.points.size(); ++q) {
    const Point p = x0 + rule.points[q].x * a + rule.points[q].y * b;
    sum += rule.weights[q] * f(p);
  }
  return sum * det;
}

/// Integral of f over edge e.
template <class F>
double integrate_edge(const MeshTopology& mesh, int e, const LineRule& rule, F&& f) {
  const auto& ed = mesh.edges[e];
  const Point a = mesh.vertices[ed.vertices[0]];
  const Point b = mesh.vertices[ed.vertices[1]];
  double sum = 0.0;
  for (size_t q = 0; q < rule.points.size(); ++q) sum += rule.weights[q] * f(a + rule.points[q] * (b - a));
  return sum * ed.length;
}

}  // namespace hdgbddc
