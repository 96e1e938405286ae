#pragma once

// Structured triangulations of the unit square with a square subdomain overlay.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "hdgbddc/error.hpp"

namespace hdgbddc {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

struct Edge {
  std::array<int, 2> vertices;  // vertices[0] < vertices[1]
  Point normal;                 // unit normal: (hi - lo) rotated by +90 degrees
  double length = 0.0;
};

/// Local edge j of a triangle joins local vertices j and (j+1)%3.
struct TriangleEdges {
  std::array<int, 3> edge;
  std::array<int, 3> sign;  // +1 when the edge's global normal points out of the triangle
};

class MeshTopology {
 public:
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<Edge> edges;
  std::vector<TriangleEdges> edge_of_triangle;
  std::vector<std::array<int, 2>> edge_triangles;  // second entry -1 on the boundary
  std::vector<bool> boundary_edge;
  double h = 0.0;  // structured square side; triangle diameters are sqrt(2) h

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  double area(int t) const {
    const auto& v = triangles[t];
    const Point a = vertices[v[1]] - vertices[v[0]];
    const Point b = vertices[v[2]] - vertices[v[0]];
    return 0.5 * (a.x * b.y - a.y * b.x);
  }

  double diameter(int t) const {
    const auto& v = triangles[t];
    double d = 0.0;
    for (int j = 0; j < 3; ++j) d = std::max(d, norm(vertices[v[(j + 1) % 3]] - vertices[v[j]]));
    return d;
  }

  double max_diameter() const {
    double d = 0.0;
    for (int t = 0; t < num_triangles(); ++t) d = std::max(d, diameter(t));
    return d;
  }

  double min_diameter() const {
    double d = std::numeric_limits<double>::infinity();
    for (int t = 0; t < num_triangles(); ++t) d = std::min(d, diameter(t));
    return d;
  }

  /// Outward unit normal of local edge j of triangle t.
  Point outward_normal(int t, int j) const {
    const auto& te = edge_of_triangle[t];
    return te.sign[j] * edges[te.edge[j]].normal;
  }

  Point centroid(int t) const {
    const auto& v = triangles[t];
    return (1.0 / 3.0) * (vertices[v[0]] + vertices[v[1]] + vertices[v[2]]);
  }
};

/// A maximal straight run of interface edges shared by two subdomains.
struct MacroEdge {
  std::array<int, 2> subdomains;  // ascending
  std::vector<int> fine_edges;    // ordered along the macro edge
  double length = 0.0;
};

struct SubdomainPartition {
  int num_per_side = 1;
  int num_subdomains = 1;
  int ratio = 1;  // H / h
  double H = 1.0;
  std::vector<int> subdomain_of_triangle;
  std::vector<int> interface_edges;
  std::vector<std::vector<int>> interior_edges;  // per subdomain
  std::vector<MacroEdge> macro_edges;
  std::vector<int> macro_edge_of_edge;  // -1 when the edge is not on the interface
};

enum class EdgeClass : std::uint8_t { Dirichlet, Interior, Interface };

struct SkeletonClassification {
  std::vector<EdgeClass> edge_class;
  std::vector<int> dirichlet;
  std::vector<int> interior;
  std::vector<int> interface;
  std::vector<int> owner;  // subdomain of an interior edge, -1 otherwise
};

namespace mesh_detail {

inline int edge_key_find(std::map<std::pair<int, int>, int>& index, MeshTopology& mesh, int a, int b) {
  const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
  auto it = index.find(key);
  if (it != index.end()) return it->second;
  Edge e;
  e.vertices = {key.first, key.second};
  const Point t = mesh.vertices[key.second] - mesh.vertices[key.first];
  e.length = norm(t);
  e.normal = (1.0 / e.length) * Point{-t.y, t.x};
  const int id = mesh.num_edges();
  mesh.edges.push_back(e);
  mesh.edge_triangles.push_back({-1, -1});
  index.emplace(key, id);
  return id;
}

}  // namespace mesh_detail

/// Unit square split into n x n subdomains of side H = 1/n, each cut into ratio x ratio
/// squares, each square halved along its bottom-left to top-right diagonal.
inline std::pair<MeshTopology, SubdomainPartition> build_structured_mesh(int n_sub_per_side, int ratio) {
  require(n_sub_per_side >= 1 && ratio >= 1, ErrorCode::InvalidArgument,
          "build_structured_mesh needs n_sub_per_side >= 1 and ratio >= 1");
  const int n = n_sub_per_side * ratio;
  MeshTopology mesh;
  mesh.h = 1.0 / n;
  mesh.vertices.reserve(static_cast<size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) mesh.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };

  SubdomainPartition part;
  part.num_per_side = n_sub_per_side;
  part.num_subdomains = n_sub_per_side * n_sub_per_side;
  part.ratio = ratio;
  part.H = 1.0 / n_sub_per_side;

  mesh.triangles.reserve(2 * static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      const int sub = (j / ratio) * n_sub_per_side + (i / ratio);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
      part.subdomain_of_triangle.push_back(sub);
      part.subdomain_of_triangle.push_back(sub);
    }
  }

  std::map<std::pair<int, int>, int> index;
  mesh.edge_of_triangle.resize(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[t];
    for (int jl = 0; jl < 3; ++jl) {
      const int a = v[jl], b = v[(jl + 1) % 3];
      const int e = mesh_detail::edge_key_find(index, mesh, a, b);
      mesh.edge_of_triangle[t].edge[jl] = e;
      // Counterclockwise traversal a -> b has outward normal (t_y, -t_x); the global normal
      // of lo -> hi is (-t_y, t_x), so they agree exactly when a is the higher vertex.
      mesh.edge_of_triangle[t].sign[jl] = (a > b) ? 1 : -1;
      auto& et = mesh.edge_triangles[e];
      if (et[0] < 0)
        et[0] = t;
      else
        et[1] = t;
    }
  }
  mesh.boundary_edge.resize(mesh.edges.size());
  for (int e = 0; e < mesh.num_edges(); ++e) mesh.boundary_edge[e] = mesh.edge_triangles[e][1] < 0;

  // Subdomain overlay.
  part.interior_edges.assign(part.num_subdomains, {});
  part.macro_edge_of_edge.assign(mesh.edges.size(), -1);
  std::map<std::array<int, 3>, int> macro_index;  // (orientation, line, segment)
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.boundary_edge[e]) continue;
    const auto [t0, t1] = mesh.edge_triangles[e];
    const int s0 = part.subdomain_of_triangle[t0], s1 = part.subdomain_of_triangle[t1];
    if (s0 == s1) {
      part.interior_edges[s0].push_back(e);
      continue;
    }
    part.interface_edges.push_back(e);
    const Point a = mesh.vertices[mesh.edges[e].vertices[0]];
    const Point b = mesh.vertices[mesh.edges[e].vertices[1]];
    const bool vertical = std::abs(a.x - b.x) < 0.5 * mesh.h;
    const Point mid = 0.5 * (a + b);
    const int line = static_cast<int>(std::lround((vertical ? mid.x : mid.y) * n_sub_per_side));
    const int seg = static_cast<int>(std::floor((vertical ? mid.y : mid.x) * n_sub_per_side));
    const std::array<int, 3> key{vertical ? 0 : 1, line, seg};
    auto it = macro_index.find(key);
    int m;
    if (it == macro_index.end()) {
      m = static_cast<int>(part.macro_edges.size());
      MacroEdge me;
      me.subdomains = {std::min(s0, s1), std::max(s0, s1)};
      part.macro_edges.push_back(me);
      macro_index.emplace(key, m);
    } else {
      m = it->second;
    }
    part.macro_edges[m].fine_edges.push_back(e);
    part.macro_edges[m].length += mesh.edges[e].length;
    part.macro_edge_of_edge[e] = m;
  }
  for (auto& me : part.macro_edges) {
    std::sort(me.fine_edges.begin(), me.fine_edges.end(), [&](int ea, int eb) {
      const Point pa = mesh.vertices[mesh.edges[ea].vertices[0]];
      const Point pb = mesh.vertices[mesh.edges[eb].vertices[0]];
      return pa.x + pa.y < pb.x + pb.y;
    });
  }
  return {std::move(mesh), std::move(part)};
}

/// Splits all edges into the Dirichlet set (on the outer boundary), subdomain-interior edges and
/// interface edges, cross-checking the partition's own bookkeeping.
inline SkeletonClassification classify_skeleton(const MeshTopology& mesh, const SubdomainPartition& part) {
  require(static_cast<int>(part.subdomain_of_triangle.size()) == mesh.num_triangles(),
          ErrorCode::InconsistentPartition, "subdomain map size differs from triangle count");
  SkeletonClassification sc;
  sc.edge_class.resize(mesh.edges.size());
  sc.owner.assign(mesh.edges.size(), -1);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.boundary_edge[e]) {
      sc.edge_class[e] = EdgeClass::Dirichlet;
      sc.dirichlet.push_back(e);
      continue;
    }
    const auto [t0, t1] = mesh.edge_triangles[e];
    const int s0 = part.subdomain_of_triangle[t0], s1 = part.subdomain_of_triangle[t1];
    if (s0 == s1) {
      sc.edge_class[e] = EdgeClass::Interior;
      sc.owner[e] = s0;
      sc.interior.push_back(e);
    } else {
      sc.edge_class[e] = EdgeClass::Interface;
      sc.interface.push_back(e);
    }
  }
  // The partition's edge lists must agree with what the triangle map implies.
  std::vector<int> listed(mesh.edges.size(), -2);
  for (int s = 0; s < static_cast<int>(part.interior_edges.size()); ++s)
    for (int e : part.interior_edges[s]) {
      require(listed[e] == -2, ErrorCode::InconsistentPartition, "edge listed twice in partition");
      listed[e] = s;
    }
  for (int e : part.interface_edges) {
    require(listed[e] == -2, ErrorCode::InconsistentPartition, "edge listed twice in partition");
    listed[e] = -1;
  }
  for (int e = 0; e < mesh.num_edges(); ++e) {
    switch (sc.edge_class[e]) {
      case EdgeClass::Dirichlet:
        require(listed[e] == -2, ErrorCode::InconsistentPartition, "boundary edge listed in partition");
        break;
      case EdgeClass::Interior:
        require(listed[e] == sc.owner[e], ErrorCode::InconsistentPartition,
                "interior edge " + std::to_string(e) + " conflicts with its triangles' subdomain");
        break;
      case EdgeClass::Interface:
        require(listed[e] == -1, ErrorCode::InconsistentPartition,
                "interface edge " + std::to_string(e) + " missing from the partition interface");
        break;
    }
  }
  return sc;
}

/// Plain-text dump. Sections: "vertices N" rows `id x y`; "triangles T" rows
/// `id v0 v1 v2 subdomain`; "edges E" rows `id v_lo v_hi nx ny boundary tri0 tri1`.
inline void dump_mesh(std::ostream& os, const MeshTopology& mesh, const SubdomainPartition& part) {
  os.precision(17);
  os << "vertices " << mesh.num_vertices() << "\n";
  for (int i = 0; i < mesh.num_vertices(); ++i) os << i << ' ' << mesh.vertices[i].x << ' ' << mesh.vertices[i].y << "\n";
  os << "triangles " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[t];
    os << t << ' ' << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << part.subdomain_of_triangle[t] << "\n";
  }
  os << "edges " << mesh.num_edges() << "\n";
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto& ed = mesh.edges[e];
    os << e << ' ' << ed.vertices[0] << ' ' << ed.vertices[1] << ' ' << ed.normal.x << ' ' << ed.normal.y << ' '
       << (mesh.boundary_edge[e] ? 1 : 0) << ' ' << mesh.edge_triangles[e][0] << ' ' << mesh.edge_triangles[e][1]
       << "\n";
  }
}

}  // namespace hdgbddc
