#pragma once

// Layered P1 triangulation of the planar gap.  Vertical columns sit between
// x'-stations graded toward the neck; each column is cut into `layers` cells
// that follow the two boundary graphs, and each cell is split into two
// triangles.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"
#include "geometry.hpp"

namespace thingap {

enum class VertexTag { interior, top, bottom, lateral_left, lateral_right };

inline const char* tag_name(VertexTag t) {
  switch (t) {
    case VertexTag::interior: return "interior";
    case VertexTag::top: return "top";
    case VertexTag::bottom: return "bottom";
    case VertexTag::lateral_left: return "lateral_left";
    case VertexTag::lateral_right: return "lateral_right";
  }
  return "interior";
}

inline VertexTag parse_tag(const std::string& s) {
  for (auto t : {VertexTag::interior, VertexTag::top, VertexTag::bottom, VertexTag::lateral_left,
                 VertexTag::lateral_right})
    if (s == tag_name(t)) return t;
  throw MeshError("unknown vertex tag '" + s + "'");
}

struct MeshParams {
  int layers = 16;
  double aspect = 2.0;   // dx' <= aspect * delta(x')
  double dxmax = 0.02;
  double xrange = 1.0;   // mesh covers |x'| <= xrange
};

using Triangle = std::array<int, 3>;

struct Mesh {
  std::vector<Point2> vertices;
  std::vector<VertexTag> tags;
  std::vector<Triangle> triangles;
  // Structured description; empty for meshes read from text.
  std::optional<GapGeometry<2>> geometry;
  std::vector<double> stations;
  int layers = 0;
  MeshParams params;

  bool structured() const { return geometry.has_value() && !stations.empty() && layers > 0; }
  int vertex_index(int k, int j) const { return k * (layers + 1) + j; }
  std::size_t columns() const { return stations.empty() ? 0 : stations.size() - 1; }

  double signed_area(std::size_t t) const {
    const auto& [a, b, c] = triangles[t];
    const Point2 e1 = vertices[b] - vertices[a];
    const Point2 e2 = vertices[c] - vertices[a];
    return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
  }

  Point2 centroid(std::size_t t) const {
    const auto& [a, b, c] = triangles[t];
    return (vertices[a] + vertices[b] + vertices[c]) / 3.0;
  }

  /// Barycentric coordinates of x in triangle t.
  Eigen::Vector3d barycentric(std::size_t t, const Point2& x) const {
    const auto& [a, b, c] = triangles[t];
    const Point2& p0 = vertices[a];
    const Point2 e1 = vertices[b] - p0, e2 = vertices[c] - p0, r = x - p0;
    const double det = e1.x() * e2.y() - e1.y() * e2.x();
    const double l1 = (r.x() * e2.y() - r.y() * e2.x()) / det;
    const double l2 = (e1.x() * r.y() - e1.y() * r.x()) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  bool triangle_contains(std::size_t t, const Point2& x, double tol = 1e-12) const {
    return barycentric(t, x).minCoeff() >= -tol;
  }

  /// Lowest-index triangle containing x (closed, with tolerance), or -1.
  int locate(const Point2& x, double tol = 1e-12) const {
    if (!structured()) {
      for (std::size_t t = 0; t < triangles.size(); ++t)
        if (triangle_contains(t, x, tol)) return int(t);
      return -1;
    }
    const double xtol = tol * std::max(1.0, std::abs(x.x()));
    if (x.x() < stations.front() - xtol || x.x() > stations.back() + xtol) return -1;
    auto it = std::upper_bound(stations.begin(), stations.end(), x.x());
    const int k0 = std::clamp(int(it - stations.begin()) - 1, 0, int(columns()) - 1);
    int best = -1;
    for (int k = std::max(0, k0 - 1); k <= std::min(int(columns()) - 1, k0 + 1); ++k) {
      const Point2& b0 = vertices[vertex_index(k, 0)];
      const Point2& b1 = vertices[vertex_index(k + 1, 0)];
      const Point2& t0 = vertices[vertex_index(k, layers)];
      const Point2& t1 = vertices[vertex_index(k + 1, layers)];
      const double w = std::clamp((x.x() - b0.x()) / (b1.x() - b0.x()), 0.0, 1.0);
      const double lo = b0.y() + w * (b1.y() - b0.y());
      const double hi = t0.y() + w * (t1.y() - t0.y());
      const int j0 = int(std::floor((x.y() - lo) / (hi - lo) * layers));
      for (int j = std::max(0, j0 - 1); j <= std::min(layers - 1, j0 + 1); ++j) {
        const int base = 2 * (k * layers + j);
        for (int t = base; t < base + 2; ++t) {
          if ((best < 0 || t < best) && triangle_contains(std::size_t(t), x, tol)) best = t;
        }
      }
    }
    return best;
  }
};

namespace detail {

/// Stations 0 = x_0 < x_1 < ... with x_{k+1} = x_k + min(aspect delta(x_k), dxmax),
/// mirrored to the negative side and snapped to +-xrange.
inline std::vector<double> graded_stations(const GapGeometry<2>& g, const MeshParams& p) {
  std::vector<double> half{0.0};
  while (half.back() < p.xrange) {
    Eigen::Matrix<double, 1, 1> xp;
    xp << half.back();
    const double step = std::min(p.aspect * g.delta(xp), p.dxmax);
    if (!(step > 0.0)) throw MeshError("degenerate grading step");
    half.push_back(half.back() + step);
  }
  // Snap the end: drop a station that would leave a sliver.
  half.back() = p.xrange;
  if (half.size() >= 3) {
    const double last = half[half.size() - 1] - half[half.size() - 2];
    const double prev = half[half.size() - 2] - half[half.size() - 3];
    if (last < 0.3 * prev) half.erase(half.end() - 2);
  }
  std::vector<double> s;
  s.reserve(2 * half.size() - 1);
  for (auto it = half.rbegin(); it != half.rend(); ++it) s.push_back(*it == 0.0 ? 0.0 : -*it);
  for (std::size_t k = 1; k < half.size(); ++k) s.push_back(half[k]);
  s.front() = -p.xrange;
  return s;
}

inline Mesh build_layered(const GapGeometry<2>& g, std::vector<double> stations, int layers, const MeshParams& params) {
  Mesh mesh;
  mesh.geometry = g;
  mesh.stations = std::move(stations);
  mesh.layers = layers;
  mesh.params = params;
  mesh.params.layers = layers;
  const int K = int(mesh.stations.size());
  const int L = layers;
  mesh.vertices.reserve(std::size_t(K * (L + 1)));
  mesh.tags.reserve(std::size_t(K * (L + 1)));
  for (int k = 0; k < K; ++k) {
    Eigen::Matrix<double, 1, 1> xp;
    xp << mesh.stations[std::size_t(k)];
    const double lo = g.lower(xp);
    const double hi = g.upper(xp);
    const double d = g.delta(xp);
    if (!(d > 0.0) || !(hi > lo)) throw MeshError("gap width is not positive at a station");
    for (int j = 0; j <= L; ++j) {
      double y = lo + (double(j) / L) * d;
      if (j == 0) y = lo;
      if (j == L) y = hi;
      mesh.vertices.emplace_back(xp[0], y);
      VertexTag tag = VertexTag::interior;
      if (j == 0) tag = VertexTag::bottom;
      else if (j == L) tag = VertexTag::top;
      else if (k == 0) tag = VertexTag::lateral_left;
      else if (k == K - 1) tag = VertexTag::lateral_right;
      mesh.tags.push_back(tag);
    }
  }
  mesh.triangles.reserve(std::size_t(2 * (K - 1) * L));
  for (int k = 0; k + 1 < K; ++k) {
    for (int j = 0; j < L; ++j) {
      const int a = mesh.vertex_index(k, j), b = mesh.vertex_index(k + 1, j);
      const int c = mesh.vertex_index(k + 1, j + 1), d = mesh.vertex_index(k, j + 1);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    if (!(mesh.signed_area(t) > 0.0)) throw MeshError("generated triangle with non-positive area");
  return mesh;
}

}  // namespace detail

inline Mesh generate(const GapGeometry<2>& g, const MeshParams& p) {
  if (p.layers < 4) throw MeshError("mesh needs at least 4 layers");
  if (!(p.xrange > 0.0) || p.xrange > 1.0) throw DomainError("mesh x-range must lie in (0, 1]");
  if (!(p.aspect > 0.0) || !(p.dxmax > 0.0)) throw MeshError("grading parameters must be positive");
  return detail::build_layered(g, detail::graded_stations(g, p), p.layers, p);
}

/// Uniform refinement by regeneration: each column and each layer is split
/// into `factor` pieces and boundary vertices are placed on the exact graphs.
inline Mesh refine(const Mesh& mesh, int factor) {
  if (factor != 2 && factor != 4) throw ConfigError("refinement factor must be 2 or 4");
  if (!mesh.structured()) throw MeshError("only generated meshes can be refined");
  std::vector<double> s;
  s.reserve(mesh.columns() * std::size_t(factor) + 1);
  for (std::size_t k = 0; k + 1 < mesh.stations.size(); ++k) {
    const double x0 = mesh.stations[k], x1 = mesh.stations[k + 1];
    for (int i = 0; i < factor; ++i) s.push_back(x0 + (x1 - x0) * double(i) / factor);
  }
  s.push_back(mesh.stations.back());
  return detail::build_layered(*mesh.geometry, std::move(s), mesh.layers * factor, mesh.params);
}

/// Stations with |x'| < r.
inline std::size_t stations_within(const Mesh& mesh, double r) {
  return std::size_t(std::count_if(mesh.stations.begin(), mesh.stations.end(),
                                   [r](double x) { return std::abs(x) < r; }));
}

/// 2 * inradius / longest edge.
inline double triangle_quality(const Point2& a, const Point2& b, const Point2& c) {
  const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
  const Point2 e1 = b - a, e2 = c - a;
  const double area = 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
  const double inradius = 2.0 * area / (la + lb + lc);
  return 2.0 * inradius / std::max({la, lb, lc});
}

/// Minimum triangle quality measured in the column/layer frame
/// ((x' - x_k) / dx_k, L (x_n - lower(x')) / delta(x')), which removes the
/// intended stretching of the layered cells.
inline double min_quality(const Mesh& mesh) {
  if (!mesh.structured()) {
    double q = std::numeric_limits<double>::infinity();
    for (const auto& [a, b, c] : mesh.triangles)
      q = std::min(q, triangle_quality(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]));
    return q;
  }
  const auto& g = *mesh.geometry;
  double q = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const int k = int(t / std::size_t(2 * mesh.layers));
    const double x0 = mesh.stations[std::size_t(k)];
    const double dx = mesh.stations[std::size_t(k) + 1] - x0;
    std::array<Point2, 3> mapped;
    for (int v = 0; v < 3; ++v) {
      const Point2& p = mesh.vertices[std::size_t(mesh.triangles[t][std::size_t(v)])];
      Eigen::Matrix<double, 1, 1> xp;
      xp << p.x();
      mapped[std::size_t(v)] = {(p.x() - x0) / dx, mesh.layers * (p.y() - g.lower(xp)) / g.delta(xp)};
    }
    q = std::min(q, triangle_quality(mapped[0], mapped[1], mapped[2]));
  }
  return q;
}

struct MeshReport {
  double min_area = 0.0;
  bool vertices_in_closure = true;
  double boundary_error = 0.0;   // max |x_n - graph| over top/bottom vertices
  bool conforming = true;        // interior edges shared by exactly two triangles
  double quality = 0.0;
  double area = 0.0;
  double exact_area = 0.0;       // integral of delta over the meshed x'-range
  double area_rel_error = 0.0;

  bool ok(double quality_floor = 0.2) const {
    return min_area > 0.0 && vertices_in_closure && boundary_error <= 1e-12 && conforming &&
           quality >= quality_floor && area_rel_error <= 5e-3;
  }
};

inline MeshReport validate(const Mesh& mesh) {
  MeshReport r;
  r.min_area = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double a = mesh.signed_area(t);
    r.min_area = std::min(r.min_area, a);
    r.area += a;
  }
  // Edge multiplicities; boundary edges (both ends tagged non-interior and on
  // the same boundary piece) may appear once.
  std::map<std::pair<int, int>, int> edges;
  for (const auto& tri : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = tri[std::size_t(e)], b = tri[std::size_t((e + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  for (const auto& [e, count] : edges) {
    if (count > 2) r.conforming = false;
    if (count == 1) {
      // A single-use edge must lie on the outer boundary.
      const auto ta = mesh.tags[std::size_t(e.first)], tb = mesh.tags[std::size_t(e.second)];
      if (ta == VertexTag::interior || tb == VertexTag::interior) r.conforming = false;
    }
  }
  if (mesh.geometry) {
    const auto& g = *mesh.geometry;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      const Point2& p = mesh.vertices[v];
      if (!g.contains_closure(1.0, p, 1e-12)) r.vertices_in_closure = false;
      Eigen::Matrix<double, 1, 1> xp;
      xp << p.x();
      if (mesh.tags[v] == VertexTag::top) r.boundary_error = std::max(r.boundary_error, std::abs(p.y() - g.upper(xp)));
      if (mesh.tags[v] == VertexTag::bottom)
        r.boundary_error = std::max(r.boundary_error, std::abs(p.y() - g.lower(xp)));
    }
    const double x0 = mesh.structured() ? mesh.stations.front() : -mesh.params.xrange;
    const double x1 = mesh.structured() ? mesh.stations.back() : mesh.params.xrange;
    auto delta = [&g](double x) {
      Eigen::Matrix<double, 1, 1> xp;
      xp << x;
      return g.delta(xp);
    };
    using boost::math::quadrature::gauss_kronrod;
    // Split at 0, where the profiles are least smooth.
    r.exact_area = gauss_kronrod<double, 31>::integrate(delta, x0, 0.0, 15, 1e-13) +
                   gauss_kronrod<double, 31>::integrate(delta, 0.0, x1, 15, 1e-13);
    r.area_rel_error = std::abs(r.area - r.exact_area) / r.exact_area;
  }
  r.quality = min_quality(mesh);
  return r;
}

inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os.precision(17);
  os << "vertices " << mesh.vertices.size() << " triangles " << mesh.triangles.size() << '\n';
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    os << mesh.vertices[v].x() << ' ' << mesh.vertices[v].y() << ' ' << tag_name(mesh.tags[v]) << '\n';
  for (const auto& [a, b, c] : mesh.triangles) os << a << ' ' << b << ' ' << c << '\n';
}

/// Reads the text format written by write_mesh.  The result carries no
/// geometry, so point location falls back to a linear scan.
inline Mesh read_mesh(std::istream& is) {
  Mesh mesh;
  std::string w1, w2;
  std::size_t nv = 0, nt = 0;
  if (!(is >> w1 >> nv >> w2 >> nt) || w1 != "vertices" || w2 != "triangles") throw MeshError("bad mesh header");
  mesh.vertices.resize(nv);
  mesh.tags.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    std::string tag;
    if (!(is >> mesh.vertices[v].x() >> mesh.vertices[v].y() >> tag)) throw MeshError("truncated vertex list");
    mesh.tags[v] = parse_tag(tag);
  }
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles) {
    if (!(is >> t[0] >> t[1] >> t[2])) throw MeshError("truncated triangle list");
    for (int i : t)
      if (i < 0 || std::size_t(i) >= nv) throw MeshError("triangle references a missing vertex");
  }
  return mesh;
}

}  // namespace thingap
