#pragma once

// P1 finite elements for the weak form
//
//   int (A^{ab}_{ij} d_b u_j + B^a_{ij} u_j) d_a phi_i - C^b_{ij} d_b u_j phi_i - D_{ij} u_j phi_i
//     = int H_i phi_i + F_{ia} d_a phi_i
//
// with Dirichlet data on the tagged boundary vertices.  Degree of freedom
// (vertex v, component i) has index v * m + i.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "auxiliary.hpp"
#include "coefficients.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"

namespace thingap {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct RightHandSide {
  std::function<Eigen::VectorXd(const Point2&)> H;  // m-vector
  std::function<Eigen::MatrixXd(const Point2&)> F;  // m x 2
};

struct LinearSystem {
  SparseMatrix matrix;
  Eigen::VectorXd load;
  int m = 1;
  std::size_t vertices = 0;
};

struct AssemblyOptions {
  int quadrature = 3;  // 1, 3 or 7 points
  unsigned threads = 1;
};

namespace detail {

/// Area and constant gradients of the three P1 basis functions.
struct P1Element {
  double area;
  Eigen::Matrix<double, 3, 2> grad;
};

inline P1Element p1_element(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Point2& p0 = mesh.vertices[std::size_t(tri[0])];
  const Point2& p1 = mesh.vertices[std::size_t(tri[1])];
  const Point2& p2 = mesh.vertices[std::size_t(tri[2])];
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
  if (!(det > 0.0)) throw MeshError(fmt::format("triangle {} has non-positive area", t));
  P1Element e;
  e.area = 0.5 * det;
  e.grad(0, 0) = p1.y() - p2.y();
  e.grad(0, 1) = p2.x() - p1.x();
  e.grad(1, 0) = p2.y() - p0.y();
  e.grad(1, 1) = p0.x() - p2.x();
  e.grad(2, 0) = p0.y() - p1.y();
  e.grad(2, 1) = p1.x() - p0.x();
  e.grad /= det;
  return e;
}

inline Point2 map_point(const Mesh& mesh, std::size_t t, double xi, double eta) {
  const auto& tri = mesh.triangles[t];
  return (1.0 - xi - eta) * mesh.vertices[std::size_t(tri[0])] + xi * mesh.vertices[std::size_t(tri[1])] +
         eta * mesh.vertices[std::size_t(tri[2])];
}

}  // namespace detail

/// Element matrix (3m x 3m, local index a * m + i) and load vector.
inline void element_system(const Mesh& mesh, std::size_t t, const CoefficientSet& cs, const RightHandSide& rhs,
                           const TriangleRule& rule, const CoefficientValues* fixed, Eigen::MatrixXd& Ke,
                           Eigen::VectorXd& Fe) {
  const int m = cs.m;
  const auto el = detail::p1_element(mesh, t);
  Ke.setZero(3 * m, 3 * m);
  Fe.setZero(3 * m);
  for (const auto& q : rule.points()) {
    const double N[3] = {1.0 - q.xi - q.eta, q.xi, q.eta};
    const double w = q.weight * el.area;
    const Point2 x = detail::map_point(mesh, t, q.xi, q.eta);
    CoefficientValues local;
    if (!fixed) local = cs.evaluate(Eigen::VectorXd(x));
    const CoefficientValues& v = fixed ? *fixed : local;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int al = 0; al < 2; ++al) {
              for (int be = 0; be < 2; ++be) s += v.a(al, be, i, j) * el.grad(b, be) * el.grad(a, al);
              s += v.b(al, i, j) * N[b] * el.grad(a, al);
              s -= v.c(al, i, j) * el.grad(b, al) * N[a];
            }
            s -= v.d(i, j) * N[b] * N[a];
            Ke(a * m + i, b * m + j) += w * s;
          }
    if (rhs.H) {
      const Eigen::VectorXd H = rhs.H(x);
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < m; ++i) Fe[a * m + i] += w * H[i] * N[a];
    }
    if (rhs.F) {
      const Eigen::MatrixXd F = rhs.F(x);
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < m; ++i) Fe[a * m + i] += w * (F(i, 0) * el.grad(a, 0) + F(i, 1) * el.grad(a, 1));
    }
  }
}

inline LinearSystem assemble(const Mesh& mesh, const CoefficientSet& cs, const RightHandSide& rhs = {},
                             const AssemblyOptions& opt = {}) {
  if (cs.n != 2) throw UnsupportedError("the discrete solver is two-dimensional");
  const int m = cs.m;
  const auto rule = TriangleRule::with_points(opt.quadrature);
  std::optional<CoefficientValues> fixed;
  if (cs.constant) fixed = cs.evaluate(Eigen::VectorXd::Zero(2));
  const std::size_t nt = mesh.triangles.size();
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, unsigned(nt / 256 + 1)));

  using Triplet = Eigen::Triplet<double>;
  std::vector<std::vector<Triplet>> parts(threads);
  std::vector<Eigen::VectorXd> loads(threads, Eigen::VectorXd::Zero(Eigen::Index(mesh.vertices.size()) * m));
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned p) {
    try {
      const std::size_t begin = nt * p / threads, end = nt * (p + 1) / threads;
      Eigen::MatrixXd Ke;
      Eigen::VectorXd Fe;
      parts[p].reserve((end - begin) * std::size_t(9 * m * m));
      for (std::size_t t = begin; t < end; ++t) {
        element_system(mesh, t, cs, rhs, rule, fixed ? &*fixed : nullptr, Ke, Fe);
        const auto& tri = mesh.triangles[t];
        for (int a = 0; a < 3; ++a)
          for (int i = 0; i < m; ++i) {
            const int row = tri[std::size_t(a)] * m + i;
            loads[p][row] += Fe[a * m + i];
            for (int b = 0; b < 3; ++b)
              for (int j = 0; j < m; ++j) parts[p].emplace_back(row, tri[std::size_t(b)] * m + j, Ke(a * m + i, b * m + j));
          }
      }
    } catch (...) {
      errors[p] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned p = 0; p < threads; ++p) pool.emplace_back(work, p);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Chunks are merged in a fixed order, so the result does not depend on
  // thread scheduling.
  std::vector<Triplet> all;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  all.reserve(total);
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  LinearSystem sys;
  sys.m = m;
  sys.vertices = mesh.vertices.size();
  const auto ndof = Eigen::Index(mesh.vertices.size()) * m;
  sys.matrix.resize(ndof, ndof);
  sys.matrix.setFromTriplets(all.begin(), all.end());
  sys.load = Eigen::VectorXd::Zero(ndof);
  for (const auto& l : loads) sys.load += l;
  return sys;
}

/// Prescribed values on a subset of degrees of freedom.
struct BoundaryAssignment {
  std::vector<char> constrained;  // per dof
  Eigen::VectorXd values;         // per dof, meaningful where constrained
};

using VertexRule = std::function<std::optional<Eigen::VectorXd>(std::size_t vertex, const Point2& x, VertexTag tag)>;

/// Applies `rule` to every non-interior vertex; nullopt leaves the vertex free.
inline BoundaryAssignment assign_boundary(const Mesh& mesh, int m, const VertexRule& rule) {
  BoundaryAssignment bc;
  bc.constrained.assign(mesh.vertices.size() * std::size_t(m), 0);
  bc.values = Eigen::VectorXd::Zero(Eigen::Index(mesh.vertices.size()) * m);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.tags[v] == VertexTag::interior) continue;
    const auto val = rule(v, mesh.vertices[v], mesh.tags[v]);
    if (!val) continue;
    if (val->size() != m) throw ConfigError("boundary rule returned the wrong number of components");
    for (int i = 0; i < m; ++i) {
      bc.constrained[v * std::size_t(m) + std::size_t(i)] = 1;
      bc.values[Eigen::Index(v) * m + i] = (*val)[i];
    }
  }
  return bc;
}

inline constexpr double solver_tolerance = 1e-10;

/// Dirichlet elimination with one sparse LU factorization that is reused
/// for every right-hand side sharing the constrained set.
class DirichletSolver {
 public:
  DirichletSolver(const LinearSystem& sys, const std::vector<char>& constrained) : sys_(&sys) {
    const auto ndof = sys.matrix.rows();
    if (Eigen::Index(constrained.size()) != ndof) throw ConfigError("constraint mask size mismatch");
    constrained_ = constrained;
    free_index_.assign(std::size_t(ndof), -1);
    for (Eigen::Index k = 0; k < ndof; ++k)
      if (!constrained[std::size_t(k)]) {
        free_index_[std::size_t(k)] = Eigen::Index(free_dofs_.size());
        free_dofs_.push_back(k);
      }
    const auto nf = Eigen::Index(free_dofs_.size());
    std::vector<Eigen::Triplet<double>> ff, fc;
    for (Eigen::Index col = 0; col < sys.matrix.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(sys.matrix, col); it; ++it) {
        const auto r = free_index_[std::size_t(it.row())];
        if (r < 0) continue;
        const auto c = free_index_[std::size_t(it.col())];
        if (c >= 0) ff.emplace_back(r, c, it.value());
        else fc.emplace_back(r, it.col(), it.value());
      }
    kff_.resize(nf, nf);
    kff_.setFromTriplets(ff.begin(), ff.end());
    kff_.makeCompressed();
    kfc_.resize(nf, ndof);
    kfc_.setFromTriplets(fc.begin(), fc.end());
    if (nf > 0) {
      lu_.compute(kff_);
      if (lu_.info() != Eigen::Success) throw SolveFailure("sparse LU factorization failed", 1.0);
    }
  }

  /// Full dof vector: prescribed values where constrained, solved elsewhere.
  Eigen::VectorXd solve(const Eigen::VectorXd& values, const Eigen::VectorXd& load) const {
    const auto ndof = sys_->matrix.rows();
    Eigen::VectorXd fixed = Eigen::VectorXd::Zero(ndof);
    for (Eigen::Index k = 0; k < ndof; ++k)
      if (constrained_[std::size_t(k)]) fixed[k] = values[k];
    Eigen::VectorXd out = fixed;
    if (free_dofs_.empty()) return out;
    Eigen::VectorXd rhs(Eigen::Index(free_dofs_.size()));
    for (std::size_t r = 0; r < free_dofs_.size(); ++r) rhs[Eigen::Index(r)] = load[free_dofs_[r]];
    rhs -= kfc_ * fixed;
    Eigen::VectorXd uf = lu_.solve(rhs);
    // One step of iterative refinement keeps the residual well below tolerance
    // on strongly anisotropic meshes.
    Eigen::VectorXd res = rhs - kff_ * uf;
    uf += lu_.solve(res);
    res = rhs - kff_ * uf;
    const double scale = std::max(rhs.norm(), (kff_ * uf).norm());
    const double rel = scale > 0.0 ? res.norm() / scale : res.norm();
    if (!(rel <= solver_tolerance) || !uf.allFinite()) throw SolveFailure("linear solve did not converge", rel);
    last_residual_ = rel;
    for (std::size_t r = 0; r < free_dofs_.size(); ++r) out[free_dofs_[r]] = uf[Eigen::Index(r)];
    return out;
  }

  double last_residual() const { return last_residual_; }

 private:
  const LinearSystem* sys_;
  std::vector<char> constrained_;
  std::vector<Eigen::Index> free_index_;
  std::vector<Eigen::Index> free_dofs_;
  SparseMatrix kff_, kfc_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  mutable double last_residual_ = 0.0;
};

enum class SolutionKind { full, component, difference };

inline const char* kind_name(SolutionKind k) {
  switch (k) {
    case SolutionKind::full: return "u";
    case SolutionKind::component: return "v";
    case SolutionKind::difference: return "w";
  }
  return "u";
}

struct DiscreteSolution {
  std::shared_ptr<const Mesh> mesh;
  int m = 1;
  Eigen::MatrixXd nodal;      // vertices x m
  Eigen::MatrixXd gradients;  // triangles x (2m); row t = (d1 u_0, d2 u_0, d1 u_1, ...)
  SolutionKind kind = SolutionKind::full;
  int component = -1;         // l for v_l and w_l
  double residual = 0.0;

  Eigen::MatrixXd gradient(std::size_t t) const {
    Eigen::MatrixXd G(m, 2);
    for (int i = 0; i < m; ++i) {
      G(i, 0) = gradients(Eigen::Index(t), 2 * i);
      G(i, 1) = gradients(Eigen::Index(t), 2 * i + 1);
    }
    return G;
  }

  Eigen::VectorXd value_in(std::size_t t, const Eigen::Vector3d& bary) const {
    const auto& tri = mesh->triangles[t];
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    for (int a = 0; a < 3; ++a) v += bary[a] * nodal.row(tri[std::size_t(a)]).transpose();
    return v;
  }
};

/// Builds a solution from nodal values, computing the per-triangle gradients.
inline DiscreteSolution make_solution(std::shared_ptr<const Mesh> mesh, Eigen::MatrixXd nodal, SolutionKind kind,
                                      int component = -1) {
  DiscreteSolution s;
  s.m = int(nodal.cols());
  s.kind = kind;
  s.component = component;
  s.gradients.resize(Eigen::Index(mesh->triangles.size()), 2 * s.m);
  for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
    const auto el = detail::p1_element(*mesh, t);
    const auto& tri = mesh->triangles[t];
    for (int i = 0; i < s.m; ++i) {
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < 3; ++a) {
        gx += nodal(tri[std::size_t(a)], i) * el.grad(a, 0);
        gy += nodal(tri[std::size_t(a)], i) * el.grad(a, 1);
      }
      s.gradients(Eigen::Index(t), 2 * i) = gx;
      s.gradients(Eigen::Index(t), 2 * i + 1) = gy;
    }
  }
  s.nodal = std::move(nodal);
  s.mesh = std::move(mesh);
  return s;
}

inline Eigen::MatrixXd dofs_to_nodal(const Eigen::VectorXd& dofs, std::size_t vertices, int m) {
  Eigen::MatrixXd n(Eigen::Index(vertices), m);
  for (std::size_t v = 0; v < vertices; ++v)
    for (int i = 0; i < m; ++i) n(Eigen::Index(v), i) = dofs[Eigen::Index(v) * m + i];
  return n;
}

inline DiscreteSolution solve_dirichlet(std::shared_ptr<const Mesh> mesh, const LinearSystem& sys,
                                        const BoundaryAssignment& bc) {
  DirichletSolver solver(sys, bc.constrained);
  const Eigen::VectorXd x = solver.solve(bc.values, sys.load);
  auto sol = make_solution(std::move(mesh), dofs_to_nodal(x, sys.vertices, sys.m), SolutionKind::full);
  sol.residual = solver.last_residual();
  return sol;
}

/// Closure on the lateral sides |x'| = xrange.
enum class LateralClosure {
  auxiliary,  // Dirichlet data from the auxiliary extension utilde
  natural     // no constraint (traction-free in the weak form)
};

/// Boundary rule for the data (phi, psi) restricted to `component` (all when < 0).
inline VertexRule gap_boundary_rule(const GapGeometry<2>& g, const BoundaryData<2>& data, int component,
                                    LateralClosure lateral) {
  const int m = data.m;
  return [&g, &data, component, lateral, m](std::size_t, const Point2& x,
                                            VertexTag tag) -> std::optional<Eigen::VectorXd> {
    const Eigen::Matrix<double, 1, 1> xp(x.x());
    Eigen::VectorXd v;
    if (tag == VertexTag::top) {
      v = data.phi(xp);
    } else if (tag == VertexTag::bottom) {
      v = data.psi(xp);
    } else {
      if (lateral == LateralClosure::natural) return std::nullopt;
      const double ub = bar_u(g, x);
      v = data.phi(xp) * ub + data.psi(xp) * (1.0 - ub);
    }
    if (component >= 0) {
      Eigen::VectorXd only = Eigen::VectorXd::Zero(m);
      only[component] = v[component];
      return only;
    }
    return v;
  };
}

/// One factorization, many boundary data: the full problem and the component
/// problems share the matrix and the constrained set.
class GapProblem {
 public:
  GapProblem(std::shared_ptr<const Mesh> mesh, const CoefficientSet& cs, BoundaryData<2> data,
             LateralClosure lateral = LateralClosure::auxiliary, const AssemblyOptions& opt = {})
      : mesh_(std::move(mesh)), data_(std::move(data)), lateral_(lateral) {
    if (!mesh_->geometry) throw MeshError("gap problems need a generated mesh");
    if (data_.m != cs.m) throw ConfigError("boundary data and coefficients disagree on m");
    sys_ = assemble(*mesh_, cs, {}, opt);
    const auto bc = assign_boundary(*mesh_, cs.m, gap_boundary_rule(*mesh_->geometry, data_, -1, lateral_));
    solver_ = std::make_unique<DirichletSolver>(sys_, bc.constrained);
  }

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  const BoundaryData<2>& data() const { return data_; }
  const LinearSystem& system() const { return sys_; }

  DiscreteSolution solve_full() const { return run(-1); }

  /// v_l: data (phi_l e_l, psi_l e_l).
  DiscreteSolution solve_component(int l) const {
    if (l < 0 || l >= data_.m) throw DomainError("component index out of range");
    return run(l);
  }

 private:
  DiscreteSolution run(int component) const {
    const auto bc = assign_boundary(*mesh_, data_.m, gap_boundary_rule(*mesh_->geometry, data_, component, lateral_));
    const Eigen::VectorXd x = solver_->solve(bc.values, sys_.load);
    auto sol = make_solution(mesh_, dofs_to_nodal(x, sys_.vertices, sys_.m),
                             component < 0 ? SolutionKind::full : SolutionKind::component, component);
    sol.residual = solver_->last_residual();
    return sol;
  }

  std::shared_ptr<const Mesh> mesh_;
  BoundaryData<2> data_;
  LateralClosure lateral_;
  LinearSystem sys_;
  std::unique_ptr<DirichletSolver> solver_;
};

inline DiscreteSolution solve_component(std::shared_ptr<const Mesh> mesh, const CoefficientSet& cs,
                                        const BoundaryData<2>& data, int l,
                                        LateralClosure lateral = LateralClosure::auxiliary) {
  return GapProblem(std::move(mesh), cs, data, lateral).solve_component(l);
}

/// Nodal interpolant of a field given pointwise.
inline Eigen::MatrixXd interpolate(const Mesh& mesh, int m, const std::function<Eigen::VectorXd(const Point2&)>& f) {
  Eigen::MatrixXd n(Eigen::Index(mesh.vertices.size()), m);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) n.row(Eigen::Index(v)) = f(mesh.vertices[v]).transpose();
  return n;
}

/// w_l = v_l - I_h utilde_l (nodal difference).
inline DiscreteSolution difference_w(const DiscreteSolution& v, const AuxiliaryField<2>& field) {
  if (v.component != field.component() || v.m != field.m()) throw MeshError("component or size mismatch");
  if (!v.mesh->geometry || v.mesh->geometry->epsilon() != field.geometry().epsilon() ||
      v.mesh->geometry->gamma() != field.geometry().gamma())
    throw MeshError("solution mesh and auxiliary field describe different gaps");
  const Eigen::MatrixXd ut = interpolate(*v.mesh, v.m, [&](const Point2& x) { return field.value(x); });
  return make_solution(v.mesh, v.nodal - ut, SolutionKind::difference, v.component);
}

inline Eigen::MatrixXd gradient_at(const DiscreteSolution& sol, const Point2& x) {
  const int t = sol.mesh->locate(x);
  if (t < 0) throw DomainError(fmt::format("point ({}, {}) lies outside the mesh", x.x(), x.y()));
  return sol.gradient(std::size_t(t));
}

/// Sum of area * |grad|^2 over triangles whose centroid satisfies `inside`.
template <class Pred>
double energy_where(const DiscreteSolution& sol, Pred inside) {
  double e = 0.0;
  for (std::size_t t = 0; t < sol.mesh->triangles.size(); ++t) {
    if (!inside(sol.mesh->centroid(t))) continue;
    e += sol.mesh->signed_area(t) * sol.gradients.row(Eigen::Index(t)).squaredNorm();
  }
  return e;
}

inline double energy_on(const DiscreteSolution& sol, const LocalRegion<2>& region) {
  return energy_where(sol, [&](const Point2& c) { return region.contains(c); });
}

/// L2 norm by the centroid rule.
inline double l2_norm(const DiscreteSolution& sol) {
  double s = 0.0;
  const Eigen::Vector3d third = Eigen::Vector3d::Constant(1.0 / 3.0);
  for (std::size_t t = 0; t < sol.mesh->triangles.size(); ++t)
    s += sol.mesh->signed_area(t) * sol.value_in(t, third).squaredNorm();
  return std::sqrt(s);
}

/// Region average of A^{ab}_{ij} d_b utilde_l^{(j)} (an m x 2 matrix), by the
/// centroid rule over triangles whose centroid lies in the region.
inline Eigen::MatrixXd mean_flux(const Mesh& mesh, const AuxiliaryField<2>& field, const CoefficientSet& cs,
                                 const LocalRegion<2>& region) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(cs.m, 2);
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Point2 c = mesh.centroid(t);
    if (!region.contains(c)) continue;
    const double a = mesh.signed_area(t);
    const CoefficientValues v = cs.evaluate(Eigen::VectorXd(c));
    const Eigen::MatrixXd G = field.gradient(c);
    for (int i = 0; i < cs.m; ++i)
      for (int al = 0; al < 2; ++al) {
        double s = 0.0;
        for (int be = 0; be < 2; ++be)
          for (int j = 0; j < cs.m; ++j) s += v.a(al, be, i, j) * G(j, be);
        M(i, al) += a * s;
      }
    area += a;
  }
  if (area == 0.0) throw DomainError("region contains no triangle centroids");
  return M / area;
}

struct ErrorNorms {
  double l2 = 0.0;
  double h1 = 0.0;  // seminorm
};

/// L2 and H1-seminorm errors against an exact field, by a 7-point rule.
inline ErrorNorms error_norms(const DiscreteSolution& sol, const std::function<Eigen::VectorXd(const Point2&)>& u,
                              const std::function<Eigen::MatrixXd(const Point2&)>& grad) {
  const auto rule = TriangleRule::with_points(7);
  ErrorNorms e;
  for (std::size_t t = 0; t < sol.mesh->triangles.size(); ++t) {
    const double area = sol.mesh->signed_area(t);
    const Eigen::MatrixXd G = sol.gradient(t);
    for (const auto& q : rule.points()) {
      const Point2 x = detail::map_point(*sol.mesh, t, q.xi, q.eta);
      const Eigen::Vector3d bary(1.0 - q.xi - q.eta, q.xi, q.eta);
      e.l2 += q.weight * area * (sol.value_in(t, bary) - u(x)).squaredNorm();
      e.h1 += q.weight * area * (G - grad(x)).squaredNorm();
    }
  }
  e.l2 = std::sqrt(e.l2);
  e.h1 = std::sqrt(e.h1);
  return e;
}

/// "vertices N m M" then one line "x y u_0 ... u_{m-1}" per vertex.
inline void write_solution(std::ostream& os, const DiscreteSolution& sol) {
  os << fmt::format("vertices {} m {}\n", sol.mesh->vertices.size(), sol.m);
  for (std::size_t v = 0; v < sol.mesh->vertices.size(); ++v) {
    os << fmt::format("{:.17g} {:.17g}", sol.mesh->vertices[v].x(), sol.mesh->vertices[v].y());
    for (int i = 0; i < sol.m; ++i) os << fmt::format(" {:.17g}", sol.nodal(Eigen::Index(v), i));
    os << '\n';
  }
}

/// CSV rows "x,y,comp,dudx,dudy" for each probe and component.
inline void write_gradient_probes(std::ostream& os, const DiscreteSolution& sol, const std::vector<Point2>& probes) {
  os << "x,y,comp,dudx,dudy\n";
  for (const auto& p : probes) {
    const Eigen::MatrixXd G = gradient_at(sol, p);
    for (int i = 0; i < sol.m; ++i)
      os << fmt::format("{:.17g},{:.17g},{},{:.17g},{:.17g}\n", p.x(), p.y(), i, G(i, 0), G(i, 1));
  }
}

}  // namespace thingap
