#pragma once

// Reference solutions that share no assembly or solve code with the finite
// element path: closed forms, a finite-difference solver on flat gaps, and an
// exhaustive grid search for Hoelder seminorms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "auxiliary.hpp"
#include "coefficients.hpp"
#include "errors.hpp"
#include "geometry.hpp"

namespace thingap {

/// u = (x_n + eps/2) / eps on the flat gap with phi = 1, psi = 0.
struct AffineReference {
  double epsilon;

  double value(const Eigen::Vector2d& x) const { return (x.y() + 0.5 * epsilon) / epsilon; }
  Eigen::Vector2d gradient(const Eigen::Vector2d&) const { return {0.0, 1.0 / epsilon}; }
};

inline AffineReference exact_affine_case(const GapGeometry<2>& g) {
  if (!g.is_flat()) throw UnsupportedError("the affine reference needs flat profiles");
  return {g.epsilon()};
}

/// Grid solution on [-xrange, xrange] x [-eps/2, eps/2].
struct FiniteDifferenceSolution {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  int nx = 0, ny = 0, m = 1;
  std::vector<Eigen::VectorXd> values;  // (nx + 1) * (ny + 1), index i * (ny + 1) + j
  int iterations = 0;
  double residual = 0.0;

  double hx() const { return (x1 - x0) / nx; }
  double hy() const { return (y1 - y0) / ny; }
  const Eigen::VectorXd& at(int i, int j) const { return values[std::size_t(i * (ny + 1) + j)]; }

  /// Bilinear interpolation.
  Eigen::VectorXd operator()(const Eigen::Vector2d& x) const {
    const double fx = std::clamp((x.x() - x0) / hx(), 0.0, double(nx));
    const double fy = std::clamp((x.y() - y0) / hy(), 0.0, double(ny));
    const int i = std::min(int(fx), nx - 1), j = std::min(int(fy), ny - 1);
    const double s = fx - i, t = fy - j;
    return (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j) + (1 - s) * t * at(i, j + 1) +
           s * t * at(i + 1, j + 1);
  }
};

/// Second-order finite differences for the constant-coefficient system
///   A^{ab}_{ij} d_a d_b u_j + (B^a_{ij} + C^a_{ij}) d_a u_j + D_{ij} u_j = 0
/// with Dirichlet data `bc` on the whole rectangle boundary.  Mixed
/// derivatives use the four-point cross stencil.
inline FiniteDifferenceSolution finite_difference_reference(
    const GapGeometry<2>& g, const CoefficientSet& cs, const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& bc,
    double xrange, int nx, int ny) {
  if (!g.is_flat()) throw UnsupportedError("finite-difference reference needs a rectangular domain");
  if (!cs.constant) throw UnsupportedError("finite-difference reference needs constant coefficients");
  if (cs.n != 2) throw UnsupportedError("finite-difference reference is two-dimensional");
  if (nx < 2 || ny < 2) throw ConfigError("finite-difference grid needs at least 2 cells per side");
  FiniteDifferenceSolution s;
  s.x0 = -xrange;
  s.x1 = xrange;
  s.y0 = -0.5 * g.epsilon();
  s.y1 = 0.5 * g.epsilon();
  s.nx = nx;
  s.ny = ny;
  s.m = cs.m;
  const int m = cs.m;
  const double hx = s.hx(), hy = s.hy();
  const CoefficientValues v = cs.evaluate(Eigen::VectorXd::Zero(2));

  auto point = [&](int i, int j) { return Eigen::Vector2d(s.x0 + i * hx, s.y0 + j * hy); };
  auto interior = [&](int i, int j) { return i > 0 && i < nx && j > 0 && j < ny; };
  auto unknown = [&](int i, int j, int c) { return ((i - 1) * (ny - 1) + (j - 1)) * m + c; };

  // Stencil weights: w[(di+1)*3 + (dj+1)] for the derivative operators.
  struct Stencil {
    double w[9] = {};
  };
  auto op = [&](int al, int be) {
    Stencil st;
    auto at = [&](int di, int dj) -> double& { return st.w[(di + 1) * 3 + (dj + 1)]; };
    if (al == 0 && be == 0) {
      at(-1, 0) += 1 / (hx * hx), at(0, 0) -= 2 / (hx * hx), at(1, 0) += 1 / (hx * hx);
    } else if (al == 1 && be == 1) {
      at(0, -1) += 1 / (hy * hy), at(0, 0) -= 2 / (hy * hy), at(0, 1) += 1 / (hy * hy);
    } else {
      const double c = 1.0 / (4 * hx * hy);
      at(1, 1) += c, at(-1, -1) += c, at(1, -1) -= c, at(-1, 1) -= c;
    }
    return st;
  };
  auto first = [&](int al) {
    Stencil st;
    if (al == 0) st.w[2 * 3 + 1] = 1 / (2 * hx), st.w[0 * 3 + 1] = -1 / (2 * hx);
    else st.w[1 * 3 + 2] = 1 / (2 * hy), st.w[1 * 3 + 0] = -1 / (2 * hy);
    return st;
  };
  // Combined 3x3 block stencil per (i, j) component pair.
  std::vector<Stencil> block(std::size_t(m * m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Stencil& b = block[std::size_t(i * m + j)];
      for (int al = 0; al < 2; ++al) {
        for (int be = 0; be < 2; ++be) {
          const Stencil d2 = op(al, be);
          for (int k = 0; k < 9; ++k) b.w[k] += v.a(al, be, i, j) * d2.w[k];
        }
        const Stencil d1 = first(al);
        for (int k = 0; k < 9; ++k) b.w[k] += (v.b(al, i, j) + v.c(al, i, j)) * d1.w[k];
      }
      b.w[4] += v.d(i, j);
    }

  const int n = (nx - 1) * (ny - 1) * m;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int i = 1; i < nx; ++i)
    for (int j = 1; j < ny; ++j)
      for (int c = 0; c < m; ++c) {
        const int row = unknown(i, j, c);
        for (int c2 = 0; c2 < m; ++c2) {
          const Stencil& b = block[std::size_t(c * m + c2)];
          for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
              const double w = b.w[(di + 1) * 3 + (dj + 1)];
              if (w == 0.0) continue;
              if (interior(i + di, j + dj)) trip.emplace_back(row, unknown(i + di, j + dj, c2), w);
              else rhs[row] -= w * bc(point(i + di, j + dj))[c2];
            }
        }
      }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
  solver.preconditioner().setDroptol(1e-6);
  solver.preconditioner().setFillfactor(20);
  solver.setTolerance(1e-13);
  solver.setMaxIterations(20000);
  solver.compute(K);
  Eigen::VectorXd u = solver.solve(rhs);
  s.iterations = int(solver.iterations());
  s.residual = rhs.norm() > 0 ? (rhs - K * u).norm() / rhs.norm() : (K * u).norm();
  if (!(s.residual <= 1e-10)) throw SolveFailure("finite-difference reference did not converge", s.residual);

  s.values.resize(std::size_t((nx + 1) * (ny + 1)));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) {
      Eigen::VectorXd val(m);
      if (interior(i, j)) {
        for (int c = 0; c < m; ++c) val[c] = u[unknown(i, j, c)];
      } else {
        val = bc(point(i, j));
      }
      s.values[std::size_t(i * (ny + 1) + j)] = val;
    }
  return s;
}

/// Exhaustive max of |f(x) - f(y)| / |x - y|^gamma over an nx x ny grid on
/// the closure of the region (uniform in x' and in the relative height).
inline double brute_force_seminorm(const FieldRule& f, const LocalRegion<2>& region, double gamma, int nx = 100,
                                   int ny = 100) {
  if (std::size_t(nx) * std::size_t(ny) > 10000) throw ResourceError("brute-force grid exceeds 10^4 points");
  if (nx < 2 || ny < 2) throw ConfigError("brute-force grid needs at least 2 points per side");
  const auto& g = *region.geometry;
  const double z = region.center[0];
  const double a = std::max(-1.0, z - region.radius), b = std::min(1.0, z + region.radius);
  if (!(b > a)) throw DomainError("local region is empty");
  std::vector<Eigen::Vector2d> pts;
  std::vector<Eigen::VectorXd> vals;
  pts.reserve(std::size_t(nx * ny));
  for (int i = 0; i < nx; ++i) {
    const Eigen::Matrix<double, 1, 1> xp(a + (b - a) * i / (nx - 1));
    const double lo = g.lower(xp), hi = g.upper(xp);
    for (int j = 0; j < ny; ++j) {
      pts.emplace_back(xp[0], lo + (hi - lo) * j / (ny - 1));
      vals.push_back(f(pts.back()));
    }
  }
  double best = 0.0;
  for (std::size_t p = 0; p < pts.size(); ++p)
    for (std::size_t q = p + 1; q < pts.size(); ++q) {
      const double d = (pts[p] - pts[q]).norm();
      if (d == 0.0) continue;
      best = std::max(best, (vals[p] - vals[q]).norm() / std::pow(d, gamma));
    }
  return best;
}

}  // namespace thingap
