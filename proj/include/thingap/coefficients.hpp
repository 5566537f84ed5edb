#pragma once

// Coefficient fields of the general system
//
//   d_a( A^{ab}_{ij} d_b u_j + B^a_{ij} u_j ) + C^b_{ij} d_b u_j + D_{ij} u_j = 0,
//
// stored as rules x -> flat arrays.  Index layout (0-based):
//   A: ((a*n + b)*m + i)*m + j    B: (a*m + i)*m + j
//   C: (b*m + i)*m + j            D: i*m + j

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geometry.hpp"
#include "sampling.hpp"

namespace thingap {

/// Coefficients evaluated at one point.
struct CoefficientValues {
  int m = 1;
  int n = 2;
  std::vector<double> A, B, C, D;

  CoefficientValues() = default;
  CoefficientValues(int m_, int n_)
      : m(m_), n(n_), A(std::size_t(n_ * n_ * m_ * m_), 0.0), B(std::size_t(n_ * m_ * m_), 0.0),
        C(std::size_t(n_ * m_ * m_), 0.0), D(std::size_t(m_ * m_), 0.0) {}

  double& a(int al, int be, int i, int j) { return A[std::size_t(((al * n + be) * m + i) * m + j)]; }
  double a(int al, int be, int i, int j) const { return A[std::size_t(((al * n + be) * m + i) * m + j)]; }
  double& b(int al, int i, int j) { return B[std::size_t((al * m + i) * m + j)]; }
  double b(int al, int i, int j) const { return B[std::size_t((al * m + i) * m + j)]; }
  double& c(int be, int i, int j) { return C[std::size_t((be * m + i) * m + j)]; }
  double c(int be, int i, int j) const { return C[std::size_t((be * m + i) * m + j)]; }
  double& d(int i, int j) { return D[std::size_t(i * m + j)]; }
  double d(int i, int j) const { return D[std::size_t(i * m + j)]; }
};

class CoefficientSet {
 public:
  /// Writes the field's flat array at x; `out` is pre-sized and zeroed.
  using Rule = std::function<void(const Eigen::VectorXd& x, std::vector<double>& out)>;

  int m = 1;
  int n = 2;
  Rule A, B, Cc, D;  // empty rule = identically zero
  double lambda = 0.0;
  double Lambda = 0.0;
  double kappa3 = 0.0;
  double gamma = 0.5;
  std::string kind = "custom";
  bool constant = false;  // rules ignore x

  CoefficientValues evaluate(const Eigen::VectorXd& x) const {
    CoefficientValues v(m, n);
    if (A) A(x, v.A);
    if (B) B(x, v.B);
    if (Cc) Cc(x, v.C);
    if (D) D(x, v.D);
    return v;
  }

  bool has_lower_order() const { return bool(B) || bool(Cc) || bool(D); }

  /// Same set with every field multiplied by `factor`.
  CoefficientSet scaled(double factor) const {
    CoefficientSet s = *this;
    auto wrap = [factor](const Rule& r) -> Rule {
      if (!r) return r;
      return [r, factor](const Eigen::VectorXd& x, std::vector<double>& out) {
        r(x, out);
        for (double& v : out) v *= factor;
      };
    };
    s.A = wrap(A);
    s.B = wrap(B);
    s.Cc = wrap(Cc);
    s.D = wrap(D);
    s.lambda *= factor;
    s.Lambda *= std::abs(factor);
    s.kappa3 *= std::abs(factor);
    return s;
  }
};

struct LameParameters {
  double lambda1 = 1.0;
  double mu1 = 1.0;

  void validate() const {
    if (!(mu1 > 0.0) || !(lambda1 + mu1 > 0.0)) {
      throw EllipticityViolation("Lame parameters need mu1 > 0 and lambda1 + mu1 > 0");
    }
  }
};

/// C_ijkl = lambda1 d_ij d_kl + mu1 (d_ik d_jl + d_il d_jk).
struct ElasticTensor {
  int n = 2;
  std::vector<double> data;

  double operator()(int i, int j, int k, int l) const {
    return data[std::size_t(((i * n + j) * n + k) * n + l)];
  }
};

inline ElasticTensor lame_tensor(const LameParameters& p, int n) {
  p.validate();
  if (n < 2) throw DomainError("dimension must be at least 2");
  ElasticTensor t{n, std::vector<double>(std::size_t(n * n * n * n), 0.0)};
  auto kd = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          t.data[std::size_t(((i * n + j) * n + k) * n + l)] =
              p.lambda1 * kd(i, j) * kd(k, l) + p.mu1 * (kd(i, k) * kd(j, l) + kd(i, l) * kd(j, k));
  return t;
}

/// Lame system as a general system: A^{ab}_{ij} = C_{i a j b}, B = C = D = 0.
inline CoefficientSet lame_as_general(const LameParameters& p, int n) {
  const ElasticTensor t = lame_tensor(p, n);
  std::vector<double> flat(std::size_t(n * n * n * n));
  double sup = 0.0;
  for (int al = 0; al < n; ++al)
    for (int be = 0; be < n; ++be)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double v = t(i, al, j, be);
          flat[std::size_t(((al * n + be) * n + i) * n + j)] = v;
          sup = std::max(sup, std::abs(v));
        }
  CoefficientSet cs;
  cs.m = n;
  cs.n = n;
  cs.A = [flat](const Eigen::VectorXd&, std::vector<double>& out) { out = flat; };
  cs.lambda = p.mu1;
  cs.Lambda = sup;
  cs.kappa3 = sup;
  cs.kind = "lame";
  cs.constant = true;
  return cs;
}

/// A^{ab}_{ij} = d_ab d_ij.
inline CoefficientSet identity_system(int m, int n) {
  CoefficientSet cs;
  cs.m = m;
  cs.n = n;
  cs.A = [m, n](const Eigen::VectorXd&, std::vector<double>& out) {
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < m; ++i) out[std::size_t(((a * n + a) * m + i) * m + i)] = 1.0;
  };
  cs.lambda = 1.0;
  cs.Lambda = 1.0;
  cs.kappa3 = 1.0;
  cs.kind = "identity";
  cs.constant = true;
  return cs;
}

/// Hoelder-continuous test field A^{ab}_{ij}(x) = d_ab d_ij (1 + |x|^gamma / 2).
/// A made-up example for exercising variable coefficients; B = C = D = 0.
inline CoefficientSet holder_demo(int m, int n, double gamma) {
  CoefficientSet cs;
  cs.m = m;
  cs.n = n;
  cs.gamma = gamma;
  cs.A = [m, n, gamma](const Eigen::VectorXd& x, std::vector<double>& out) {
    const double s = 1.0 + 0.5 * std::pow(x.norm(), gamma);
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < m; ++i) out[std::size_t(((a * n + a) * m + i) * m + i)] = s;
  };
  cs.lambda = 1.0;
  // |x| <= 2 on Omega_1 whenever eps <= 1.
  cs.Lambda = 1.0 + 0.5 * std::pow(2.0, gamma);
  cs.kappa3 = cs.Lambda + 0.5;
  cs.kind = "holder_demo";
  return cs;
}

/// Evaluation points for sampled checks: interior samples of Omega_1, or the
/// origin alone for constant coefficient sets.
template <int N>
std::vector<Eigen::VectorXd> coefficient_sample_points(const CoefficientSet& cs, const GapGeometry<N>& g,
                                                       std::size_t count) {
  std::vector<Eigen::VectorXd> pts;
  if (cs.constant) {
    pts.push_back(Eigen::VectorXd::Zero(N));
    return pts;
  }
  for (const auto& p : interior_samples<N>(g, count, 1.0)) pts.emplace_back(p);
  return pts;
}

struct EllipticityReport {
  double measured = std::numeric_limits<double>::infinity();
  Eigen::VectorXd argmin_x, argmin_xi, argmin_eta;
  std::size_t near_degenerate = 0;  // samples within 1e-9 (relative) of the minimum
  std::size_t samples = 0;
  bool meets_claim = false;         // measured >= lambda - tol
};

namespace detail {

/// Unit directions in R^n: coordinate axes, then quasi-random or equiangular ones.
inline std::vector<Eigen::VectorXd> unit_directions(int n, std::size_t count) {
  std::vector<Eigen::VectorXd> dirs;
  for (int a = 0; a < n; ++a) dirs.push_back(Eigen::VectorXd::Unit(n, a));
  if (n == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double t = std::numbers::pi * (double(k) + 0.5) / double(count);
      Eigen::VectorXd v(2);
      v << std::cos(t), std::sin(t);
      dirs.push_back(v);
    }
    return dirs;
  }
  Rng rng(0x9e3779b97f4a7c15ULL);
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXd v(n);
    for (int a = 0; a < n; ++a) v[a] = rng.normal();
    dirs.push_back(v.normalized());
  }
  return dirs;
}

}  // namespace detail

/// Minimum of sum A^{ab}_{ij} xi_a xi_b eta_i eta_j over |xi| = |eta| = 1.
/// For each sampled (x, xi) the minimum over eta is the smallest eigenvalue of
/// the symmetrized m x m matrix, so only x and xi are sampled.
inline EllipticityReport check_ellipticity(const CoefficientSet& cs, const std::vector<Eigen::VectorXd>& points,
                                           std::size_t direction_samples, double tol = 1e-9) {
  if (direction_samples < 1 || points.empty()) throw ConfigError("ellipticity check needs at least one sample");
  EllipticityReport r;
  const auto dirs = detail::unit_directions(cs.n, direction_samples);
  std::vector<double> values;
  for (const auto& x : points) {
    const CoefficientValues v = cs.evaluate(x);
    for (const auto& xi : dirs) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(cs.m, cs.m);
      for (int a = 0; a < cs.n; ++a)
        for (int b = 0; b < cs.n; ++b)
          for (int i = 0; i < cs.m; ++i)
            for (int j = 0; j < cs.m; ++j) M(i, j) += v.a(a, b, i, j) * xi[a] * xi[b];
      const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
      const double q = es.eigenvalues()[0];
      values.push_back(q);
      ++r.samples;
      if (q < r.measured) {
        r.measured = q;
        r.argmin_x = x;
        r.argmin_xi = xi;
        r.argmin_eta = es.eigenvectors().col(0);
      }
    }
  }
  const double band = 1e-9 * std::max(1.0, std::abs(r.measured));
  r.near_degenerate = std::size_t(std::count_if(values.begin(), values.end(),
                                                [&](double q) { return q <= r.measured + band; }));
  if (!(r.measured > 0.0)) {
    throw EllipticityViolation("strong ellipticity fails: sampled minimum " + std::to_string(r.measured));
  }
  r.meets_claim = r.measured >= cs.lambda - tol;
  return r;
}

template <int N>
EllipticityReport check_ellipticity(const CoefficientSet& cs, const GapGeometry<N>& g, std::size_t samples = 10000) {
  if (samples < 1) throw ConfigError("ellipticity check needs at least one sample");
  if (cs.constant) return check_ellipticity(cs, coefficient_sample_points(cs, g, 1), samples);
  // Split the budget between points and directions.
  const auto per = std::max<std::size_t>(1, std::size_t(std::sqrt(double(samples))));
  return check_ellipticity(cs, coefficient_sample_points(cs, g, per), per);
}

/// Max of |f(x) - f(y)| / |x - y|^gamma over the given pairs.
inline double holder_quotient(const std::function<double(const Eigen::VectorXd&)>& f,
                              const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs, double gamma) {
  double best = 0.0;
  for (const auto& [x, y] : pairs) {
    const double d = (x - y).norm();
    if (d == 0.0) continue;
    best = std::max(best, std::abs(f(x) - f(y)) / std::pow(d, gamma));
  }
  return best;
}

/// Pairs in Omega_1: half drawn uniformly, half at short range.
template <int N>
std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> domain_pairs(const GapGeometry<N>& g, std::size_t count,
                                                                      std::uint64_t seed) {
  Rng rng(seed);
  const LocalRegion<N> whole(g, PointN<N>::Zero(), 1.0 + 1e-9);
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
  pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const PointN<N> x = whole.sample(rng);
    PointN<N> y;
    if (k % 2 == 0) {
      y = whole.sample(rng);
    } else {
      const double r = std::pow(10.0, rng.uniform(-4.0, -1.0));
      const LocalRegion<N> near(g, x, r);
      y = near.sample(rng);
    }
    pairs.emplace_back(Eigen::VectorXd(x), Eigen::VectorXd(y));
  }
  return pairs;
}

struct HolderReport {
  // sup-norm plus sampled Hoelder quotient, each maximized over entries.
  double norm_A = 0.0, norm_B = 0.0, norm_C = 0.0, norm_D = 0.0;
  double kappa3 = 0.0;  // sum of the four field norms
  std::size_t pairs = 0;
};

template <int N>
HolderReport check_holder(const CoefficientSet& cs, const GapGeometry<N>& g, std::size_t pair_samples = 10000,
                          std::uint64_t seed = 1) {
  if (pair_samples < 1) throw ConfigError("Hoelder check needs at least one pair");
  HolderReport r;
  r.pairs = pair_samples;
  const auto pairs = domain_pairs<N>(g, pair_samples, seed);
  auto field_norm = [&](const std::vector<double> CoefficientValues::*member) {
    double sup = 0.0;
    double quot = 0.0;
    for (const auto& [x, y] : pairs) {
      const CoefficientValues vx = cs.evaluate(x);
      const CoefficientValues vy = cs.evaluate(y);
      const auto& fx = vx.*member;
      const auto& fy = vy.*member;
      const double d = std::pow((x - y).norm(), cs.gamma);
      for (std::size_t e = 0; e < fx.size(); ++e) {
        sup = std::max({sup, std::abs(fx[e]), std::abs(fy[e])});
        if (d > 0.0) quot = std::max(quot, std::abs(fx[e] - fy[e]) / d);
      }
    }
    return sup + quot;
  };
  r.norm_A = cs.A ? field_norm(&CoefficientValues::A) : 0.0;
  r.norm_B = cs.B ? field_norm(&CoefficientValues::B) : 0.0;
  r.norm_C = cs.Cc ? field_norm(&CoefficientValues::C) : 0.0;
  r.norm_D = cs.D ? field_norm(&CoefficientValues::D) : 0.0;
  r.kappa3 = r.norm_A + r.norm_B + r.norm_C + r.norm_D;
  return r;
}

}  // namespace thingap
