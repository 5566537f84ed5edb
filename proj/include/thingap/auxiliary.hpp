#pragma once

// Explicit auxiliary functions of the gap:
//
//   ubar(x)    = (x_n - h2(x') + eps/2) / delta(x'),
//   utilde_l   = (phi_l(x') ubar + psi_l(x') (1 - ubar)) e_l,
//
// where phi, psi are the boundary data read as functions of x' along the two
// graphs.  Component indices are 0-based in code.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "geometry.hpp"
#include "sampling.hpp"

namespace thingap {

/// Boundary data phi on Gamma^+ and psi on Gamma^-, parametrized by x'.
template <int N>
struct BoundaryData {
  using Tangent = TangentN<N>;
  using VectorRule = std::function<Eigen::VectorXd(const Tangent&)>;
  using JacobianRule = std::function<Eigen::MatrixXd(const Tangent&)>;  // m x (N-1)

  int m = 1;
  VectorRule phi, psi;
  JacobianRule dphi, dpsi;
  // Per-component C^{1,gamma} norms on B'_1 (sup|f| + sup|f'| + [f']_gamma).
  Eigen::VectorXd phi_norms, psi_norms;
  std::string kind = "custom";

  double phi_norm() const { return phi_norms.size() ? phi_norms.maxCoeff() : 0.0; }
  double psi_norm() const { return psi_norms.size() ? psi_norms.maxCoeff() : 0.0; }

  /// |phi_l(x') - psi_l(x')|, or the Euclidean norm over components when l < 0.
  double jump(const Tangent& xp, int l = -1) const {
    const Eigen::VectorXd d = phi(xp) - psi(xp);
    return l < 0 ? d.norm() : std::abs(d[l]);
  }

  static BoundaryData constant_jump(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double gamma = 0.5) {
    if (a.size() != b.size()) throw ConfigError("phi and psi must have the same number of components");
    const auto m = int(a.size());
    BoundaryData d;
    d.m = m;
    d.phi = [a](const Tangent&) { return a; };
    d.psi = [b](const Tangent&) { return b; };
    d.dphi = [m](const Tangent&) { return Eigen::MatrixXd::Zero(m, N - 1).eval(); };
    d.dpsi = d.dphi;
    d.kind = "constant_jump";
    d.measure_norms(gamma);
    return d;
  }

  /// phi(x') = a0 + a1 x'_1 + a2 |x'|^2 and likewise psi with (b0, b1, b2).
  static BoundaryData polynomial(const std::array<Eigen::VectorXd, 3>& a, const std::array<Eigen::VectorXd, 3>& b,
                                 double gamma = 0.5) {
    const auto m = int(a[0].size());
    for (const auto* arr : {&a, &b})
      for (const auto& v : *arr)
        if (v.size() != m) throw ConfigError("polynomial boundary data: component counts differ");
    auto value = [](const std::array<Eigen::VectorXd, 3>& c) {
      return [c](const Tangent& xp) -> Eigen::VectorXd { return c[0] + c[1] * xp[0] + c[2] * xp.squaredNorm(); };
    };
    auto jac = [m](const std::array<Eigen::VectorXd, 3>& c) {
      return [c, m](const Tangent& xp) -> Eigen::MatrixXd {
        Eigen::MatrixXd J = 2.0 * c[2] * xp.transpose();
        J.col(0) += c[1];
        (void)m;
        return J;
      };
    };
    BoundaryData d;
    d.m = m;
    d.phi = value(a);
    d.psi = value(b);
    d.dphi = jac(a);
    d.dpsi = jac(b);
    d.kind = "polynomial";
    d.measure_norms(gamma);
    return d;
  }

  /// Sampled C^{1,gamma} norms per component (a lower bound of the true norm).
  void measure_norms(double gamma, std::size_t samples = 2000) {
    phi_norms = sampled_norms(phi, dphi, gamma, samples);
    psi_norms = sampled_norms(psi, dpsi, gamma, samples);
  }

  /// Max relative error of the derivative rules against central differences.
  double derivative_error(std::size_t samples = 1000) const {
    double worst = 0.0;
    const double h = 1e-6;
    for (const auto& xp : tangential_samples<N>(samples, 1.0 - 2 * h)) {
      for (const auto& [f, df] : {std::pair{&phi, &dphi}, std::pair{&psi, &dpsi}}) {
        const Eigen::MatrixXd J = (*df)(xp);
        const double scale = std::max(J.norm(), 1.0);
        for (int a = 0; a < N - 1; ++a) {
          Tangent e = Tangent::Zero();
          e[a] = h;
          const Eigen::VectorXd fd = ((*f)(xp + e) - (*f)(xp - e)) / (2 * h);
          worst = std::max(worst, (fd - J.col(a)).norm() / scale);
        }
      }
    }
    return worst;
  }

 private:
  Eigen::VectorXd sampled_norms(const VectorRule& f, const JacobianRule& df, double gamma, std::size_t samples) const {
    const auto pts = tangential_samples<N>(samples, 1.0);
    Eigen::VectorXd sup_f = Eigen::VectorXd::Zero(m), sup_df = Eigen::VectorXd::Zero(m), semi = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::MatrixXd> J;
    J.reserve(pts.size());
    for (const auto& xp : pts) {
      sup_f = sup_f.cwiseMax(f(xp).cwiseAbs());
      J.push_back(df(xp));
      sup_df = sup_df.cwiseMax(J.back().rowwise().norm());
    }
    // Pairs: consecutive samples plus antipodal partners.
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Tangent opposite = -pts[k];
      const Eigen::MatrixXd Jo = df(opposite);
      const double d_opp = std::pow((pts[k] - opposite).norm(), gamma);
      if (d_opp > 0.0) semi = semi.cwiseMax((J[k] - Jo).rowwise().norm() / d_opp);
      const std::size_t l = (k + 1) % pts.size();
      const double d = std::pow((pts[k] - pts[l]).norm(), gamma);
      if (d > 0.0) semi = semi.cwiseMax((J[k] - J[l]).rowwise().norm() / d);
    }
    return sup_f + sup_df + semi;
  }
};

namespace detail {

template <int N>
void require_closure(const GapGeometry<N>& g, const PointN<N>& x) {
  const double tol = 1e-12 * std::max(1.0, std::abs(x[N - 1]));
  if (!g.contains_closure(1.0, x, tol)) throw DomainError("point lies outside the closure of Omega_1");
}

}  // namespace detail

template <int N>
double bar_u(const GapGeometry<N>& g, const PointN<N>& x) {
  detail::require_closure(g, x);
  const TangentN<N> xp = x.template head<N - 1>();
  return (x[N - 1] - g.h2(xp) + 0.5 * g.epsilon()) / g.delta(xp);
}

/// The three pieces of the tangential derivative of ubar:
///   Pi1 = -d h2 / delta,  Pi2 = -x_n d delta / delta^2,  Pi3 = (h2 - eps/2) d delta / delta^2.
template <int N>
struct PiTerms {
  TangentN<N> pi1, pi2, pi3;
  TangentN<N> sum() const { return pi1 + pi2 + pi3; }
};

template <int N>
PiTerms<N> pi_terms(const GapGeometry<N>& g, const PointN<N>& x) {
  detail::require_closure(g, x);
  const TangentN<N> xp = x.template head<N - 1>();
  const double d = g.delta(xp);
  const TangentN<N> dd = g.grad_delta(xp);
  PiTerms<N> p;
  p.pi1 = -g.bottom().gradient(xp) / d;
  p.pi2 = -x[N - 1] * dd / (d * d);
  p.pi3 = (g.h2(xp) - 0.5 * g.epsilon()) * dd / (d * d);
  return p;
}

template <int N>
PointN<N> grad_bar_u(const GapGeometry<N>& g, const PointN<N>& x) {
  PointN<N> grad;
  grad.template head<N - 1>() = pi_terms(g, x).sum();
  grad[N - 1] = 1.0 / g.delta(x.template head<N - 1>());
  return grad;
}

template <int N>
class AuxiliaryField {
 public:
  AuxiliaryField(const GapGeometry<N>& g, BoundaryData<N> data, int component)
      : geom_(&g), data_(std::move(data)), l_(component) {
    if (component < 0 || component >= data_.m) throw DomainError("component index out of range");
  }

  const GapGeometry<N>& geometry() const { return *geom_; }
  const BoundaryData<N>& data() const { return data_; }
  int component() const { return l_; }
  int m() const { return data_.m; }

  Eigen::VectorXd value(const PointN<N>& x) const {
    const TangentN<N> xp = x.template head<N - 1>();
    const double ub = bar_u(*geom_, x);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(data_.m);
    v[l_] = data_.phi(xp)[l_] * ub + data_.psi(xp)[l_] * (1.0 - ub);
    return v;
  }

  /// m x N Jacobian; only row l is nonzero.
  Eigen::MatrixXd gradient(const PointN<N>& x) const {
    const TangentN<N> xp = x.template head<N - 1>();
    const double ub = bar_u(*geom_, x);
    const PointN<N> gb = grad_bar_u(*geom_, x);
    const double Phi = data_.phi(xp)[l_];
    const double Psi = data_.psi(xp)[l_];
    const Eigen::RowVectorXd dPhi = data_.dphi(xp).row(l_);
    const Eigen::RowVectorXd dPsi = data_.dpsi(xp).row(l_);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(data_.m, N);
    for (int a = 0; a < N - 1; ++a) G(l_, a) = dPhi[a] * ub + dPsi[a] * (1.0 - ub) + (Phi - Psi) * gb[a];
    G(l_, N - 1) = (Phi - Psi) * gb[N - 1];
    return G;
  }

 private:
  const GapGeometry<N>* geom_;
  BoundaryData<N> data_;
  int l_;
};

template <int N>
Eigen::VectorXd tilde_u(const AuxiliaryField<N>& f, const PointN<N>& x) {
  return f.value(x);
}

template <int N>
Eigen::MatrixXd grad_tilde_u(const AuxiliaryField<N>& f, const PointN<N>& x) {
  return f.gradient(x);
}

/// Central-difference Jacobian of utilde_l with step `rel_step * delta(x')`.
template <int N>
Eigen::MatrixXd fd_grad_tilde_u(const AuxiliaryField<N>& f, const PointN<N>& x, double rel_step = 1e-7) {
  const double h = rel_step * f.geometry().delta(x.template head<N - 1>());
  Eigen::MatrixXd G(f.m(), N);
  for (int a = 0; a < N; ++a) {
    PointN<N> e = PointN<N>::Zero();
    e[a] = h;
    G.col(a) = (f.value(x + e) - f.value(x - e)) / (2 * h);
  }
  return G;
}

struct AuxiliaryIdentityReport {
  double normal_derivative_error = 0.0;  // max |d_n ubar - 1/delta| * delta
  double gradient_fd_error = 0.0;        // max relative |analytic - central difference|
  std::size_t samples = 0;
  bool pass(double fd_tol = 1e-6) const { return normal_derivative_error <= 1e-12 && gradient_fd_error <= fd_tol; }
};

/// Samples the closed-form derivatives of ubar and every utilde_l at
/// quasi-random interior points.
template <int N>
AuxiliaryIdentityReport check_auxiliary_identities(const GapGeometry<N>& g, const BoundaryData<N>& data,
                                                   std::size_t samples = 1000) {
  AuxiliaryIdentityReport r;
  r.samples = samples;
  std::vector<AuxiliaryField<N>> fields;
  for (int l = 0; l < data.m; ++l) fields.emplace_back(g, data, l);
  for (const auto& x : interior_samples<N>(g, samples, 1.0)) {
    const double d = g.delta(x.template head<N - 1>());
    r.normal_derivative_error = std::max(r.normal_derivative_error, std::abs(grad_bar_u(g, x)[N - 1] * d - 1.0));
    for (const auto& f : fields) {
      const Eigen::MatrixXd G = grad_tilde_u(f, x);
      const double diff = (fd_grad_tilde_u(f, x) - G).norm();
      if (diff > 0.0) r.gradient_fd_error = std::max(r.gradient_fd_error, diff / G.norm());
    }
  }
  return r;
}

using FieldRule = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Row-major flattening of grad utilde_l, so that vector norms of differences
/// are Frobenius norms.
template <int N>
FieldRule gradient_field(const AuxiliaryField<N>& f) {
  return [&f](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::MatrixXd G = f.gradient(PointN<N>(x));
    Eigen::VectorXd v(G.size());
    for (Eigen::Index r = 0; r < G.rows(); ++r)
      for (Eigen::Index c = 0; c < G.cols(); ++c) v[r * G.cols() + c] = G(r, c);
    return v;
  };
}

namespace detail {

template <int N>
PointN<N> region_point(const LocalRegion<N>& region, const TangentN<N>& xp, double t) {
  const auto& g = *region.geometry;
  PointN<N> p;
  p.template head<N - 1>() = xp;
  p[N - 1] = g.lower(xp) + t * (g.upper(xp) - g.lower(xp));
  return p;
}

template <int N>
bool tangent_inside(const LocalRegion<N>& region, const TangentN<N>& xp) {
  return (xp - region.center_tangent()).norm() < region.radius && xp.norm() <= 1.0;
}

/// k-th pair of the sampling stream.  The stream is sequential, so a larger
/// budget always contains the pairs of a smaller one.
template <int N>
std::pair<PointN<N>, PointN<N>> next_pair(const LocalRegion<N>& region, Rng& rng, std::size_t k) {
  const double s = region.radius;
  const TangentN<N> z = region.center_tangent();
  auto t = [&] { return std::clamp(rng.uniform(), 1e-12, 1.0 - 1e-12); };
  auto unit = [&] {
    TangentN<N> u;
    do {
      for (int a = 0; a < N - 1; ++a) u[a] = rng.normal();
    } while (u.norm() == 0.0);
    return TangentN<N>(u.normalized());
  };
  switch (k % 6) {
    case 0:
    case 1:
    case 2: {
      // Short pairs at |x - y| ~ {0.5, 0.1, 0.01} s.
      static constexpr double scale[] = {0.5, 0.1, 0.01};
      const PointN<N> x = region.sample(rng);
      for (int attempt = 0; attempt < 64; ++attempt) {
        const double r = scale[k % 6] * s * rng.uniform();
        PointN<N> dir;
        for (int a = 0; a < N; ++a) dir[a] = rng.normal();
        const PointN<N> y = x + r * dir.normalized();
        if (region.contains(y)) return {x, y};
      }
      return {x, region.sample(rng)};
    }
    case 3:
      return {region.sample(rng), region.sample(rng)};
    case 4: {
      // Same x', different heights.
      const PointN<N> x = region.sample(rng);
      return {x, region_point(region, TangentN<N>(x.template head<N - 1>()), t())};
    }
    default: {
      // Near-antipodal tangential positions, independent heights.
      const TangentN<N> u = unit();
      const double r = s * (1.0 - 1e-6) * std::sqrt(rng.uniform());
      TangentN<N> a = z + r * u, b = z - r * u;
      if (!tangent_inside(region, a)) a = z;
      if (!tangent_inside(region, b)) b = z;
      return {region_point(region, a, t()), region_point(region, b, t())};
    }
  }
}

}  // namespace detail

/// Sampled lower bound of sup |f(x) - f(y)| / |x - y|^gamma over the region.
template <int N>
double holder_seminorm(const FieldRule& f, const LocalRegion<N>& region, double gamma, std::size_t pairs,
                       std::uint64_t seed = 7) {
  if (pairs < 1) throw ConfigError("seminorm sampling needs at least one pair");
  if (region.center_tangent().norm() - region.radius >= 1.0) throw DomainError("local region is empty");
  Rng rng(seed);
  double best = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const auto [x, y] = detail::next_pair(region, rng, k);
    const double d = (x - y).norm();
    if (d == 0.0) continue;
    best = std::max(best, (f(Eigen::VectorXd(x)) - f(Eigen::VectorXd(y))).norm() / std::pow(d, gamma));
  }
  return best;
}

struct Prop21Settings {
  // Hypothesis constant in s <= c delta(z').  With c = 1/4 the built-in gap
  // keeps delta(x') >= delta(z')/2 on every probed cell, which the estimate
  // relies on; larger c lets the z' = 0.25 cell reach the neck.
  double c = 0.25;
  std::vector<double> s_fractions{0.25, 0.5, 1.0};  // s = fraction * c * delta(z')
  std::size_t pairs = 4000;
  std::uint64_t seed = 7;
};

struct Prop21Entry {
  double z_prime = 0.0;
  double s = 0.0;
  double s_fraction = 0.0;
  double delta = 0.0;
  double seminorm = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double delta_ratio_min = 0.0;  // min over the cell of delta(x') / delta(z')
};

struct Prop21Report {
  std::vector<Prop21Entry> entries;
  double constant = 0.0;  // max seminorm / rhs
  bool finite = true;
  bool cells_comparable = true;  // delta(x') >= delta(z')/2 on every cell
};

/// Bracketed right-hand side of the seminorm estimate for grad utilde_l on the
/// cell of radius s around z' (constant omitted).
template <int N>
double prop21_rhs(const AuxiliaryField<N>& f, const TangentN<N>& zp, double s) {
  const auto& g = f.geometry();
  const double gam = g.gamma();
  const double d = g.delta(zp);
  const double q = 1.0 / (1.0 + gam);
  const int l = f.component();
  const double jump = f.data().jump(zp, l);
  const double norms = f.data().phi_norms[l] + f.data().psi_norms[l];
  const double jump_group = std::pow(d, -1.0 - q) * std::pow(s, 1.0 - gam) + std::pow(d, -gam - q);
  const double norm_group = std::pow(d, -1.0 - q) * std::pow(s, 2.0 - gam) + std::pow(d, -1.0) * std::pow(s, 1.0 - gam) +
                            std::pow(d, -gam - q) * s + std::pow(d, -gam);
  return jump * jump_group + norms * norm_group;
}

template <int N>
Prop21Report check_prop21(const AuxiliaryField<N>& f, const std::vector<TangentN<N>>& z_primes,
                          const Prop21Settings& fit) {
  for (double frac : fit.s_fractions)
    if (!(frac > 0.0) || frac > 1.0) throw ConfigError("prop21: s must satisfy 0 < s <= c delta(z')");
  const auto& g = f.geometry();
  const FieldRule grad = gradient_field(f);
  Prop21Report r;
  for (const auto& zp : z_primes) {
    PointN<N> z;
    z.template head<N - 1>() = zp;
    z[N - 1] = 0.5 * (g.upper(zp) + g.lower(zp));
    const double d = g.delta(zp);
    for (double frac : fit.s_fractions) {
      Prop21Entry e;
      e.z_prime = zp.norm();
      e.s_fraction = frac;
      e.s = frac * fit.c * d;
      e.delta = d;
      const LocalRegion<N> region(g, z, e.s);
      e.seminorm = holder_seminorm(grad, region, g.gamma(), fit.pairs, fit.seed);
      e.rhs = prop21_rhs(f, zp, e.s);
      // Scan the cell along the radial direction through z'.
      const TangentN<N> dir = zp.norm() > 0.0 ? TangentN<N>(zp.normalized()) : TangentN<N>(TangentN<N>::Unit(0));
      double dmin = std::numeric_limits<double>::infinity();
      for (int k = 0; k <= 64; ++k) {
        const TangentN<N> xp = zp + (e.s * (2.0 * k / 64 - 1.0)) * dir;
        if (xp.norm() <= 1.0) dmin = std::min(dmin, g.delta(xp));
      }
      e.delta_ratio_min = dmin / d;
      r.cells_comparable = r.cells_comparable && e.delta_ratio_min >= 0.5;
      e.ratio = e.rhs > 0.0 ? e.seminorm / e.rhs : (e.seminorm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      r.constant = std::max(r.constant, e.ratio);
      r.entries.push_back(e);
    }
  }
  r.finite = std::isfinite(r.constant);
  return r;
}

}  // namespace thingap
