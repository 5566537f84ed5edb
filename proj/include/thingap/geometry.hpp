#pragma once

// Narrow region between two nearly touching C^{1,gamma} graphs:
//
//   Omega_r = { (x', x_n) : -eps/2 + h2(x') < x_n < eps/2 + h1(x'), |x'| <= r },
//
// with gap width delta(x') = eps + h1(x') - h2(x').  Points are Eigen vectors;
// x' lives in R^{N-1}.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "sampling.hpp"

namespace thingap {

template <int N>
using PointN = Eigen::Matrix<double, N, 1>;
template <int N>
using TangentN = Eigen::Matrix<double, N - 1, 1>;

using Point2 = Eigen::Vector2d;

enum class Side { top, bottom };

/// A graph x' -> h(x') with its gradient supplied by the caller.
template <int N>
struct BoundaryProfile {
  using Tangent = TangentN<N>;

  std::function<double(const Tangent&)> value;
  std::function<Tangent(const Tangent&)> gradient;
  std::string tag;
  /// Signed amplitude for the built-in power family, NaN for custom profiles.
  double amplitude = std::numeric_limits<double>::quiet_NaN();

  double operator()(const Tangent& xp) const { return value(xp); }

  /// h(x') = c |x'|^{1+gamma}.
  static BoundaryProfile power(double c, double gamma) {
    BoundaryProfile p;
    p.value = [c, gamma](const Tangent& xp) { return c * std::pow(xp.norm(), 1.0 + gamma); };
    p.gradient = [c, gamma](const Tangent& xp) -> Tangent {
      const double r = xp.norm();
      if (r == 0.0) return Tangent::Zero();
      return (c * (1.0 + gamma) * std::pow(r, gamma - 1.0)) * xp;
    };
    p.tag = "power";
    p.amplitude = c;
    return p;
  }

  static BoundaryProfile flat() {
    BoundaryProfile p;
    p.value = [](const Tangent&) { return 0.0; };
    p.gradient = [](const Tangent&) -> Tangent { return Tangent::Zero(); };
    p.tag = "flat";
    p.amplitude = 0.0;
    return p;
  }

  static BoundaryProfile custom(std::function<double(const Tangent&)> value,
                                std::function<Tangent(const Tangent&)> gradient,
                                std::string tag = "custom") {
    return BoundaryProfile{std::move(value), std::move(gradient), std::move(tag)};
  }
};

template <int N>
class GapGeometry {
 public:
  static_assert(N >= 2, "the gap needs at least one tangential direction");
  using Point = PointN<N>;
  using Tangent = TangentN<N>;
  using Profile = BoundaryProfile<N>;
  static constexpr int dim = N;

  GapGeometry(double epsilon, double gamma, Profile top, Profile bottom)
      : epsilon_(epsilon), gamma_(gamma), top_(std::move(top)), bottom_(std::move(bottom)) {
    if (!(epsilon > 0.0)) throw DomainError("gap width epsilon must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0,1)");
    derive_constants();
  }

  /// Built-in family h1 = c1 |x'|^{1+gamma}, h2 = c2 |x'|^{1+gamma}.
  static GapGeometry power(double epsilon, double gamma, double c1 = 1.0, double c2 = -1.0) {
    return GapGeometry(epsilon, gamma, Profile::power(c1, gamma), Profile::power(c2, gamma));
  }

  /// h1 = h2 = 0: a rectangle of height epsilon (used by exact oracles).
  static GapGeometry flat(double epsilon, double gamma = 0.5) {
    return GapGeometry(epsilon, gamma, Profile::flat(), Profile::flat());
  }

  double epsilon() const { return epsilon_; }
  double gamma() const { return gamma_; }
  const Profile& top() const { return top_; }
  const Profile& bottom() const { return bottom_; }
  double kappa0() const { return kappa0_; }
  double kappa1() const { return kappa1_; }
  double kappa2() const { return kappa2_; }
  bool is_flat() const { return top_.tag == "flat" && bottom_.tag == "flat"; }

  double h1(const Tangent& xp) const { return top_.value(xp); }
  double h2(const Tangent& xp) const { return bottom_.value(xp); }

  double upper(const Tangent& xp) const { return 0.5 * epsilon_ + h1(xp); }
  double lower(const Tangent& xp) const { return -0.5 * epsilon_ + h2(xp); }

  /// delta(x') = eps + h1(x') - h2(x').
  double delta(const Tangent& xp) const {
    require_unit_ball(xp);
    return epsilon_ + h1(xp) - h2(xp);
  }

  Tangent grad_delta(const Tangent& xp) const { return top_.gradient(xp) - bottom_.gradient(xp); }

  /// Membership in Omega_r (open in x_n, closed in |x'|).
  bool contains(double r, const Point& x) const {
    const Tangent xp = x.template head<N - 1>();
    const double rr = xp.norm();
    if (rr > r || rr > 1.0) return false;
    return lower(xp) < x[N - 1] && x[N - 1] < upper(xp);
  }

  /// Membership in the closure of Omega_r, with absolute slack `tol`.
  bool contains_closure(double r, const Point& x, double tol = 1e-12) const {
    const Tangent xp = x.template head<N - 1>();
    const double rr = xp.norm();
    if (rr > r + tol || rr > 1.0 + tol) return false;
    const Tangent clipped = rr > 1.0 ? Tangent(xp / rr) : xp;
    return lower(clipped) - tol <= x[N - 1] && x[N - 1] <= upper(clipped) + tol;
  }

  /// Point on Gamma^+ (top) or Gamma^- (bottom) above/below x'.
  Point boundary_point(Side side, const Tangent& xp) const {
    require_unit_ball(xp);
    Point p;
    p.template head<N - 1>() = xp;
    p[N - 1] = side == Side::top ? upper(xp) : lower(xp);
    return p;
  }

 private:
  void require_unit_ball(const Tangent& xp) const {
    if (xp.norm() > 1.0 + 1e-14) throw DomainError("|x'| > 1 lies outside B'_1");
  }

  void derive_constants() {
    const double a1 = std::abs(top_.amplitude);
    const double a2 = std::abs(bottom_.amplitude);
    if (std::isnan(a1) || std::isnan(a2)) {
      // Custom profiles: constants are measured by check_invariants.
      kappa0_ = kappa1_ = kappa2_ = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    kappa0_ = (1.0 + gamma_) * std::min(a1, a2);
    kappa1_ = (1.0 + gamma_) * std::max(a1, a2);
    // ||c|x|^{1+g}||_{C^{1,g}(B'_1)} = |c| + (1+g)|c| + (1+g)|c| 2^{1-g};
    // the seminorm of the gradient is attained on antipodal pairs.
    const double per_unit = 1.0 + (1.0 + gamma_) * (1.0 + std::pow(2.0, 1.0 - gamma_));
    kappa2_ = (a1 + a2) * per_unit;
  }

  double epsilon_;
  double gamma_;
  Profile top_;
  Profile bottom_;
  double kappa0_ = 0.0;
  double kappa1_ = 0.0;
  double kappa2_ = 0.0;
};

/// The local cell  Omega^_s(z) = { -eps/2+h2(x') < x_n < eps/2+h1(x'), |x'-z'| < s }.
template <int N>
struct LocalRegion {
  using Point = PointN<N>;
  using Tangent = TangentN<N>;

  const GapGeometry<N>* geometry;
  Point center;
  double radius;

  LocalRegion(const GapGeometry<N>& geom, Point z, double s) : geometry(&geom), center(std::move(z)), radius(s) {
    if (!(s > 0.0)) throw DomainError("local region radius must be positive");
  }

  Tangent center_tangent() const { return center.template head<N - 1>(); }

  bool contains(const Point& x) const {
    const Tangent xp = x.template head<N - 1>();
    if ((xp - center_tangent()).norm() >= radius || xp.norm() > 1.0) return false;
    return geometry->lower(xp) < x[N - 1] && x[N - 1] < geometry->upper(xp);
  }

  bool contains_closure(const Point& x, double tol = 1e-12) const {
    const Tangent xp = x.template head<N - 1>();
    if ((xp - center_tangent()).norm() > radius + tol || xp.norm() > 1.0 + tol) return false;
    return geometry->lower(xp) - tol <= x[N - 1] && x[N - 1] <= geometry->upper(xp) + tol;
  }

  /// Uniform-in-(x', t) draw: x' in the disc, x_n = lower + t * delta.
  Point sample(Rng& rng) const {
    Tangent xp;
    do {
      for (int a = 0; a < N - 1; ++a) xp[a] = rng.uniform(-1.0, 1.0);
    } while (xp.squaredNorm() >= 1.0);
    xp = center_tangent() + radius * xp;
    if (xp.norm() > 1.0) xp *= (1.0 - 1e-15) / xp.norm();
    Point p;
    p.template head<N - 1>() = xp;
    const double lo = geometry->lower(xp);
    const double hi = geometry->upper(xp);
    double t = rng.uniform();
    t = std::clamp(t, 1e-12, 1.0 - 1e-12);
    p[N - 1] = lo + t * (hi - lo);
    return p;
  }
};

/// Map x in Omega^_{delta(z')}(z) to y with x' - z' = delta(z') y', x_n = delta(z') y_n.
template <int N>
PointN<N> rescale_to_unit(const LocalRegion<N>& region, const PointN<N>& x) {
  const auto zp = region.center_tangent();
  const double d = region.geometry->delta(zp);
  const LocalRegion<N> cell(*region.geometry, region.center, d);
  if (!cell.contains_closure(x, 1e-12 * std::max(1.0, d))) {
    throw DomainError("point lies outside the rescaling cell of the local region");
  }
  PointN<N> y;
  y.template head<N - 1>() = (x.template head<N - 1>() - zp) / d;
  y[N - 1] = x[N - 1] / d;
  return y;
}

template <int N>
PointN<N> rescale_from_unit(const LocalRegion<N>& region, const PointN<N>& y) {
  const auto zp = region.center_tangent();
  const double d = region.geometry->delta(zp);
  PointN<N> x;
  x.template head<N - 1>() = zp + d * y.template head<N - 1>();
  x[N - 1] = d * y[N - 1];
  return x;
}

/// Membership in the rescaled cell Q_r (closure when `tol` > 0).
template <int N>
bool unit_cell_contains(const LocalRegion<N>& region, const PointN<N>& y, double r = 1.0, double tol = 0.0) {
  const auto zp = region.center_tangent();
  const auto& g = *region.geometry;
  const double d = g.delta(zp);
  const TangentN<N> yp = y.template head<N - 1>();
  if (yp.norm() > r + tol) return false;
  const TangentN<N> xp = d * yp + zp;
  const double lo = -g.epsilon() / (2 * d) + g.h2(xp) / d;
  const double hi = g.epsilon() / (2 * d) + g.h1(xp) / d;
  if (tol > 0.0) return lo - tol <= y[N - 1] && y[N - 1] <= hi + tol;
  return lo < y[N - 1] && y[N - 1] < hi && yp.norm() < r;
}

/// Quasi-uniform tangential samples in B'_r (Halton, bases 2, 3, 5, ...).
template <int N>
std::vector<TangentN<N>> tangential_samples(std::size_t count, double r = 1.0) {
  static constexpr std::uint32_t bases[] = {2, 3, 5, 7, 11, 13};
  std::vector<TangentN<N>> out;
  out.reserve(count);
  std::uint64_t idx = 1;
  while (out.size() < count) {
    TangentN<N> xp;
    for (int a = 0; a < N - 1; ++a) xp[a] = r * (2.0 * halton(idx, bases[a]) - 1.0);
    ++idx;
    if (xp.norm() <= r) out.push_back(xp);
  }
  return out;
}

/// Quasi-uniform interior samples of Omega_r.
template <int N>
std::vector<PointN<N>> interior_samples(const GapGeometry<N>& g, std::size_t count, double r = 1.0) {
  const auto tang = tangential_samples<N>(count, r);
  std::vector<PointN<N>> out;
  out.reserve(count);
  for (std::size_t k = 0; k < tang.size(); ++k) {
    const double t = std::clamp(halton(k + 1, 17), 1e-9, 1.0 - 1e-9);
    PointN<N> p;
    p.template head<N - 1>() = tang[k];
    p[N - 1] = g.lower(tang[k]) + t * (g.upper(tang[k]) - g.lower(tang[k]));
    out.push_back(p);
  }
  return out;
}

/// Outcome of the sampled checks of the structural conditions on h1, h2.
struct GeometryInvariants {
  double h_at_zero = 0.0;          // max(|h1(0)|, |h2(0)|)
  double grad_at_zero = 0.0;       // max(|grad h1(0)|, |grad h2(0)|)
  double measured_kappa0 = 0.0;    // min over samples of |grad h_i| / |x'|^gamma
  double measured_kappa1 = 0.0;    // max over samples
  double min_gap = 0.0;            // min over samples of (upper - lower)
  double min_delta_over_eps = 0.0;
  double profile_fd_error = 0.0;   // max relative error, gradient rule vs central differences
  // delta(z') / eps on |z'| <= eps^{1/(1+gamma)}, delta(z') / |z'|^{1+gamma} outside.
  double inner_ratio_max = 0.0;
  double outer_ratio_min = 0.0;
  double outer_ratio_max = 0.0;
  std::size_t samples = 0;

  bool ok(double kappa0, double kappa1, double tol = 1e-9) const {
    const bool envelope = std::isnan(kappa0) ||
                          (measured_kappa0 >= kappa0 * (1 - tol) && measured_kappa1 <= kappa1 * (1 + tol));
    return h_at_zero <= tol && grad_at_zero <= tol && envelope && min_gap > 0.0 && profile_fd_error <= 1e-6;
  }
};

template <int N>
double profile_fd_error(const BoundaryProfile<N>& p, const TangentN<N>& xp) {
  // Relative error of the gradient rule against central differences.
  double worst = 0.0;
  const auto g = p.gradient(xp);
  const double step = 1e-6 * std::max(xp.norm(), 1e-3);
  for (int a = 0; a < N - 1; ++a) {
    TangentN<N> e = TangentN<N>::Zero();
    e[a] = step;
    const double fd = (p.value(xp + e) - p.value(xp - e)) / (2 * step);
    const double scale = std::max(std::abs(g[a]), g.norm());
    if (scale > 0.0) worst = std::max(worst, std::abs(fd - g[a]) / scale);
  }
  return worst;
}

template <int N>
GeometryInvariants check_invariants(const GapGeometry<N>& g, std::size_t samples = 1000) {
  GeometryInvariants r;
  r.samples = samples;
  const TangentN<N> zero = TangentN<N>::Zero();
  r.h_at_zero = std::max(std::abs(g.h1(zero)), std::abs(g.h2(zero)));
  r.grad_at_zero = std::max(g.top().gradient(zero).norm(), g.bottom().gradient(zero).norm());
  r.measured_kappa0 = std::numeric_limits<double>::infinity();
  r.min_gap = std::numeric_limits<double>::infinity();
  r.min_delta_over_eps = std::numeric_limits<double>::infinity();
  r.outer_ratio_min = std::numeric_limits<double>::infinity();
  const double gam = g.gamma();
  const double eps = g.epsilon();
  const double inner = std::pow(eps, 1.0 / (1.0 + gam));
  for (const auto& xp : tangential_samples<N>(samples, 1.0)) {
    const double rr = xp.norm();
    if (rr > 0.0) {
      const double scale = std::pow(rr, gam);
      for (const auto* p : {&g.top(), &g.bottom()}) {
        const double q = p->gradient(xp).norm() / scale;
        r.measured_kappa0 = std::min(r.measured_kappa0, q);
        r.measured_kappa1 = std::max(r.measured_kappa1, q);
      }
      if (rr > 1e-3) {
        r.profile_fd_error = std::max({r.profile_fd_error, profile_fd_error(g.top(), xp),
                                       profile_fd_error(g.bottom(), xp)});
      }
    }
    r.min_gap = std::min(r.min_gap, g.upper(xp) - g.lower(xp));
    const double d = g.delta(xp);
    r.min_delta_over_eps = std::min(r.min_delta_over_eps, d / eps);
    if (rr <= 0.5) {
      if (rr <= inner) {
        r.inner_ratio_max = std::max(r.inner_ratio_max, d / eps);
      } else {
        const double q = d / std::pow(rr, 1.0 + gam);
        r.outer_ratio_min = std::min(r.outer_ratio_min, q);
        r.outer_ratio_max = std::max(r.outer_ratio_max, q);
      }
    }
  }
  return r;
}

}  // namespace thingap
