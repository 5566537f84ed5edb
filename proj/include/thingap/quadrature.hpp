#pragma once

// Symmetric quadrature rules on the reference triangle (0,0), (1,0), (0,1).
// Weights sum to 1; multiply by the physical triangle area.

#include <array>
#include <span>

#include "errors.hpp"

namespace thingap {

struct QuadraturePoint {
  double xi;
  double eta;
  double weight;
};

class TriangleRule {
 public:
  /// `points` in {1, 3, 7}: exact for degree 1, 2 and 5 respectively.
  static TriangleRule with_points(int points) {
    switch (points) {
      case 1: return TriangleRule(centroid_);
      case 3: return TriangleRule(three_);
      case 7: return TriangleRule(seven_);
      default: throw ConfigError("quadrature must use 1, 3 or 7 points");
    }
  }

  std::span<const QuadraturePoint> points() const { return points_; }
  std::size_t size() const { return points_.size(); }

 private:
  explicit TriangleRule(std::span<const QuadraturePoint> p) : points_(p) {}

  static constexpr std::array<QuadraturePoint, 1> centroid_{{{1.0 / 3, 1.0 / 3, 1.0}}};
  static constexpr std::array<QuadraturePoint, 3> three_{{
      {1.0 / 6, 1.0 / 6, 1.0 / 3},
      {2.0 / 3, 1.0 / 6, 1.0 / 3},
      {1.0 / 6, 2.0 / 3, 1.0 / 3},
  }};
  // Radon's degree-5 rule.
  static constexpr double a1_ = 0.059715871789769820;
  static constexpr double b1_ = 0.470142064105115090;
  static constexpr double a2_ = 0.797426985353087322;
  static constexpr double b2_ = 0.101286507323456339;
  static constexpr double w0_ = 0.225;
  static constexpr double w1_ = 0.132394152788506181;
  static constexpr double w2_ = 0.125939180544827153;
  static constexpr std::array<QuadraturePoint, 7> seven_{{
      {1.0 / 3, 1.0 / 3, w0_},
      {a1_, b1_, w1_},
      {b1_, a1_, w1_},
      {b1_, b1_, w1_},
      {a2_, b2_, w2_},
      {b2_, a2_, w2_},
      {b2_, b2_, w2_},
  }};

  std::span<const QuadraturePoint> points_;
};

}  // namespace thingap
