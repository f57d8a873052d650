#pragma once

#include "exitbsde/linalg.hpp"

namespace exitbsde {

/// Bounded domain with smooth boundary: a ball in R^d or an open interval
/// (the d=1 case). Membership is against the OPEN set, so boundary points
/// count as exited; that matches the discrete exit rule "X not in D".
class Domain {
 public:
  enum class Kind { Ball, Interval };

  static Domain ball(Vec center, double radius);
  static Domain interval(double lo, double hi);

  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }

  /// True iff x lies strictly inside. Signed-distance ties (== 0) are outside.
  bool contains(const Vec& x) const;

  /// Negative inside, zero on the boundary, positive outside.
  double signed_distance(const Vec& x) const;

  /// Closest boundary point. Throws if the projection is ambiguous
  /// (ball center / interval midpoint).
  Vec boundary_projection(const Vec& x) const;

  /// Same shape grown by `margin` in every direction (ellipticity spot checks
  /// sample the coefficients slightly outside the closed domain).
  Domain enlarged(double margin) const;

  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// Loose bounding box, used by samplers.
  void bounding_box(Vec& lo, Vec& hi) const;

 private:
  Domain() = default;
  void check_dim(const Vec& x) const;

  Kind kind_ = Kind::Interval;
  int dim_ = 1;
  Vec center_;
  double radius_ = 0;
  double lo_ = 0, hi_ = 0;
};

}  // namespace exitbsde
