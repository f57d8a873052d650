#include "exitbsde/geometry.hpp"

#include <stdexcept>

namespace exitbsde {

Domain Domain::ball(Vec center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("Domain::ball: radius must be > 0");
  if (center.size() < 1 || center.size() > kMaxDim)
    throw std::invalid_argument("Domain::ball: dimension out of range");
  Domain d;
  d.kind_ = Kind::Ball;
  d.dim_ = static_cast<int>(center.size());
  d.center_ = std::move(center);
  d.radius_ = radius;
  return d;
}

Domain Domain::interval(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("Domain::interval: requires lo < hi");
  Domain d;
  d.kind_ = Kind::Interval;
  d.dim_ = 1;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

void Domain::check_dim(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("Domain: point dimension mismatch");
}

bool Domain::contains(const Vec& x) const {
  check_dim(x);
  if (kind_ == Kind::Ball) return (x - center_).squaredNorm() < radius_ * radius_;
  return lo_ < x[0] && x[0] < hi_;
}

double Domain::signed_distance(const Vec& x) const {
  check_dim(x);
  if (kind_ == Kind::Ball) return (x - center_).norm() - radius_;
  return std::max(lo_ - x[0], x[0] - hi_);
}

Vec Domain::boundary_projection(const Vec& x) const {
  check_dim(x);
  if (kind_ == Kind::Ball) {
    const Vec r = x - center_;
    const double nrm = r.norm();
    if (nrm == 0.0)
      throw std::domain_error("Domain::boundary_projection: ambiguous at the center");
    return center_ + (radius_ / nrm) * r;
  }
  const double mid = 0.5 * (lo_ + hi_);
  if (x[0] == mid)
    throw std::domain_error("Domain::boundary_projection: ambiguous at the midpoint");
  Vec p(1);
  p[0] = (x[0] < mid) ? lo_ : hi_;
  return p;
}

Domain Domain::enlarged(double margin) const {
  if (!(margin >= 0.0)) throw std::invalid_argument("Domain::enlarged: margin must be >= 0");
  if (kind_ == Kind::Ball) return ball(center_, radius_ + margin);
  return interval(lo_ - margin, hi_ + margin);
}

void Domain::bounding_box(Vec& lo, Vec& hi) const {
  lo.resize(dim_);
  hi.resize(dim_);
  if (kind_ == Kind::Ball) {
    for (int i = 0; i < dim_; ++i) {
      lo[i] = center_[i] - radius_;
      hi[i] = center_[i] + radius_;
    }
  } else {
    lo[0] = lo_;
    hi[0] = hi_;
  }
}

}  // namespace exitbsde
