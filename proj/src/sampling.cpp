#include "exitbsde/sampling.hpp"

#include "exitbsde/rng.hpp"

#include <cmath>

namespace exitbsde {

namespace {
constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

Vec halton_in_domain(const Domain& domain, std::uint64_t index) {
  const int d = domain.dimension();
  const std::uint64_t i = index + 1;  // skip the all-zero point
  if (domain.kind() == Domain::Kind::Interval) {
    Vec x(1);
    x[0] = domain.lo() + radical_inverse(i, kPrimes[0]) * (domain.hi() - domain.lo());
    return x;
  }
  // Direction from inverse-CDF normals, radius from u^(1/d): uniform in the ball.
  Vec dir(d);
  double nrm2 = 0.0;
  for (int k = 0; k < d; ++k) {
    dir[k] = inverse_normal_cdf(radical_inverse(i, kPrimes[k]));
    nrm2 += dir[k] * dir[k];
  }
  if (nrm2 < 1e-300) {
    dir.setZero();
    dir[0] = 1.0;
    nrm2 = 1.0;
  }
  const double u = radical_inverse(i, kPrimes[d]);
  const double r = domain.radius() * std::pow(u, 1.0 / d);
  return domain.center() + (r / std::sqrt(nrm2)) * dir;
}

Vec halton_on_boundary(const Domain& domain, std::uint64_t index) {
  const int d = domain.dimension();
  const std::uint64_t i = index + 1;
  if (domain.kind() == Domain::Kind::Interval) {
    Vec x(1);
    x[0] = (i % 2 == 0) ? domain.lo() : domain.hi();
    return x;
  }
  Vec dir(d);
  double nrm2 = 0.0;
  for (int k = 0; k < d; ++k) {
    dir[k] = inverse_normal_cdf(radical_inverse(i, kPrimes[k]));
    nrm2 += dir[k] * dir[k];
  }
  if (nrm2 < 1e-300) {
    dir.setZero();
    dir[0] = 1.0;
    nrm2 = 1.0;
  }
  return domain.center() + (domain.radius() / std::sqrt(nrm2)) * dir;
}

}  // namespace exitbsde
