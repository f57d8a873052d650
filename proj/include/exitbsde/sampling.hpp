#pragma once

#include "exitbsde/geometry.hpp"

#include <cstdint>

namespace exitbsde {

/// Radical-inverse (van der Corput) value of `index` in the given base.
double radical_inverse(std::uint64_t index, unsigned base);

/// Low-discrepancy interior point of the closed domain. Indices form nested
/// sample sets: the first n points are always the same prefix.
Vec halton_in_domain(const Domain& domain, std::uint64_t index);

/// Low-discrepancy point on the boundary.
Vec halton_on_boundary(const Domain& domain, std::uint64_t index);

/// Uniform point in the open domain driven by a caller-supplied stream of
/// uniforms in [0,1). Used for x0 distributions.
template <class NextUniform>
Vec uniform_in_domain(const Domain& domain, NextUniform&& next) {
  Vec x(domain.dimension());
  if (domain.kind() == Domain::Kind::Interval) {
    do {
      x[0] = domain.lo() + next() * (domain.hi() - domain.lo());
    } while (!domain.contains(x));
    return x;
  }
  // Rejection from the bounding box; acceptance >= 0.39 for d <= 3.
  Vec lo, hi;
  domain.bounding_box(lo, hi);
  do {
    for (int i = 0; i < domain.dimension(); ++i) x[i] = lo[i] + next() * (hi[i] - lo[i]);
  } while (!domain.contains(x));
  return x;
}

}  // namespace exitbsde
