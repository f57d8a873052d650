#include <doctest.h>

#include "exitbsde/geometry.hpp"
#include "exitbsde/sampling.hpp"

#include <stdexcept>

using namespace exitbsde;

namespace {
Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}
Vec v1(double a) {
  Vec x(1);
  x[0] = a;
  return x;
}
}  // namespace

TEST_CASE("open-set membership") {
  const Domain ball = Domain::ball(Vec::Zero(2), 1.0);
  CHECK(ball.contains(v2(0, 0)));
  CHECK_FALSE(ball.contains(v2(0.6, 0.8)));  // |x| = 1: boundary is excluded
  const Domain itv = Domain::interval(-1, 1);
  CHECK_FALSE(itv.contains(v1(1.5)));
  CHECK_FALSE(itv.contains(v1(1.0)));
  CHECK(itv.contains(v1(0.999)));
}

TEST_CASE("signed distance examples") {
  CHECK(Domain::ball(Vec::Zero(2), 1.0).signed_distance(v2(0, 0)) == -1.0);
  CHECK(Domain::ball(Vec::Zero(2), 2.0).signed_distance(v2(3, 0)) == 1.0);
  CHECK(Domain::interval(-1, 1).signed_distance(v1(0.25)) == -0.75);
}

TEST_CASE("boundary projection examples and errors") {
  const Domain ball = Domain::ball(Vec::Zero(2), 1.0);
  CHECK((ball.boundary_projection(v2(2, 0)) - v2(1, 0)).norm() <= 1e-15);
  CHECK((ball.boundary_projection(v2(0.3, 0)) - v2(1, 0)).norm() <= 1e-15);
  CHECK(Domain::interval(-1, 1).boundary_projection(v1(-5))[0] == -1.0);
  CHECK_THROWS_AS((void)ball.boundary_projection(v2(0, 0)), std::domain_error);
  CHECK_THROWS_AS((void)Domain::interval(-1, 1).boundary_projection(v1(0.0)),
                  std::domain_error);
}

TEST_CASE("constructor and dimension contracts") {
  CHECK_THROWS_AS((void)Domain::ball(Vec::Zero(2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)Domain::interval(1, 1), std::invalid_argument);
  const Domain ball = Domain::ball(Vec::Zero(2), 1.0);
  CHECK_THROWS_AS((void)ball.contains(v1(0)), std::invalid_argument);
  CHECK_THROWS_AS((void)ball.signed_distance(Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("membership, distance and projection are consistent") {
  for (const Domain& dom :
       {Domain::ball(v2(0.2, -0.1), 1.3), Domain::interval(-2.0, 0.5)}) {
    for (long i = 0; i < 500; ++i) {
      Vec x = halton_in_domain(dom.enlarged(1.0), i);
      const double sd = dom.signed_distance(x);
      CHECK(dom.contains(x) == (sd < 0.0));
      bool ambiguous = false;
      if (dom.kind() == Domain::Kind::Ball)
        ambiguous = (x - dom.center()).norm() == 0.0;
      else
        ambiguous = x[0] == 0.5 * (dom.lo() + dom.hi());
      if (!ambiguous) {
        const Vec p = dom.boundary_projection(x);
        CHECK(std::abs(dom.signed_distance(p)) <= 1e-12);
        CHECK(std::abs(sd) <= (x - p).norm() + 1e-12);
        // Idempotence.
        const Vec pp = dom.boundary_projection(p);
        CHECK((pp - p).norm() <= 1e-12);
      }
    }
  }
}
