#include <doctest.h>

#include "exitbsde/rng.hpp"

#include <cmath>
#include <set>

using namespace exitbsde;

TEST_CASE("philox blocks are reproducible and key-sensitive") {
  const auto a = philox4x32(42, 7, 1);
  const auto b = philox4x32(42, 7, 1);
  CHECK(a == b);
  CHECK(philox4x32(43, 7, 1) != a);
  CHECK(philox4x32(42, 8, 1) != a);
  CHECK(philox4x32(42, 7, 2) != a);
}

TEST_CASE("indexed normals match the sequential stream") {
  RngStream seq(123, 9);
  RngStream idx(123, 9);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const double a = seq.next_normal();
    CHECK(a == idx.normal_at(i));
  }
  RngStream ooo(123, 9);
  CHECK(ooo.normal_at(57) == idx.normal_at(57));
  CHECK(ooo.normal_at(3) == idx.normal_at(3));
}

TEST_CASE("normal moments are sane") {
  RngStream rng(2024, 0);
  const long n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (long i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(s4 / n - 3.0) < 0.1);
}

TEST_CASE("streams for distinct path ids differ") {
  RngStream a(77, 0), b(77, 1);
  int equal = 0;
  for (int i = 0; i < 100; ++i)
    if (a.next_normal() == b.next_normal()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("uniforms live in [0,1)") {
  RngStream rng(5, 3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.next_uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("seed derivation separates labels and children") {
  const std::uint64_t s = 999;
  std::set<std::uint64_t> keys = {derive_seed(s, "simulate"), derive_seed(s, "train"),
                                  derive_seed(s, "refine"), derive_seed(s, std::uint64_t(0)),
                                  derive_seed(s, std::uint64_t(1))};
  CHECK(keys.size() == 5);
  CHECK(derive_seed(s, "simulate") == derive_seed(s, "simulate"));
}

TEST_CASE("inverse normal cdf inverts the gaussian cdf") {
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-9));
  for (double p : {0.001, 0.01, 0.1, 0.3, 0.7, 0.9, 0.99, 0.999})
    CHECK(cdf(inverse_normal_cdf(p)) == doctest::Approx(p).epsilon(1e-7));
}
