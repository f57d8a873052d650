#include <doctest.h>

#include "exitbsde/problems.hpp"
#include "exitbsde/sampling.hpp"

using namespace exitbsde;

namespace {

Vec v1(double a) {
  Vec x(1);
  x[0] = a;
  return x;
}

ProblemPtr brownian_1d(std::function<double(const Vec&, double, const Vec&)> f) {
  auto p = std::make_shared<ProblemSpec>();
  p->name = "test";
  p->dim = 1;
  p->domain = Domain::interval(-1, 1);
  p->const_coeffs = true;
  p->mu_const = Vec::Zero(1);
  p->sigma_const = Mat::Identity(1, 1);
  p->mu = [](const Vec&, Vec& out) { out = Vec::Zero(1); };
  p->sigma = [](const Vec&, Mat& out) { out = Mat::Identity(1, 1); };
  p->f = std::move(f);
  p->g = [](const Vec&) { return 0.0; };
  return p;
}

std::shared_ptr<Polynomial> norm_sq(int d) {
  std::vector<Polynomial::Term> terms;
  for (int i = 0; i < d; ++i) {
    Polynomial::Term t;
    t.exponents[static_cast<std::size_t>(i)] = 2;
    t.coeff = 1.0;
    terms.push_back(t);
  }
  return std::make_shared<Polynomial>(d, std::move(terms));
}

}  // namespace

TEST_CASE("generator: diffusion and drift terms") {
  const auto p0 = brownian_1d([](const Vec&, double, const Vec&) { return 0.0; });
  const Polynomial sq(1, {Polynomial::term({2}, 1.0)});
  CHECK(apply_generator(*p0, sq, v1(0.3)) == 1.0);  // 0.5 * 2

  auto drifted = std::make_shared<ProblemSpec>(*p0);
  drifted->const_coeffs = true;
  drifted->mu_const = 2.0 * Vec::Ones(1);
  const Polynomial lin(1, {Polynomial::term({1}, 1.0)});
  CHECK(apply_generator(*drifted, lin, v1(-0.4)) == 2.0);

  auto p3 = std::make_shared<ProblemSpec>();
  p3->dim = 3;
  p3->domain = Domain::ball(Vec::Zero(3), 2.0);
  p3->const_coeffs = true;
  p3->mu_const = Vec::Zero(3);
  p3->sigma_const = Mat::Identity(3, 3);
  p3->f = [](const Vec&, double, const Vec&) { return 0.0; };
  p3->g = [](const Vec&) { return 0.0; };
  CHECK(apply_generator(*p3, *norm_sq(3), Vec::Zero(3)) == 3.0);
}

TEST_CASE("pde residual: zero at a manufactured solution, generator elsewhere") {
  const ProblemPtr p2 = library_problem("P2");
  for (long i = 0; i < 100; ++i) {
    const Vec x = halton_in_domain(p2->domain, i);
    if (!p2->domain.contains(x)) continue;
    CHECK(std::abs(pde_residual(*p2, *p2->exact_solution, x)) <= 1e-12);
  }
  const auto p0 = brownian_1d([](const Vec&, double, const Vec&) { return 0.0; });
  const Polynomial sq(1, {Polynomial::term({2}, 1.0)});
  CHECK(pde_residual(*p0, sq, v1(0.2)) == 1.0);
  // Adding a constant does not change the residual when f ignores y.
  const Polynomial sqc(1, {Polynomial::term({2}, 1.0), Polynomial::term({0}, 5.0)});
  CHECK(pde_residual(*p0, sqc, v1(0.2)) == pde_residual(*p0, sq, v1(0.2)));
  CHECK_THROWS_AS((void)pde_residual(*p0, sq, v1(1.5)), std::domain_error);
}

TEST_CASE("generator is linear in the candidate") {
  const ProblemPtr p3 = library_problem("P3");
  const auto u = p3->exact_solution;
  const auto w = SingleHiddenLayerNet::random_init(2, 6, 4);
  for (long i = 0; i < 50; ++i) {
    const Vec x = halton_in_domain(p3->domain, i);
    const double lu = apply_generator(*p3, *u, x);
    const double lw = apply_generator(*p3, *w, x);
    const Perturbed combo(u, 0.6, w);  // u + 0.6 w
    CHECK(apply_generator(*p3, combo, x) ==
          doctest::Approx(lu + 0.6 * lw).epsilon(1e-12));
  }
}

TEST_CASE("manufactured drivers telescope") {
  // u = x^2 on (-1,1) with trivial nonlinearity: f == -1.
  const auto u = std::make_shared<Polynomial>(
      1, std::vector<Polynomial::Term>{Polynomial::term({2}, 1.0)});
  auto mu = [](const Vec&, Vec& out) { out = Vec::Zero(1); };
  auto sigma = [](const Vec&, Mat& out) { out = Mat::Identity(1, 1); };
  const ProblemPtr p = manufactured(u, mu, sigma, Nonlinearity::none(),
                                    Domain::interval(-1, 1));
  Vec z(1);
  z[0] = 0.0;
  CHECK(p->f(v1(0.3), 2.0, z) == -1.0);
  CHECK(std::abs(pde_residual(*p, *u, v1(0.3))) <= 1e-15);

  const auto u2 = norm_sq(2);
  auto mu2 = [](const Vec&, Vec& out) { out = Vec::Zero(2); };
  auto sigma2 = [](const Vec&, Mat& out) { out = Mat::Identity(2, 2); };
  const ProblemPtr q = manufactured(u2, mu2, sigma2, Nonlinearity::none(),
                                    Domain::ball(Vec::Zero(2), 1.0));
  Vec z2 = Vec::Zero(2);
  Vec x2(2);
  x2 << 0.1, -0.2;
  CHECK(q->f(x2, 0.0, z2) == -2.0);

  const ProblemPtr s = manufactured(u2, mu2, sigma2, Nonlinearity::sin_y(),
                                    Domain::ball(Vec::Zero(2), 1.0));
  for (long i = 0; i < 50; ++i) {
    const Vec x = halton_in_domain(s->domain, i);
    if (!s->domain.contains(x)) continue;
    CHECK(std::abs(pde_residual(*s, *u2, x)) <= 1e-9);
  }
}

TEST_CASE("validation measures lipschitz quotients and ellipticity") {
  const ProblemPtr p1 = library_problem("P1");
  const ValidationReport rep = validate(*p1, 256);
  CHECK(rep.all_pass);

  // f(x,y,z) = y^2 with declared Lipschitz(y) = 1 must be flagged.
  auto bad = std::make_shared<ProblemSpec>(*p1);
  bad->f = [](const Vec&, double y, const Vec&) { return y * y; };
  bad->exact_solution = nullptr;
  const ValidationReport brep = validate(*bad, 256, {-3.0, 3.0, 3.0});
  CHECK_FALSE(brep.all_pass);
  bool found = false;
  for (const auto& e : brep.entries)
    if (e.quantity == "lipschitz_f_y") {
      found = true;
      CHECK_FALSE(e.pass);
      CHECK(e.measured > 1.0);
    }
  CHECK(found);
  CHECK_THROWS_AS((void)validate(*p1, 1), std::invalid_argument);
}

TEST_CASE("shipped problems satisfy their declared assumptions") {
  for (const char* name : {"P1", "P2", "P2d3", "P3", "P4"}) {
    const ProblemPtr p = library_problem(name);
    const ValidationReport rep = validate(*p, 400);
    INFO(name);
    CHECK(rep.all_pass);
  }
  CHECK_THROWS_AS((void)library_problem("P9"), std::invalid_argument);
}
