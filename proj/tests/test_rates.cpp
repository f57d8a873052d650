#include <doctest.h>

#include "exitbsde/rates.hpp"
#include "exitbsde/serialize.hpp"

using namespace exitbsde;

namespace {
Vec v1(double a) {
  Vec x(1);
  x[0] = a;
  return x;
}
}  // namespace

TEST_CASE("log-log fitter is exact on exact power laws") {
  std::vector<double> h, m1, mhalf;
  for (int e = 2; e <= 7; ++e) {
    const double hv = std::pow(2.0, -e);
    h.push_back(hv);
    m1.push_back(3.0 * hv);
    mhalf.push_back(0.7 * std::sqrt(hv));
  }
  const SlopeFit f1 = fit_loglog(h, m1);
  CHECK(std::abs(f1.slope - 1.0) <= 1e-10);
  CHECK(std::abs(f1.r_squared - 1.0) <= 1e-12);
  const SlopeFit f2 = fit_loglog(h, mhalf);
  CHECK(std::abs(f2.slope - 0.5) <= 1e-10);
}

TEST_CASE("rate study input validation") {
  const ProblemPtr p = library_problem("P1");
  RateStudyOptions opts;
  opts.n_paths = 100;
  opts.x0 = v1(0.0);
  opts.h_list = {0.25, 0.125};
  CHECK_THROWS_AS((void)run_rate_study(*p, *p->exact_solution, PathWeight::unit(),
                                       Quantity::dynamical(), opts),
                  std::invalid_argument);
  opts.h_list = {0.25, 0.2, 0.15};  // less than two octaves
  CHECK_THROWS_AS((void)run_rate_study(*p, *p->exact_solution, PathWeight::unit(),
                                       Quantity::dynamical(), opts),
                  std::invalid_argument);
}

TEST_CASE("quadratic cancellation yields the degenerate-zero verdict") {
  const ProblemPtr p = library_problem("P2");
  RateStudyOptions opts;
  opts.h_list = {0.25, 0.125, 0.0625};
  opts.n_paths = 200;
  opts.seed = 3;
  opts.x0 = Vec::Zero(2);
  const RateTable t = run_rate_study(*p, *p->exact_solution, PathWeight::unit(),
                                     Quantity::dynamical(), opts);
  CHECK(t.degenerate_zero);
  CHECK(t.verdict == "degenerate-zero");
}

TEST_CASE("imprecise rows trigger the insufficient-precision error") {
  const ProblemPtr p = library_problem("P1");
  const auto cand = std::make_shared<Perturbed>(
      p->exact_solution, 0.5,
      std::make_shared<Polynomial>(
          1, std::vector<Polynomial::Term>{Polynomial::term({3}, 1.0)}));
  RateStudyOptions opts;
  opts.h_list = {0.25, 0.125, 0.0625};
  opts.n_paths = 2;  // hopelessly noisy
  opts.seed = 1;
  opts.x0 = v1(0.0);
  CHECK_THROWS_AS((void)run_rate_study(*p, *cand, PathWeight::unit(),
                                       Quantity::boundary(), opts),
                  std::runtime_error);
}

TEST_CASE("rate tables serialize deterministically") {
  const ProblemPtr p = library_problem("P1");
  auto make = [&] {
    RateStudyOptions opts;
    opts.h_list = {0.25, 0.125, 0.0625};
    opts.n_paths = 500;
    opts.seed = 12;
    opts.x0 = v1(0.0);
    opts.target_exponent = 0.0;
    return run_rate_study(*p, *p->exact_solution, PathWeight::unit(), Quantity::boundary(),
                          opts);
  };
  const RateTable a = make();
  const RateTable b = make();
  CHECK(rate_table_to_csv(a) == rate_table_to_csv(b));
  CHECK(rate_table_to_json(a, "boundary").dump() == rate_table_to_json(b, "boundary").dump());
  CHECK(a.rows.front().h > a.rows.back().h);  // sorted by decreasing h
}

TEST_CASE("plateau ratios are near four under common random numbers") {
  const ProblemPtr p = library_problem("P4");
  const Polynomial bump(2, {Polynomial::term({1, 0}, 1.0), Polynomial::term({1, 1}, 0.5),
                            Polynomial::term({0, 2}, 0.5)});
  const PlateauTable t =
      plateau_study(*p, bump, {0.02, 0.04, 0.08}, 0.00390625, 2000, 9, Vec::Zero(2));
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].eps == 0.0);
  CHECK(t.baseline <= 1e-20);  // exact cancellation at eps = 0
  for (std::size_t i = 2; i < t.rows.size(); ++i) {
    CHECK(t.rows[i].ratio_to_prev >= 3.2);
    CHECK(t.rows[i].ratio_to_prev <= 4.8);
  }
  // dnorm of the perturbation scales linearly in eps.
  CHECK(t.rows[2].dnorm == doctest::Approx(2.0 * t.rows[1].dnorm).epsilon(1e-6));
}

TEST_CASE("wald identity: deterministic functional is exact") {
  const ProblemPtr p = library_problem("P1");
  const WaldReport rep =
      wald_test(*p, 0.125, WaldFunctional::constant_h(), 2000, 4, v1(0.0));
  CHECK(std::abs(rep.lhs_mean - rep.rhs_mean) <= 1e-12);
  CHECK(rep.pass);
}

TEST_CASE("wald identity holds for squared increments") {
  const ProblemPtr p = library_problem("P1");
  const WaldReport rep =
      wald_test(*p, 0.03125, WaldFunctional::squared_increment(), 20000, 6, v1(0.0));
  CHECK(rep.pass);
  CHECK(std::abs(rep.z_score) <= 3.0);
}

TEST_CASE("non-adapted functionals are rejected up front") {
  const ProblemPtr p = library_problem("P1");
  CHECK_THROWS_AS((void)wald_test(*p, 0.125, WaldFunctional::shifted_increment_probe(), 100,
                                  1, v1(0.0)),
                  std::invalid_argument);
}
