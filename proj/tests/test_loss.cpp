#include <doctest.h>

#include "exitbsde/errors.hpp"
#include "exitbsde/loss.hpp"
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

CandidatePtr bump2d() {
  return std::make_shared<Polynomial>(
      2, std::vector<Polynomial::Term>{Polynomial::term({1, 0}, 1.0),
                                       Polynomial::term({1, 1}, 0.5),
                                       Polynomial::term({0, 3}, 0.25)});
}

}  // namespace

TEST_CASE("constant candidate with vanishing driver gives zero summands") {
  const ProblemPtr p = brownian_1d([](const Vec&, double, const Vec&) { return 0.0; });
  const Polynomial c(1, {Polynomial::term({0}, 3.7)});
  const GridPath path = simulate_path(*p, v1(0.0), 0.125, RngStream(4, 0));
  for (long k = 0; k < path.exit_index; ++k) CHECK(loss_summand(c, *p, path, k) == 0.0);
}

TEST_CASE("hand expansion: U(x) = x leaves only the driver term") {
  // mu = 0, sigma = 1: value increment cancels the Brownian term exactly, so
  // the summand collapses to f(X_t) h.
  const ProblemPtr p =
      brownian_1d([](const Vec& x, double, const Vec&) { return x[0] * x[0] + 1.0; });
  const Polynomial lin(1, {Polynomial::term({1}, 1.0)});
  const GridPath path = simulate_path(*p, v1(0.0), 0.0625, RngStream(8, 1));
  for (long k = 0; k < path.exit_index; ++k) {
    const double x = path.states[static_cast<std::size_t>(k)][0];
    const double expected = (x * x + 1.0) * path.h;
    CHECK(std::abs(loss_summand(lin, *p, path, k) - expected) <= 1e-13);
  }
}

TEST_CASE("quadratic cancellation is exact on every path and step") {
  const ProblemPtr p = library_problem("P2");
  const CandidateFunction& u = *p->exact_solution;
  for (std::uint64_t id = 0; id < 100; ++id) {
    const GridPath path = simulate_path(*p, Vec::Zero(2), 0.03125, RngStream(42, id));
    for (long k = 0; k < path.exit_index; ++k)
      CHECK(std::abs(loss_summand(u, *p, path, k)) <= 1e-12);
    CHECK(dynamical_loss(u, *p, path) <= 1e-24);
  }
}

TEST_CASE("step index past the exit is rejected") {
  const ProblemPtr p = library_problem("P1");
  const GridPath path = simulate_path(*p, v1(0.0), 0.125, RngStream(4, 2));
  REQUIRE(path.exited);
  CHECK_THROWS_AS((void)loss_summand(*p->exact_solution, *p, path, path.exit_index),
                  std::out_of_range);
}

TEST_CASE("two-point loss: degenerate and grid specializations") {
  const ProblemPtr p = library_problem("P2");
  const auto cand = std::make_shared<Perturbed>(p->exact_solution, 0.4, bump2d());
  Vec x(2);
  x << 0.2, -0.3;
  CHECK(two_point_loss(*cand, *p, 1.0, 1.0, x, x, Vec::Zero(2)) == 0.0);
  CHECK_THROWS_AS((void)two_point_loss(*cand, *p, 1.0, 0.5, x, x, Vec::Zero(2)),
                  std::invalid_argument);

  const GridPath path = simulate_path(*p, Vec::Zero(2), 0.0625, RngStream(9, 3));
  for (long k = 0; k < path.exit_index; ++k) {
    const double t = static_cast<double>(k) * path.h;
    const double a = two_point_loss(*cand, *p, t, t + path.h,
                                    path.states[static_cast<std::size_t>(k)],
                                    path.states[static_cast<std::size_t>(k + 1)],
                                    path.increments[static_cast<std::size_t>(k)]);
    CHECK(a == loss_summand(*cand, *p, path, k));  // bit-for-bit
  }
}

TEST_CASE("triangle identity is exact for arbitrary split points") {
  const ProblemPtr p = library_problem("P3");  // variable sigma
  const auto cand = std::make_shared<Perturbed>(p->exact_solution, 0.8,
                                                SingleHiddenLayerNet::random_init(2, 6, 77));
  RngStream rng(314, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x1 = halton_in_domain(p->domain, 3 * trial);
    Vec x2 = halton_in_domain(p->domain, 3 * trial + 1);
    Vec x3 = halton_in_domain(p->domain, 3 * trial + 2);
    const double s1 = 0.5, s3 = 0.5 + 0.03 * (trial % 7), s2 = 0.75;
    Vec dwa(2), dwb(2);
    for (int i = 0; i < 2; ++i) {
      dwa[i] = 0.2 * rng.next_normal();
      dwb[i] = 0.2 * rng.next_normal();
    }
    const Vec dw = dwa + dwb;
    const double whole = two_point_loss(*cand, *p, s1, s2, x1, x2, dw);
    const double pre = two_point_loss(*cand, *p, s1, s3, x1, x3, dwa);
    const double post = two_point_loss(*cand, *p, s3, s2, x3, x2, dwb);
    const double r = overlap_residual(*cand, *p, s1, s2, s3, x1, x3, dwa, dwb);
    CHECK(std::abs(pre + post + r - whole) <= 1e-12);
  }
}

TEST_CASE("decomposition splits each step at the interpolation exit") {
  const ProblemPtr p = library_problem("P2");
  const auto cand = std::make_shared<Perturbed>(p->exact_solution, 0.3, bump2d());
  RefineOptions ro;
  ro.factor = 64;
  const std::uint64_t refine_key = derive_seed(55, "refine");
  long straddles = 0;
  for (std::uint64_t id = 0; id < 60; ++id) {
    const GridPath path = simulate_path(*p, Vec::Zero(2), 0.03125, RngStream(55, id));
    if (!path.exited) continue;
    const RefinedPath ref = refine_reference(path, *p, ro, refine_key);
    for (long k = 0; k < path.exit_index; ++k) {
      const StepDecomposition d = decomposition(*cand, *p, path, ref, k);
      const double t = static_cast<double>(k) * path.h;
      const double summand = loss_summand(*cand, *p, path, k);
      if (t + path.h <= ref.theta_time) {
        CHECK(d.pre == summand);
        CHECK(d.post == 0.0);
        CHECK(d.overlap == 0.0);
      } else if (ref.theta_time <= t) {
        CHECK(d.post == summand);
        CHECK(d.pre == 0.0);
      } else {
        ++straddles;
        CHECK(std::abs(d.pre + d.post + d.overlap - summand) <= 1e-10);
      }
    }
  }
  CHECK(straddles >= 30);
}

TEST_CASE("boundary loss measures the squared mismatch at the exit state") {
  // U(x) = x^2 against g(x) = x^2 - 1 at exit state 1.1: (1.21 - 0.21)^2 = 1.
  auto p = brownian_1d([](const Vec&, double, const Vec&) { return 0.0; });
  auto pg = std::make_shared<ProblemSpec>(*p);
  pg->g = [](const Vec& x) { return x[0] * x[0] - 1.0; };
  const Polynomial sq(1, {Polynomial::term({2}, 1.0)});

  GridPath path;
  path.x0 = v1(0.0);
  path.h = 0.25;
  path.dim = 1;
  path.states = {v1(0.0), v1(1.1)};
  path.increments = {v1(1.1)};
  path.exit_index = 1;
  path.exited = true;
  CHECK(boundary_loss(sq, *pg, path) == doctest::Approx(1.0).epsilon(1e-12));

  // U == g globally: zero boundary loss.
  const Polynomial gexact(1, {Polynomial::term({2}, 1.0), Polynomial::term({0}, -1.0)});
  CHECK(boundary_loss(gexact, *pg, path) == 0.0);

  path.exited = false;
  CHECK_THROWS_AS((void)boundary_loss(sq, *pg, path), CensoredError);
}

TEST_CASE("single-step path has a single squared summand") {
  const ProblemPtr p = library_problem("P1");
  const auto cand = std::make_shared<Polynomial>(
      1, std::vector<Polynomial::Term>{Polynomial::term({3}, 1.0)});
  std::vector<Vec> dws = {v1(1.7)};
  const GridPath path = simulate_path_with_increments(*p, v1(0.0), 0.25, dws);
  REQUIRE(path.exit_index == 1);
  const double s = loss_summand(*cand, *p, path, 0);
  CHECK(dynamical_loss(*cand, *p, path) == s * s);
}

TEST_CASE("weighting contracts: unit, clamped at zero rate, doubling, dominance") {
  const ProblemPtr p = library_problem("P2");
  const auto cand = std::make_shared<Perturbed>(p->exact_solution, 0.25, bump2d());
  EstimateOptions eo;
  eo.n_paths = 500;
  eo.seed = 77;
  eo.x0 = Vec::Zero(2);
  eo.h = 0.0625;

  const LossReport unit = estimate_weighted_loss(*cand, *p, PathWeight::unit(), eo);
  const LossReport lam0 =
      estimate_weighted_loss(*cand, *p, PathWeight::exp_exit_clamped(0.0, 1.0), eo);
  CHECK(unit.boundary_mean == lam0.boundary_mean);
  CHECK(unit.dynamical_mean == lam0.dynamical_mean);
  CHECK(unit.weighted_total_mean == lam0.weighted_total_mean);

  const LossReport dbl = estimate_weighted_loss(*cand, *p, PathWeight::constant_plus(2.0), eo);
  CHECK(dbl.boundary_mean == 2.0 * unit.boundary_mean);
  CHECK(dbl.dynamical_mean == 2.0 * unit.dynamical_mean);
  CHECK(dbl.weighted_total_mean == 2.0 * unit.weighted_total_mean);

  const LossReport hi =
      estimate_weighted_loss(*cand, *p, PathWeight::exp_exit_clamped(0.4, 2.0), eo);
  const LossReport lo =
      estimate_weighted_loss(*cand, *p, PathWeight::exp_exit_clamped(0.1, 2.0), eo);
  CHECK(hi.boundary_mean >= lo.boundary_mean);
  CHECK(hi.dynamical_mean >= lo.dynamical_mean);
  CHECK(hi.weighted_total_mean >= lo.weighted_total_mean);

  CHECK(std::abs(unit.weighted_total_mean - (unit.boundary_mean + unit.dynamical_mean)) <=
        1e-12);
}

TEST_CASE("per-path dumps carry the weight and respect its lower bound") {
  const ProblemPtr p = library_problem("P1");
  const PathWeight w = PathWeight::exp_exit_clamped(0.3, 1.5);
  std::vector<PerPathRecord> dump;
  EstimateOptions eo;
  eo.n_paths = 100;
  eo.seed = 5;
  eo.x0 = v1(0.0);
  eo.h = 0.125;
  eo.dump = &dump;
  const LossReport rep = estimate_weighted_loss(*p->exact_solution, *p, w, eo);
  CHECK(static_cast<long long>(dump.size()) == 100);
  for (const auto& r : dump)
    if (!r.censored) CHECK(r.psi >= w.lower_bound());
  CHECK(rep.n_paths + rep.n_censored == 100);
}

TEST_CASE("uniform starting points stay inside the domain") {
  const ProblemPtr p = library_problem("P2");
  EstimateOptions eo;
  eo.n_paths = 200;
  eo.seed = 9;
  eo.x0_uniform = true;
  eo.h = 0.0625;
  const LossReport rep =
      estimate_weighted_loss(*p->exact_solution, *p, PathWeight::unit(), eo);
  CHECK(rep.n_paths + rep.n_censored == 200);
  CHECK(rep.dynamical_mean <= 1e-24);  // cancellation must survive random starts
}

TEST_CASE("overlap residual obeys the calibrated pathwise bound") {
  // |R|^2 <= C (h^2 + sup_{r,s in [t,t+h]} |W_s - W_r|^4) on straddling steps,
  // with one C for every h: the observed ratio must not grow as h shrinks.
  const ProblemPtr p = library_problem("P3");
  const auto cand = std::make_shared<Perturbed>(p->exact_solution, 0.5, bump2d());
  RefineOptions ro;
  ro.factor = 16;
  ro.keep_fine = true;

  auto max_ratio = [&](double h, std::uint64_t seed, long target) {
    double worst = 0.0;
    long n = 0;
    for (std::uint64_t id = 0; n < target && id < 4 * static_cast<std::uint64_t>(target);
         ++id) {
      const GridPath path =
          simulate_path(*p, Vec::Zero(2), h, RngStream(derive_seed(seed, "simulate"), id));
      if (!path.exited) continue;
      const RefinedPath ref = refine_reference(path, *p, ro, derive_seed(seed, "refine"));
      const long k = ref.theta_step;
      const double t = static_cast<double>(k) * h;
      if (!(t < ref.theta_time && ref.theta_time < t + h)) continue;
      const Vec dwa = ref.w_theta_rel;
      const Vec dwb = path.increments[static_cast<std::size_t>(k)] - dwa;
      const double r = overlap_residual(*cand, *p, t, t + h, ref.theta_time,
                                        path.states[static_cast<std::size_t>(k)],
                                        ref.xc_theta, dwa, dwb);
      double sup_w = 0.0;
      const auto& woffs = ref.w_offsets[static_cast<std::size_t>(k)];
      for (std::size_t a = 0; a < woffs.size(); ++a) {
        sup_w = std::max(sup_w, woffs[a].norm());
        for (std::size_t b = a + 1; b < woffs.size(); ++b)
          sup_w = std::max(sup_w, (woffs[b] - woffs[a]).norm());
      }
      worst = std::max(worst, (r * r) / (h * h + sup_w * sup_w * sup_w * sup_w));
      ++n;
    }
    REQUIRE(n >= target);
    return worst;
  };

  const double m16 = max_ratio(1.0 / 16, 1001, 400);
  const double m32 = max_ratio(1.0 / 32, 2002, 400);
  const double m64 = max_ratio(1.0 / 64, 3003, 400);
  const double c_cal = 3.0 * m16;
  CHECK(m32 <= c_cal);
  CHECK(m64 <= c_cal);
}

TEST_CASE("decomposition requires an available interpolation exit") {
  const ProblemPtr p = library_problem("P1");
  const GridPath path = simulate_path(*p, v1(0.0), 0.125, RngStream(6, 0));
  REQUIRE(path.exited);
  RefinedPath no_theta;
  no_theta.theta_found = false;
  CHECK_THROWS_AS((void)decomposition(*p->exact_solution, *p, path, no_theta, 0),
                  CensoredError);
  CHECK_THROWS_AS((void)decomposition(*p->exact_solution, *p, path, no_theta,
                                      path.exit_index),
                  std::out_of_range);
}
