#include <doctest.h>

#include "exitbsde/errors.hpp"
#include "exitbsde/mc.hpp"
#include "exitbsde/simulate.hpp"

using namespace exitbsde;

namespace {

Vec v1(double a) {
  Vec x(1);
  x[0] = a;
  return x;
}

ProblemPtr drift_only_1d(double mu, double sigma) {
  auto p = std::make_shared<ProblemSpec>();
  p->name = "drift";
  p->dim = 1;
  p->domain = Domain::interval(-1, 1);
  p->const_coeffs = true;
  p->mu_const = mu * Vec::Ones(1);
  p->sigma_const = sigma * Mat::Identity(1, 1);
  p->mu = [mu](const Vec&, Vec& out) { out = mu * Vec::Ones(1); };
  p->sigma = [sigma](const Vec&, Mat& out) { out = sigma * Mat::Identity(1, 1); };
  p->f = [](const Vec&, double, const Vec&) { return 0.0; };
  p->g = [](const Vec&) { return 0.0; };
  return p;
}

}  // namespace

TEST_CASE("zero increments with zero drift give a censored constant path") {
  const ProblemPtr p = drift_only_1d(0.0, 1.0);
  std::vector<Vec> dws(10, Vec::Zero(1));
  const GridPath path = simulate_path_with_increments(*p, v1(0.0), 0.25, dws);
  CHECK_FALSE(path.exited);
  CHECK(path.exit_index == 10);
  for (const Vec& s : path.states) CHECK(s[0] == 0.0);
}

TEST_CASE("one-step exit arithmetic") {
  const ProblemPtr p = drift_only_1d(0.0, 1.0);
  std::vector<Vec> dws = {v1(1.5)};
  const GridPath path = simulate_path_with_increments(*p, v1(0.0), 0.0625, dws);
  CHECK(path.exited);
  CHECK(path.exit_index == 1);
  CHECK(path.states[0][0] == 0.0);
  CHECK(path.states[1][0] == 1.5);
  CHECK(path.tau_bar() == 0.0625);
}

TEST_CASE("deterministic drift exits exactly at the boundary") {
  const ProblemPtr p = drift_only_1d(1.0, 0.0);
  const GridPath path = simulate_path(*p, v1(0.0), 0.25, RngStream(1, 0));
  CHECK(path.exited);
  CHECK(path.exit_index == 4);           // 0 -> .25 -> .5 -> .75 -> 1.0, boundary excluded
  CHECK(path.states[4][0] == 1.0);
  CHECK(path.tau_bar() == 1.0);
}

TEST_CASE("start must lie in the open domain") {
  const ProblemPtr p = drift_only_1d(0.0, 1.0);
  CHECK_THROWS_AS((void)simulate_path(*p, v1(1.0), 0.25, RngStream(1, 0)),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)simulate_path(*p, v1(0.0), 1.5, RngStream(1, 0)),
                  std::invalid_argument);
}

TEST_CASE("states are recomputable bit-for-bit from the increments") {
  const ProblemPtr p = library_problem("P2");
  const GridPath path = simulate_path(*p, Vec::Zero(2), 0.03125, RngStream(99, 5));
  const GridPath replay =
      simulate_path_with_increments(*p, path.x0, path.h, path.increments);
  REQUIRE(replay.states.size() == path.states.size());
  for (std::size_t k = 0; k < path.states.size(); ++k)
    CHECK((replay.states[k] - path.states[k]).norm() == 0.0);
  CHECK(replay.exit_index == path.exit_index);
}

TEST_CASE("same stream spec reproduces the identical path") {
  const ProblemPtr p = library_problem("P1");
  const GridPath a = simulate_path(*p, v1(0.0), 0.03125, RngStream(7, 123));
  const GridPath b = simulate_path(*p, v1(0.0), 0.03125, RngStream(7, 123));
  REQUIRE(a.steps() == b.steps());
  for (long k = 0; k < a.steps(); ++k)
    CHECK(a.increments[static_cast<std::size_t>(k)][0] ==
          b.increments[static_cast<std::size_t>(k)][0]);
}

TEST_CASE("refinement rejects degenerate factors") {
  const ProblemPtr p = library_problem("P1");
  const GridPath path = simulate_path(*p, v1(0.0), 0.125, RngStream(3, 0));
  RefineOptions ro;
  ro.factor = 1;
  CHECK_THROWS_AS((void)refine_reference(path, *p, ro, 1), std::invalid_argument);
  ro.factor = 48;
  CHECK_THROWS_AS((void)refine_reference(path, *p, ro, 1), std::invalid_argument);
}

TEST_CASE("bridge sub-increments sum to the parent increment") {
  const ProblemPtr p = library_problem("P2");
  const GridPath path = simulate_path(*p, Vec::Zero(2), 0.0625, RngStream(11, 2));
  RefineOptions ro;
  ro.factor = 16;
  ro.keep_fine = true;
  const RefinedPath ref = refine_reference(path, *p, ro, derive_seed(11, "refine"));
  REQUIRE(static_cast<long>(ref.sub_increments.size()) == path.steps());
  for (long k = 0; k < path.steps(); ++k) {
    Vec sum = Vec::Zero(2);
    for (const Vec& s : ref.sub_increments[static_cast<std::size_t>(k)]) sum += s;
    CHECK((sum - path.increments[static_cast<std::size_t>(k)]).norm() <= 1e-12);
  }
}

TEST_CASE("deterministic drift: refined exit matches the analytic crossing") {
  const ProblemPtr p = drift_only_1d(1.0, 0.0);
  const GridPath path = simulate_path(*p, v1(0.0), 0.25, RngStream(1, 0));
  RefineOptions ro;
  ro.factor = 8;
  const RefinedPath ref = refine_reference(path, *p, ro, 17);
  CHECK_FALSE(ref.reference_censored);
  CHECK(std::abs(ref.tau_ref - 1.0) <= 0.25 / 8 + 1e-12);
  CHECK(ref.theta_found);
  CHECK(std::abs(ref.theta_time - 1.0) <= 0.25 / 8 + 1e-12);
}

TEST_CASE("interpolation exit never exceeds the discrete exit") {
  const ProblemPtr p = library_problem("P2");
  RefineOptions ro;
  ro.factor = 32;
  const std::uint64_t refine_key = derive_seed(5, "refine");
  for (std::uint64_t id = 0; id < 50; ++id) {
    const GridPath path = simulate_path(*p, Vec::Zero(2), 0.0625, RngStream(5, id));
    if (!path.exited) continue;
    const RefinedPath ref = refine_reference(path, *p, ro, refine_key);
    CHECK(ref.theta_found);
    CHECK(ref.theta_time <= ref.tau_bar);
    CHECK(ref.theta_plus <= ref.tau_bar);
    CHECK(ref.theta_time > 0.0);
  }
}

TEST_CASE("stopped-increment bound holds pathwise on refined paths") {
  const ProblemPtr p = library_problem("P3");  // variable sigma, sup = 1.25, mu = 0
  RefineOptions ro;
  ro.factor = 8;
  ro.keep_fine = true;
  const double h = 0.0625;
  const double sup_mu = p->constants.sup_mu;
  const double sup_sigma = p->constants.sup_sigma;
  for (std::uint64_t id = 0; id < 20; ++id) {
    const GridPath path = simulate_path(*p, Vec::Zero(2), h, RngStream(21, id));
    const RefinedPath ref = refine_reference(path, *p, ro, derive_seed(21, "refine"));
    for (long k = 0; k + 1 < path.exit_index; ++k) {  // steps strictly before the exit
      const Vec& base = path.states[static_cast<std::size_t>(k)];
      const auto& nodes = ref.frozen_nodes[static_cast<std::size_t>(k)];
      const auto& woffs = ref.w_offsets[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double dx = (nodes[j] - base).norm();
        const double dwn = woffs[j].norm();
        for (int q : {1, 2, 4}) {
          const double lhs = std::pow(dx, q);
          const double rhs = std::pow(2.0, q - 1) * (std::pow(sup_mu * h, q) +
                                                     std::pow(sup_sigma * dwn, q));
          CHECK(lhs <= rhs + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("exit statistics: forced agreement gives a zero table") {
  std::vector<RefinedPath> paths(3);
  for (auto& rp : paths) {
    rp.parent_exited = true;
    rp.reference_censored = false;
    rp.tau_bar = 0.5;
    rp.tau_ref = 0.5;
    rp.theta_plus = 0.5;
    rp.xbar_exit = v1(1.0);
    rp.x_tau_ref = v1(1.0);
  }
  const ExitTable t = exit_statistics(paths, {1, 2});
  CHECK(t.tau_error[0].mean == 0.0);
  CHECK(t.tau_error[1].mean == 0.0);
  CHECK(t.space_mean == 0.0);
  CHECK(t.theta_gap_mean == 0.0);
  CHECK_THROWS_AS((void)exit_statistics({}, {1}), std::invalid_argument);
}

TEST_CASE("mean exit time agrees with the ODE oracle") {
  const ProblemPtr p = library_problem("P1");
  const double h = 0.03125;
  RefineOptions ro;
  ro.factor = 16;
  MeanAcc tau;
  const std::uint64_t sim_key = derive_seed(31, "simulate");
  const std::uint64_t refine_key = derive_seed(31, "refine");
  for (std::uint64_t id = 0; id < 3000; ++id) {
    const GridPath path = simulate_path(*p, v1(0.0), h, RngStream(sim_key, id));
    if (!path.exited) continue;
    const RefinedPath ref = refine_reference(path, *p, ro, refine_key);
    if (ref.reference_censored) continue;
    tau.add(ref.tau_ref);
    CHECK(ref.tau_bar - ref.theta_plus >= 0.0);
  }
  // Oracle: solve (1/2) v'' = -1 on (-1,1) with v(+-1) = 0, so E[tau^0] = 1.
  const double tol = 4.0 * tau.stderr_of_mean() + 2.0 * std::sqrt(h);
  CHECK(std::abs(tau.mean() - 1.0) <= tol);
}

TEST_CASE("paths that cannot exit are censored and flagged") {
  auto p = std::make_shared<ProblemSpec>();
  p->dim = 1;
  p->domain = Domain::interval(-100.0, 100.0);
  p->const_coeffs = true;
  p->mu_const = Vec::Zero(1);
  p->sigma_const = 1e-8 * Mat::Identity(1, 1);
  p->mu = [](const Vec&, Vec& out) { out = Vec::Zero(1); };
  p->sigma = [](const Vec&, Mat& out) { out = 1e-8 * Mat::Identity(1, 1); };
  p->f = [](const Vec&, double, const Vec&) { return 0.0; };
  p->g = [](const Vec&) { return 0.0; };
  const GridPath path = simulate_path(*p, v1(0.0), 0.25, RngStream(1, 0), 20);
  CHECK_FALSE(path.exited);
  CHECK(path.steps() == 20);
  RefineOptions ro;
  ro.factor = 4;
  const RefinedPath ref = refine_reference(path, *p, ro, 3);
  CHECK(ref.reference_censored);
}

TEST_CASE("exit-error statistics are stable in the refinement factor") {
  const ProblemPtr p = library_problem("P1");
  const double h = 0.0625;
  auto sweep = [&](int factor) {
    MeanAcc acc;
    RefineOptions ro;
    ro.factor = factor;
    const std::uint64_t sim_key = derive_seed(61, "simulate");
    const std::uint64_t refine_key = derive_seed(61, "refine");
    for (std::uint64_t id = 0; id < 2000; ++id) {
      const GridPath path = simulate_path(*p, v1(0.0), h, RngStream(sim_key, id));
      if (!path.exited) continue;
      const RefinedPath ref = refine_reference(path, *p, ro, refine_key);
      if (ref.reference_censored) continue;
      acc.add(std::abs(ref.tau_ref - ref.tau_bar));
    }
    return acc;
  };
  const MeanAcc a = sweep(32);
  const MeanAcc b = sweep(128);
  const double se = std::sqrt(a.stderr_of_mean() * a.stderr_of_mean() +
                              b.stderr_of_mean() * b.stderr_of_mean());
  CHECK(std::abs(a.mean() - b.mean()) <= 4.0 * se + 2.0 * h / 32.0);
}

TEST_CASE("bridge sub-increments have brownian marginals") {
  // Unconditionally (random parent increment), every fine sub-increment is
  // N(0, h/R) and distinct sub-increments are uncorrelated.
  const ProblemPtr p = library_problem("P1");
  const double h = 0.25;
  const int factor = 8;
  RefineOptions ro;
  ro.factor = factor;
  ro.keep_fine = true;
  MeanAcc m, v, cross, qv;
  const std::uint64_t sim_key = derive_seed(71, "simulate");
  const std::uint64_t refine_key = derive_seed(71, "refine");
  for (std::uint64_t id = 0; id < 4000; ++id) {
    const GridPath path = simulate_path(*p, v1(0.0), h, RngStream(sim_key, id));
    if (path.steps() < 1) continue;
    const RefinedPath ref = refine_reference(path, *p, ro, refine_key);
    const auto& subs = ref.sub_increments[0];
    double q = 0.0;
    for (int j = 0; j < factor; ++j) {
      m.add(subs[static_cast<std::size_t>(j)][0]);
      v.add(subs[static_cast<std::size_t>(j)][0] * subs[static_cast<std::size_t>(j)][0]);
      q += subs[static_cast<std::size_t>(j)][0] * subs[static_cast<std::size_t>(j)][0];
    }
    cross.add(subs[0][0] * subs[3][0]);
    cross.add(subs[1][0] * subs[6][0]);
    qv.add(q);
  }
  const double dt = h / factor;
  CHECK(std::abs(m.mean()) <= 4.0 * m.stderr_of_mean() + 1e-12);
  CHECK(std::abs(v.mean() - dt) <= 4.0 * v.stderr_of_mean());
  CHECK(std::abs(cross.mean()) <= 4.0 * cross.stderr_of_mean() + 1e-12);
  // Quadratic variation of the step concentrates at h.
  CHECK(std::abs(qv.mean() - h) <= 4.0 * qv.stderr_of_mean());
}
