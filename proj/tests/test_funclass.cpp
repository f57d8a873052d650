#include <doctest.h>

#include "exitbsde/errors.hpp"
#include "exitbsde/funclass.hpp"
#include "exitbsde/rng.hpp"
#include "exitbsde/sampling.hpp"
#include "exitbsde/serialize.hpp"

using namespace exitbsde;

namespace {

Vec v1(double a) {
  Vec x(1);
  x[0] = a;
  return x;
}

std::shared_ptr<Polynomial> square1d() {
  return std::make_shared<Polynomial>(
      1, std::vector<Polynomial::Term>{Polynomial::term({2}, 1.0)});
}

std::shared_ptr<Polynomial> cubic2d() {
  return std::make_shared<Polynomial>(
      2, std::vector<Polynomial::Term>{Polynomial::term({3, 0}, 1.0),
                                       Polynomial::term({0, 3}, -0.5),
                                       Polynomial::term({1, 1}, 2.0),
                                       Polynomial::term({0, 0}, 0.25)});
}

/// Test double: corrupts one Hessian entry of a base function.
class CorruptedHessian final : public CandidateFunction {
 public:
  explicit CorruptedHessian(CandidatePtr base) : base_(std::move(base)) {}
  int dimension() const override { return base_->dimension(); }
  const char* kind() const override { return "corrupted"; }
  double value(const Vec& x) const override { return base_->value(x); }
  void eval_all(const Vec& x, double& v, Vec& g, Mat& h) const override {
    base_->eval_all(x, v, g, h);
    h(0, 0) += 0.1;
  }

 private:
  CandidatePtr base_;
};

}  // namespace

TEST_CASE("polynomial snapshot: x^2 at x=3") {
  const auto u = square1d();
  const EvalTriple t = eval_with_derivatives(*u, v1(3.0));
  CHECK(t.value == 9.0);
  CHECK(t.grad[0] == 6.0);
  CHECK(t.hess(0, 0) == 2.0);
}

TEST_CASE("dead output layer gives a constant net") {
  Eigen::MatrixXd w1(3, 2);
  w1.setRandom();
  Eigen::VectorXd b1 = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd w2 = Eigen::VectorXd::Zero(3);
  const SingleHiddenLayerNet net(w1, b1, w2, 1.75);
  Vec x(2);
  x << 0.3, -0.8;
  const EvalTriple t = eval_with_derivatives(net, x);
  CHECK(t.value == 1.75);
  CHECK(t.grad.norm() == 0.0);
  CHECK(t.hess.norm() == 0.0);
}

TEST_CASE("perturbed is componentwise base + eps * bump") {
  const auto base = cubic2d();
  const auto bump = SingleHiddenLayerNet::random_init(2, 5, 11);
  const Perturbed pert(base, 0.37, bump);
  Vec x(2);
  x << 0.4, -0.2;
  const EvalTriple tp = eval_with_derivatives(pert, x);
  const EvalTriple tb = eval_with_derivatives(*base, x);
  const EvalTriple tn = eval_with_derivatives(*bump, x);
  CHECK(tp.value == doctest::Approx(tb.value + 0.37 * tn.value).epsilon(1e-15));
  CHECK((tp.grad - (tb.grad + 0.37 * tn.grad)).norm() <= 1e-14);
  CHECK((tp.hess - (tb.hess + 0.37 * tn.hess)).norm() <= 1e-14);
}

TEST_CASE("hessians are symmetric") {
  const auto net = SingleHiddenLayerNet::random_init(3, 7, 5);
  for (long i = 0; i < 50; ++i) {
    const Vec x = halton_in_domain(Domain::ball(Vec::Zero(3), 1.5), i);
    const EvalTriple t = eval_with_derivatives(*net, x);
    CHECK((t.hess - t.hess.transpose()).norm() <= 1e-10);
  }
}

TEST_CASE("non-finite evaluation names the variant") {
  const ExactWrapper bad(
      1, "bad", [](const Vec&) { return std::numeric_limits<double>::infinity(); },
      [](const Vec&, Vec& g) { g.setZero(1); }, [](const Vec&, Mat& h) { h.setZero(1, 1); });
  CHECK_THROWS_WITH_AS((void)eval_with_derivatives(bad, v1(0)),
                       doctest::Contains("bad"), NumericError);
}

TEST_CASE("finite differences confirm analytic derivatives") {
  const Domain ball2 = Domain::ball(Vec::Zero(2), 1.0);
  std::vector<Vec> pts;
  for (long i = 0; i < 40; ++i) pts.push_back(halton_in_domain(ball2, i));

  const FdReport poly = fd_check(*cubic2d(), pts);
  CHECK(poly.pass);
  CHECK(poly.max_rel_grad <= 1e-7);
  CHECK(poly.max_rel_hess <= 1e-7);

  const auto net = SingleHiddenLayerNet::random_init(2, 9, 7);
  const FdReport netrep = fd_check(*net, pts);
  CHECK(netrep.pass);
  CHECK(netrep.max_rel_grad <= 1e-6);
  CHECK(netrep.max_rel_hess <= 1e-6);

  const CorruptedHessian corrupted(cubic2d());
  CHECK_FALSE(fd_check(corrupted, pts).pass);
}

TEST_CASE("dnorm distance: exact cases") {
  const Domain itv = Domain::interval(-1.0, 1.0);
  const auto u = square1d();
  CHECK(dnorm_distance(*u, *u, itv, 200).value == 0.0);

  // V = U + c: only the value term survives.
  const Polynomial vc(1, {Polynomial::term({2}, 1.0), Polynomial::term({0}, 0.7)});
  CHECK(dnorm_distance(*u, vc, itv, 200).value == doctest::Approx(0.7).epsilon(1e-12));

  // V = U + eps x: sup of eps |x| + eps at |x| = 1.
  const double eps = 0.01;
  const Polynomial vlin(1, {Polynomial::term({2}, 1.0), Polynomial::term({1}, eps)});
  const DistanceEstimate est = dnorm_distance(*u, vlin, itv, 500);
  CHECK(est.value == doctest::Approx(2.0 * eps).epsilon(0.01));
  CHECK(std::abs(std::abs(est.argmax_point[0]) - 1.0) <= 0.01);
}

TEST_CASE("dnorm distance is symmetric and monotone in the budget") {
  const Domain ball2 = Domain::ball(Vec::Zero(2), 1.0);
  const auto u = cubic2d();
  const auto v = SingleHiddenLayerNet::random_init(2, 6, 3);
  const DistanceEstimate uv = dnorm_distance(*u, *v, ball2, 300);
  const DistanceEstimate vu = dnorm_distance(*v, *u, ball2, 300);
  CHECK(uv.value == vu.value);
  const DistanceEstimate small = dnorm_distance(*u, *v, ball2, 300);
  const DistanceEstimate large = dnorm_distance(*u, *v, ball2, 3000);
  CHECK(large.value >= small.value - 1e-12);
  CHECK_THROWS_AS((void)dnorm_distance(*u, *v, ball2, 50), std::invalid_argument);
}

TEST_CASE("taylor remainder bounds hold on sampled pairs") {
  const Domain ball2 = Domain::ball(Vec::Zero(2), 1.0);
  CHECK(taylor_remainder_check(*cubic2d(), ball2, 500, 1).pass);
  const auto net = SingleHiddenLayerNet::random_init(2, 8, 21);
  CHECK(taylor_remainder_check(*net, ball2, 500, 2).pass);
}

TEST_CASE("polynomial and net serialization round-trips") {
  const auto poly = cubic2d();
  const CandidatePtr poly2 = candidate_from_json(candidate_to_json(*poly));
  const auto net = SingleHiddenLayerNet::random_init(2, 5, 99);
  const CandidatePtr net2 = candidate_from_json(candidate_to_json(*net));
  for (long i = 0; i < 25; ++i) {
    const Vec x = halton_in_domain(Domain::ball(Vec::Zero(2), 1.2), i);
    CHECK(poly->value(x) == poly2->value(x));
    CHECK(net->value(x) == net2->value(x));
  }
}
