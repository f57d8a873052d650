#pragma once

#include "exitbsde/geometry.hpp"
#include "exitbsde/linalg.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace exitbsde {

struct EvalTriple {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

/// A twice-differentiable scalar field U with analytic value / gradient /
/// Hessian. All variants are globally defined (the loss evaluates U slightly
/// outside the closed domain at the discrete exit state) and immutable, hence
/// freely shareable between threads.
class CandidateFunction {
 public:
  virtual ~CandidateFunction() = default;
  virtual int dimension() const = 0;
  virtual const char* kind() const = 0;
  virtual double value(const Vec& x) const = 0;
  /// One coherent snapshot of (value, gradient, Hessian) at x.
  virtual void eval_all(const Vec& x, double& v, Vec& g, Mat& h) const = 0;
};

using CandidatePtr = std::shared_ptr<const CandidateFunction>;

/// Checked snapshot: throws NumericError naming the variant on non-finite
/// output.
EvalTriple eval_with_derivatives(const CandidateFunction& u, const Vec& x);

// ---------------------------------------------------------------------------
// Variants

/// Multi-index coefficient table: sum of c * prod_i x_i^{e_i}.
class Polynomial final : public CandidateFunction {
 public:
  struct Term {
    std::array<int, kMaxDim> exponents{};
    double coeff = 0.0;
  };

  Polynomial(int dim, std::vector<Term> terms);

  int dimension() const override { return dim_; }
  const char* kind() const override { return "polynomial"; }
  double value(const Vec& x) const override;
  void eval_all(const Vec& x, double& v, Vec& g, Mat& h) const override;

  const std::vector<Term>& terms() const { return terms_; }

  static Term term(std::initializer_list<int> exps, double coeff);
  static std::shared_ptr<Polynomial> zero(int dim);

 private:
  int dim_;
  std::vector<Term> terms_;
};

/// tanh and its derivatives through order three (the trainer differentiates
/// Hessian terms with respect to the parameters).
struct TanhActivation {
  static void stack(double z, double& a, double& a1, double& a2, double& a3) {
    a = std::tanh(z);
    const double s = 1.0 - a * a;
    a1 = s;
    a2 = -2.0 * a * s;
    a3 = -2.0 * s * (1.0 - 3.0 * a * a);
  }
};

/// U(x) = w2 . act(W1 x + b1) + b2.
class SingleHiddenLayerNet final : public CandidateFunction {
 public:
  SingleHiddenLayerNet(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::VectorXd w2, double b2);

  int dimension() const override { return static_cast<int>(w1_.cols()); }
  const char* kind() const override { return "net"; }
  double value(const Vec& x) const override;
  void eval_all(const Vec& x, double& v, Vec& g, Mat& h) const override;

  int width() const { return static_cast<int>(w1_.rows()); }
  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::VectorXd& w2() const { return w2_; }
  double b2() const { return b2_; }

  /// Per-unit pre-activations and activation derivative stack at x.
  struct Units {
    Eigen::VectorXd z, a, a1, a2, a3;
  };
  void units(const Vec& x, Units& u) const;

  /// Deterministic small random initialization.
  static std::shared_ptr<SingleHiddenLayerNet> random_init(int dim, int width,
                                                           std::uint64_t seed,
                                                           double scale = 0.5);

 private:
  Eigen::MatrixXd w1_;
  Eigen::VectorXd b1_, w2_;
  double b2_;
};

/// base + eps * bump, componentwise in (value, gradient, Hessian).
class Perturbed final : public CandidateFunction {
 public:
  Perturbed(CandidatePtr base, double eps, CandidatePtr bump);
  int dimension() const override { return base_->dimension(); }
  const char* kind() const override { return "perturbed"; }
  double value(const Vec& x) const override;
  void eval_all(const Vec& x, double& v, Vec& g, Mat& h) const override;

 private:
  CandidatePtr base_;
  double eps_;
  CandidatePtr bump_;
};

/// Closed-form u supplied as callables (used by the manufactured problems).
class ExactWrapper final : public CandidateFunction {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<void(const Vec&, Vec&)>;
  using HessFn = std::function<void(const Vec&, Mat&)>;

  ExactWrapper(int dim, std::string name, ValueFn v, GradFn g, HessFn h);
  int dimension() const override { return dim_; }
  const char* kind() const override { return name_.c_str(); }
  double value(const Vec& x) const override { return v_(x); }
  void eval_all(const Vec& x, double& v, Vec& g, Mat& h) const override;

 private:
  int dim_;
  std::string name_;
  ValueFn v_;
  GradFn g_;
  HessFn h_;
};

// ---------------------------------------------------------------------------
// Distance and self-checks

/// Sampled lower bound of sup_{closed domain} |U-V| + |grad U - grad V| +
/// |hess U - hess V|_spec, with local pattern-search refinement around the
/// best sample.
struct DistanceEstimate {
  double value = 0.0;
  Vec argmax_point;
  long n_samples = 0;
  int refinement_levels = 0;
};

DistanceEstimate dnorm_distance(const CandidateFunction& u, const CandidateFunction& v,
                                const Domain& domain, long budget);

/// Central finite-difference check of grad/hess against eval_all.
struct FdReport {
  double max_rel_grad = 0.0;
  double max_rel_hess = 0.0;
  bool pass = false;
};

FdReport fd_check(const CandidateFunction& u, const std::vector<Vec>& points,
                  double tol = 1e-6);

/// Second-order Taylor remainder bounds on sampled pairs: calibrates C from
/// sampled third differences, then verifies
///   |U(x1)-U(x2)-grad.(x1-x2)-0.5 (x1-x2)'H(x1-x2)| <= C |x1-x2|^3
///   |grad U(x1)-grad U(x2)-H(x2)(x1-x2)|            <= C2 |x1-x2|^2.
struct TaylorReport {
  double c_value = 0.0;   // calibrated bound for the value remainder
  double c_grad = 0.0;    // calibrated bound for the gradient remainder
  double worst_value_ratio = 0.0;
  double worst_grad_ratio = 0.0;
  long n_pairs = 0;
  bool pass = false;
};

TaylorReport taylor_remainder_check(const CandidateFunction& u, const Domain& domain,
                                    long n_pairs, std::uint64_t seed);

}  // namespace exitbsde
