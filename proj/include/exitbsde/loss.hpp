#pragma once

#include "exitbsde/simulate.hpp"

#include <optional>

namespace exitbsde {

/// Positive multiplicative path weight, bounded below by `lower_bound()` and
/// bounded above (so every moment exists).
struct PathWeight {
  enum class Kind { Unit, ExpExitClamped, ConstantPlus };
  Kind kind = Kind::Unit;
  double rate = 0.0;   // ExpExitClamped: exp(rate * min(tau_bar, cap))
  double cap = 1.0;
  double ell = 1.0;    // ConstantPlus: ell + coeff * min(tau_bar, cap)
  double coeff = 0.0;

  static PathWeight unit();
  static PathWeight exp_exit_clamped(double rate, double cap);
  static PathWeight constant_plus(double ell, double coeff = 0.0, double cap = 1.0);

  double lower_bound() const;
  double evaluate(const GridPath& path) const;
};

/// The six-term per-step penalization at grid step k (requires k < exit_index):
///   U(X_{t+h}) - U(X_t) + f(X_t, U, sigma^T grad U) h - [grad U^T sigma] dW
///   - [mu^T hess U sigma] h dW - 0.5 dW^T [sigma^T hess U sigma] dW
///   + 0.5 tr[sigma^T hess U sigma] h.
double loss_summand(const CandidateFunction& u, const ProblemSpec& p, const GridPath& path,
                    long k);

/// Two-point generalization with arbitrary times and states; reduces
/// bit-for-bit to loss_summand for (s1,s2) = (t,t+h) on the grid states.
double two_point_loss(const CandidateFunction& u, const ProblemSpec& p, double s1, double s2,
                      const Vec& x1, const Vec& x2, const Vec& dw);

/// Exact overlap compensator of the split at s3 in [s1,s2]:
///   L_{s1,s2}(x1,x2) = L_{s1,s3}(x1,x3) + L_{s3,s2}(x3,x2) + R.
/// dwa = W_{s3}-W_{s1}, dwb = W_{s2}-W_{s3}.
double overlap_residual(const CandidateFunction& u, const ProblemSpec& p, double s1, double s2,
                        double s3, const Vec& x1, const Vec& x3, const Vec& dwa,
                        const Vec& dwb);

/// Split of step k at the interpolation exit theta:
///   pre  = L_{t^theta, (t+h)^theta} at the stopped interpolation states,
///   post = L_{t v theta, (t+h) v theta},
///   overlap = R on the straddling step.
/// Identity: 1{t<theta} pre + 1{theta<t+h} post + 1{straddle} R = summand.
struct StepDecomposition {
  double pre = 0.0;
  double post = 0.0;
  double overlap = 0.0;
  bool straddling = false;
};

StepDecomposition decomposition(const CandidateFunction& u, const ProblemSpec& p,
                                const GridPath& path, const RefinedPath& refined, long k);

/// Sum over k < exit_index of loss_summand(k)^2 (compensated accumulation).
double dynamical_loss(const CandidateFunction& u, const ProblemSpec& p, const GridPath& path);

/// |U - g|^2 at the discrete exit state. Throws on censored paths.
double boundary_loss(const CandidateFunction& u, const ProblemSpec& p, const GridPath& path);

// ---------------------------------------------------------------------------
// Monte Carlo estimation

struct LossReport {
  long long n_paths = 0;
  long long n_censored = 0;
  double boundary_mean = 0.0, boundary_se = 0.0;
  double dynamical_mean = 0.0, dynamical_se = 0.0;
  double weighted_total_mean = 0.0, weighted_total_se = 0.0;
};

struct PerPathRecord {
  long long path_id = 0;
  double tau_bar = 0.0;
  double boundary = 0.0;
  double dynamical = 0.0;
  double psi = 0.0;
  bool censored = false;
};

struct EstimateOptions {
  long long n_paths = 0;
  std::uint64_t seed = 0;
  Vec x0;
  bool x0_uniform = false;  // sample x0 uniformly in D instead of fixed x0
  double h = 0.0;
  long max_steps = 0;
  int threads = 1;
  std::vector<PerPathRecord>* dump = nullptr;  // optional per-path summaries
};

/// Simulates n paths and returns Monte Carlo estimates of E[Psi * boundary],
/// E[Psi * dynamical] and their sum. Deterministic given the seed, whatever
/// the worker count. Censored paths are excluded from the means and counted.
LossReport estimate_weighted_loss(const CandidateFunction& u, const ProblemSpec& p,
                                  const PathWeight& psi, const EstimateOptions& opts);

}  // namespace exitbsde
