#pragma once

#include "exitbsde/loss.hpp"
#include "exitbsde/rates.hpp"

namespace exitbsde {

/// First-order minimization of the empirical weighted loss over a parametric
/// candidate family. Paths are resampled every iteration from an
/// iteration-indexed seed; gradients use the same paths (common random
/// numbers).
struct TrainConfig {
  ProblemPtr problem;

  enum class Family { Net, Polynomial };
  Family family = Family::Net;
  int width = 16;       // hidden units (net family)
  int poly_degree = 2;  // full basis up to this total degree (polynomial family)

  double h = 0.0625;
  long long batch = 256;  // paths per iteration
  long iterations = 2000;
  double rate0 = 0.05;
  double decay = 0.999;  // geometric step-size decay

  enum class GradMode { ForwardSensitivity, CentralDifference };
  GradMode grad_mode = GradMode::ForwardSensitivity;
  double fd_step = 1e-5;  // central-difference step, in [1e-6, 1e-3]

  std::uint64_t seed = 0;
  PathWeight weight;
  long eval_every = 100;
  bool fixed_dataset = false;  // reuse iteration 0's paths every step (debugging)

  enum class Terms { Both, BoundaryOnly, DynamicalOnly };
  Terms terms = Terms::Both;

  Vec x0;
  bool x0_uniform = false;
  int threads = 1;
};

long param_count(const TrainConfig& cfg);

/// Deterministic initial parameter vector.
Eigen::VectorXd init_params(const TrainConfig& cfg);

/// Materializes the candidate for a parameter vector.
CandidatePtr make_candidate(const TrainConfig& cfg, const Eigen::VectorXd& params);

/// Weighted empirical loss over a freshly simulated batch (iteration-indexed
/// seed). Throws NumericError with the parameter norm on divergence.
double empirical_loss(const Eigen::VectorXd& params, const TrainConfig& cfg, long iteration);

/// Gradient of empirical_loss at fixed simulation randomness. Forward mode
/// propagates parameter derivatives through value/gradient/Hessian terms
/// analytically; FD mode uses coordinate-wise central differences.
Eigen::VectorXd param_gradient(const Eigen::VectorXd& params, const TrainConfig& cfg,
                               long iteration);

struct HistoryRow {
  long iteration = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double rate = 0.0;
  double sup_err = 0.0;  // sup |U - u| over sampled points (nan if u unknown)
  double dnorm = 0.0;    // |U - u|_D estimate (nan if u unknown)
  double c2_norm = 0.0;  // |U|_D estimate of the iterate
};

struct FitResult {
  Eigen::VectorXd params;
  CandidatePtr candidate;
  std::vector<HistoryRow> history;
  bool diverged = false;
  long iterations_run = 0;
};

FitResult fit(const TrainConfig& cfg);

/// sup |U - u| over a deterministic dense sample of the closed domain.
double sup_error(const CandidateFunction& u, const CandidateFunction& v, const Domain& domain,
                 long n_points = 2048);

}  // namespace exitbsde
