#pragma once

#include "exitbsde/loss.hpp"

#include <string>

namespace exitbsde {

/// What a stepsize sweep estimates per h.
struct Quantity {
  enum class Kind { Boundary, Dynamical, ExitError, SpaceError };
  Kind kind = Kind::Dynamical;
  int p = 1;  // moment order for ExitError

  static Quantity boundary() { return {Kind::Boundary, 1}; }
  static Quantity dynamical() { return {Kind::Dynamical, 1}; }
  static Quantity exit_error(int p) { return {Kind::ExitError, p}; }
  static Quantity space_error() { return {Kind::SpaceError, 1}; }
  std::string label() const;
};

struct RateRow {
  double h = 0.0;
  double mean = 0.0;
  double se = 0.0;
  long long n_paths = 0;
  long long n_censored = 0;
  bool used_in_fit = false;
};

/// Per-stepsize estimates with a log-log OLS slope over rows whose relative
/// standard error is at most 10%.
struct RateTable {
  std::vector<RateRow> rows;  // sorted by decreasing h
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double target_exponent = 0.0;
  bool degenerate_zero = false;  // every mean exactly zero: no slope to fit
  std::string verdict;           // "pass" / "fail" / "degenerate-zero"
  bool pass = false;
};

struct RateStudyOptions {
  std::vector<double> h_list;  // >= 3 values spanning >= 2 dyadic octaves
  long long n_paths = 0;
  std::uint64_t seed = 0;
  Vec x0;
  bool x0_uniform = false;
  int threads = 1;
  int refine_factor = 64;      // for exit/space quantities
  double target_exponent = 0.0;
  double slope_tolerance = 0.15;  // pass iff slope >= target - tolerance
  double max_rel_se = 0.10;
};

RateTable run_rate_study(const ProblemSpec& p, const CandidateFunction& u,
                         const PathWeight& psi, Quantity quantity,
                         const RateStudyOptions& opts);

/// Ordinary least squares of log(mean) on log(h); exact for exact power laws.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long n_used = 0;
};
SlopeFit fit_loglog(const std::vector<double>& h, const std::vector<double>& mean);

// ---------------------------------------------------------------------------
// Plateau study: dynamical loss of u + eps * bump at fixed small h.

struct PlateauRow {
  double eps = 0.0;
  double loss_mean = 0.0;
  double loss_se = 0.0;
  double dnorm = 0.0;           // | eps * bump |_D estimate
  double ratio_to_prev = 0.0;   // loss(eps_i) / loss(eps_{i-1}), 0 for first
};

struct PlateauTable {
  std::vector<PlateauRow> rows;  // first row is the eps = 0 baseline
  double baseline = 0.0;
};

PlateauTable plateau_study(const ProblemSpec& p, const CandidateFunction& bump,
                           const std::vector<double>& eps_list, double h, long long n_paths,
                           std::uint64_t seed, const Vec& x0, int threads = 1);

// ---------------------------------------------------------------------------
// Discrete-grid Wald identity test.

struct WaldFunctional {
  enum class Kind { SquaredIncrement, ConstantH, ShiftedIncrementProbe };
  Kind kind = Kind::SquaredIncrement;
  bool adapted = true;  // the shifted probe is deliberately non-adapted

  static WaldFunctional squared_increment() { return {Kind::SquaredIncrement, true}; }
  static WaldFunctional constant_h() { return {Kind::ConstantH, true}; }
  static WaldFunctional shifted_increment_probe() {
    return {Kind::ShiftedIncrementProbe, false};
  }
};

struct WaldReport {
  double lhs_mean = 0.0;      // E[sum_{t < tau_bar} A_t]
  double rhs_mean = 0.0;      // (1/h) E[tau_bar] E[A_0]
  double combined_se = 0.0;   // delta-method SE of lhs - rhs
  double z_score = 0.0;
  long long n_paths = 0;
  bool pass = false;
};

WaldReport wald_test(const ProblemSpec& p, double h, const WaldFunctional& a,
                     long long n_paths, std::uint64_t seed, const Vec& x0, int threads = 1);

}  // namespace exitbsde
