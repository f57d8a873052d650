#pragma once

#include "exitbsde/problems.hpp"
#include "exitbsde/rng.hpp"

#include <span>
#include <vector>

namespace exitbsde {

/// One Euler-Maruyama trajectory on the grid {0, h, 2h, ...} with first-exit
/// bookkeeping. States are recomputable bit-for-bit from x0 and the stored
/// Brownian increments.
struct GridPath {
  Vec x0;
  double h = 0.0;
  int dim = 0;
  std::vector<Vec> states;      // states[0] = x0, size exit_index + 1 (or cap + 1)
  std::vector<Vec> increments;  // increments[k] drives states[k] -> states[k+1]
  long exit_index = 0;          // first k with states[k] outside; == steps when censored
  bool exited = false;
  long max_steps = 0;
  StreamSpec rng;               // stream that produced the increments

  double tau_bar() const { return static_cast<double>(exit_index) * h; }
  long steps() const { return static_cast<long>(increments.size()); }
};

/// Censoring cap: paths are cut after ceil(50/h) steps and flagged.
long default_max_steps(double h);

/// Runs the Euler-Maruyama recursion with dW ~ N(0, h I) until the first exit
/// or the cap. Throws on x0 outside the open domain and on non-finite states.
GridPath simulate_path(const ProblemSpec& p, const Vec& x0, double h, RngStream rng,
                       long max_steps = 0);

/// Test hook: same recursion driven by caller-supplied increments.
GridPath simulate_path_with_increments(const ProblemSpec& p, const Vec& x0, double h,
                                       std::span<const Vec> increments);

// ---------------------------------------------------------------------------
// Bridge-refined reference paths

struct RefineOptions {
  int factor = 64;        // power of two in {2,...,1024}
  bool keep_fine = false; // record fine nodes for property tests
  long max_steps = 0;     // total coarse-step cap for the reference extension
};

/// Conditionally on the parent increments: Brownian-bridge sub-increments,
/// (a) a fine Euler scheme with coefficients refreshed every sub-step (the
/// reference for tau and X_tau; extended past the parent exit when needed)
/// and (b) the frozen-coefficient interpolation of the parent scheme, whose
/// first exit theta is located by sign change plus one bisection.
struct RefinedPath {
  int refine_factor = 0;
  double h = 0.0;
  int dim = 0;

  bool parent_exited = false;
  double tau_bar = 0.0;
  Vec xbar_exit;  // parent state at the discrete exit (when exited)

  bool reference_censored = false;  // fine true-coefficient path never exited
  double tau_ref = 0.0;
  Vec x_tau_ref;

  bool theta_found = false;
  long theta_step = -1;   // theta lies in (theta_step*h, (theta_step+1)*h]
  double theta_time = 0.0;
  double theta_plus = 0.0;  // first grid time >= theta
  Vec xc_theta;             // interpolation state at theta
  Vec w_theta_rel;          // W_theta - W_{theta_step*h}

  // Populated only with keep_fine: per coarse step k < parent exit_index.
  std::vector<std::vector<Vec>> sub_increments;  // [k][j], j = 0..R-1
  std::vector<std::vector<Vec>> frozen_nodes;    // X^c after sub-step j
  std::vector<std::vector<Vec>> w_offsets;       // W at node minus W at kh
};

RefinedPath refine_reference(const GridPath& parent, const ProblemSpec& p,
                             const RefineOptions& opts, std::uint64_t refine_key);

// ---------------------------------------------------------------------------
// Exit-error statistics

struct ExitMomentRow {
  int p = 1;
  double mean = 0.0;
  double se = 0.0;
};

struct ExitTable {
  std::vector<ExitMomentRow> tau_error;  // E |tau_ref - tau_bar|^p
  double space_mean = 0.0, space_se = 0.0;          // E |X_tau - Xbar|^2
  double theta_gap_mean = 0.0, theta_gap_se = 0.0;  // E (tau_bar - theta_plus)^2
  long long n_paths = 0;
  long long n_censored = 0;
};

ExitTable exit_statistics(std::span<const RefinedPath> paths, const std::vector<int>& p_list);

}  // namespace exitbsde
