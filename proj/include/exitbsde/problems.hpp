#pragma once

#include "exitbsde/funclass.hpp"
#include "exitbsde/geometry.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace exitbsde {

/// User-declared regularity constants. The declared values are authoritative;
/// validate() measures sampled quotients against them and flags violations.
struct DeclaredConstants {
  double lipschitz_mu = 0.0;
  double lipschitz_sigma = 0.0;
  double lipschitz_f_y = 0.0;
  double lipschitz_f_z = 0.0;
  double ellipticity_lower = 1.0;  // nu: min eigenvalue of sigma sigma^T
  double elliptic_radius = 0.1;    // enlargement radius for the spot check
  double sup_mu = 0.0;             // sup |mu| over the closed domain
  double sup_sigma = 1.0;          // sup operator norm of sigma
  double tail_rho = 1.0;           // exponential moment: E[exp(rho tau)] < inf
  double tail_alpha = 2.0;         // P[tau >= k] <= alpha exp(-beta k)
  double tail_beta = 1.0;
};

/// A semilinear elliptic Dirichlet problem: coefficients mu / sigma, driver
/// f(x,y,z), boundary data g (globally defined), optional exact solution.
/// Immutable after construction; all callables must be pure.
struct ProblemSpec {
  std::string name;
  int dim = 1;
  Domain domain = Domain::interval(-1.0, 1.0);

  std::function<void(const Vec&, Vec&)> mu;
  std::function<void(const Vec&, Mat&)> sigma;
  std::function<double(const Vec&, double, const Vec&)> f;
  std::function<double(const Vec&)> g;

  // Optional analytic driver partials (required by the forward-sensitivity
  // training mode).
  std::function<double(const Vec&, double, const Vec&)> f_dy;
  std::function<void(const Vec&, double, const Vec&, Vec&)> f_dz;

  CandidatePtr exact_solution;  // may be null
  DeclaredConstants constants;

  // Fast path for constant coefficients; the simulators skip the callables.
  bool const_coeffs = false;
  Vec mu_const;
  Mat sigma_const;

  void eval_mu(const Vec& x, Vec& out) const {
    if (const_coeffs)
      out = mu_const;
    else
      mu(x, out);
  }
  void eval_sigma(const Vec& x, Mat& out) const {
    if (const_coeffs)
      out = sigma_const;
    else
      sigma(x, out);
  }
};

using ProblemPtr = std::shared_ptr<const ProblemSpec>;

/// L[U](x) = mu(x).grad U(x) + 0.5 tr[sigma sigma^T hess U](x).
double apply_generator(const ProblemSpec& p, const CandidateFunction& u, const Vec& x);

/// L[U](x) + f(x, U(x), sigma^T grad U(x)); zero iff U solves the PDE at x.
/// Requires x strictly inside the domain.
double pde_residual(const ProblemSpec& p, const CandidateFunction& u, const Vec& x);

/// Nonlinearity entering the manufactured driver.
struct Nonlinearity {
  std::function<double(const Vec&, double, const Vec&)> value;  // nu(x,y,z)
  std::function<double(const Vec&, double, const Vec&)> dy;     // optional
  std::function<void(const Vec&, double, const Vec&, Vec&)> dz; // optional
  static Nonlinearity none();
  static Nonlinearity sin_y();
};

/// Builds a problem with known exact solution: g is the (global) boundary
/// extension, f is telescoped so that pde_residual(u_target, .) == 0.
/// When g_override is null, g falls back to u_target itself (boundary loss is
/// then identically zero at U = u_target).
ProblemPtr manufactured(CandidatePtr u_target,
                        std::function<void(const Vec&, Vec&)> mu,
                        std::function<void(const Vec&, Mat&)> sigma,
                        Nonlinearity nu, Domain domain,
                        std::function<double(const Vec&)> g_override = nullptr,
                        DeclaredConstants constants = {}, std::string name = "manufactured");

/// Sample-based assumption validation. Violations are report entries,
/// never errors.
struct ValidationEntry {
  std::string quantity;
  double declared = 0.0;
  double measured = 0.0;
  bool pass = true;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  long n_samples = 0;
  bool all_pass = true;
};

struct ValidationOptions {
  double y_lo = -3.0, y_hi = 3.0;  // driver Lipschitz probing range in y
  double z_box = 3.0;              // and z in [-z_box, z_box]^d
};

ValidationReport validate(const ProblemSpec& p, long n_samples,
                          ValidationOptions opts = {});

/// Shipped problem library: P1 (d=1 Brownian exit), P2 (ball, identity
/// diffusion; dim 2 or 3), P3 (variable isotropic diffusion, cubic solution),
/// P4 (P2 with a sin nonlinearity in y).
ProblemPtr library_problem(const std::string& name, int dim = 0);

}  // namespace exitbsde
