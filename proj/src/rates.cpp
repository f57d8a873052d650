#include "exitbsde/rates.hpp"

#include "exitbsde/errors.hpp"
#include "exitbsde/mc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exitbsde {

std::string Quantity::label() const {
  switch (kind) {
    case Kind::Boundary:
      return "boundary";
    case Kind::Dynamical:
      return "dynamical";
    case Kind::ExitError:
      return "exit_error_p" + std::to_string(p);
    case Kind::SpaceError:
      return "space_error";
  }
  return "?";
}

SlopeFit fit_loglog(const std::vector<double>& h, const std::vector<double>& mean) {
  if (h.size() != mean.size() || h.size() < 2)
    throw std::invalid_argument("fit_loglog: needs >= 2 matching points");
  const long n = static_cast<long>(h.size());
  double sx = 0, sy = 0;
  std::vector<double> lx(h.size()), ly(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    lx[i] = std::log(h[i]);
    ly[i] = std::log(mean[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.n_used = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

namespace {

struct RowAcc {
  MeanAcc acc;
  long long censored = 0;
};

RateRow estimate_row(const ProblemSpec& p, const CandidateFunction& u, const PathWeight& psi,
                     Quantity q, double h, std::uint64_t row_seed,
                     const RateStudyOptions& opts) {
  RateRow row;
  row.h = h;
  if (q.kind == Quantity::Kind::Boundary || q.kind == Quantity::Kind::Dynamical) {
    EstimateOptions eo;
    eo.n_paths = opts.n_paths;
    eo.seed = row_seed;
    eo.x0 = opts.x0;
    eo.x0_uniform = opts.x0_uniform;
    eo.h = h;
    eo.threads = opts.threads;
    const LossReport rep = estimate_weighted_loss(u, p, psi, eo);
    row.n_paths = rep.n_paths;
    row.n_censored = rep.n_censored;
    if (q.kind == Quantity::Kind::Boundary) {
      row.mean = rep.boundary_mean;
      row.se = rep.boundary_se;
    } else {
      row.mean = rep.dynamical_mean;
      row.se = rep.dynamical_se;
    }
    return row;
  }

  const std::uint64_t sim_key = derive_seed(row_seed, "simulate");
  const std::uint64_t refine_key = derive_seed(row_seed, "refine");
  RefineOptions ro;
  ro.factor = opts.refine_factor;
  auto work = [&](RowAcc& acc, long long id) {
    const GridPath path =
        simulate_path(p, opts.x0, h, RngStream(sim_key, static_cast<std::uint64_t>(id)));
    if (!path.exited) {
      ++acc.censored;
      return;
    }
    const RefinedPath ref = refine_reference(path, p, ro, refine_key);
    if (ref.reference_censored) {
      ++acc.censored;
      return;
    }
    if (q.kind == Quantity::Kind::ExitError) {
      acc.acc.add(std::pow(std::abs(ref.tau_ref - ref.tau_bar), q.p));
    } else {
      acc.acc.add((ref.x_tau_ref - ref.xbar_exit).squaredNorm());
    }
  };
  auto merge = [](RowAcc& into, const RowAcc& from) {
    into.acc.merge(from.acc);
    into.censored += from.censored;
  };
  RowAcc total = run_chunked<RowAcc>(opts.n_paths, opts.threads, work, merge);
  row.mean = total.acc.mean();
  row.se = total.acc.stderr_of_mean();
  row.n_paths = total.acc.n;
  row.n_censored = total.censored;
  return row;
}

}  // namespace

RateTable run_rate_study(const ProblemSpec& p, const CandidateFunction& u,
                         const PathWeight& psi, Quantity quantity,
                         const RateStudyOptions& opts) {
  std::vector<double> hs = opts.h_list;
  std::sort(hs.begin(), hs.end(), std::greater<double>());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
  if (hs.size() < 3)
    throw std::invalid_argument("run_rate_study: need >= 3 distinct h values");
  if (hs.front() / hs.back() < 4.0)
    throw std::invalid_argument("run_rate_study: h values must span >= 2 dyadic octaves");

  RateTable table;
  table.target_exponent = opts.target_exponent;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const std::uint64_t row_seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i));
    table.rows.push_back(estimate_row(p, u, psi, quantity, hs[i], row_seed, opts));
  }

  // Zero up to squared machine rounding (each summand cancels to ~1e-16, so
  // the squared sums sit near 1e-31): no slope to fit.
  bool all_zero = true;
  for (const RateRow& r : table.rows) all_zero = all_zero && r.mean <= 1e-24;
  if (all_zero) {
    table.degenerate_zero = true;
    table.verdict = "degenerate-zero";
    table.pass = true;
    return table;
  }

  std::vector<double> fh, fm;
  for (RateRow& r : table.rows) {
    // log of a noisy near-zero mean destroys the OLS fit.
    if (r.mean > 0.0 && r.se <= opts.max_rel_se * r.mean) {
      r.used_in_fit = true;
      fh.push_back(r.h);
      fm.push_back(r.mean);
    }
  }
  if (fh.size() < 3)
    throw std::runtime_error(
        "run_rate_study: insufficient precision, fewer than 3 usable rows; "
        "increase n_paths");
  const SlopeFit fit = fit_loglog(fh, fm);
  table.slope = fit.slope;
  table.intercept = fit.intercept;
  table.r_squared = fit.r_squared;
  table.pass = fit.slope >= opts.target_exponent - opts.slope_tolerance;
  table.verdict = table.pass ? "pass" : "fail";
  return table;
}

PlateauTable plateau_study(const ProblemSpec& p, const CandidateFunction& bump,
                           const std::vector<double>& eps_list, double h, long long n_paths,
                           std::uint64_t seed, const Vec& x0, int threads) {
  if (!p.exact_solution)
    throw std::invalid_argument("plateau_study: needs a problem with exact solution");
  if (eps_list.size() < 2)
    throw std::invalid_argument("plateau_study: needs >= 2 eps values");
  CandidatePtr u = p.exact_solution;
  CandidatePtr bump_ptr(&bump, [](const CandidateFunction*) {});

  std::vector<double> eps = eps_list;
  std::sort(eps.begin(), eps.end());
  if (eps.empty() || eps.front() != 0.0) eps.insert(eps.begin(), 0.0);

  PlateauTable table;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const Perturbed cand(u, eps[i], bump_ptr);
    EstimateOptions eo;
    eo.n_paths = n_paths;
    eo.seed = seed;  // common random numbers across eps
    eo.x0 = x0;
    eo.h = h;
    eo.threads = threads;
    const LossReport rep = estimate_weighted_loss(cand, p, PathWeight::unit(), eo);
    PlateauRow row;
    row.eps = eps[i];
    row.loss_mean = rep.dynamical_mean;
    row.loss_se = rep.dynamical_se;
    row.dnorm = eps[i] == 0.0 ? 0.0 : dnorm_distance(cand, *u, p.domain, 400).value;
    if (i > 0 && table.rows.back().loss_mean > 0.0)
      row.ratio_to_prev = row.loss_mean / table.rows.back().loss_mean;
    table.rows.push_back(row);
  }
  table.baseline = table.rows.front().loss_mean;
  return table;
}

// ---------------------------------------------------------------------------
// Wald

namespace {

struct WaldAcc {
  MeanAcc s, tau, a0;
  Neumaier c_st, c_sa, c_ta;  // cross-moment sums
  long long censored = 0;
  void add(double sv, double tv, double av) {
    s.add(sv);
    tau.add(tv);
    a0.add(av);
    c_st.add(sv * tv);
    c_sa.add(sv * av);
    c_ta.add(tv * av);
  }
  void merge(const WaldAcc& o) {
    s.merge(o.s);
    tau.merge(o.tau);
    a0.merge(o.a0);
    c_st.merge(o.c_st);
    c_sa.merge(o.c_sa);
    c_ta.merge(o.c_ta);
    censored += o.censored;
  }
};

}  // namespace

WaldReport wald_test(const ProblemSpec& p, double h, const WaldFunctional& a,
                     long long n_paths, std::uint64_t seed, const Vec& x0, int threads) {
  if (!a.adapted)
    throw std::invalid_argument(
        "wald_test: functional is not adapted (A_t must be measurable at t+h and "
        "independent of the past)");
  const std::uint64_t sim_key = derive_seed(seed, "simulate");
  auto work = [&](WaldAcc& acc, long long id) {
    const GridPath path =
        simulate_path(p, x0, h, RngStream(sim_key, static_cast<std::uint64_t>(id)));
    if (!path.exited) {
      ++acc.censored;
      return;
    }
    Neumaier sum;
    double a0 = 0.0;
    for (long k = 0; k < path.exit_index; ++k) {
      const double ak = a.kind == WaldFunctional::Kind::ConstantH
                            ? h
                            : path.increments[static_cast<std::size_t>(k)].squaredNorm();
      if (k == 0) a0 = ak;
      sum.add(ak);
    }
    acc.add(sum.value(), path.tau_bar(), a0);
  };
  auto merge = [](WaldAcc& into, const WaldAcc& from) { into.merge(from); };
  WaldAcc t = run_chunked<WaldAcc>(n_paths, threads, work, merge);

  const double n = static_cast<double>(t.s.n);
  WaldReport rep;
  rep.n_paths = t.s.n;
  const double m1 = t.s.mean(), m2 = t.tau.mean(), m3 = t.a0.mean();
  rep.lhs_mean = m1;
  rep.rhs_mean = m2 * m3 / h;
  // Delta method for g(m) = m1 - m2 m3 / h with the full sample covariance.
  const double v11 = t.s.variance();
  const double v22 = t.tau.variance();
  const double v33 = t.a0.variance();
  const double v12 = (t.c_st.value() - n * m1 * m2) / (n - 1);
  const double v13 = (t.c_sa.value() - n * m1 * m3) / (n - 1);
  const double v23 = (t.c_ta.value() - n * m2 * m3) / (n - 1);
  const double j2 = -m3 / h, j3 = -m2 / h;
  const double var_g = v11 + j2 * j2 * v22 + j3 * j3 * v33 + 2 * j2 * v12 + 2 * j3 * v13 +
                       2 * j2 * j3 * v23;
  rep.combined_se = var_g > 0.0 ? std::sqrt(var_g / n) : 0.0;
  const double g = rep.lhs_mean - rep.rhs_mean;
  if (rep.combined_se > 0.0) {
    rep.z_score = g / rep.combined_se;
    rep.pass = std::abs(rep.z_score) <= 3.0;
  } else {
    rep.z_score = 0.0;
    rep.pass = std::abs(g) <= 1e-12;
  }
  return rep;
}

}  // namespace exitbsde
