#include "exitbsde/loss.hpp"

#include "exitbsde/errors.hpp"
#include "exitbsde/mc.hpp"
#include "exitbsde/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace exitbsde {

// ---------------------------------------------------------------------------
// PathWeight

PathWeight PathWeight::unit() { return PathWeight{}; }

PathWeight PathWeight::exp_exit_clamped(double rate, double cap) {
  if (rate < 0.0 || !(cap > 0.0))
    throw std::invalid_argument("PathWeight: need rate >= 0 and cap > 0");
  PathWeight w;
  w.kind = Kind::ExpExitClamped;
  w.rate = rate;
  w.cap = cap;
  return w;
}

PathWeight PathWeight::constant_plus(double ell, double coeff, double cap) {
  if (!(ell > 0.0) || coeff < 0.0 || !(cap > 0.0))
    throw std::invalid_argument("PathWeight: need ell > 0, coeff >= 0, cap > 0");
  PathWeight w;
  w.kind = Kind::ConstantPlus;
  w.ell = ell;
  w.coeff = coeff;
  w.cap = cap;
  return w;
}

double PathWeight::lower_bound() const {
  switch (kind) {
    case Kind::Unit:
      return 1.0;
    case Kind::ExpExitClamped:
      return 1.0;  // exp(rate * t) >= 1 for t >= 0
    case Kind::ConstantPlus:
      return ell;
  }
  return 1.0;
}

double PathWeight::evaluate(const GridPath& path) const {
  switch (kind) {
    case Kind::Unit:
      return 1.0;
    case Kind::ExpExitClamped:
      return std::exp(rate * std::min(path.tau_bar(), cap));
    case Kind::ConstantPlus:
      return ell + coeff * std::min(path.tau_bar(), cap);
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// The six-term kernel

namespace {

/// Per-point coefficients of the penalization, one derivative snapshot each:
/// f2 = f(x,U,sigma^T grad U), f3 = sigma^T grad U, f4 = sigma^T hess U mu,
/// f5 = 0.5 sigma^T hess U sigma, f6 = tr f5.
struct TermCoeffs {
  double value = 0.0;
  double f2 = 0.0;
  Vec f3;
  Vec f4;
  Mat f5;
  double f6 = 0.0;
};

void term_coeffs(const CandidateFunction& u, const ProblemSpec& p, const Vec& x,
                 TermCoeffs& c) {
  Vec g;
  Mat h;
  u.eval_all(x, c.value, g, h);
  Vec mu;
  Mat sig;
  p.eval_mu(x, mu);
  p.eval_sigma(x, sig);
  c.f3.noalias() = sig.transpose() * g;
  c.f4.noalias() = sig.transpose() * (h * mu);
  c.f5.noalias() = 0.5 * (sig.transpose() * h * sig);
  c.f6 = c.f5.trace();
  c.f2 = p.f(x, c.value, c.f3);
}

double kernel(const CandidateFunction& u, const TermCoeffs& c, double dt, const Vec& x2,
              const Vec& dw) {
  double s = u.value(x2) - c.value;
  s += c.f2 * dt;
  s -= c.f3.dot(dw);
  s -= c.f4.dot(dw) * dt;
  s -= dw.dot(Vec(c.f5 * dw));
  s += c.f6 * dt;
  return s;
}

}  // namespace

double two_point_loss(const CandidateFunction& u, const ProblemSpec& p, double s1, double s2,
                      const Vec& x1, const Vec& x2, const Vec& dw) {
  if (s2 < s1) throw std::invalid_argument("two_point_loss: requires s1 <= s2");
  TermCoeffs c;
  term_coeffs(u, p, x1, c);
  return kernel(u, c, s2 - s1, x2, dw);
}

double loss_summand(const CandidateFunction& u, const ProblemSpec& p, const GridPath& path,
                    long k) {
  if (k < 0 || k >= path.exit_index)
    throw std::out_of_range("loss_summand: step index at or past the exit");
  TermCoeffs c;
  term_coeffs(u, p, path.states[static_cast<std::size_t>(k)], c);
  return kernel(u, c, path.h, path.states[static_cast<std::size_t>(k + 1)],
                path.increments[static_cast<std::size_t>(k)]);
}

double overlap_residual(const CandidateFunction& u, const ProblemSpec& p, double s1, double s2,
                        double s3, const Vec& x1, const Vec& x3, const Vec& dwa,
                        const Vec& dwb) {
  if (!(s1 <= s3 && s3 <= s2))
    throw std::invalid_argument("overlap_residual: requires s1 <= s3 <= s2");
  TermCoeffs a, b;
  term_coeffs(u, p, x1, a);
  term_coeffs(u, p, x3, b);
  const double dta = s3 - s1;
  const double dtb = s2 - s3;
  double r = (a.f2 - b.f2) * dtb;
  r -= (a.f3 - b.f3).dot(dwb);
  r -= ((a.f4 - b.f4).dot(dwb)) * dtb + (a.f4.dot(dwb)) * dta;
  r -= (a.f4.dot(dwa)) * dtb;
  r -= dwb.dot(Vec((a.f5 - b.f5) * dwb)) + dwb.dot(Vec(a.f5 * dwa));
  r -= dwa.dot(Vec(a.f5 * dwb));
  r += (a.f6 - b.f6) * dtb;
  return r;
}

StepDecomposition decomposition(const CandidateFunction& u, const ProblemSpec& p,
                                const GridPath& path, const RefinedPath& refined, long k) {
  if (k < 0 || k >= path.exit_index)
    throw std::out_of_range("decomposition: step index at or past the exit");
  if (!refined.theta_found)
    throw CensoredError("decomposition: interpolation exit unavailable (censored path)");

  const double t = static_cast<double>(k) * path.h;
  const double t1 = static_cast<double>(k + 1) * path.h;
  const double theta = refined.theta_time;

  StepDecomposition d;
  if (t1 <= theta) {
    d.pre = loss_summand(u, p, path, k);
    return d;
  }
  if (theta <= t) {
    d.post = loss_summand(u, p, path, k);
    return d;
  }
  d.straddling = true;
  const Vec& xk = path.states[static_cast<std::size_t>(k)];
  const Vec& xk1 = path.states[static_cast<std::size_t>(k + 1)];
  const Vec& dw = path.increments[static_cast<std::size_t>(k)];
  const Vec dwa = refined.w_theta_rel;
  const Vec dwb = dw - dwa;
  d.pre = two_point_loss(u, p, t, theta, xk, refined.xc_theta, dwa);
  d.post = two_point_loss(u, p, theta, t1, refined.xc_theta, xk1, dwb);
  d.overlap = overlap_residual(u, p, t, t1, theta, xk, refined.xc_theta, dwa, dwb);
  return d;
}

double dynamical_loss(const CandidateFunction& u, const ProblemSpec& p, const GridPath& path) {
  Neumaier acc;
  TermCoeffs c;
  for (long k = 0; k < path.exit_index; ++k) {
    term_coeffs(u, p, path.states[static_cast<std::size_t>(k)], c);
    const double s = kernel(u, c, path.h, path.states[static_cast<std::size_t>(k + 1)],
                            path.increments[static_cast<std::size_t>(k)]);
    acc.add(s * s);
  }
  return acc.value();
}

double boundary_loss(const CandidateFunction& u, const ProblemSpec& p, const GridPath& path) {
  if (!path.exited)
    throw CensoredError("boundary_loss: censored path has no exit state");
  const Vec& exit_state = path.states[static_cast<std::size_t>(path.exit_index)];
  const double diff = u.value(exit_state) - p.g(exit_state);
  return diff * diff;
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

struct LossAcc {
  MeanAcc b, dyn, tot;
  long long censored = 0;
  std::vector<PerPathRecord> recs;
  bool record = false;
};

}  // namespace

LossReport estimate_weighted_loss(const CandidateFunction& u, const ProblemSpec& p,
                                  const PathWeight& psi, const EstimateOptions& opts) {
  if (opts.n_paths < 2)
    throw std::invalid_argument("estimate_weighted_loss: n_paths must be >= 2");
  const std::uint64_t sim_key = derive_seed(opts.seed, "simulate");
  const std::uint64_t x0_key = derive_seed(opts.seed, "x0");
  const long max_steps = opts.max_steps > 0 ? opts.max_steps : default_max_steps(opts.h);
  const bool record = opts.dump != nullptr;

  auto work = [&](LossAcc& acc, long long id) {
    acc.record = record;
    Vec x0 = opts.x0;
    if (opts.x0_uniform) {
      RngStream xs(x0_key, static_cast<std::uint64_t>(id));
      x0 = uniform_in_domain(p.domain, [&xs] { return xs.next_uniform(); });
    }
    const GridPath path =
        simulate_path(p, x0, opts.h, RngStream(sim_key, static_cast<std::uint64_t>(id)),
                      max_steps);
    if (!path.exited) {
      ++acc.censored;
      if (record) acc.recs.push_back({id, path.tau_bar(), 0.0, 0.0, 0.0, true});
      return;
    }
    const double w = psi.evaluate(path);
    const double b = boundary_loss(u, p, path);
    const double dl = dynamical_loss(u, p, path);
    acc.b.add(w * b);
    acc.dyn.add(w * dl);
    acc.tot.add(w * (b + dl));
    if (record) acc.recs.push_back({id, path.tau_bar(), b, dl, w, false});
  };
  auto merge = [](LossAcc& into, const LossAcc& from) {
    into.b.merge(from.b);
    into.dyn.merge(from.dyn);
    into.tot.merge(from.tot);
    into.censored += from.censored;
    into.recs.insert(into.recs.end(), from.recs.begin(), from.recs.end());
  };
  LossAcc total = run_chunked<LossAcc>(opts.n_paths, opts.threads, work, merge);

  LossReport rep;
  rep.n_paths = total.b.n;
  rep.n_censored = total.censored;
  rep.boundary_mean = total.b.mean();
  rep.boundary_se = total.b.stderr_of_mean();
  rep.dynamical_mean = total.dyn.mean();
  rep.dynamical_se = total.dyn.stderr_of_mean();
  rep.weighted_total_mean = total.tot.mean();
  rep.weighted_total_se = total.tot.stderr_of_mean();
  if (opts.dump) *opts.dump = std::move(total.recs);
  return rep;
}

}  // namespace exitbsde
