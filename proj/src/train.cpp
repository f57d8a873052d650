#include "exitbsde/train.hpp"

#include "exitbsde/errors.hpp"
#include "exitbsde/mc.hpp"
#include "exitbsde/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace exitbsde {

namespace {

// Graded monomial basis with total degree <= degree.
std::vector<Polynomial::Term> poly_basis(int dim, int degree) {
  std::vector<Polynomial::Term> basis;
  std::array<int, kMaxDim> exps{};
  std::function<void(int, int)> emit = [&](int pos, int remaining) {
    if (pos == dim) {
      if (remaining == 0) {
        Polynomial::Term t;
        t.exponents = exps;
        t.coeff = 1.0;
        basis.push_back(t);
      }
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      exps[static_cast<std::size_t>(pos)] = e;
      emit(pos + 1, remaining - e);
    }
    exps[static_cast<std::size_t>(pos)] = 0;
  };
  for (int total = 0; total <= degree; ++total) emit(0, total);
  return basis;
}

void check_config(const TrainConfig& cfg) {
  if (!cfg.problem) throw std::invalid_argument("train: missing problem");
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (!(cfg.rate0 > 0.0)) throw std::invalid_argument("train: initial rate must be > 0");
  if (cfg.fd_step < 1e-6 || cfg.fd_step > 1e-3)
    throw std::invalid_argument("train: fd_step must lie in [1e-6, 1e-3]");
  if (cfg.grad_mode == TrainConfig::GradMode::ForwardSensitivity &&
      (!cfg.problem->f_dy || !cfg.problem->f_dz))
    throw std::invalid_argument(
        "train: forward-sensitivity mode needs analytic driver partials f_dy/f_dz");
}

std::uint64_t iter_seed(const TrainConfig& cfg, long iteration) {
  const long it = cfg.fixed_dataset ? 0 : iteration;
  return derive_seed(derive_seed(cfg.seed, "train"), static_cast<std::uint64_t>(it));
}

}  // namespace

long param_count(const TrainConfig& cfg) {
  if (cfg.family == TrainConfig::Family::Net)
    return static_cast<long>(cfg.width) * (cfg.problem->dim + 2) + 1;
  return static_cast<long>(poly_basis(cfg.problem->dim, cfg.poly_degree).size());
}

Eigen::VectorXd init_params(const TrainConfig& cfg) {
  const long n = param_count(cfg);
  Eigen::VectorXd params(n);
  if (cfg.family == TrainConfig::Family::Polynomial) {
    params.setZero();
    return params;
  }
  const int m = cfg.width, d = cfg.problem->dim;
  RngStream rng(derive_seed(cfg.seed, "net-init"), 0);
  const double ws = 1.0 / std::sqrt(static_cast<double>(d));
  long at = 0;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) params[at++] = ws * rng.next_normal();
  for (int j = 0; j < m; ++j) params[at++] = 0.5 * rng.next_normal();
  for (int j = 0; j < m; ++j)
    params[at++] = 0.2 / std::sqrt(static_cast<double>(m)) * rng.next_normal();
  params[at++] = 0.0;  // b2
  return params;
}

CandidatePtr make_candidate(const TrainConfig& cfg, const Eigen::VectorXd& params) {
  if (params.size() != param_count(cfg))
    throw std::invalid_argument("make_candidate: parameter count mismatch");
  const int d = cfg.problem->dim;
  if (cfg.family == TrainConfig::Family::Net) {
    const int m = cfg.width;
    Eigen::MatrixXd w1(m, d);
    Eigen::VectorXd b1(m), w2(m);
    long at = 0;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < d; ++i) w1(j, i) = params[at++];
    for (int j = 0; j < m; ++j) b1(j) = params[at++];
    for (int j = 0; j < m; ++j) w2(j) = params[at++];
    const double b2 = params[at++];
    return std::make_shared<SingleHiddenLayerNet>(std::move(w1), std::move(b1), std::move(w2),
                                                  b2);
  }
  std::vector<Polynomial::Term> basis = poly_basis(d, cfg.poly_degree);
  for (std::size_t i = 0; i < basis.size(); ++i) basis[i].coeff = params[static_cast<long>(i)];
  return std::make_shared<Polynomial>(d, std::move(basis));
}

// ---------------------------------------------------------------------------
// Loss and gradient over one batch

namespace {

struct BatchAcc {
  double loss = 0.0;
  Eigen::VectorXd grad;
  long long n = 0;
  long long censored = 0;
};

double select_terms(const TrainConfig& cfg, double b, double dl) {
  switch (cfg.terms) {
    case TrainConfig::Terms::Both:
      return b + dl;
    case TrainConfig::Terms::BoundaryOnly:
      return b;
    case TrainConfig::Terms::DynamicalOnly:
      return dl;
  }
  return b + dl;
}

/// Per-parameter derivatives of one summand, assembled through the adjoints
/// s0 (value at x), g1 (gradient at x), p2 (Hessian at x) and the plain value
/// derivative at the forward state.
struct StepAdjoints {
  double s0 = 0.0;     // weight of dU(x)
  Vec g1;              // weight of d gradU(x)
  Mat p2;              // weight of d hessU(x), full contraction
};

void net_grad_contrib(const SingleHiddenLayerNet& net, const Vec& x, const Vec& xn,
                      const SingleHiddenLayerNet::Units& ux,
                      const SingleHiddenLayerNet::Units& uxn, const StepAdjoints& adj,
                      double scale, Eigen::VectorXd& out) {
  const int m = net.width();
  const int d = net.dimension();
  const auto& w1 = net.w1();
  const auto& w2 = net.w2();
  const long off_b1 = static_cast<long>(m) * d;
  const long off_w2 = off_b1 + m;
  const long off_b2 = off_w2 + m;
  Vec pw(d);
  for (int j = 0; j < m; ++j) {
    double q = 0.0, bq = 0.0;
    for (int i = 0; i < d; ++i) {
      const double wji = w1(j, i);
      q += adj.g1[i] * wji;
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += (adj.p2(i, k) + adj.p2(k, i)) * w1(j, k);
      pw[i] = s;
      bq += 0.5 * s * wji;  // w' P2 w via the symmetrized product
    }
    const double a = ux.a(j), a1 = ux.a1(j), a2 = ux.a2(j), a3 = ux.a3(j);
    const double an = uxn.a(j), an1 = uxn.a1(j);
    // d/dw2_j
    out[off_w2 + j] += scale * (an + adj.s0 * a + a1 * q + a2 * bq);
    // d/db1_j
    out[off_b1 + j] += scale * w2(j) * (an1 + adj.s0 * a1 + a2 * q + a3 * bq);
    // d/dW1_{j,i}
    for (int i = 0; i < d; ++i) {
      out[static_cast<long>(j) * d + i] +=
          scale * w2(j) *
          (an1 * xn[i] + adj.s0 * a1 * x[i] + a2 * x[i] * q + a1 * adj.g1[i] +
           a3 * x[i] * bq + a2 * pw[i]);
    }
  }
  out[off_b2] += scale * (1.0 + adj.s0);
}

void poly_grad_contrib(const std::vector<Polynomial::Term>& basis, int dim, const Vec& x,
                       const Vec& xn, const StepAdjoints& adj, double scale,
                       Eigen::VectorXd& out) {
  double v;
  Vec g;
  Mat h;
  for (std::size_t t = 0; t < basis.size(); ++t) {
    Polynomial mono(dim, {basis[t]});
    mono.eval_all(x, v, g, h);
    double ds = adj.s0 * v + adj.g1.dot(g) + (adj.p2.array() * h.array()).sum();
    ds += mono.value(xn);
    out[static_cast<long>(t)] += scale * ds;
  }
}

/// Forward pass over one path: loss value and (optionally) its parameter
/// gradient on the same randomness.
void path_loss_and_grad(const TrainConfig& cfg, const CandidateFunction& cand,
                        const GridPath& path, bool want_grad, double& loss_out,
                        Eigen::VectorXd* grad_out) {
  const ProblemSpec& p = *cfg.problem;
  const int d = p.dim;
  const SingleHiddenLayerNet* net =
      cfg.family == TrainConfig::Family::Net
          ? static_cast<const SingleHiddenLayerNet*>(&cand)
          : nullptr;
  std::vector<Polynomial::Term> basis;
  if (want_grad && !net) basis = poly_basis(d, cfg.poly_degree);

  SingleHiddenLayerNet::Units ux, uxn;
  Neumaier dyn;
  StepAdjoints adj;
  Vec mu, z, sg, fz;
  Mat sig;
  double v;
  Vec g;
  Mat h;

  const bool use_dyn = cfg.terms != TrainConfig::Terms::BoundaryOnly;
  const bool use_bdry = cfg.terms != TrainConfig::Terms::DynamicalOnly;

  if (use_dyn) {
    for (long k = 0; k < path.exit_index; ++k) {
      const Vec& x = path.states[static_cast<std::size_t>(k)];
      const Vec& xn = path.states[static_cast<std::size_t>(k + 1)];
      const Vec& dw = path.increments[static_cast<std::size_t>(k)];
      cand.eval_all(x, v, g, h);
      p.eval_mu(x, mu);
      p.eval_sigma(x, sig);
      sg.noalias() = sig.transpose() * g;
      const double f2 = p.f(x, v, sg);
      const Vec f4 = sig.transpose() * (h * mu);
      const Mat f5 = 0.5 * (sig.transpose() * h * sig);
      double s = cand.value(xn) - v;
      s += f2 * path.h;
      s -= sg.dot(dw);
      s -= f4.dot(dw) * path.h;
      s -= dw.dot(Vec(f5 * dw));
      s += f5.trace() * path.h;
      dyn.add(s * s);

      if (want_grad) {
        const double fy = p.f_dy(x, v, sg);
        p.f_dz(x, v, sg, fz);
        adj.s0 = -1.0 + path.h * fy;
        const Vec sdw = sig * dw;
        adj.g1 = path.h * (sig * fz) - sdw;
        adj.p2 = -path.h * (sdw * mu.transpose()) - 0.5 * (sdw * sdw.transpose()) +
                 0.5 * path.h * (sig * sig.transpose());
        const double scale = 2.0 * s;
        if (net) {
          net->units(x, ux);
          net->units(xn, uxn);
          net_grad_contrib(*net, x, xn, ux, uxn, adj, scale, *grad_out);
        } else {
          poly_grad_contrib(basis, d, x, xn, adj, scale, *grad_out);
        }
      }
    }
  }

  double b = 0.0;
  if (use_bdry && path.exited) {
    const Vec& xe = path.states[static_cast<std::size_t>(path.exit_index)];
    const double diff = cand.value(xe) - p.g(xe);
    b = diff * diff;
    if (want_grad) {
      const double scale = 2.0 * diff;
      if (net) {
        net->units(xe, ux);
        const int m = net->width();
        const long off_b1 = static_cast<long>(m) * d;
        const long off_w2 = off_b1 + m;
        for (int j = 0; j < m; ++j) {
          (*grad_out)[off_w2 + j] += scale * ux.a(j);
          (*grad_out)[off_b1 + j] += scale * net->w2()(j) * ux.a1(j);
          for (int i = 0; i < d; ++i)
            (*grad_out)[static_cast<long>(j) * d + i] +=
                scale * net->w2()(j) * ux.a1(j) * xe[i];
        }
        (*grad_out)[off_w2 + m] += scale;
      } else {
        for (std::size_t t = 0; t < basis.size(); ++t) {
          Polynomial mono(d, {basis[t]});
          (*grad_out)[static_cast<long>(t)] += scale * mono.value(xe);
        }
      }
    }
  }
  loss_out = select_terms(cfg, b, dyn.value());
}

BatchAcc run_batch(const Eigen::VectorXd& params, const TrainConfig& cfg, long iteration,
                   bool want_grad) {
  check_config(cfg);
  const CandidatePtr cand = make_candidate(cfg, params);
  const std::uint64_t seed = iter_seed(cfg, iteration);
  const std::uint64_t sim_key = derive_seed(seed, "simulate");
  const std::uint64_t x0_key = derive_seed(seed, "x0");
  const long np = param_count(cfg);

  auto work = [&](BatchAcc& acc, long long id) {
    if (acc.grad.size() == 0) acc.grad = Eigen::VectorXd::Zero(np);
    Vec x0 = cfg.x0;
    if (cfg.x0_uniform) {
      RngStream xs(x0_key, static_cast<std::uint64_t>(id));
      x0 = uniform_in_domain(cfg.problem->domain, [&xs] { return xs.next_uniform(); });
    }
    const GridPath path = simulate_path(*cfg.problem, x0, cfg.h,
                                        RngStream(sim_key, static_cast<std::uint64_t>(id)));
    if (!path.exited) {
      ++acc.censored;
      return;
    }
    const double psi = cfg.weight.evaluate(path);
    double l = 0.0;
    Eigen::VectorXd pg;
    if (want_grad) pg = Eigen::VectorXd::Zero(np);
    path_loss_and_grad(cfg, *cand, path, want_grad, l, want_grad ? &pg : nullptr);
    acc.loss += psi * l;
    if (want_grad) acc.grad += psi * pg;
    ++acc.n;
  };
  auto merge = [&](BatchAcc& into, const BatchAcc& from) {
    if (into.grad.size() == 0) into.grad = Eigen::VectorXd::Zero(np);
    into.loss += from.loss;
    if (from.grad.size() != 0) into.grad += from.grad;
    into.n += from.n;
    into.censored += from.censored;
  };
  BatchAcc acc = run_chunked<BatchAcc>(cfg.batch, cfg.threads, work, merge);
  if (acc.grad.size() == 0) acc.grad = Eigen::VectorXd::Zero(np);
  if (acc.n > 0) {
    acc.loss /= static_cast<double>(acc.n);
    acc.grad /= static_cast<double>(acc.n);
  }
  return acc;
}

}  // namespace

double empirical_loss(const Eigen::VectorXd& params, const TrainConfig& cfg, long iteration) {
  const BatchAcc acc = run_batch(params, cfg, iteration, false);
  if (!std::isfinite(acc.loss))
    throw NumericError("empirical_loss: divergence, parameter norm " +
                       std::to_string(params.norm()));
  return acc.loss;
}

Eigen::VectorXd param_gradient(const Eigen::VectorXd& params, const TrainConfig& cfg,
                               long iteration) {
  if (cfg.grad_mode == TrainConfig::GradMode::ForwardSensitivity)
    return run_batch(params, cfg, iteration, true).grad;
  check_config(cfg);
  const long np = param_count(cfg);
  Eigen::VectorXd grad(np);
  Eigen::VectorXd probe = params;
  for (long i = 0; i < np; ++i) {
    const double save = probe[i];
    probe[i] = save + cfg.fd_step;
    const double up = empirical_loss(probe, cfg, iteration);
    probe[i] = save - cfg.fd_step;
    const double dn = empirical_loss(probe, cfg, iteration);
    probe[i] = save;
    grad[i] = (up - dn) / (2.0 * cfg.fd_step);
  }
  return grad;
}

double sup_error(const CandidateFunction& u, const CandidateFunction& v, const Domain& domain,
                 long n_points) {
  double worst = 0.0;
  for (long i = 0; i < n_points; ++i) {
    const Vec x = halton_in_domain(domain, i);
    worst = std::max(worst, std::abs(u.value(x) - v.value(x)));
  }
  for (long i = 0; i < std::max<long>(n_points / 8, 8); ++i) {
    const Vec x = halton_on_boundary(domain, i);
    worst = std::max(worst, std::abs(u.value(x) - v.value(x)));
  }
  return worst;
}

FitResult fit(const TrainConfig& cfg) {
  check_config(cfg);
  FitResult res;
  Eigen::VectorXd params = init_params(cfg);
  const CandidatePtr exact = cfg.problem->exact_solution;

  auto record = [&](long it, double loss, double gnorm, double rate) {
    HistoryRow row;
    row.iteration = it;
    row.loss = loss;
    row.grad_norm = gnorm;
    row.rate = rate;
    const CandidatePtr cand = make_candidate(cfg, params);
    if (exact) {
      row.sup_err = sup_error(*cand, *exact, cfg.problem->domain);
      row.dnorm = dnorm_distance(*cand, *exact, cfg.problem->domain, 200).value;
    } else {
      row.sup_err = std::nan("");
      row.dnorm = std::nan("");
    }
    row.c2_norm = dnorm_distance(*cand, *Polynomial::zero(cfg.problem->dim),
                                 cfg.problem->domain, 200)
                      .value;
    res.history.push_back(row);
  };

  double rate = cfg.rate0;
  long it = 0;
  for (; it < cfg.iterations; ++it) {
    rate = cfg.rate0 * std::pow(cfg.decay, static_cast<double>(it));
    const BatchAcc acc = run_batch(params, cfg, it, true);
    if (!std::isfinite(acc.loss) || !acc.grad.allFinite()) {
      res.diverged = true;
      record(it, acc.loss, acc.grad.allFinite() ? acc.grad.norm() : std::nan(""), rate);
      break;
    }
    if (it % cfg.eval_every == 0) record(it, acc.loss, acc.grad.norm(), rate);
    params -= rate * acc.grad;
  }
  res.iterations_run = it;
  res.params = params;
  res.candidate = make_candidate(cfg, params);
  if (!res.diverged) {
    const double final_loss =
        cfg.iterations > 0 ? empirical_loss(params, cfg, cfg.iterations) : 0.0;
    record(it, final_loss, 0.0, rate);
  }
  return res;
}

}  // namespace exitbsde
