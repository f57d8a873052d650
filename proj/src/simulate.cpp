#include "exitbsde/simulate.hpp"

#include "exitbsde/errors.hpp"
#include "exitbsde/mc.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace exitbsde {

long default_max_steps(double h) { return static_cast<long>(std::ceil(50.0 / h)); }

namespace {

bool is_pow2(int r) { return r > 0 && (r & (r - 1)) == 0; }

inline void matvec_add(const double* a, const double* v, int d, double* out) {
  for (int r = 0; r < d; ++r) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += a[r * d + c] * v[c];
    out[r] += s;
  }
}

inline bool outside_raw(const Domain& dom, const double* x, int d) {
  if (dom.kind() == Domain::Kind::Interval) return !(dom.lo() < x[0] && x[0] < dom.hi());
  double q = 0.0;
  for (int i = 0; i < d; ++i) {
    const double r = x[i] - dom.center()[i];
    q += r * r;
  }
  return q >= dom.radius() * dom.radius();
}

/// Splits a coarse increment into `r` conditional Brownian-bridge
/// sub-increments (midpoint recursion, in place on a flat [r][d] buffer).
void bridge_split(const double* dw, int d, int r, double h, RngStream& rng, double* seg) {
  std::memcpy(seg, dw, sizeof(double) * static_cast<std::size_t>(d));
  int count = 1;
  double tmp[kMaxDim];
  while (count < r) {
    const double sd = 0.5 * std::sqrt(h / count);
    for (int s = count - 1; s >= 0; --s) {
      std::memcpy(tmp, seg + s * d, sizeof(double) * static_cast<std::size_t>(d));
      double* left = seg + 2 * s * d;
      double* right = seg + (2 * s + 1) * d;
      for (int i = 0; i < d; ++i) {
        const double li = 0.5 * tmp[i] + sd * rng.next_normal();
        left[i] = li;
        right[i] = tmp[i] - li;  // halves sum to the parent increment
      }
    }
    count <<= 1;
  }
}

}  // namespace

GridPath simulate_path(const ProblemSpec& p, const Vec& x0, double h, RngStream rng,
                       long max_steps) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("simulate_path: need 0 < h < 1");
  if (static_cast<int>(x0.size()) != p.dim)
    throw std::invalid_argument("simulate_path: x0 dimension mismatch");
  if (!p.domain.contains(x0))
    throw std::invalid_argument("simulate_path: invalid start, x0 not in the open domain");
  if (max_steps <= 0) max_steps = default_max_steps(h);

  GridPath path;
  path.x0 = x0;
  path.h = h;
  path.dim = p.dim;
  path.max_steps = max_steps;
  path.rng = rng.spec();
  path.states.reserve(64);
  path.increments.reserve(64);
  path.states.push_back(x0);

  const double sqrt_h = std::sqrt(h);
  const int d = p.dim;
  Vec x = x0, mu, dw(d), xn(d);
  Mat sig;
  if (p.const_coeffs) {
    mu = p.mu_const;
    sig = p.sigma_const;
  }
  for (long k = 0;; ++k) {
    if (k >= max_steps) {
      path.exited = false;
      path.exit_index = k;
      return path;  // censored
    }
    for (int i = 0; i < d; ++i) dw[i] = sqrt_h * rng.next_normal();
    if (!p.const_coeffs) {
      p.mu(x, mu);
      p.sigma(x, sig);
    }
    xn.noalias() = x + h * mu;
    xn.noalias() += sig * dw;
    if (!xn.allFinite())
      throw NumericError("simulate_path: non-finite state",
                         static_cast<long long>(rng.spec().path_id), k);
    path.increments.push_back(dw);
    path.states.push_back(xn);
    x = xn;
    if (!p.domain.contains(x)) {
      path.exited = true;
      path.exit_index = k + 1;
      return path;
    }
  }
}

GridPath simulate_path_with_increments(const ProblemSpec& p, const Vec& x0, double h,
                                       std::span<const Vec> increments) {
  if (!(h > 0.0 && h < 1.0))
    throw std::invalid_argument("simulate_path_with_increments: need 0 < h < 1");
  if (!p.domain.contains(x0))
    throw std::invalid_argument("simulate_path_with_increments: x0 not in the open domain");
  GridPath path;
  path.x0 = x0;
  path.h = h;
  path.dim = p.dim;
  path.max_steps = static_cast<long>(increments.size());
  path.states.push_back(x0);
  Vec x = x0, mu, xn(p.dim);
  Mat sig;
  if (p.const_coeffs) {
    mu = p.mu_const;
    sig = p.sigma_const;
  }
  for (long k = 0; k < static_cast<long>(increments.size()); ++k) {
    if (!p.const_coeffs) {
      p.mu(x, mu);
      p.sigma(x, sig);
    }
    xn.noalias() = x + h * mu;
    xn.noalias() += sig * increments[static_cast<std::size_t>(k)];
    if (!xn.allFinite())
      throw NumericError("simulate_path_with_increments: non-finite state", -1, k);
    path.increments.push_back(increments[static_cast<std::size_t>(k)]);
    path.states.push_back(xn);
    x = xn;
    if (!p.domain.contains(x)) {
      path.exited = true;
      path.exit_index = k + 1;
      return path;
    }
  }
  path.exited = false;
  path.exit_index = static_cast<long>(increments.size());
  return path;
}

RefinedPath refine_reference(const GridPath& parent, const ProblemSpec& p,
                             const RefineOptions& opts, std::uint64_t refine_key) {
  const int r = opts.factor;
  if (!is_pow2(r) || r < 2 || r > 1024)
    throw std::invalid_argument("refine_reference: factor must be a power of two in [2,1024]");
  const int d = parent.dim;
  const double h = parent.h;
  const double dt = h / r;
  const long parent_steps = parent.steps();

  RefinedPath out;
  out.refine_factor = r;
  out.h = h;
  out.dim = d;
  out.parent_exited = parent.exited;
  if (parent.exited) {
    out.tau_bar = parent.tau_bar();
    out.xbar_exit = parent.states[static_cast<std::size_t>(parent.exit_index)];
  }
  if (!parent.exited) out.reference_censored = true;

  RngStream rng(refine_key, parent.rng.path_id);
  RngStream parent_cont(parent.rng);
  parent_cont.seek(static_cast<std::uint64_t>(parent_steps) * static_cast<std::uint64_t>(d));

  const long cap = opts.max_steps > 0 ? opts.max_steps
                                      : std::max(parent.max_steps, parent_steps);

  // Coefficient buffers. The frozen path uses the parent grid state; the
  // reference path refreshes at every fine node.
  Vec xv(d), mu_vec;
  Mat sig_mat;
  double mu_true[kMaxDim], sig_true[kMaxDim * kMaxDim];
  double mu_froz[kMaxDim], sig_froz[kMaxDim * kMaxDim];
  auto load_coeffs = [&](const double* x, double* mu_raw, double* sig_raw) {
    if (p.const_coeffs) {
      for (int i = 0; i < d; ++i) mu_raw[i] = p.mu_const[i];
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) sig_raw[a * d + b] = p.sigma_const(a, b);
      return;
    }
    for (int i = 0; i < d; ++i) xv[i] = x[i];
    p.mu(xv, mu_vec);
    p.sigma(xv, sig_mat);
    for (int i = 0; i < d; ++i) mu_raw[i] = mu_vec[i];
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) sig_raw[a * d + b] = sig_mat(a, b);
  };

  double xt[kMaxDim];  // true-coefficient reference state
  for (int i = 0; i < d; ++i) xt[i] = parent.x0[i];
  bool true_exited = false;

  double xc[kMaxDim], woff[kMaxDim], dwbuf[kMaxDim];
  std::vector<double> seg(static_cast<std::size_t>(r) * d);
  const double sqrt_h = std::sqrt(h);

  if (opts.keep_fine) {
    out.sub_increments.resize(static_cast<std::size_t>(parent_steps));
    out.frozen_nodes.resize(static_cast<std::size_t>(parent_steps));
    out.w_offsets.resize(static_cast<std::size_t>(parent_steps));
  }

  for (long k = 0;; ++k) {
    const bool within_parent = k < parent_steps;
    if (!within_parent) {
      if (!parent.exited || true_exited) break;
      if (k >= cap) {
        out.reference_censored = true;
        break;
      }
    }

    const double* dw;
    if (within_parent) {
      const Vec& inc = parent.increments[static_cast<std::size_t>(k)];
      for (int i = 0; i < d; ++i) dwbuf[i] = inc[i];
      dw = dwbuf;
    } else {
      for (int i = 0; i < d; ++i) dwbuf[i] = sqrt_h * parent_cont.next_normal();
      dw = dwbuf;
    }
    bridge_split(dw, d, r, h, rng, seg.data());

    const bool track_frozen = within_parent && (!out.theta_found || opts.keep_fine);
    if (track_frozen) {
      const Vec& base = parent.states[static_cast<std::size_t>(k)];
      for (int i = 0; i < d; ++i) {
        xc[i] = base[i];
        woff[i] = 0.0;
      }
      load_coeffs(xc, mu_froz, sig_froz);
    }
    if (opts.keep_fine && within_parent) {
      out.sub_increments[static_cast<std::size_t>(k)].reserve(r);
      out.frozen_nodes[static_cast<std::size_t>(k)].reserve(r);
      out.w_offsets[static_cast<std::size_t>(k)].reserve(r);
    }

    for (int j = 0; j < r; ++j) {
      const double* dwj = seg.data() + static_cast<std::size_t>(j) * d;

      if (!true_exited) {
        load_coeffs(xt, mu_true, sig_true);
        for (int i = 0; i < d; ++i) xt[i] += mu_true[i] * dt;
        matvec_add(sig_true, dwj, d, xt);
        for (int i = 0; i < d; ++i)
          if (!std::isfinite(xt[i]))
            throw NumericError("refine_reference: non-finite reference state",
                               static_cast<long long>(parent.rng.path_id), k);
        if (outside_raw(p.domain, xt, d)) {
          true_exited = true;
          out.reference_censored = false;
          out.tau_ref = static_cast<double>(k) * h + static_cast<double>(j + 1) * dt;
          out.x_tau_ref.resize(d);
          for (int i = 0; i < d; ++i) out.x_tau_ref[i] = xt[i];
        }
      }

      if (track_frozen) {
        double xc_prev[kMaxDim], w_prev[kMaxDim];
        for (int i = 0; i < d; ++i) {
          xc_prev[i] = xc[i];
          w_prev[i] = woff[i];
        }
        for (int i = 0; i < d; ++i) {
          xc[i] += mu_froz[i] * dt;
          woff[i] += dwj[i];
        }
        matvec_add(sig_froz, dwj, d, xc);
        if (j == r - 1) {
          // Snap to the parent grid state (equal in exact arithmetic). This
          // pins the interpolation exit at or before the discrete exit.
          const Vec& next = parent.states[static_cast<std::size_t>(k + 1)];
          for (int i = 0; i < d; ++i) xc[i] = next[i];
        }
        if (!out.theta_found && outside_raw(p.domain, xc, d)) {
          // One bisection on the final fine subinterval, linear in W.
          double dx[kMaxDim];
          for (int i = 0; i < d; ++i) dx[i] = xc[i] - xc_prev[i];
          double mid[kMaxDim];
          for (int i = 0; i < d; ++i) mid[i] = xc_prev[i] + 0.5 * dx[i];
          const double alpha = outside_raw(p.domain, mid, d) ? 0.25 : 0.75;
          out.theta_found = true;
          out.theta_step = k;
          out.theta_time =
              static_cast<double>(k) * h + (static_cast<double>(j) + alpha) * dt;
          out.theta_plus = static_cast<double>(k + 1) * h;
          out.xc_theta.resize(d);
          out.w_theta_rel.resize(d);
          for (int i = 0; i < d; ++i) {
            out.xc_theta[i] = xc_prev[i] + alpha * dx[i];
            out.w_theta_rel[i] = w_prev[i] + alpha * dwj[i];
          }
        }
        if (opts.keep_fine && within_parent) {
          Vec sv(d), fv(d), wv(d);
          for (int i = 0; i < d; ++i) {
            sv[i] = dwj[i];
            fv[i] = xc[i];
            wv[i] = woff[i];
          }
          out.sub_increments[static_cast<std::size_t>(k)].push_back(sv);
          out.frozen_nodes[static_cast<std::size_t>(k)].push_back(fv);
          out.w_offsets[static_cast<std::size_t>(k)].push_back(wv);
        }
      }
    }

    if (within_parent && !opts.keep_fine && true_exited && out.theta_found &&
        parent.exited)
      break;
  }

  // The snap above makes this unreachable for exited parents; keep a guard
  // for the censored case where theta may genuinely not exist.
  if (parent.exited && !out.theta_found) {
    out.theta_found = true;
    out.theta_step = parent.exit_index - 1;
    out.theta_time = out.tau_bar;
    out.theta_plus = out.tau_bar;
    out.xc_theta = out.xbar_exit;
    out.w_theta_rel = parent.increments.back();
  }
  return out;
}

ExitTable exit_statistics(std::span<const RefinedPath> paths, const std::vector<int>& p_list) {
  if (paths.empty()) throw std::invalid_argument("exit_statistics: empty input");
  std::vector<MeanAcc> tau(p_list.size());
  MeanAcc space, theta;
  long long censored = 0;
  for (const RefinedPath& rp : paths) {
    if (!rp.parent_exited || rp.reference_censored) {
      ++censored;
      continue;
    }
    const double diff = std::abs(rp.tau_ref - rp.tau_bar);
    for (std::size_t i = 0; i < p_list.size(); ++i)
      tau[i].add(std::pow(diff, p_list[i]));
    space.add((rp.x_tau_ref - rp.xbar_exit).squaredNorm());
    const double gap = rp.tau_bar - rp.theta_plus;
    theta.add(gap * gap);
  }
  ExitTable table;
  table.n_paths = static_cast<long long>(paths.size()) - censored;
  table.n_censored = censored;
  for (std::size_t i = 0; i < p_list.size(); ++i)
    table.tau_error.push_back({p_list[i], tau[i].mean(), tau[i].stderr_of_mean()});
  table.space_mean = space.mean();
  table.space_se = space.stderr_of_mean();
  table.theta_gap_mean = theta.mean();
  table.theta_gap_se = theta.stderr_of_mean();
  return table;
}

}  // namespace exitbsde
