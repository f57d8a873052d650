#include "exitbsde/funclass.hpp"

#include "exitbsde/errors.hpp"
#include "exitbsde/rng.hpp"
#include "exitbsde/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace exitbsde {

double spectral_norm(const Mat& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

EvalTriple eval_with_derivatives(const CandidateFunction& u, const Vec& x) {
  EvalTriple t;
  u.eval_all(x, t.value, t.grad, t.hess);
  if (!std::isfinite(t.value) || !t.grad.allFinite() || !t.hess.allFinite())
    throw NumericError(std::string("non-finite evaluation of candidate variant '") +
                       u.kind() + "'");
  return t;
}

// ---------------------------------------------------------------------------
// Polynomial

namespace {

inline double pow_int(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

Polynomial::Polynomial(int dim, std::vector<Term> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Polynomial: bad dimension");
  for (const auto& t : terms_)
    for (int i = dim; i < kMaxDim; ++i)
      if (t.exponents[i] != 0)
        throw std::invalid_argument("Polynomial: exponent beyond dimension");
}

Polynomial::Term Polynomial::term(std::initializer_list<int> exps, double coeff) {
  Term t;
  int i = 0;
  for (int e : exps) {
    if (i >= kMaxDim) throw std::invalid_argument("Polynomial::term: too many exponents");
    t.exponents[i++] = e;
  }
  t.coeff = coeff;
  return t;
}

std::shared_ptr<Polynomial> Polynomial::zero(int dim) {
  return std::make_shared<Polynomial>(dim, std::vector<Term>{});
}

double Polynomial::value(const Vec& x) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    double p = t.coeff;
    for (int i = 0; i < dim_; ++i) p *= pow_int(x[i], t.exponents[i]);
    v += p;
  }
  return v;
}

void Polynomial::eval_all(const Vec& x, double& v, Vec& g, Mat& h) const {
  v = 0.0;
  g.setZero(dim_);
  h.setZero(dim_, dim_);
  for (const auto& t : terms_) {
    double powers[kMaxDim];
    for (int i = 0; i < dim_; ++i) powers[i] = pow_int(x[i], t.exponents[i]);
    auto prod_except = [&](int skip1, int skip2) {
      double p = t.coeff;
      for (int i = 0; i < dim_; ++i)
        if (i != skip1 && i != skip2) p *= powers[i];
      return p;
    };
    v += prod_except(-1, -1) * 1.0;
    for (int i = 0; i < dim_; ++i) {
      const int ei = t.exponents[i];
      if (ei == 0) continue;
      g[i] += prod_except(i, -1) * ei * pow_int(x[i], ei - 1);
      if (ei >= 2)
        h(i, i) += prod_except(i, -1) * ei * (ei - 1) * pow_int(x[i], ei - 2);
      for (int j = i + 1; j < dim_; ++j) {
        const int ej = t.exponents[j];
        if (ej == 0) continue;
        const double c =
            prod_except(i, j) * ei * pow_int(x[i], ei - 1) * ej * pow_int(x[j], ej - 1);
        h(i, j) += c;
        h(j, i) += c;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// SingleHiddenLayerNet

SingleHiddenLayerNet::SingleHiddenLayerNet(Eigen::MatrixXd w1, Eigen::VectorXd b1,
                                           Eigen::VectorXd w2, double b2)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(b2) {
  if (w1_.rows() != b1_.size() || w1_.rows() != w2_.size())
    throw std::invalid_argument("SingleHiddenLayerNet: inconsistent shapes");
  if (w1_.cols() < 1 || w1_.cols() > kMaxDim)
    throw std::invalid_argument("SingleHiddenLayerNet: bad input dimension");
}

double SingleHiddenLayerNet::value(const Vec& x) const {
  const int m = width();
  double v = b2_;
  for (int j = 0; j < m; ++j) {
    double z = b1_(j);
    for (int i = 0; i < w1_.cols(); ++i) z += w1_(j, i) * x[i];
    v += w2_(j) * std::tanh(z);
  }
  return v;
}

void SingleHiddenLayerNet::eval_all(const Vec& x, double& v, Vec& g, Mat& h) const {
  const int m = width();
  const int d = dimension();
  v = b2_;
  g.setZero(d);
  h.setZero(d, d);
  for (int j = 0; j < m; ++j) {
    double z = b1_(j);
    for (int i = 0; i < d; ++i) z += w1_(j, i) * x[i];
    double a, a1, a2, a3;
    TanhActivation::stack(z, a, a1, a2, a3);
    v += w2_(j) * a;
    const double c1 = w2_(j) * a1;
    const double c2 = w2_(j) * a2;
    for (int i = 0; i < d; ++i) {
      const double wi = w1_(j, i);
      g[i] += c1 * wi;
      h(i, i) += c2 * wi * wi;
      for (int k = i + 1; k < d; ++k) {
        const double c = c2 * wi * w1_(j, k);
        h(i, k) += c;
        h(k, i) += c;
      }
    }
  }
}

void SingleHiddenLayerNet::units(const Vec& x, Units& u) const {
  const int m = width();
  u.z.resize(m);
  u.a.resize(m);
  u.a1.resize(m);
  u.a2.resize(m);
  u.a3.resize(m);
  for (int j = 0; j < m; ++j) {
    double z = b1_(j);
    for (int i = 0; i < w1_.cols(); ++i) z += w1_(j, i) * x[i];
    u.z(j) = z;
    TanhActivation::stack(z, u.a(j), u.a1(j), u.a2(j), u.a3(j));
  }
}

std::shared_ptr<SingleHiddenLayerNet> SingleHiddenLayerNet::random_init(int dim, int width,
                                                                        std::uint64_t seed,
                                                                        double scale) {
  RngStream rng(derive_seed(seed, "net-init"), 0);
  Eigen::MatrixXd w1(width, dim);
  Eigen::VectorXd b1(width), w2(width);
  const double ws = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int j = 0; j < width; ++j) {
    for (int i = 0; i < dim; ++i) w1(j, i) = ws * rng.next_normal();
    b1(j) = 0.5 * rng.next_normal();
    w2(j) = scale / std::sqrt(static_cast<double>(width)) * rng.next_normal();
  }
  return std::make_shared<SingleHiddenLayerNet>(std::move(w1), std::move(b1), std::move(w2),
                                                0.0);
}

// ---------------------------------------------------------------------------
// Perturbed / ExactWrapper

Perturbed::Perturbed(CandidatePtr base, double eps, CandidatePtr bump)
    : base_(std::move(base)), eps_(eps), bump_(std::move(bump)) {
  if (base_->dimension() != bump_->dimension())
    throw std::invalid_argument("Perturbed: dimension mismatch between base and bump");
}

double Perturbed::value(const Vec& x) const {
  return base_->value(x) + eps_ * bump_->value(x);
}

void Perturbed::eval_all(const Vec& x, double& v, Vec& g, Mat& h) const {
  double vb;
  Vec gb;
  Mat hb;
  base_->eval_all(x, v, g, h);
  bump_->eval_all(x, vb, gb, hb);
  v += eps_ * vb;
  g += eps_ * gb;
  h += eps_ * hb;
}

ExactWrapper::ExactWrapper(int dim, std::string name, ValueFn v, GradFn g, HessFn h)
    : dim_(dim), name_(std::move(name)), v_(std::move(v)), g_(std::move(g)), h_(std::move(h)) {}

void ExactWrapper::eval_all(const Vec& x, double& v, Vec& g, Mat& h) const {
  v = v_(x);
  g_(x, g);
  h_(x, h);
}

// ---------------------------------------------------------------------------
// Distance

namespace {

double pair_deviation(const CandidateFunction& u, const CandidateFunction& v, const Vec& x) {
  double uv, vv;
  Vec ug, vg;
  Mat uh, vh;
  u.eval_all(x, uv, ug, uh);
  v.eval_all(x, vv, vg, vh);
  return std::abs(uv - vv) + (ug - vg).norm() + spectral_norm(Mat(uh - vh));
}

Vec clip_to_closure(const Domain& dom, const Vec& x) {
  if (dom.signed_distance(x) <= 0.0) return x;
  if (dom.kind() == Domain::Kind::Interval) {
    Vec p(1);
    p[0] = std::min(std::max(x[0], dom.lo()), dom.hi());
    return p;
  }
  const Vec r = x - dom.center();
  const double n = r.norm();
  if (n == 0.0) return dom.center();
  return dom.center() + (dom.radius() / n) * r;
}

}  // namespace

DistanceEstimate dnorm_distance(const CandidateFunction& u, const CandidateFunction& v,
                                const Domain& domain, long budget) {
  if (budget < 100) throw std::invalid_argument("dnorm_distance: budget must be >= 100");
  if (u.dimension() != v.dimension())
    throw std::invalid_argument("dnorm_distance: dimension mismatch");

  DistanceEstimate est;
  const long n_interior = budget;
  const long n_boundary = std::max<long>(budget / 4, 8);
  double best = -1.0;
  Vec best_x;
  auto consider = [&](const Vec& x) {
    const double val = pair_deviation(u, v, x);
    if (val > best) {
      best = val;
      best_x = x;
    }
  };
  for (long i = 0; i < n_interior; ++i) consider(halton_in_domain(domain, i));
  for (long i = 0; i < n_boundary; ++i) consider(halton_on_boundary(domain, i));
  est.n_samples = n_interior + n_boundary;

  // Local refinement: shrinking coordinate pattern around the best point,
  // plus its boundary projection (the sup often sits on the boundary).
  const int d = domain.dimension();
  double step = (domain.kind() == Domain::Kind::Ball)
                    ? 0.25 * domain.radius()
                    : 0.25 * (domain.hi() - domain.lo());
  const int levels = 40;
  for (int lvl = 0; lvl < levels; ++lvl) {
    bool improved = false;
    for (int i = 0; i < d; ++i) {
      for (int s = -1; s <= 1; s += 2) {
        Vec cand = best_x;
        cand[i] += s * step;
        cand = clip_to_closure(domain, cand);
        const double val = pair_deviation(u, v, cand);
        if (val > best) {
          best = val;
          best_x = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    ++est.refinement_levels;
    if (step < 1e-12) break;
  }
  est.value = best;
  est.argmax_point = best_x;
  return est;
}

// ---------------------------------------------------------------------------
// Finite-difference checks

FdReport fd_check(const CandidateFunction& u, const std::vector<Vec>& points, double tol) {
  if (points.empty()) throw std::invalid_argument("fd_check: needs at least one point");
  FdReport rep;
  const int d = u.dimension();
  for (const Vec& x : points) {
    const EvalTriple t = eval_with_derivatives(u, x);
    Vec steps(d);
    for (int i = 0; i < d; ++i) steps[i] = 1e-4 * std::max(1.0, std::abs(x[i]));
    auto at = [&](int i, double si, int j, double sj) {
      Vec y = x;
      y[i] += si;
      if (j >= 0) y[j] += sj;
      return u.value(y);
    };
    const double f0 = u.value(x);
    for (int i = 0; i < d; ++i) {
      const double hi = steps[i];
      const double fd = (at(i, hi, -1, 0) - at(i, -hi, -1, 0)) / (2 * hi);
      const double rel = std::abs(t.grad[i] - fd) /
                         std::max({1.0, std::abs(t.grad[i]), std::abs(fd)});
      rep.max_rel_grad = std::max(rep.max_rel_grad, rel);
      const double fdd = (at(i, hi, -1, 0) - 2 * f0 + at(i, -hi, -1, 0)) / (hi * hi);
      const double reld = std::abs(t.hess(i, i) - fdd) /
                          std::max({1.0, std::abs(t.hess(i, i)), std::abs(fdd)});
      rep.max_rel_hess = std::max(rep.max_rel_hess, reld);
      for (int j = i + 1; j < d; ++j) {
        const double hj = steps[j];
        const double fdij = (at(i, hi, j, hj) - at(i, hi, j, -hj) - at(i, -hi, j, hj) +
                             at(i, -hi, j, -hj)) /
                            (4 * hi * hj);
        const double relij = std::abs(t.hess(i, j) - fdij) /
                             std::max({1.0, std::abs(t.hess(i, j)), std::abs(fdij)});
        rep.max_rel_hess = std::max(rep.max_rel_hess, relij);
      }
    }
  }
  rep.pass = rep.max_rel_grad <= tol && rep.max_rel_hess <= tol;
  return rep;
}

TaylorReport taylor_remainder_check(const CandidateFunction& u, const Domain& domain,
                                    long n_pairs, std::uint64_t seed) {
  (void)seed;  // pairs come from the nested low-discrepancy sequence
  TaylorReport rep;
  // Calibrate the third-derivative scale from directional differences.
  double m3 = 0.0;
  const long n_cal = std::min<long>(n_pairs, 256);
  for (long i = 0; i < n_cal; ++i) {
    const Vec x1 = halton_in_domain(domain, 2 * i);
    const Vec x2 = halton_in_domain(domain, 2 * i + 1);
    Vec dir = x1 - x2;
    const double nrm = dir.norm();
    if (nrm < 1e-8) continue;
    dir /= nrm;
    const Vec mid = 0.5 * (x1 + x2);
    const double del = 1e-2;
    auto gline = [&](double t) { return u.value(Vec(mid + t * dir)); };
    const double d3 = (gline(2 * del) - 2 * gline(del) + 2 * gline(-del) - gline(-2 * del)) /
                      (2 * del * del * del);
    m3 = std::max(m3, std::abs(d3));
  }
  rep.c_value = 1.5 * m3 / 6.0;
  rep.c_grad = 1.5 * m3 / 2.0;

  bool ok = true;
  for (long i = 0; i < n_pairs; ++i) {
    const Vec x1 = halton_in_domain(domain, 2 * i);
    const Vec x2 = halton_in_domain(domain, 2 * i + 1);
    const Vec dx = x1 - x2;
    const double nrm = dx.norm();
    if (nrm < 1e-3) continue;
    const EvalTriple t2 = eval_with_derivatives(u, x2);
    double v1;
    Vec g1;
    Mat h1;
    u.eval_all(x1, v1, g1, h1);
    const double rem_v = std::abs(v1 - t2.value - t2.grad.dot(dx) -
                                  0.5 * dx.dot(Vec(t2.hess * dx)));
    const double rem_g = (g1 - t2.grad - t2.hess * dx).norm();
    rep.worst_value_ratio = std::max(rep.worst_value_ratio, rem_v / (nrm * nrm * nrm));
    rep.worst_grad_ratio = std::max(rep.worst_grad_ratio, rem_g / (nrm * nrm));
    if (rem_v > rep.c_value * nrm * nrm * nrm + 1e-12) ok = false;
    if (rem_g > rep.c_grad * nrm * nrm + 1e-12) ok = false;
    ++rep.n_pairs;
  }
  rep.pass = ok;
  return rep;
}

}  // namespace exitbsde
