#include "nestbo/hyperparams.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "nestbo/bounded_lbfgs.hpp"

namespace nestbo {
namespace {

Eigen::VectorXd to_log(const KernelParams& p) {
  const int d = p.dim();
  Eigen::VectorXd t(d + 2);
  t[0] = std::log(p.signal_variance);
  for (int i = 0; i < d; ++i) t[1 + i] = std::log(p.lengthscales[i]);
  t[d + 1] = std::log(p.noise_variance);
  return t;
}

KernelParams from_log(const Eigen::VectorXd& t) {
  const int d = static_cast<int>(t.size()) - 2;
  return KernelParams(std::exp(t[0]), t.segment(1, d).array().exp().matrix(), std::exp(t[d + 1]));
}

KernelParams clamp_to(const KernelParams& p, const HyperBounds& b) {
  KernelParams out = p;
  out.signal_variance = std::clamp(p.signal_variance, b.signal_min, b.signal_max);
  out.lengthscales = p.lengthscales.cwiseMax(b.lengthscale_min).cwiseMin(b.lengthscale_max);
  out.noise_variance = std::clamp(p.noise_variance, b.noise_min, b.noise_max);
  return out;
}

}  // namespace

double negative_log_marginal_likelihood(const Dataset& data, const KernelParams& params,
                                        double jitter, Eigen::VectorXd* grad_log) {
  const int n = data.size();
  const int d = params.dim();
  const double sf2 = params.signal_variance;
  const double shift = params.noise_variance + jitter * sf2;

  Eigen::MatrixXd kf(n, n);
  for (int a = 0; a < n; ++a) {
    kf(a, a) = sf2;
    for (int b = 0; b < a; ++b) {
      kf(a, b) = kernel::value(data.inputs.row(a).transpose(), data.inputs.row(b).transpose(), params);
      kf(b, a) = kf(a, b);
    }
  }
  Eigen::MatrixXd k = kf;
  k.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();

  const Eigen::VectorXd alpha = llt.solve(data.targets);
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double logdet = 0.0;
  for (int a = 0; a < n; ++a) logdet += std::log(l(a, a));
  const double nll = 0.5 * data.targets.dot(alpha) + logdet + 0.5 * n * std::log(2.0 * std::numbers::pi);

  if (grad_log != nullptr) {
    // d nll / d theta = -0.5 tr((alpha alpha^T - K^{-1}) dK/dtheta)
    Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(n, n));
    w = alpha * alpha.transpose() - w;
    grad_log->resize(d + 2);
    (*grad_log)[0] = -0.5 * ((w.array() * kf.array()).sum() + jitter * sf2 * w.trace());
    for (int i = 0; i < d; ++i) {
      const double inv_l2 = params.precision(i);
      double acc = 0.0;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < a; ++b) {
          const double r = data.inputs(a, i) - data.inputs(b, i);
          acc += w(a, b) * kf(a, b) * r * r * inv_l2;
        }
      }
      (*grad_log)[1 + i] = -acc;  // symmetric: 2 * (-0.5) * lower-triangle sum
    }
    (*grad_log)[d + 1] = -0.5 * params.noise_variance * w.trace();
  }
  return nll;
}

double HyperPrior::centre(int dim) const {
  return loc ? *loc : std::sqrt(2.0) + 0.5 * std::log(static_cast<double>(dim));
}

double negative_log_posterior(const Dataset& data, const KernelParams& params, double jitter,
                              const HyperPrior& prior, Eigen::VectorXd* grad_log) {
  double v = negative_log_marginal_likelihood(data, params, jitter, grad_log);
  if (!prior.enabled || !std::isfinite(v)) return v;
  const int d = params.dim();
  const double mu = prior.centre(d);
  const double inv_var = 1.0 / (prior.scale * prior.scale);
  for (int i = 0; i < d; ++i) {
    const double z = std::log(params.lengthscales[i]) - mu;
    v += 0.5 * z * z * inv_var;
    if (grad_log != nullptr) (*grad_log)[1 + i] += z * inv_var;
  }
  const double zn = std::log(params.noise_variance) - prior.noise_loc;
  const double inv_nvar = 1.0 / (prior.noise_scale * prior.noise_scale);
  v += 0.5 * zn * zn * inv_nvar;
  if (grad_log != nullptr) (*grad_log)[d + 1] += zn * inv_nvar;
  const double sf2 = params.signal_variance;
  v += -(prior.signal_shape - 1.0) * std::log(sf2) + prior.signal_rate * sf2;
  if (grad_log != nullptr) (*grad_log)[0] += -(prior.signal_shape - 1.0) + prior.signal_rate * sf2;
  return v;
}

FitResult fit_hyperparams(const Dataset& data, const FitOptions& opts) {
  data.validate();
  const int n = data.size();
  const int d = data.dim();
  if (n < 2) throw std::invalid_argument("fit_hyperparams: need at least 2 observations");
  if (opts.restarts < 1) throw std::invalid_argument("fit_hyperparams: restarts must be >= 1");
  const HyperBounds& hb = opts.bounds;

  const double mean = data.targets.mean();
  const double var = (data.targets.array() - mean).square().sum() / static_cast<double>(n - 1);

  KernelParams init;
  if (opts.initial) {
    if (opts.initial->dim() != d) throw std::invalid_argument("fit_hyperparams: initial has wrong dimension");
    init = clamp_to(*opts.initial, hb);
  } else {
    const double ell0 = opts.prior.enabled ? std::exp(opts.prior.centre(d)) : 0.3;
    init = clamp_to(KernelParams::isotropic(d, var > 0.0 ? var : 1.0, ell0, 1e-3 * std::max(var, 1e-6)), hb);
  }

  const double spread = data.targets.maxCoeff() - data.targets.minCoeff();
  if (!(spread > 1e-14 * std::max(1.0, std::abs(mean)))) {
    FitResult r;
    r.params = init;
    r.params.noise_variance = hb.noise_min;
    r.status = FitStatus::degenerate;
    r.neg_log_likelihood = negative_log_posterior(data, r.params, opts.jitter, opts.prior);
    return r;
  }

  Eigen::VectorXd lo(d + 2), hi(d + 2);
  lo[0] = std::log(hb.signal_min);
  hi[0] = std::log(hb.signal_max);
  lo.segment(1, d).setConstant(std::log(hb.lengthscale_min));
  hi.segment(1, d).setConstant(std::log(hb.lengthscale_max));
  lo[d + 1] = std::log(hb.noise_min);
  hi[d + 1] = std::log(hb.noise_max);

  const ValueAndGradient objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
    const double v = negative_log_posterior(data, from_log(t), opts.jitter, opts.prior, &g);
    if (!std::isfinite(v)) g.setZero(t.size());
    return v;
  };

  LbfgsOptions lopts;
  lopts.max_iterations = opts.max_iterations;
  lopts.grad_tol = 1e-5;
  lopts.f_rel_tol = 1e-10;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto log_uniform = [&](double a, double b) {
    return std::log(a) + unit(rng) * (std::log(b) - std::log(a));
  };

  const double ell_hi = opts.prior.enabled ? std::max(2.0, 2.0 * std::exp(opts.prior.centre(d))) : 2.0;

  FitResult best;
  best.neg_log_likelihood = std::numeric_limits<double>::infinity();
  best.params = init;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd t0;
    if (r == 0) {
      t0 = to_log(init);
    } else {
      t0.resize(d + 2);
      const double base = var > 0.0 ? var : 1.0;
      t0[0] = log_uniform(0.2 * base, 5.0 * base);
      for (int i = 0; i < d; ++i) t0[1 + i] = log_uniform(0.05, ell_hi);
      t0[d + 1] = log_uniform(1e-6 * base, 1e-1 * base);
      t0 = t0.cwiseMax(lo).cwiseMin(hi);
    }
    const LbfgsResult res = minimize_bounded(objective, t0, lo, hi, lopts);
    if (res.f < best.neg_log_likelihood) {
      best.neg_log_likelihood = res.f;
      best.params = clamp_to(from_log(res.x), hb);
    }
  }
  return best;
}

}  // namespace nestbo
