// Marginal-likelihood fitting of SE-ARD hyperparameters.
#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "nestbo/deriv_gp.hpp"
#include "nestbo/kernel.hpp"

namespace nestbo {

struct HyperBounds {
  double lengthscale_min = 1e-3, lengthscale_max = 1e3;
  double noise_min = 1e-8, noise_max = 1.0;
  double signal_min = 1e-4, signal_max = 1e4;
};

/// Log-normal priors for MAP fitting: log l_i ~ N(loc, scale^2) on every
/// lengthscale, with loc = sqrt(2) + log(d) / 2 unless set, and
/// log noise_variance ~ N(noise_loc, noise_scale^2) and
/// signal_variance ~ Gamma(signal_shape, signal_rate).
struct HyperPrior {
  bool enabled = true;
  std::optional<double> loc;
  double scale = 1.7320508075688772;  // sqrt(3)
  double noise_loc = -4.0;
  double noise_scale = 1.0;
  double signal_shape = 2.0;
  double signal_rate = 0.15;

  double centre(int dim) const;
};

struct FitOptions {
  int restarts = 3;
  std::uint64_t seed = 0;
  int max_iterations = 100;
  /// Used as the first restart when present (warm start).
  std::optional<KernelParams> initial;
  HyperBounds bounds;
  HyperPrior prior;
  double jitter = 1e-8;
};

enum class FitStatus { ok, degenerate };

struct FitResult {
  KernelParams params;
  FitStatus status = FitStatus::ok;
  double neg_log_likelihood = 0.0;  // objective value, prior included
};

/// Negative log marginal likelihood of y under (params). When `grad_log` is
/// non-null it receives the gradient with respect to
/// (log sf2, log l_1..l_d, log noise).
double negative_log_marginal_likelihood(const Dataset& data, const KernelParams& params,
                                        double jitter, Eigen::VectorXd* grad_log = nullptr);

/// Negative log posterior: the marginal likelihood term plus the priors
/// (constants dropped), with the same gradient layout.
double negative_log_posterior(const Dataset& data, const KernelParams& params, double jitter,
                              const HyperPrior& prior, Eigen::VectorXd* grad_log = nullptr);

/// Best of `restarts` bounded quasi-Newton runs in log-parameter space; ties
/// go to the earliest restart. Constant targets short-circuit to the
/// initialization with the noise at its floor and status degenerate.
FitResult fit_hyperparams(const Dataset& data, const FitOptions& opts = {});

}  // namespace nestbo
