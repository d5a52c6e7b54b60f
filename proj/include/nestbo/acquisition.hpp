// Newton-step-targeting (NeST) and gradient-information (GI) acquisitions
// and greedy batch selection inside a local box.
//
//   NeST(Z) = pi_g(x_t | D u Z) + s * pi_H(x_t | D u Z)
//   GI(Z)   = pi_g(x_t | D u Z)
#pragma once

#include <vector>

#include <Eigen/Core>

#include "nestbo/deriv_gp.hpp"
#include "nestbo/random.hpp"

namespace nestbo {

enum class Criterion { nest, gi };

struct ScaleMode {
  enum class Kind { fixed, plugin, monte_carlo };
  Kind kind = Kind::fixed;
  double value = 1.0;    // fixed
  int num_samples = 32;  // monte_carlo

  static ScaleMode fixed(double s) { return {Kind::fixed, s, 32}; }
  static ScaleMode plugin() { return {Kind::plugin, 1.0, 32}; }
  static ScaleMode monte_carlo(int n = 32) { return {Kind::monte_carlo, 1.0, n}; }
};

struct AcqConfig {
  Criterion criterion = Criterion::nest;
  ScaleMode scale;
  double box_radius = 0.2;
  int num_restarts = 5;
  int raw_samples = 20;
  /// Inner polish stopping rule: projected-gradient norm or iteration cap.
  double inner_grad_tol = 1e-6;
  int inner_max_iterations = 100;
  double fd_step = 1e-4;

  /// Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

double nest_value(const GpState& gp, ConstVecRef x_t, const Eigen::MatrixXd& pending, double s_hat);
double gi_value(const GpState& gp, ConstVecRef x_t, const Eigen::MatrixXd& pending);

/// Plug-in scale s_D(x_t). A singular posterior Hessian yields `fallback`.
double plugin_scale(const DerivBelief& belief, double fallback = 1.0, bool* singular = nullptr);

struct McValue {
  double value = 0.0;
  double mean_scale = 0.0;
  int singular_samples = 0;
};

/// Monte Carlo estimate of pi_g + E[s_{D u (Z, y)}] pi_H over fantasy targets
/// y drawn jointly from the posterior predictive at Z. Samples whose fantasy
/// Hessian is singular use the plug-in scale of the current data.
McValue mc_nest_value(const GpState& gp, ConstVecRef x_t, const Eigen::MatrixXd& pending,
                      int num_samples, Rng& rng);

struct BatchResult {
  Eigen::MatrixXd points;      // b x d
  std::vector<double> values;  // acquisition after each pick
  double scale_used = 0.0;     // fixed / plug-in scale, or the last MC mean
  int singular_samples = 0;
};

/// Greedy sequential selection of `b` points. Each pick minimizes the
/// single-point acquisition over [x_t - delta, x_t + delta] intersected with
/// [lower, upper] and is then fantasized into the posterior.
BatchResult select_batch(const GpState& gp, ConstVecRef x_t, int b, const AcqConfig& cfg,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, Rng& rng);

}  // namespace nestbo
