// Gaussian-process posterior over f and its derivatives at a query point.
//
// Everything here conditions a zero-mean SE-ARD prior on function values.
// Gradient and Hessian posteriors follow from applying the derivative
// operators to the cross-covariance k(x, X); only the posterior *means* of g
// and H and the *traces* of their covariances (the power functions pi_g and
// pi_H) are ever produced. The d^2 x d^2 Hessian covariance is never built.
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nestbo/kernel.hpp"

namespace nestbo {

struct Dataset {
  Eigen::MatrixXd inputs;   // n x d
  Eigen::VectorXd targets;  // n

  Dataset() = default;
  explicit Dataset(int dim) : inputs(0, dim), targets(0) {}
  Dataset(Eigen::MatrixXd x, Eigen::VectorXd y) : inputs(std::move(x)), targets(std::move(y)) {}

  int size() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
  void append(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
  void validate() const;
};

struct GpOptions {
  /// Diagonal jitter, in units of the signal variance.
  double jitter = 1e-8;
};

/// Fitted posterior: Cholesky factor of K_XX + (noise + jitter) I and the
/// weight vector alpha = K^{-1} y. Immutable once built.
class GpState {
 public:
  GpState(Dataset data, KernelParams params, GpOptions opts = {});

  const Dataset& data() const { return data_; }
  const KernelParams& params() const { return params_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// L^{-1} y, the whitened targets.
  const Eigen::VectorXd& whitened_targets() const { return whitened_targets_; }
  int dim() const { return params_.dim(); }
  int size() const { return data_.size(); }
  /// noise_variance + jitter * signal_variance
  double diagonal_shift() const { return shift_; }

  /// k(x, X) as an n-vector.
  Eigen::VectorXd cross_covariance(ConstVecRef x) const;
  /// Solves L v = b with the lower Cholesky factor.
  Eigen::VectorXd whiten(const Eigen::VectorXd& b) const;

 private:
  Dataset data_;
  KernelParams params_;
  double shift_;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd whitened_targets_;
};

double posterior_mean(const GpState& gp, ConstVecRef x);
double posterior_var(const GpState& gp, ConstVecRef x);
Eigen::VectorXd posterior_mean_grad(const GpState& gp, ConstVecRef x);

struct DerivBelief {
  Eigen::VectorXd mean_grad;
  Eigen::MatrixXd mean_hess;
  double pi_g = 0.0;
  double pi_h = 0.0;
};

struct PowerPair {
  double pi_g = 0.0;
  double pi_h = 0.0;
};

DerivBelief grad_belief(const GpState& gp, ConstVecRef x);

/// Power functions at x after additionally conditioning on the inputs in Z
/// (rows). No targets are needed since posterior covariances ignore them.
PowerPair fantasy_power(const GpState& gp, ConstVecRef x, const Eigen::MatrixXd& pending);

/// s = ||H^{-1}||^2 ||g||^2 with the operator 2-norm. Throws
/// SingularHessianError when sigma_min(H) < 1e-10 max(1, ||H||).
double scale_factor(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess);
double scale_factor(const DerivBelief& belief);

/// Clamps tiny negative variances to zero; throws NumericalError below -1e-10.
double clamp_variance(double v, const char* what);

// Incremental conditioning of the gradient/Hessian posteriors at a fixed
// point x. Each derivative "operator" (d gradient components, then the
// d(d+1)/2 Hessian entries i <= j in row-major order) keeps its whitened
// cross-covariance column W_o = L^{-1} q_o and its residual variance.
// Appending a point z is a rank-one Cholesky extension:
//
//   w = L^{-1} k(X, z),  s = k(z, z) + shift - |w|^2
//   u_o = (q_o(z) - w . W_o) / sqrt(s),  residual_o -= u_o^2
//
// Because a new target's whitened innovation is standard normal under the
// current posterior, u_o also gives the fantasy update of the operator's
// posterior mean: mean_o += u_o * e, e ~ N(0, 1).
class FantasyConditioner {
 public:
  FantasyConditioner(const GpState& gp, ConstVecRef x);

  struct Trial {
    PowerPair power;
    Eigen::VectorXd whitened;  // u, one entry per operator
    bool informative = true;   // false when s underflows (duplicate input)
  };

  PowerPair power() const { return power_from(residual_); }
  Trial trial(ConstVecRef z) const;
  void append(ConstVecRef z);

  int dim() const { return dim_; }
  int num_ops() const { return static_cast<int>(weight_.size()); }
  int num_pending() const { return static_cast<int>(pending_rows_.size()); }
  /// Whitened operator rows of the appended points, in append order.
  const std::vector<Eigen::VectorXd>& pending_whitened() const { return pending_rows_; }

  /// Adds sum_k rows[k] * e[k] to a gradient/Hessian pair laid out per operator.
  void apply_update(const Eigen::VectorXd& delta_ops, Eigen::VectorXd& grad,
                    Eigen::MatrixXd& hess) const;

 private:
  PowerPair power_from(const Eigen::VectorXd& residual) const;
  void cross_ops(ConstVecRef z, Eigen::VectorXd& q) const;
  Eigen::VectorXd kernel_column(ConstVecRef z) const;

  KernelParams params_;
  double shift_;
  int dim_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd points_;    // conditioned inputs, (n + p) x d
  Eigen::MatrixXd scaled_;    // points_ divided by the lengthscales
  Eigen::MatrixXd factor_;    // lower Cholesky factor, (n + p) x (n + p)
  Eigen::MatrixXd whitened_;  // (n + p) x ops
  Eigen::VectorXd residual_;  // per-operator posterior variance
  Eigen::VectorXd weight_;    // 1 for gradient/diagonal ops, 2 for off-diagonal
  std::vector<std::pair<int, int>> hess_index_;
  std::vector<Eigen::VectorXd> pending_rows_;
  int rows_ = 0;
};

struct OutputScaling {
  double offset = 0.0;
  double scale = 1.0;
  double apply(double y) const { return (y - offset) / scale; }
};

/// Mean and standard deviation of y; scale falls back to 1 for constant data.
OutputScaling standardization(const Eigen::VectorXd& y);

}  // namespace nestbo
