// Synthetic objectives, their sparse embedded variants, and random-Fourier-
// feature draws from an SE GP prior.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "nestbo/kernel.hpp"
#include "nestbo/random.hpp"

namespace nestbo {

enum class FunctionId { sphere, rosenbrock, griewank, ackley, rff_prior };

std::string to_string(FunctionId id);
/// Throws std::invalid_argument for unknown names.
FunctionId function_from_string(std::string_view name);

// f(x) = sum_i w_i sqrt(2 / n_b) cos(theta_i . x + tau_i)
struct RffFunction {
  Eigen::VectorXd weights;      // n_b, N(0, 1)
  Eigen::MatrixXd frequencies;  // n_b x d, N(0, l^-2 I)
  Eigen::VectorXd phases;       // n_b, U(0, 2 pi)
  double lengthscale = 1.0;

  int num_features() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(frequencies.cols()); }
};

RffFunction sample_rff(int d, int num_features, double lengthscale, Rng& rng);
double rff_eval(const RffFunction& f, ConstVecRef x);
Eigen::VectorXd rff_grad(const RffFunction& f, ConstVecRef x);
Eigen::MatrixXd rff_hess(const RffFunction& f, ConstVecRef x);

/// Default centre of the RFF lengthscale draw: sqrt(d) / 10.
double rff_heuristic_lengthscale(int d);

struct BenchmarkSpec {
  FunctionId function = FunctionId::sphere;
  int ambient_dim = 0;
  /// Coordinates the objective reads, in order; empty means all of them.
  std::vector<int> active_dims;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double noise_std = 0.0;
  std::optional<double> optimum_value;
  std::shared_ptr<const RffFunction> rff;  // set for rff_prior

  int effective_dim() const {
    return active_dims.empty() ? ambient_dim : static_cast<int>(active_dims.size());
  }
  void validate() const;
};

/// Standard bounds and known optimum for each test function.
BenchmarkSpec make_benchmark(FunctionId id, int d);

/// Base function on a uniformly drawn subset of `d_eff` of the `d` coordinates.
BenchmarkSpec embedded_spec(FunctionId base, int d, int d_eff, Rng& rng);

/// GP prior draw on [0, 1]^d with lengthscale ~ U[0.8, 1.2] * heuristic.
BenchmarkSpec rff_prior_spec(int d, Rng& rng, int num_features = 1024,
                             double heuristic_lengthscale = 0.0);

double evaluate_noiseless(const BenchmarkSpec& spec, ConstVecRef x);

/// Noiseless value plus N(0, noise_std^2) drawn from `noise_rng` when
/// noise_std > 0. Throws std::invalid_argument outside the bounds.
double evaluate(const BenchmarkSpec& spec, ConstVecRef x, Rng* noise_rng = nullptr);

/// Analytic derivatives (sphere, rosenbrock, griewank, rff_prior). Ackley
/// has a kink at its minimizer and is rejected.
Eigen::VectorXd true_gradient(const BenchmarkSpec& spec, ConstVecRef x);
Eigen::MatrixXd true_hessian(const BenchmarkSpec& spec, ConstVecRef x);

}  // namespace nestbo
