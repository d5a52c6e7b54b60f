// Independent verification tools: finite-difference derivatives, the
// symmetric central-difference stencil, power-function sweeps on that
// stencil, brute-force assembly of the vec(H) posterior covariance, and the
// Newton-step error against known derivatives.
#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nestbo/benchfns.hpp"
#include "nestbo/deriv_gp.hpp"

namespace nestbo {

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

/// Central differences with per-coordinate steps.
Eigen::VectorXd fd_gradient(const ScalarFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps);
Eigen::MatrixXd fd_hessian(const ScalarFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps);

struct Stencil {
  Eigen::VectorXd center;
  double h = 0.0;
  Eigen::MatrixXd points;  // (d^2 + d + 1) x d
};

/// Rows: center, +h e_1, -h e_1, ..., then +h(e_i + e_j), -h(e_i + e_j) for i < j.
Stencil make_stencil(const Eigen::VectorXd& center, double h);

struct VpcOptions {
  double jitter = 1e-10;
  /// Copies of each stencil point.
  int replicates = 1;
  /// Overrides the kernel's noise variance.
  double noise_variance = 0.0;
};

struct VpcRow {
  std::string design;  // "prior" or "stencil"
  double h = 0.0;
  double pi_g = 0.0;
  double pi_h = 0.0;
  std::string status = "ok";
};

/// Power functions at the origin of an empty-data GP, first unconditioned,
/// then conditioned on the stencil for every h in the sweep. A failing h is
/// reported in its row and the sweep continues.
std::vector<VpcRow> vpc_check(const KernelParams& params, int d, const std::vector<double>& h_sweep,
                              const VpcOptions& opts = {});

/// CSV with header design,h,pi_g,pi_h,status.
void write_vpc_csv(std::ostream& os, const std::vector<VpcRow>& rows);

/// ||H^{-1} g - H_hat^{-1} g_hat|| with (g, H) the true derivatives at x.
/// Empty when the true or estimated Hessian is singular. A zero posterior
/// gradient counts as a zero estimated step.
std::optional<double> newton_error(const Eigen::VectorXd& true_grad, const Eigen::MatrixXd& true_hess,
                                   const GpState& gp, ConstVecRef x);
std::optional<double> newton_error(const RffFunction& f, ConstVecRef x, const GpState& gp);

/// Trace of the explicitly assembled d^2 x d^2 posterior covariance of
/// vec(H) at x. Refuses d > 4.
double brute_force_pi_h(const GpState& gp, ConstVecRef x);

}  // namespace nestbo
