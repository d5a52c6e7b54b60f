// Box-constrained limited-memory BFGS.
//
// Projected search: variables pinned at a bound with the gradient pushing
// outward are frozen for the iteration, the two-loop recursion runs on the
// rest, and trial points are projected back into the box.
#pragma once

#include <functional>

#include <Eigen/Core>

namespace nestbo {

struct LbfgsOptions {
  int max_iterations = 100;
  int memory = 8;
  double grad_tol = 1e-6;   // projected-gradient infinity norm
  double f_rel_tol = 1e-12;
  int max_line_search = 30;
  double c1 = 1e-4;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Returns f(x) and writes the gradient into `grad`.
using ValueAndGradient = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

LbfgsResult minimize_bounded(const ValueAndGradient& fg, Eigen::VectorXd x0,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const LbfgsOptions& opts = {});

/// Wraps a value-only function with central differences, one-sided at the box edges.
ValueAndGradient finite_difference_gradient(std::function<double(const Eigen::VectorXd&)> f,
                                            Eigen::VectorXd lower, Eigen::VectorXd upper,
                                            double step);

}  // namespace nestbo
