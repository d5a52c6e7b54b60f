// Damped Newton update on the GP posterior: direction from the posterior
// mean gradient and Hessian, Armijo backtracking on the posterior mean, and
// one full iteration of the batch/evaluate/refit/step loop.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "nestbo/acquisition.hpp"
#include "nestbo/deriv_gp.hpp"
#include "nestbo/hyperparams.hpp"
#include "nestbo/random.hpp"

namespace nestbo {

enum class StepKind { newton, fallback_gradient };

std::string to_string(StepKind kind);

struct Direction {
  Eigen::VectorXd direction;
  StepKind kind = StepKind::newton;
};

/// Solves H v = g when the symmetrized H passes the PSD gate
/// (min eigenvalue >= 1e-8 max(1, ||H||)); otherwise returns the
/// length-scale-normalized gradient L g / ||L^{1/2} g||, L = diag(l^2).
/// A zero gradient gives a zero direction.
Direction newton_direction(const DerivBelief& belief, const Eigen::VectorXd& lengthscales);

/// L g / ||L^{1/2} g||, or zero when g = 0.
Eigen::VectorXd normalized_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& lengthscales);

struct ArmijoOptions {
  double gamma0 = 1.0;
  double shrink = 0.5;
  double c1 = 1e-4;
  int max_steps = 20;

  void validate() const;
};

struct LineSearchResult {
  double gamma = 0.0;
  int trials = 0;
  bool accepted = false;  // false when every trial failed the Armijo test
};

/// Backtracks gamma until mu(x - gamma v) <= mu(x) - c1 gamma g.v, with the
/// candidate clamped to [lower, upper]. Returns the smallest trial on
/// exhaustion.
LineSearchResult armijo_linesearch(const GpState& gp, ConstVecRef x_t, const Eigen::VectorXd& direction,
                                   const ArmijoOptions& opts, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper);

struct StepResult {
  Eigen::VectorXd direction;
  double step_size = 0.0;
  StepKind kind = StepKind::newton;
  Eigen::VectorXd new_iterate;
  bool converged = false;  // ||g|| < 1e-10, iterate left unchanged
  bool line_search_accepted = true;
};

enum class UpdateRule {
  line_search,  // damped Newton with Armijo backtracking
  fixed_step,   // x - eta * normalized gradient (GIBO-style)
};

struct LoopConfig {
  AcqConfig acq;
  int batch_size = 1;
  UpdateRule update = UpdateRule::line_search;
  double fixed_step = 1.0;
  ArmijoOptions armijo;
  /// Hyperparameters are refit every `refit_every` iterations (1 = every move).
  int refit_every = 1;
  int initial_fit_restarts = 3;
  int refit_restarts = 1;
  int fit_max_iterations = 100;
  double jitter = 1e-8;
  /// When > 0, the GP sees only the most recent `data_window` observations.
  int data_window = 0;
  /// Spend one evaluation on the new iterate after each step (budget permitting).
  bool evaluate_iterate = true;

  void validate() const;
};

/// Loop state in the normalized domain [lower, upper] (usually the unit cube).
struct LoopState {
  Dataset data;  // raw (unstandardized) targets
  Eigen::VectorXd iterate;
  Eigen::VectorXd lower, upper;
  std::optional<KernelParams> params;
  std::shared_ptr<const GpState> gp;  // standardized GP on `data`
  OutputScaling scaling;
  int iteration = 0;
  std::uint64_t fit_seed = 0;
};

/// Fits (or refits) hyperparameters and rebuilds the standardized GP.
void refresh_model(LoopState& state, const LoopConfig& cfg, bool refit, bool from_scratch);

struct IterationRecord {
  StepResult step;
  BatchResult batch;
  DerivBelief belief;
  double scale_used = 0.0;
  bool refit = false;
  /// Observed value at the new iterate when it was evaluated.
  std::optional<double> iterate_value;
};

/// Maps a batch (rows in the normalized domain) to observed values.
using BatchObjective = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// One loop body: select a batch at the iterate, evaluate it, augment the
/// data, refit per schedule, and move the iterate. `max_evals` truncates the
/// batch when the budget runs short.
IterationRecord nest_bo_iterate(LoopState& state, const LoopConfig& cfg, const BatchObjective& objective,
                                Rng& rng, int max_evals = -1);

}  // namespace nestbo
