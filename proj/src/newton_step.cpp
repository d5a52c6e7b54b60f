#include "nestbo/newton_step.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "nestbo/errors.hpp"

namespace nestbo {

std::string to_string(StepKind kind) {
  return kind == StepKind::newton ? "newton" : "fallback_gradient";
}

Eigen::VectorXd normalized_gradient(const Eigen::VectorXd& grad, const Eigen::VectorXd& lengthscales) {
  if (grad.size() != lengthscales.size()) {
    throw std::invalid_argument("normalized_gradient: dimension mismatch");
  }
  const Eigen::VectorXd lam = lengthscales.cwiseAbs2();
  const double norm = std::sqrt((lam.array() * grad.array().square()).sum());
  if (norm == 0.0) return Eigen::VectorXd::Zero(grad.size());
  return lam.cwiseProduct(grad) / norm;
}

Direction newton_direction(const DerivBelief& belief, const Eigen::VectorXd& lengthscales) {
  const Eigen::Index d = belief.mean_grad.size();
  if (belief.mean_hess.rows() != d || belief.mean_hess.cols() != d || lengthscales.size() != d) {
    throw std::invalid_argument("newton_direction: dimension mismatch");
  }
  Direction out;
  if ((belief.mean_grad.array() == 0.0).all()) {
    out.direction = Eigen::VectorXd::Zero(d);
    return out;
  }
  const Eigen::MatrixXd h = 0.5 * (belief.mean_hess + belief.mean_hess.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (min_eig >= 1e-8 * std::max(1.0, norm)) {
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
      out.direction = llt.solve(belief.mean_grad);
      if (out.direction.allFinite()) {
        out.kind = StepKind::newton;
        return out;
      }
    }
  }
  out.direction = normalized_gradient(belief.mean_grad, lengthscales);
  out.kind = StepKind::fallback_gradient;
  return out;
}

void ArmijoOptions::validate() const {
  if (!(gamma0 > 0.0 && gamma0 <= 1.0)) throw std::invalid_argument("Armijo: gamma0 must lie in (0, 1]");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("Armijo: shrink must lie in (0, 1)");
  if (!(c1 > 0.0 && c1 < 1.0)) throw std::invalid_argument("Armijo: c1 must lie in (0, 1)");
  if (max_steps < 1) throw std::invalid_argument("Armijo: max_steps must be >= 1");
}

LineSearchResult armijo_linesearch(const GpState& gp, ConstVecRef x_t, const Eigen::VectorXd& direction,
                                   const ArmijoOptions& opts, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper) {
  opts.validate();
  if (direction.size() != x_t.size()) throw std::invalid_argument("armijo_linesearch: dimension mismatch");
  if ((direction.array() == 0.0).all()) throw std::invalid_argument("armijo_linesearch: zero direction");

  const double mu0 = posterior_mean(gp, x_t);
  if (!std::isfinite(mu0)) throw NumericalError("armijo_linesearch: non-finite posterior mean at iterate");
  const double slope = posterior_mean_grad(gp, x_t).dot(direction);

  LineSearchResult res;
  double gamma = opts.gamma0;
  for (int k = 0; k < opts.max_steps; ++k) {
    res.gamma = gamma;
    res.trials = k + 1;
    const Eigen::VectorXd cand = (x_t - gamma * direction).cwiseMax(lower).cwiseMin(upper);
    const double mu = posterior_mean(gp, cand);
    if (!std::isfinite(mu)) throw NumericalError("armijo_linesearch: non-finite posterior mean");
    if (mu <= mu0 - opts.c1 * gamma * slope) {
      res.accepted = true;
      return res;
    }
    gamma *= opts.shrink;
  }
  return res;
}

void LoopConfig::validate() const {
  acq.validate();
  armijo.validate();
  if (batch_size < 1) throw std::invalid_argument("LoopConfig: batch_size must be >= 1");
  if (refit_every < 1) throw std::invalid_argument("LoopConfig: refit_every must be >= 1");
  if (initial_fit_restarts < 1 || refit_restarts < 1) {
    throw std::invalid_argument("LoopConfig: fit restarts must be >= 1");
  }
  if (update == UpdateRule::fixed_step && !(fixed_step > 0.0)) {
    throw std::invalid_argument("LoopConfig: fixed step must be > 0");
  }
  if (data_window < 0) throw std::invalid_argument("LoopConfig: data_window must be >= 0");
}

void refresh_model(LoopState& state, const LoopConfig& cfg, bool refit, bool from_scratch) {
  const int d = static_cast<int>(state.iterate.size());
  const int n = state.data.size();
  const int keep = cfg.data_window > 0 ? std::min(n, cfg.data_window) : n;
  Dataset window(state.data.inputs.bottomRows(keep), state.data.targets.tail(keep));
  if (keep == 0) window = Dataset(d);
  state.scaling = standardization(window.targets);
  for (Eigen::Index i = 0; i < window.targets.size(); ++i) {
    window.targets[i] = state.scaling.apply(window.targets[i]);
  }

  if (state.params && state.params->dim() != d) state.params.reset();
  if (from_scratch) state.params.reset();
  if ((refit || !state.params) && keep >= 2) {
    FitOptions fo;
    fo.initial = state.params;
    fo.restarts = state.params ? cfg.refit_restarts : cfg.initial_fit_restarts;
    fo.seed = derive_seed(state.fit_seed, static_cast<std::uint64_t>(state.iteration));
    fo.max_iterations = cfg.fit_max_iterations;
    fo.jitter = cfg.jitter;
    state.params = fit_hyperparams(window, fo).params;
  }
  if (!state.params) state.params = KernelParams::isotropic(d, 1.0, 0.3, 1e-3);

  GpOptions go;
  go.jitter = cfg.jitter;
  for (int attempt = 0;; ++attempt) {
    try {
      state.gp = std::make_shared<const GpState>(window, *state.params, go);
      return;
    } catch (const NumericalError&) {
      if (attempt >= 4) throw;
      go.jitter *= 100.0;
    }
  }
}

IterationRecord nest_bo_iterate(LoopState& state, const LoopConfig& cfg, const BatchObjective& objective,
                                Rng& rng, int max_evals) {
  cfg.validate();
  if (!state.gp) refresh_model(state, cfg, true, false);
  const GpState& gp_now = *state.gp;

  IterationRecord rec;
  const int b = max_evals >= 0 ? std::min(cfg.batch_size, max_evals) : cfg.batch_size;
  if (b < 1) throw std::invalid_argument("nest_bo_iterate: no evaluation budget left");
  rec.batch = select_batch(gp_now, state.iterate, b, cfg.acq, state.lower, state.upper, rng);
  rec.scale_used = rec.batch.scale_used;

  const Eigen::VectorXd y = objective(rec.batch.points);
  if (y.size() != b || !y.allFinite()) {
    throw std::runtime_error("nest_bo_iterate: objective returned invalid values");
  }
  state.data.append(rec.batch.points, y);
  ++state.iteration;
  rec.refit = state.iteration % cfg.refit_every == 0;
  refresh_model(state, cfg, rec.refit, false);

  const GpState& gp = *state.gp;
  rec.belief = grad_belief(gp, state.iterate);
  StepResult& step = rec.step;
  if (rec.belief.mean_grad.norm() < 1e-10) {
    step.direction = Eigen::VectorXd::Zero(state.iterate.size());
    step.new_iterate = state.iterate;
    step.converged = true;
    return rec;
  }

  const Eigen::VectorXd& ell = gp.params().lengthscales;
  if (cfg.update == UpdateRule::fixed_step) {
    step.direction = normalized_gradient(rec.belief.mean_grad, ell);
    step.kind = StepKind::fallback_gradient;
    step.step_size = cfg.fixed_step;
  } else {
    const Direction dir = newton_direction(rec.belief, ell);
    step.direction = dir.direction;
    step.kind = dir.kind;
    const LineSearchResult ls = armijo_linesearch(gp, state.iterate, dir.direction, cfg.armijo,
                                                  state.lower, state.upper);
    step.step_size = ls.gamma;
    step.line_search_accepted = ls.accepted;
  }
  step.new_iterate = (state.iterate - step.step_size * step.direction).cwiseMax(state.lower).cwiseMin(state.upper);
  const bool moved = (step.new_iterate.array() != state.iterate.array()).any();
  state.iterate = step.new_iterate;

  const bool budget_left = max_evals < 0 || max_evals > b;
  if (cfg.evaluate_iterate && moved && budget_left) {
    const Eigen::MatrixXd at = state.iterate.transpose();
    const Eigen::VectorXd yi = objective(at);
    if (yi.size() != 1 || !std::isfinite(yi[0])) {
      throw std::runtime_error("nest_bo_iterate: objective returned invalid values");
    }
    state.data.append(at, yi);
    rec.iterate_value = yi[0];
    refresh_model(state, cfg, false, false);
  }
  return rec;
}

}  // namespace nestbo
