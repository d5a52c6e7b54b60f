#include "nestbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "nestbo/bounded_lbfgs.hpp"
#include "nestbo/errors.hpp"
#include "nestbo/sobol.hpp"

namespace nestbo {
namespace {

double weighted(const PowerPair& p, double s) { return p.pi_g + s * p.pi_h; }

FantasyConditioner conditioned(const GpState& gp, ConstVecRef x_t, const Eigen::MatrixXd& pending) {
  if (pending.rows() > 0 && pending.cols() != gp.dim()) {
    throw std::invalid_argument("acquisition: pending inputs have wrong dimension");
  }
  FantasyConditioner cond(gp, x_t);
  for (Eigen::Index r = 0; r < pending.rows(); ++r) cond.append(pending.row(r).transpose());
  return cond;
}

// Fantasy means for a fixed set of standard-normal innovations. `accum`
// holds, per sample, the operator-space mean shift from the committed
// pending points; candidates add their own whitened row times one more
// innovation.
class McScale {
 public:
  McScale(const DerivBelief& base, int num_ops, Eigen::MatrixXd innovations, double fallback)
      : base_(base), innovations_(std::move(innovations)), fallback_(fallback),
        accum_(Eigen::MatrixXd::Zero(innovations_.rows(), num_ops)) {}

  int samples() const { return static_cast<int>(innovations_.rows()); }

  /// Mean scale when the candidate row `u` is the `slot`-th pending point.
  double mean_scale(const FantasyConditioner& cond, const Eigen::VectorXd* u, int slot,
                    int* singular) const {
    double total = 0.0;
    Eigen::VectorXd delta(accum_.cols());
    for (int j = 0; j < samples(); ++j) {
      delta = accum_.row(j).transpose();
      if (u != nullptr) delta += *u * innovations_(j, slot);
      Eigen::VectorXd g = base_.mean_grad;
      Eigen::MatrixXd h = base_.mean_hess;
      cond.apply_update(delta, g, h);
      try {
        total += scale_factor(g, h);
      } catch (const SingularHessianError&) {
        total += fallback_;
        if (singular != nullptr) ++*singular;
      }
    }
    return total / samples();
  }

  void commit(const Eigen::VectorXd& u, int slot) {
    for (int j = 0; j < samples(); ++j) accum_.row(j) += u.transpose() * innovations_(j, slot);
  }

 private:
  const DerivBelief& base_;
  Eigen::MatrixXd innovations_;  // samples x slots
  double fallback_;
  Eigen::MatrixXd accum_;
};

Eigen::MatrixXd standard_normals(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd e(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) e(r, c) = normal(rng);
  }
  return e;
}

}  // namespace

void AcqConfig::validate() const {
  if (scale.kind == ScaleMode::Kind::fixed && !(scale.value > 0.0)) {
    throw std::invalid_argument("AcqConfig: fixed scale must be > 0");
  }
  if (scale.kind == ScaleMode::Kind::monte_carlo && scale.num_samples < 1) {
    throw std::invalid_argument("AcqConfig: monte_carlo needs at least one sample");
  }
  if (!(box_radius > 0.0 && box_radius <= 1.0)) {
    throw std::invalid_argument("AcqConfig: box_radius must lie in (0, 1]");
  }
  if (num_restarts < 1 || raw_samples < 1) {
    throw std::invalid_argument("AcqConfig: num_restarts and raw_samples must be >= 1");
  }
  if (inner_max_iterations < 0 || !(fd_step > 0.0)) {
    throw std::invalid_argument("AcqConfig: invalid inner optimizer settings");
  }
}

double nest_value(const GpState& gp, ConstVecRef x_t, const Eigen::MatrixXd& pending, double s_hat) {
  if (!(s_hat >= 0.0)) throw std::invalid_argument("nest_value: scale must be >= 0");
  return weighted(conditioned(gp, x_t, pending).power(), s_hat);
}

double gi_value(const GpState& gp, ConstVecRef x_t, const Eigen::MatrixXd& pending) {
  return nest_value(gp, x_t, pending, 0.0);
}

double plugin_scale(const DerivBelief& belief, double fallback, bool* singular) {
  try {
    const double s = scale_factor(belief);
    if (singular != nullptr) *singular = false;
    return s;
  } catch (const SingularHessianError&) {
    if (singular != nullptr) *singular = true;
    return fallback;
  }
}

McValue mc_nest_value(const GpState& gp, ConstVecRef x_t, const Eigen::MatrixXd& pending,
                      int num_samples, Rng& rng) {
  if (num_samples < 1) throw std::invalid_argument("mc_nest_value: num_samples must be >= 1");
  const FantasyConditioner cond = conditioned(gp, x_t, pending);
  const DerivBelief base = grad_belief(gp, x_t);
  const double plug = plugin_scale(base);
  const int p = static_cast<int>(pending.rows());
  McScale mc(base, cond.num_ops(), standard_normals(num_samples, p, rng), plug);
  for (int k = 0; k < p; ++k) mc.commit(cond.pending_whitened()[k], k);

  McValue out;
  out.mean_scale = mc.mean_scale(cond, nullptr, 0, &out.singular_samples);
  out.value = weighted(cond.power(), out.mean_scale);
  return out;
}

BatchResult select_batch(const GpState& gp, ConstVecRef x_t, int b, const AcqConfig& cfg,
                         const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, Rng& rng) {
  cfg.validate();
  const int d = gp.dim();
  if (b < 1) throw std::invalid_argument("select_batch: b must be >= 1");
  if (x_t.size() != d || lower.size() != d || upper.size() != d) {
    throw std::invalid_argument("select_batch: dimension mismatch");
  }
  const Eigen::VectorXd lo = (x_t.array() - cfg.box_radius).max(lower.array());
  const Eigen::VectorXd hi = (x_t.array() + cfg.box_radius).min(upper.array());
  if (!(lo.array() <= hi.array()).all()) {
    throw std::invalid_argument("select_batch: iterate lies outside the domain");
  }

  FantasyConditioner cond(gp, x_t);
  BatchResult result;
  result.points.resize(b, d);

  double s_fixed = 0.0;
  std::optional<McScale> mc;
  std::optional<DerivBelief> base;
  if (cfg.criterion == Criterion::nest) {
    switch (cfg.scale.kind) {
      case ScaleMode::Kind::fixed: s_fixed = cfg.scale.value; break;
      case ScaleMode::Kind::plugin:
        s_fixed = plugin_scale(grad_belief(gp, x_t));
        break;
      case ScaleMode::Kind::monte_carlo:
        base = grad_belief(gp, x_t);
        mc.emplace(*base, cond.num_ops(), standard_normals(cfg.scale.num_samples, b, rng),
                   plugin_scale(*base));
        break;
    }
  }
  result.scale_used = s_fixed;

  for (int pick = 0; pick < b; ++pick) {
    const auto acq = [&](const Eigen::VectorXd& z) {
      const FantasyConditioner::Trial t = cond.trial(z);
      if (!mc) return weighted(t.power, s_fixed);
      return weighted(t.power, mc->mean_scale(cond, &t.whitened, pick, nullptr));
    };

    const std::uint64_t sobol_seed = rng();
    const Eigen::MatrixXd raw = scale_to_box(ScrambledSobol(d, sobol_seed).draw(cfg.raw_samples), lo, hi);
    std::vector<double> raw_values(cfg.raw_samples);
    for (int r = 0; r < cfg.raw_samples; ++r) raw_values[r] = acq(raw.row(r).transpose());
    std::vector<int> order(cfg.raw_samples);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
      const double va = std::isfinite(raw_values[a]) ? raw_values[a] : std::numeric_limits<double>::infinity();
      const double vc = std::isfinite(raw_values[c]) ? raw_values[c] : std::numeric_limits<double>::infinity();
      return va < vc;
    });

    Eigen::VectorXd best = raw.row(order[0]).transpose();
    double best_value = raw_values[order[0]];

    LbfgsOptions lopts;
    lopts.max_iterations = cfg.inner_max_iterations;
    lopts.grad_tol = cfg.inner_grad_tol;
    const ValueAndGradient fg = finite_difference_gradient(acq, lo, hi, cfg.fd_step);
    const int starts = std::min(cfg.num_restarts, cfg.raw_samples);
    for (int k = 0; k < starts; ++k) {
      try {
        const LbfgsResult res = minimize_bounded(fg, raw.row(order[k]).transpose(), lo, hi, lopts);
        if (std::isfinite(res.f) && res.f < best_value) {
          best_value = res.f;
          best = res.x;
        }
      } catch (const NumericalError&) {
        // keep the best raw sample
      }
    }
    best = best.cwiseMax(lo).cwiseMin(hi);

    if (mc) {
      const FantasyConditioner::Trial t = cond.trial(best);
      result.scale_used = mc->mean_scale(cond, &t.whitened, pick, &result.singular_samples);
      mc->commit(t.whitened, pick);
    }
    cond.append(best);
    result.points.row(pick) = best.transpose();
    result.values.push_back(best_value);
  }
  return result;
}

}  // namespace nestbo
