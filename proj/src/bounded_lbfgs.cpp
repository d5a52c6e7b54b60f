#include "nestbo/bounded_lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

namespace nestbo {
namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Variables stuck at a bound whose gradient points out of the box.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& g,
                                                 const Eigen::VectorXd& lo,
                                                 const Eigen::VectorXd& hi) {
  Eigen::Array<bool, Eigen::Dynamic, 1> active(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    active[i] = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
  }
  return active;
}

double projected_grad_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

}  // namespace

LbfgsResult minimize_bounded(const ValueAndGradient& fg, Eigen::VectorXd x0,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const LbfgsOptions& opts) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("minimize_bounded: bound dimension mismatch");
  }
  LbfgsResult res;
  res.x = project(x0, lower, upper);
  Eigen::VectorXd g(n);
  res.f = fg(res.x, g);
  if (!std::isfinite(res.f)) return res;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it;
    if (projected_grad_norm(res.x, g, lower, upper) < opts.grad_tol) {
      res.converged = true;
      break;
    }
    const auto active = active_set(res.x, g, lower, upper);

    // Two-loop recursion restricted to the free variables.
    Eigen::VectorXd q = g;
    for (Eigen::Index i = 0; i < n; ++i) if (active[i]) q[i] = 0.0;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    for (Eigen::Index i = 0; i < n; ++i) if (active[i]) dir[i] = 0.0;
    if (!(g.dot(dir) < 0.0)) {
      dir = -g;
      for (Eigen::Index i = 0; i < n; ++i) if (active[i]) dir[i] = 0.0;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    if (dir.squaredNorm() == 0.0) {
      res.converged = true;
      break;
    }

    // Without curvature history the raw gradient may be badly scaled.
    double t = 1.0;
    if (s_hist.empty()) t = std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>());

    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = res.f;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_line_search; ++ls) {
      x_new = project(res.x + t * dir, lower, upper);
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= res.f + opts.c1 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double f_old = res.f;
    res.x = x_new;
    res.f = f_new;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (std::abs(f_old - f_new) <= opts.f_rel_tol * std::max({1.0, std::abs(f_old), std::abs(f_new)})) {
      res.converged = true;
      res.iterations = it + 1;
      break;
    }
    res.iterations = it + 1;
  }
  return res;
}

ValueAndGradient finite_difference_gradient(std::function<double(const Eigen::VectorXd&)> f,
                                            Eigen::VectorXd lower, Eigen::VectorXd upper,
                                            double step) {
  return [f = std::move(f), lower = std::move(lower), upper = std::move(upper), step](
             const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const double fx = f(x);
    grad.resize(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double hi = std::min(x[i] + step, upper[i]);
      const double lo = std::max(x[i] - step, lower[i]);
      double f_hi = fx, f_lo = fx;
      if (hi > x[i]) {
        xp[i] = hi;
        f_hi = f(xp);
      }
      if (lo < x[i]) {
        xp[i] = lo;
        f_lo = f(xp);
      }
      xp[i] = x[i];
      const double span = (hi > x[i] ? hi : x[i]) - (lo < x[i] ? lo : x[i]);
      grad[i] = span > 0.0 ? (f_hi - f_lo) / span : 0.0;
    }
    return fx;
  };
}

}  // namespace nestbo
