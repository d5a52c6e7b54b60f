#include "nestbo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nestbo/deriv_gp.hpp"
#include "nestbo/harness.hpp"
#include "nestbo/hyperparams.hpp"
#include "nestbo/kernel.hpp"
#include "nestbo/oracle.hpp"
#include "nestbo/random.hpp"
#include "nestbo/subspace.hpp"

namespace nestbo {
namespace {

double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

Eigen::VectorXd uniform_vec(Rng& rng, int d, double a, double b) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = uniform(rng, a, b);
  return v;
}

KernelParams random_params(Rng& rng, int d) {
  return KernelParams(uniform(rng, 0.5, 2.0), uniform_vec(rng, d, 0.5, 2.0), 0.0);
}

// Relative error with the denominator floored at `floor`, the operation's natural scale.
double rel_err(double got, double want, double floor) {
  return std::abs(got - want) / std::max({std::abs(want), std::abs(got), floor});
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// A GP fitted on an RFF draw sampled at n random points of [0, 1]^d.
GpState random_fitted_gp(Rng& rng, int d, int n) {
  const RffFunction f = sample_rff(d, 256, uniform(rng, 0.3, 0.8), rng);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    x.row(r) = uniform_vec(rng, d, 0.0, 1.0).transpose();
    y[r] = rff_eval(f, x.row(r).transpose());
  }
  FitOptions fo;
  fo.restarts = 1;
  fo.seed = rng();
  fo.max_iterations = 50;
  const Dataset data(x, y);
  return GpState(data, fit_hyperparams(data, fo).params);
}

// Nested central differences over x_i, x_j, xp_i, xp_j with steps
// 1e-2 * l, Richardson-extrapolated with the half step.
double nested_fd4(const KernelParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& xp, int i, int j) {
  const auto at_step = [&](double scale) {
    const double gi = scale * p.lengthscales[i], gj = scale * p.lengthscales[j];
    double acc = 0.0;
    for (int a = 0; a < 16; ++a) {
      const double s1 = (a & 1) ? -1.0 : 1.0, s2 = (a & 2) ? -1.0 : 1.0;
      const double s3 = (a & 4) ? -1.0 : 1.0, s4 = (a & 8) ? -1.0 : 1.0;
      Eigen::VectorXd u = x, v = xp;
      u[i] += s1 * gi;
      u[j] += s2 * gj;
      v[i] += s3 * gi;
      v[j] += s4 * gj;
      acc += s1 * s2 * s3 * s4 * kernel::value(u, v, p);
    }
    return acc / (16.0 * gi * gj * gi * gj);
  };
  return (4.0 * at_step(0.5e-2) - at_step(1e-2)) / 3.0;
}

CheckResult check_kernel_fd(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 11));
  const int d = 3;
  double e1 = 0.0, e2m = 0.0, e2s = 0.0, e4 = 0.0;
  for (int t = 0; t < o.kernel_draws; ++t) {
    const KernelParams p = random_params(rng, d);
    const Eigen::VectorXd x = uniform_vec(rng, d, -1.0, 1.0);
    const Eigen::VectorXd xp = uniform_vec(rng, d, -1.0, 1.0);
    const auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return kernel::value(a, b, p); };
    for (int i = 0; i < d; ++i) {
      const double li = p.precision(i);
      const double hi = 1e-4 * p.lengthscales[i];
      Eigen::VectorXd xa = x, xb = x;
      xa[i] += hi;
      xb[i] -= hi;
      const double fd1 = (k(xa, xp) - k(xb, xp)) / (2.0 * hi);
      e1 = std::max(e1, rel_err(kernel::dk_dx(x, xp, p, i), fd1, 1e-3 * p.signal_variance * std::sqrt(li)));
      for (int j = 0; j < d; ++j) {
        const double lj = p.precision(j);
        const double hj = 1e-4 * p.lengthscales[j];
        Eigen::VectorXd pa = xp, pb = xp;
        pa[j] += hj;
        pb[j] -= hj;
        const double fdm = (kernel::dk_dx(x, pa, p, i) - kernel::dk_dx(x, pb, p, i)) / (2.0 * hj);
        const double floor2 = 1e-3 * p.signal_variance * std::sqrt(li * lj);
        e2m = std::max(e2m, rel_err(kernel::d2k_dx_dxp(x, xp, p, i, j), fdm, floor2));

        const ScalarFunction fk = [&](const Eigen::VectorXd& a) { return k(a, xp); };
        Eigen::VectorXd steps = 1e-4 * p.lengthscales;
        const double fds = fd_hessian(fk, x, steps)(i, j);
        e2s = std::max(e2s, rel_err(kernel::d2k_dx_dx(x, xp, p, i, j), fds, floor2));

        const double fd4 = nested_fd4(p, x, xp, i, j);
        e4 = std::max(e4, rel_err(kernel::d4k(x, xp, p, i, j), fd4, 1e-3 * p.signal_variance * li * lj));
      }
    }
  }
  CheckResult r{"kernel_finite_differences", e1 <= 1e-5 && e2m <= 1e-5 && e2s <= 1e-4 && e4 <= 1e-3, ""};
  r.detail = fmt("max rel err: dk %.2e, d2k(x,xp) %.2e", e1, e2m) + fmt(", d2k(x,x) %.2e, d4k %.2e", e2s, e4);
  return r;
}

CheckResult check_coincidence() {
  const KernelParams p(1.0, Eigen::Vector2d(1.0, 2.0), 0.0);
  const Eigen::Vector2d x(0.3, -0.7);
  bool ok = kernel::value(x, x, p) == 1.0 && kernel::dk_dx(x, x, p, 0) == 0.0;
  ok = ok && kernel::d2k_dx_dxp(x, x, p, 0, 0) == 1.0 && kernel::d2k_dx_dxp(x, x, p, 0, 1) == 0.0;
  ok = ok && kernel::d2k_dx_dx(x, x, p, 0, 0) == -1.0 && kernel::d2k_dx_dx(x, x, p, 0, 1) == 0.0;
  ok = ok && kernel::d4k(x, x, p, 0, 0) == 3.0 && kernel::d4k(x, x, p, 0, 1) == 0.25;
  ok = ok && kernel::coincident_d4k(p, 1, 1) == 3.0 / 16.0 && kernel::coincident_d2k_dx_dxp(p, 1, 1) == 0.25;
  return {"kernel_coincidence_values", ok, ok ? "exact" : "mismatch"};
}

CheckResult check_kernel_symmetry(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 12));
  double worst = 0.0;
  for (int t = 0; t < o.kernel_draws; ++t) {
    const KernelParams p = random_params(rng, 3);
    const Eigen::VectorXd x = uniform_vec(rng, 3, -1.0, 1.0), xp = uniform_vec(rng, 3, -1.0, 1.0);
    const Eigen::VectorXd c = uniform_vec(rng, 3, -5.0, 5.0);
    const Eigen::VectorXd xs = x + c, xps = xp + c;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        worst = std::max(worst, std::abs(kernel::d2k_dx_dxp(x, xp, p, i, j) - kernel::d2k_dx_dxp(xp, x, p, j, i)));
        worst = std::max(worst, std::abs(kernel::d4k(x, xp, p, i, j) - kernel::d4k(x, xp, p, j, i)));
        worst = std::max(worst, std::abs(kernel::d4k(x, xp, p, i, j) - kernel::d4k(xs, xps, p, i, j)));
        worst = std::max(worst, std::abs(kernel::d2k_dx_dx(x, xp, p, i, j) - kernel::d2k_dx_dx(xs, xps, p, i, j)));
      }
    }
  }
  return {"kernel_symmetry_stationarity", worst <= 1e-12, fmt("max abs deviation %.2e", worst)};
}

CheckResult check_mean_derivatives(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 13));
  double eg = 0.0, eh = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int d = 1 + t % 3;
    const GpState gp = random_fitted_gp(rng, d, 8);
    const Eigen::VectorXd x = uniform_vec(rng, d, 0.0, 1.0);
    const DerivBelief b = grad_belief(gp, x);
    const ScalarFunction mu = [&](const Eigen::VectorXd& z) { return posterior_mean(gp, z); };
    const Eigen::VectorXd steps = 1e-4 * gp.params().lengthscales;
    const Eigen::VectorXd g = fd_gradient(mu, x, steps);
    const Eigen::MatrixXd h = fd_hessian(mu, x, steps);
    const double gs = 1e-3 * std::max(1e-12, g.cwiseAbs().maxCoeff());
    const double hs = 1e-3 * std::max(1e-12, h.cwiseAbs().maxCoeff());
    for (int i = 0; i < d; ++i) {
      eg = std::max(eg, rel_err(b.mean_grad[i], g[i], gs));
      for (int j = 0; j < d; ++j) eh = std::max(eh, rel_err(b.mean_hess(i, j), h(i, j), hs));
    }
  }
  return {"posterior_mean_derivatives", eg <= 1e-5 && eh <= 1e-4, fmt("max rel err: grad %.2e, hess %.2e", eg, eh)};
}

CheckResult check_brute_force(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 14));
  double worst = 0.0;
  for (int t = 0; t < o.power_draws; ++t) {
    const int d = 1 + t % 3;
    const int n = 2 + static_cast<int>(rng() % 9);
    const GpState gp = random_fitted_gp(rng, d, n);
    const Eigen::VectorXd x = uniform_vec(rng, d, 0.0, 1.0);
    const double fast = grad_belief(gp, x).pi_h;
    const double slow = brute_force_pi_h(gp, x);
    worst = std::max(worst, rel_err(fast, slow, 1e-300));
  }
  return {"pi_h_brute_force", worst <= 1e-8, fmt("max rel err %.2e", worst)};
}

CheckResult check_monotonicity(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 15));
  double worst = -1e300;
  for (int t = 0; t < o.monotonicity_draws; ++t) {
    const int d = 1 + t % 3;
    const GpState gp = random_fitted_gp(rng, d, 3 + static_cast<int>(rng() % 8));
    const Eigen::VectorXd x = uniform_vec(rng, d, 0.0, 1.0);
    const int b = 1 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd z(b, d);
    for (int r = 0; r < b; ++r) z.row(r) = uniform_vec(rng, d, 0.0, 1.0).transpose();
    const DerivBelief before = grad_belief(gp, x);
    const PowerPair after = fantasy_power(gp, x, z);
    worst = std::max({worst, after.pi_g - before.pi_g, after.pi_h - before.pi_h});
  }
  return {"fantasy_monotonicity", worst <= 1e-8, fmt("max increase %.2e", worst)};
}

CheckResult check_vpc() {
  const std::vector<VpcRow> rows = vpc_check(KernelParams::isotropic(2, 1.0, 1.0, 0.0), 2, {0.5, 0.2, 0.1});
  bool ok = rows.size() == 4 && rows[0].pi_g == 2.0 && rows[0].pi_h == 8.0;
  for (std::size_t i = 1; ok && i < rows.size(); ++i) {
    ok = rows[i].status == "ok" && rows[i].pi_g + rows[i].pi_h < rows[i - 1].pi_g + rows[i - 1].pi_h;
  }
  const double last = rows.back().pi_g + rows.back().pi_h;
  ok = ok && last < 1.0;
  return {"vpc_stencil_sweep", ok, fmt("sum at h=0.1: %.3e (prior 10)", last)};
}

CheckResult check_stencil() {
  bool ok = true;
  Rng rng(17);
  for (int d = 1; d <= 8 && ok; ++d) {
    const Eigen::VectorXd c = uniform_vec(rng, d, -1.0, 1.0);
    const Stencil s = make_stencil(c, 0.3);
    ok = s.points.rows() == d * d + d + 1;
    for (Eigen::Index r = 0; r < s.points.rows() && ok; ++r) {
      const Eigen::RowVectorXd mirror = 2.0 * c.transpose() - s.points.row(r);
      bool found = false;
      for (Eigen::Index q = 0; q < s.points.rows() && !found; ++q) {
        found = (s.points.row(q) - mirror).cwiseAbs().maxCoeff() < 1e-14;
      }
      ok = found;
    }
  }
  return {"stencil_cardinality_symmetry", ok, "d = 1..8"};
}

CheckResult check_scale_factor() {
  const double a = scale_factor(Eigen::Vector2d(2.0, 4.0), Eigen::Vector2d(2.0, 4.0).asDiagonal().toDenseMatrix());
  const double b = scale_factor(Eigen::Vector2d(3.0, 4.0), Eigen::Matrix2d::Identity());
  const double c = scale_factor(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
  const bool ok = std::abs(a - 5.0) < 1e-12 && std::abs(b - 25.0) < 1e-12 && c == 0.0;
  return {"scale_factor_examples", ok, fmt("s = %.6g, %.6g", a, b)};
}

CheckResult check_split_preservation(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 16));
  int events = 0;
  bool ok = true;
  for (int t = 0; t < 10 && ok; ++t) {
    const int d = 10 + static_cast<int>(rng() % 40);
    Embedding e = new_embedding(d, 2 + static_cast<int>(rng() % 3), rng);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(12, e.target_dim);
    for (Eigen::Index r = 0; r < v.rows(); ++r) v.row(r) = uniform_vec(rng, e.target_dim, -1.0, 1.0).transpose();
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -3.0), hi = Eigen::VectorXd::Constant(d, 5.0);
    for (;;) {
      SplitResult sr = split(e, v, rng);
      if (sr.saturated) break;
      ++events;
      for (Eigen::Index r = 0; r < v.rows() && ok; ++r) {
        const Eigen::VectorXd before = project_up(e, v.row(r).transpose(), lo, hi);
        const Eigen::VectorXd after = project_up(sr.embedding, sr.lifted.row(r).transpose(), lo, hi);
        ok = (before.array() == after.array()).all();
      }
      e = std::move(sr.embedding);
      v = std::move(sr.lifted);
      if (!ok) break;
    }
  }
  return {"split_preservation", ok, std::to_string(events) + " split events"};
}

std::vector<ExperimentConfig> small_runs(std::uint64_t seed) {
  std::vector<ExperimentConfig> out;
  ExperimentConfig a;
  a.function = FunctionId::sphere;
  a.dim = 3;
  a.budget = 30;
  a.seed = seed;
  out.push_back(a);
  ExperimentConfig b = a;
  b.method = Method::gibo;
  b.function = FunctionId::rosenbrock;
  out.push_back(b);
  ExperimentConfig c;
  c.function = FunctionId::griewank;
  c.dim = 12;
  c.effective_dim = 3;
  c.method = Method::nest_bo_sub;
  c.subspace.initial_dim = 2;
  c.subspace.window = 2;
  c.budget = 40;
  c.seed = seed;
  out.push_back(c);
  ExperimentConfig s = c;
  s.method = Method::sobol_random;
  out.push_back(s);
  ExperimentConfig r;
  r.function = FunctionId::rff_prior;
  r.dim = 2;
  r.budget = 25;
  r.noise_std = 0.01;
  r.seed = seed;
  out.push_back(r);
  return out;
}

std::string serialize(const RunTrace& t) {
  std::ostringstream os;
  write_trace_csv(os, t);
  write_trace_json(os, t);
  return os.str();
}

CheckResult check_runs(const VerifyOptions& o) {
  bool ok = true;
  std::string detail;
  for (const ExperimentConfig& cfg : small_runs(o.seed)) {
    const RunTrace a = run_replicate(cfg);
    const RunTrace b = run_replicate(cfg);
    const std::string label = to_string(cfg.method) + "/" + to_string(cfg.function);
    if (a.failed) {
      ok = false;
      detail += label + " failed: " + a.error + "; ";
      continue;
    }
    bool good = serialize(a) == serialize(b) && static_cast<int>(a.evals.size()) == cfg.budget;
    for (std::size_t i = 1; i < a.evals.size(); ++i) {
      good = good && a.evals[i].best_so_far <= a.evals[i - 1].best_so_far;
      if (a.evals[i].regret) good = good && *a.evals[i].regret >= 0.0;
    }
    for (const SplitLog& s : a.splits) good = good && s.preserved;
    if (!good) detail += label + " violated; ";
    ok = ok && good;
  }
  return {"run_determinism_and_traces", ok, ok ? "byte-identical repeats, budgets exact" : detail};
}

}  // namespace

std::vector<CheckResult> run_verify(const VerifyOptions& opts, const std::function<void(const CheckResult&)>& progress) {
  using Check = std::pair<const char*, std::function<CheckResult()>>;
  const std::vector<Check> checks = {
      {"kernel_finite_differences", [&] { return check_kernel_fd(opts); }},
      {"kernel_coincidence_values", [] { return check_coincidence(); }},
      {"kernel_symmetry_stationarity", [&] { return check_kernel_symmetry(opts); }},
      {"posterior_mean_derivatives", [&] { return check_mean_derivatives(opts); }},
      {"pi_h_brute_force", [&] { return check_brute_force(opts); }},
      {"fantasy_monotonicity", [&] { return check_monotonicity(opts); }},
      {"vpc_stencil_sweep", [] { return check_vpc(); }},
      {"stencil_cardinality_symmetry", [] { return check_stencil(); }},
      {"scale_factor_examples", [] { return check_scale_factor(); }},
      {"split_preservation", [&] { return check_split_preservation(opts); }},
      {"run_determinism_and_traces", [&] { return check_runs(opts); }},
  };
  std::vector<CheckResult> out;
  for (const auto& [name, run] : checks) {
    CheckResult r;
    try {
      r = run();
    } catch (const std::exception& ex) {
      r.passed = false;
      r.detail = std::string("threw: ") + ex.what();
    }
    r.name = name;
    if (progress) progress(r);
    out.push_back(std::move(r));
  }
  return out;
}

void write_check(std::ostream& os, const CheckResult& r) {
  os << (r.passed ? "PASS " : "FAIL ") << r.name;
  if (!r.detail.empty()) os << "  (" << r.detail << ")";
  os << '\n';
}

}  // namespace nestbo
