// Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails. Criterion numbers on the command line select a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nestbo/cli.hpp"
#include "nestbo/deriv_gp.hpp"
#include "nestbo/harness.hpp"
#include "nestbo/hyperparams.hpp"
#include "nestbo/kernel.hpp"
#include "nestbo/oracle.hpp"
#include "nestbo/studies.hpp"
#include "oracles.hpp"

using namespace nestbo;
namespace to = testing_oracle;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1: kernel

// Nested central differences of the reference kernel over x_i, x_j, xp_i,
// xp_j at step s * l, Richardson-extrapolated between s and s / 2.
double fd4(const KernelParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& xp, int i, int j, double s) {
  const auto at = [&](double scale) {
    const double hi = scale * p.lengthscales[i], hj = scale * p.lengthscales[j];
    double acc = 0.0;
    for (int a = 0; a < 16; ++a) {
      const double s1 = (a & 1) ? -1.0 : 1.0, s2 = (a & 2) ? -1.0 : 1.0;
      const double s3 = (a & 4) ? -1.0 : 1.0, s4 = (a & 8) ? -1.0 : 1.0;
      Eigen::VectorXd u = x, v = xp;
      u[i] += s1 * hi;
      u[j] += s2 * hj;
      v[i] += s3 * hi;
      v[j] += s4 * hj;
      acc += s1 * s2 * s3 * s4 * to::se(u, v, p);
    }
    return acc / (16.0 * hi * hj * hi * hj);
  };
  return (4.0 * at(0.5 * s) - at(s)) / 3.0;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const int d = 3;
  double e1 = 0.0, e2m = 0.0, e2s = 0.0, e4 = 0.0;
  for (int t = 0; t < 100; ++t) {
    const KernelParams p(to::uniform(rng, 0.5, 2.0), to::uniform_vec(rng, d, 0.5, 2.0), 0.0);
    const Eigen::VectorXd x = to::uniform_vec(rng, d, -1, 1), xp = to::uniform_vec(rng, d, -1, 1);
    for (int i = 0; i < d; ++i) {
      const double li = 1.0 / (p.lengthscales[i] * p.lengthscales[i]);
      const double hi = 1e-4 * p.lengthscales[i];
      Eigen::VectorXd a = x, b = x;
      a[i] += hi;
      b[i] -= hi;
      const double fd1 = (to::se(a, xp, p) - to::se(b, xp, p)) / (2 * hi);
      e1 = std::max(e1, to::rel_err(kernel::dk_dx(x, xp, p, i), fd1, 1e-3 * p.signal_variance * std::sqrt(li)));
      for (int j = 0; j < d; ++j) {
        const double lj = 1.0 / (p.lengthscales[j] * p.lengthscales[j]);
        const double hj = 1e-4 * p.lengthscales[j];
        const double floor2 = 1e-3 * p.signal_variance * std::sqrt(li * lj);
        Eigen::VectorXd pa = xp, pb = xp;
        pa[j] += hj;
        pb[j] -= hj;
        const double fdm = (to::se_dx(x, pa, p, i) - to::se_dx(x, pb, p, i)) / (2 * hj);
        e2m = std::max(e2m, to::rel_err(kernel::d2k_dx_dxp(x, xp, p, i, j), fdm, floor2));

        double fds;
        if (i == j) {
          fds = (to::se(a, xp, p) - 2.0 * to::se(x, xp, p) + to::se(b, xp, p)) / (hi * hi);
        } else {
          Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
          pp[i] += hi, pp[j] += hj;
          pm[i] += hi, pm[j] -= hj;
          mp[i] -= hi, mp[j] += hj;
          mm[i] -= hi, mm[j] -= hj;
          fds = (to::se(pp, xp, p) - to::se(pm, xp, p) - to::se(mp, xp, p) + to::se(mm, xp, p)) / (4 * hi * hj);
        }
        e2s = std::max(e2s, to::rel_err(kernel::d2k_dx_dx(x, xp, p, i, j), fds, floor2));
        e4 = std::max(e4, to::rel_err(kernel::d4k(x, xp, p, i, j), fd4(p, x, xp, i, j, 1e-2),
                                      1e-3 * p.signal_variance * li * lj));
      }
    }
  }

  const KernelParams c(1.0, Eigen::Vector2d(1.0, 2.0), 0.0);
  const Eigen::Vector2d z(0.7, -0.2);
  const bool exact = kernel::value(z, z, c) == 1.0 && kernel::dk_dx(z, z, c, 1) == 0.0 &&
                     kernel::d2k_dx_dxp(z, z, c, 0, 0) == 1.0 && kernel::d2k_dx_dxp(z, z, c, 0, 1) == 0.0 &&
                     kernel::d2k_dx_dx(z, z, c, 0, 0) == -1.0 && kernel::d2k_dx_dx(z, z, c, 1, 0) == 0.0 &&
                     kernel::d4k(z, z, c, 0, 0) == 3.0 && kernel::d4k(z, z, c, 0, 1) == 0.25;
  const double secs = seconds_since(t0);
  Outcome o;
  o.passed = e1 <= 1e-5 && e2m <= 1e-5 && e2s <= 1e-4 && e4 <= 1e-3 && exact && secs < 10.0;
  o.detail = fmt("max rel err dk %.1e, d2k(x,xp) %.1e, d2k(x,x) %.1e, d4k %.1e", e1, e2m, e2s, e4) +
             (exact ? "; coincidence exact" : "; coincidence MISMATCH") + fmt("; %.2f s", secs);
  return o;
}

// ------------------------------------------------------- 2 and 3: power functions

GpState fitted_gp(std::mt19937_64& gen, int d, int n) {
  Rng rng(gen());
  const RffFunction f = sample_rff(d, 256, to::uniform(gen, 0.3, 0.8), rng);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    x.row(r) = to::uniform_vec(gen, d, 0, 1).transpose();
    y[r] = rff_eval(f, x.row(r).transpose());
  }
  FitOptions fo;
  fo.restarts = 1;
  fo.seed = gen();
  const Dataset data(x, y);
  return GpState(data, fit_hyperparams(data, fo).params);
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(202);
  double worst = 0.0, worst_ref = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 3;
    const int n = 2 + static_cast<int>(gen() % 9);
    const GpState gp = fitted_gp(gen, d, n);
    const Eigen::VectorXd x = to::uniform_vec(gen, d, 0, 1);
    const double fast = grad_belief(gp, x).pi_h;
    worst = std::max(worst, to::rel_err(fast, brute_force_pi_h(gp, x), 1e-300));
    worst_ref = std::max(worst_ref, to::rel_err(fast, to::powers(gp, x).pi_h, 1e-300));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && worst_ref <= 1e-8 && secs < 30.0,
          fmt("max rel err vs brute force %.1e, vs test oracle %.1e; %.2f s", worst, worst_ref, secs)};
}

Outcome criterion3() {
  std::mt19937_64 gen(303);
  double worst = -1e300, agree = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 3;
    const GpState gp = fitted_gp(gen, d, 2 + static_cast<int>(gen() % 9));
    const Eigen::VectorXd x = to::uniform_vec(gen, d, 0, 1);
    const int m = 1 + static_cast<int>(gen() % 5);
    Eigen::MatrixXd z(m, d);
    for (int r = 0; r < m; ++r) z.row(r) = to::uniform_vec(gen, d, 0, 1).transpose();
    const DerivBelief before = grad_belief(gp, x);
    const PowerPair after = fantasy_power(gp, x, z);
    worst = std::max({worst, after.pi_g - before.pi_g, after.pi_h - before.pi_h});
    Eigen::MatrixXd all(gp.size() + m, d);
    all << gp.data().inputs, z;
    const to::Powers ref = to::powers(gp.params(), all, gp.diagonal_shift(), x);
    agree = std::max({agree, std::abs(after.pi_g - ref.pi_g) / std::max(1e-6, before.pi_g),
                      std::abs(after.pi_h - ref.pi_h) / std::max(1e-6, before.pi_h)});
  }
  return {worst <= 1e-8, fmt("max increase %.2e (slack 1e-8); conditioned powers vs test oracle %.1e", worst, agree)};
}

// ------------------------------------------------------------------ 4: VPC

// Floor measured before the build with the same configuration.
constexpr double kVpcFloor = 2.005e-4;

Outcome criterion4() {
  const KernelParams p = KernelParams::isotropic(2, 1.0, 1.0, 0.0);
  VpcOptions opts;
  opts.jitter = 1e-10;
  const std::vector<VpcRow> rows = vpc_check(p, 2, {0.5, 0.2, 0.1}, opts);
  bool ok = rows.size() == 4 && std::abs(rows[0].pi_g + rows[0].pi_h - 10.0) < 1e-12;
  std::string sums;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    sums += fmt(k == 0 ? "%.4g" : " > %.4g", rows[k].pi_g + rows[k].pi_h);
    if (k > 0) ok = ok && rows[k].status == "ok" && rows[k].pi_g + rows[k].pi_h < rows[k - 1].pi_g + rows[k - 1].pi_h;
  }
  const double last = rows.back().pi_g + rows.back().pi_h;
  const to::Powers ref = to::powers(p, make_stencil(Eigen::Vector2d::Zero(), 0.1).points, 1e-10, Eigen::Vector2d::Zero());
  ok = ok && last < 0.1 * 10.0 && std::abs(last - kVpcFloor) <= 0.01 * kVpcFloor;
  return {ok, "sums " + sums + fmt("; floor %.4e (pinned %.3e, test oracle %.4e)", last, kVpcFloor, ref.pi_g + ref.pi_h)};
}

// ---------------------------------------------------------- 5: scale study

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (int d : {2, 3}) {
    ScaleStudyConfig sc;
    sc.dim = d;
    sc.replicates = 10;
    sc.budget = 100;
    const ScaleStudyResult r = scale_study(sc);
    const double s1 = r.curve(DesignRule::nest_fixed).median_final;
    const double plug = r.curve(DesignRule::nest_plugin).median_final;
    const double mc = r.curve(DesignRule::nest_mc).median_final;
    const double gi = r.curve(DesignRule::gi).median_final;
    const double rnd = r.curve(DesignRule::random).median_final;
    const double spread = std::max({s1, plug, mc}) / std::min({s1, plug, mc});
    ok = ok && s1 < gi && gi < rnd && spread <= 3.0;
    detail += fmt("d=%.0f: s1 %.3e < gi %.3e < random %.3e", d, s1, gi, rnd) +
              fmt(", plugin %.3e, mc %.3e, spread %.2fx; ", plug, mc, spread);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 600.0, detail + fmt("%.0f s", secs)};
}

// -------------------------------------------------------- 6: sphere sanity

Outcome criterion6() {
  ExperimentConfig c;
  c.function = FunctionId::sphere;
  c.dim = 10;
  c.budget = 200;
  c.method = Method::nest_bo;
  std::vector<double> orders;
  int failures = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    c.seed = s;
    const RunTrace t = run_replicate(c);
    if (t.failed) {
      ++failures;
      continue;
    }
    const double init = t.evals[c.init_points - 1].best_so_far;
    orders.push_back(std::log10(init / t.final_best()));
  }
  if (orders.empty()) return {false, "every replicate failed"};
  const double med = median(orders);
  return {failures == 0 && med >= 3.0,
          fmt("median reduction 10^%.2f (min 10^%.2f) over %.0f seeds, threshold 10^3", med,
              *std::min_element(orders.begin(), orders.end()), static_cast<double>(orders.size()))};
}

// ------------------------------------------------------- 7 and 8: ablations

Outcome criterion7() {
  double nest = 0.0, best = 1e300, worst = -1e300;
  std::string detail;
  int failures = 0;
  for (const SweepResult& r : run_sweep(step_size_variants(4, 300, 0), 10, 1)) {
    const double v = r.report.median_final_regret().value_or(NAN);
    failures += r.report.failures;
    detail += r.label + fmt(" %.3g, ", v);
    if (r.report.traces.front().method == "nest_bo") {
      nest = v;
    } else {
      best = std::min(best, v);
      worst = std::max(worst, v);
    }
  }
  return {failures == 0 && nest <= best && nest < worst, "median final regret: " + detail.substr(0, detail.size() - 2)};
}

Outcome criterion8() {
  double small = NAN, mid = NAN, big = NAN;
  int failures = 0;
  for (const SweepResult& r : run_sweep(batch_study_variants(FunctionId::griewank, 10, 300, 0), 10, 1)) {
    const double v = r.report.median_final_regret().value_or(NAN);
    failures += r.report.failures;
    if (r.label == "b_0.2d") small = v;
    if (r.label == "b_d") mid = v;
    if (r.label == "b_2d") big = v;
  }
  const double ratio = std::max(mid, big) / std::min(mid, big);
  return {failures == 0 && mid < small && ratio <= 2.0,
          fmt("median final regret b=2 %.3g, b=10 %.3g, b=20 %.3g; b=2d vs b=d %.2fx", small, mid, big, ratio)};
}

// ---------------------------------------------------------- 9: subspace

// Every evaluated point must be an image of the final embedding: within each
// bin, sign_i times the normalized coordinate agrees across member dims.
double embedding_residual(const RunTrace& t, const BenchmarkSpec& spec) {
  const Embedding& e = *t.embedding;
  double worst = 0.0;
  for (const EvalRecord& r : t.evals) {
    const Eigen::VectorXd u =
        (2.0 * (r.point - spec.lower).array() / (spec.upper - spec.lower).array() - 1.0).matrix();
    for (int k = 0; k < e.target_dim; ++k) {
      const std::vector<int> m = e.members(k);
      const double ref = e.sign[m[0]] * u[m[0]];
      for (int i : m) worst = std::max(worst, std::abs(e.sign[i] * u[i] - ref));
    }
  }
  return worst;
}

Outcome criterion9() {
  ExperimentConfig sub;
  sub.function = FunctionId::griewank;
  sub.dim = 100;
  sub.effective_dim = 10;
  sub.budget = 300;
  sub.method = Method::nest_bo_sub;
  sub.subspace.initial_dim = 4;
  sub.subspace.window = 10;
  ExperimentConfig sobol = sub;
  sobol.method = Method::sobol_random;

  const ExperimentReport rs = run_experiment(sub, 10, 1);
  const ExperimentReport rr = run_experiment(sobol, 10, 1);
  int events = 0;
  bool preserved = true;
  double residual = 0.0;
  for (const RunTrace& t : rs.traces) {
    for (const SplitLog& s : t.splits) {
      preserved = preserved && s.preserved;
      events += s.saturated ? 0 : 1;
    }
    ExperimentConfig c = sub;
    c.seed = t.seed;
    if (t.embedding) residual = std::max(residual, embedding_residual(t, make_spec(c)));
  }
  const double a = rs.median_final_regret().value_or(NAN), b = rr.median_final_regret().value_or(NAN);
  const bool ok = rs.failures == 0 && rr.failures == 0 && a * 10.0 <= b && preserved && residual <= 1e-12;
  return {ok, fmt("median final regret sub %.3g vs sobol %.3g (%.0fx); ", a, b, b / a) + std::to_string(events) +
                  " split events, preserved " + (preserved ? "on all" : "NOT on all") +
                  fmt("; final-embedding residual %.1e", residual)};
}

// ------------------------------------------------------- 10: determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"nestbo"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome criterion10() {
  const fs::path root = fs::temp_directory_path() / "nestbo_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"nest_sphere", "[benchmark]\nfunction = sphere\ndim = 4\n[run]\nmethod = nest_bo\nbudget = 40\nseed = 3\n"},
      {"gibo_rosen", "[benchmark]\nfunction = rosenbrock\ndim = 3\n[run]\nmethod = gibo\nbudget = 40\n"},
      {"sub_griewank",
       "[benchmark]\nfunction = griewank\ndim = 30\neffective_dim = 4\n[run]\nmethod = nest_bo_sub\nbudget = 60\n"
       "[subspace]\ninitial_dim = 2\nwindow = 3\n"},
      {"mc_rff", "[benchmark]\nfunction = rff_prior\ndim = 2\nnoise_std = 0.05\n[run]\nbudget = 30\n[acq]\n"
                 "scale = monte_carlo\nmc_samples = 8\n"},
      {"sobol", "[benchmark]\nfunction = ackley\ndim = 5\n[run]\nmethod = sobol_random\nbudget = 50\n"},
  };
  int files = 0;
  std::string mismatch;
  for (const auto& [name, text] : configs) {
    const fs::path cfg = root / (name + ".ini");
    std::ofstream(cfg) << text;
    const fs::path a = root / (name + "_a"), b = root / (name + "_b");
    if (cli({"run", "--config", cfg.string(), "--replicates", "2", "--out-dir", a.string()}) != 0 ||
        cli({"run", "--config", cfg.string(), "--replicates", "2", "--jobs", "2", "--out-dir", b.string()}) != 0) {
      mismatch += name + " (run failed) ";
      continue;
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      const fs::path other = b / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) mismatch += entry.path().filename().string() + " ";
    }
  }
  fs::remove_all(root);
  return {mismatch.empty() && files > 0,
          std::to_string(files) + " files compared across repeated runs" +
              (mismatch.empty() ? ", all byte-identical" : "; differing: " + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"kernel derivatives match finite differences", criterion1},
      {"fast Hessian power equals brute force", criterion2},
      {"fantasy conditioning is monotone", criterion3},
      {"stencil sweep shrinks the power functions", criterion4},
      {"Newton-step error ordering of design rules", criterion5},
      {"sphere d=10 optimization sanity", criterion6},
      {"step-size robustness on Rosenbrock d=4", criterion7},
      {"batch-size ablation on Griewank d=10", criterion8},
      {"subspace scaling on embedded Griewank d=100", criterion9},
      {"determinism of run invocations", criterion10},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += o.passed ? 0 : 1;
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[k].first << " | "
              << o.detail << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
