#include "nestbo/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

#include "nestbo/benchfns.hpp"
#include "nestbo/errors.hpp"
#include "nestbo/hyperparams.hpp"
#include "nestbo/oracle.hpp"
#include "nestbo/sobol.hpp"

namespace nestbo {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::unique_ptr<GpState> build_gp(const Dataset& data, const KernelParams& params) {
  GpOptions go;
  for (int attempt = 0;; ++attempt) {
    try {
      return std::make_unique<GpState>(data, params, go);
    } catch (const NumericalError&) {
      if (attempt >= 4) throw;
      go.jitter *= 100.0;
    }
  }
}

Eigen::MatrixXd uniform_points(int n, int d, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) x(r, c) = unit(rng);
  }
  return x;
}

double nan_median(const std::vector<double>& v) {
  std::vector<double> ok;
  for (double x : v) {
    if (std::isfinite(x)) ok.push_back(x);
  }
  return median(ok);
}

AcqConfig acq_for(DesignRule rule, int mc_samples) {
  AcqConfig acq;
  acq.box_radius = 1.0;  // covers the whole unit cube from any test location
  switch (rule) {
    case DesignRule::nest_fixed: acq.scale = ScaleMode::fixed(1.0); break;
    case DesignRule::nest_plugin: acq.scale = ScaleMode::plugin(); break;
    case DesignRule::nest_mc: acq.scale = ScaleMode::monte_carlo(mc_samples); break;
    case DesignRule::gi: acq.criterion = Criterion::gi; break;
    case DesignRule::random: break;
  }
  return acq;
}

}  // namespace

std::string to_string(DesignRule rule) {
  switch (rule) {
    case DesignRule::nest_fixed: return "nest_s1";
    case DesignRule::nest_plugin: return "nest_plugin";
    case DesignRule::nest_mc: return "nest_mc";
    case DesignRule::gi: return "gi";
    case DesignRule::random: return "random";
  }
  return "unknown";
}

int ScaleStudyConfig::initial_points() const {
  if (init_points > 0) return init_points;
  switch (dim) {
    case 2: return 5;
    case 3: return 10;
    case 4: return 20;
    case 5: return 30;
    default: return 2 * dim;
  }
}

void ScaleStudyConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("scale study: dim must be >= 1");
  if (replicates < 1) throw std::invalid_argument("scale study: replicates must be >= 1");
  if (locations < 1) throw std::invalid_argument("scale study: locations must be >= 1");
  if (fit_points < 2) throw std::invalid_argument("scale study: fit_points must be >= 2");
  if (mc_samples < 1) throw std::invalid_argument("scale study: mc_samples must be >= 1");
  if (budget < initial_points()) throw std::invalid_argument("scale study: budget below the initial design");
  if (rules.empty()) throw std::invalid_argument("scale study: no design rules");
}

const ErrorCurve& ScaleStudyResult::curve(DesignRule rule) const {
  for (const ErrorCurve& c : curves) {
    if (c.rule == rule) return c;
  }
  throw std::out_of_range("scale study: rule not present");
}

ScaleStudyResult scale_study(const ScaleStudyConfig& cfg) {
  cfg.validate();
  const int d = cfg.dim;
  const int n0 = cfg.initial_points();

  BenchmarkSpec spec = make_benchmark(FunctionId::griewank, d);
  spec.lower = Eigen::VectorXd::Zero(d);
  spec.upper = Eigen::VectorXd::Ones(d);
  spec.optimum_value.reset();

  ScaleStudyResult result;
  result.dim = d;
  for (DesignRule rule : cfg.rules) {
    ErrorCurve c;
    c.rule = rule;
    for (int n = n0;; n = std::min(cfg.budget, n + d)) {
      c.evals.push_back(n);
      if (n >= cfg.budget) break;
    }
    result.curves.push_back(std::move(c));
  }

  for (int rep = 0; rep < cfg.replicates; ++rep) {
    Rng setup(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(rep)));
    const auto observe = [&](const Eigen::MatrixXd& x) {
      Eigen::VectorXd y(x.rows());
      for (Eigen::Index r = 0; r < x.rows(); ++r) y[r] = evaluate_noiseless(spec, x.row(r).transpose());
      return y;
    };

    // Hyperparameters come from a separate sample and stay fixed.
    const Eigen::MatrixXd xf = uniform_points(cfg.fit_points, d, setup);
    const Eigen::VectorXd yf_raw = observe(xf);
    const OutputScaling scaling = standardization(yf_raw);
    Eigen::VectorXd yf = yf_raw;
    for (Eigen::Index i = 0; i < yf.size(); ++i) yf[i] = scaling.apply(yf[i]);
    FitOptions fo;
    fo.restarts = 5;
    fo.seed = derive_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(rep));
    fo.prior.enabled = false;
    const KernelParams params = fit_hyperparams(Dataset(xf, yf), fo).params;

    const Eigen::MatrixXd tests = uniform_points(cfg.locations, d, setup);
    const Eigen::MatrixXd x0 =
        ScrambledSobol(d, derive_seed(cfg.seed, 3000 + static_cast<std::uint64_t>(rep))).draw(n0);
    Dataset init(x0, observe(x0));
    for (Eigen::Index i = 0; i < init.targets.size(); ++i) init.targets[i] = scaling.apply(init.targets[i]);

    for (int loc = 0; loc < cfg.locations; ++loc) {
      const Eigen::VectorXd x_test = tests.row(loc).transpose();
      const Eigen::VectorXd g_true = true_gradient(spec, x_test);
      const Eigen::MatrixXd h_true = true_hessian(spec, x_test);
      const std::uint64_t run = static_cast<std::uint64_t>(rep * cfg.locations + loc);

      for (std::size_t k = 0; k < cfg.rules.size(); ++k) {
        const DesignRule rule = cfg.rules[k];
        ErrorCurve& curve = result.curves[k];
        Rng rng(derive_seed(cfg.seed, 4000 + 16 * run + static_cast<std::uint64_t>(rule)));
        const AcqConfig acq = acq_for(rule, cfg.mc_samples);

        Dataset data = init;
        std::vector<double> errs;
        for (std::size_t step = 0; step < curve.evals.size(); ++step) {
          const std::unique_ptr<GpState> gp = build_gp(data, params);
          errs.push_back(newton_error(g_true, h_true, *gp, x_test).value_or(kNaN));
          if (step + 1 == curve.evals.size()) break;

          const int b = curve.evals[step + 1] - curve.evals[step];
          Eigen::MatrixXd z;
          if (rule == DesignRule::random) {
            z = uniform_points(b, d, rng);
          } else {
            z = select_batch(*gp, x_test, b, acq, spec.lower, spec.upper, rng).points;
          }
          Eigen::VectorXd y = observe(z);
          for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = scaling.apply(y[i]);
          data.append(z, y);
        }
        curve.errors.push_back(std::move(errs));
      }
    }
  }

  for (ErrorCurve& c : result.curves) {
    c.median.resize(c.evals.size());
    for (std::size_t s = 0; s < c.evals.size(); ++s) {
      std::vector<double> col;
      for (const std::vector<double>& run : c.errors) col.push_back(run[s]);
      c.median[s] = nan_median(col);
    }
    c.median_final = c.median.back();
  }
  return result;
}

void write_scale_study_csv(std::ostream& os, const ScaleStudyResult& result) {
  os << "rule,eval_count,median_error\n";
  char buf[40];
  for (const ErrorCurve& c : result.curves) {
    for (std::size_t s = 0; s < c.evals.size(); ++s) {
      std::snprintf(buf, sizeof buf, "%.17g", c.median[s]);
      os << to_string(c.rule) << ',' << c.evals[s] << ',' << buf << '\n';
    }
  }
}

std::vector<SweepVariant> batch_study_variants(FunctionId function, int dim, int budget, std::uint64_t seed) {
  std::vector<SweepVariant> out;
  const int small = std::max(1, static_cast<int>(std::lround(0.2 * dim)));
  for (const auto& [label, b] : {std::pair<std::string, int>{"b_0.2d", small}, {"b_d", dim}, {"b_2d", 2 * dim}}) {
    ExperimentConfig c;
    c.function = function;
    c.dim = dim;
    c.budget = budget;
    c.seed = seed;
    c.method = Method::nest_bo;
    c.batch_size = b;
    c.validate();
    out.push_back({label, c});
  }
  return out;
}

std::vector<SweepVariant> step_size_variants(int dim, int budget, std::uint64_t seed, const std::vector<double>& steps) {
  ExperimentConfig base;
  base.function = FunctionId::rosenbrock;
  base.dim = dim;
  base.budget = budget;
  base.seed = seed;
  std::vector<SweepVariant> out;
  ExperimentConfig nest = base;
  nest.method = Method::nest_bo;
  nest.validate();
  out.push_back({"nest_bo", nest});
  for (double eta : steps) {
    ExperimentConfig g = base;
    g.method = Method::gibo;
    g.gibo_step = eta;
    g.validate();
    char label[32];
    std::snprintf(label, sizeof label, "gibo_eta_%g", eta);
    out.push_back({label, g});
  }
  return out;
}

std::vector<SweepResult> run_sweep(const std::vector<SweepVariant>& variants, int replicates, int jobs,
                                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::vector<SweepResult> results;
  for (const SweepVariant& v : variants) {
    const std::string dir = out_dir.empty() ? std::string() : (fs::path(out_dir) / v.label).string();
    results.push_back({v.label, run_experiment(v.cfg, replicates, jobs, dir)});
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream os((fs::path(out_dir) / "summary.csv").string());
    os << "label,method,batch_size,gibo_step,replicates,failures,median_final_best,median_final_regret\n";
    char buf[64];
    for (std::size_t i = 0; i < results.size(); ++i) {
      const ExperimentConfig& c = variants[i].cfg;
      const ExperimentReport& r = results[i].report;
      os << results[i].label << ',' << to_string(c.method) << ',' << c.batch_size << ',' << c.gibo_step << ','
         << replicates << ',' << r.failures << ',';
      std::snprintf(buf, sizeof buf, "%.17g", r.median_final_best());
      os << buf << ',';
      if (const auto m = r.median_final_regret()) {
        std::snprintf(buf, sizeof buf, "%.17g", *m);
        os << buf;
      }
      os << '\n';
    }
  }
  return results;
}

}  // namespace nestbo
