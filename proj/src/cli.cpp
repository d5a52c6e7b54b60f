#include "nestbo/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nestbo/config.hpp"
#include "nestbo/harness.hpp"
#include "nestbo/oracle.hpp"
#include "nestbo/studies.hpp"
#include "nestbo/verify.hpp"

namespace nestbo {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_report(std::ostream& out, const std::string& label, const ExperimentReport& r) {
  out << label << ": replicates=" << r.traces.size() << " failures=" << r.failures
      << " median_final_best=" << num(r.median_final_best());
  if (const auto m = r.median_final_regret()) out << " median_final_regret=" << num(*m);
  out << '\n';
  for (const RunTrace& t : r.traces) {
    if (t.failed) out << "  seed " << t.seed << " failed: " << t.error << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Newton-step-targeted local Bayesian optimization"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int replicates = 1;
  int jobs = 1;
  std::string out_dir;
  const auto common = [&](CLI::App* sub, int default_replicates) {
    sub->add_option("--seed", seed, "Base seed (replicates use seed, seed + 1, ...)");
    sub->add_option("--out-dir", out_dir, "Directory for trace and aggregate files");
    sub->add_option("--replicates", replicates, "Number of replicates")
        ->check(CLI::PositiveNumber)
        ->default_val(default_replicates);
    sub->add_option("--jobs", jobs, "Replicates run in parallel")->check(CLI::PositiveNumber);
  };

  CLI::App* run = app.add_subcommand("run", "Run one configuration file");
  std::string config_path;
  run->add_option("--config", config_path, "Configuration file")->required();
  common(run, 1);

  CLI::App* sweep = app.add_subcommand("sweep", "Run a preset study");
  std::string preset;
  std::optional<int> sweep_dim, sweep_budget;
  std::string sweep_function = "griewank";
  sweep->add_option("preset", preset, "scale | batch | step_size")
      ->required()
      ->check(CLI::IsMember({"scale", "batch", "step_size"}));
  sweep->add_option("--dim", sweep_dim, "Problem dimension (scale: one of the default 2, 3)");
  sweep->add_option("--budget", sweep_budget, "Evaluation budget");
  sweep->add_option("--function", sweep_function, "Benchmark for the batch study")
      ->check(CLI::IsMember({"griewank", "ackley", "sphere", "rosenbrock"}));
  common(sweep, 10);

  CLI::App* vpc = app.add_subcommand("vpc", "Power functions on the symmetric stencil sweep");
  int vpc_dim = 2;
  double vpc_ell = 1.0;
  vpc->add_option("--dim", vpc_dim, "Dimension")->check(CLI::PositiveNumber);
  vpc->add_option("--lengthscale", vpc_ell, "Isotropic lengthscale")->check(CLI::PositiveNumber);
  vpc->add_option("--out-dir", out_dir, "Also write vpc.csv here");

  CLI::App* verify = app.add_subcommand("verify", "Run the property suite");
  verify->add_option("--seed", seed, "Seed for the randomized checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (run->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (run->count("--seed") > 0) cfg.seed = seed;
      const ExperimentReport r = run_experiment(cfg, replicates, jobs, out_dir);
      print_report(out, to_string(cfg.method) + "/" + to_string(cfg.function), r);
      return r.failures > 0 ? 2 : 0;
    }

    if (sweep->parsed()) {
      if (!out_dir.empty()) fs::create_directories(out_dir);
      if (preset == "scale") {
        std::vector<int> dims = {2, 3};
        if (sweep_dim) dims = {*sweep_dim};
        for (int d : dims) {
          ScaleStudyConfig sc;
          sc.dim = d;
          sc.replicates = replicates;
          sc.seed = seed;
          if (sweep_budget) sc.budget = *sweep_budget;
          const ScaleStudyResult res = scale_study(sc);
          out << "scale study d=" << d << '\n';
          for (const ErrorCurve& c : res.curves) {
            out << "  " << to_string(c.rule) << " median_final_newton_error=" << num(c.median_final) << '\n';
          }
          if (!out_dir.empty()) {
            std::ofstream csv((fs::path(out_dir) / ("scale_d" + std::to_string(d) + ".csv")).string());
            write_scale_study_csv(csv, res);
          }
        }
        return 0;
      }
      std::vector<SweepVariant> variants;
      if (preset == "batch") {
        variants = batch_study_variants(function_from_string(sweep_function), sweep_dim.value_or(10),
                                        sweep_budget.value_or(300), seed);
      } else {
        variants = step_size_variants(sweep_dim.value_or(4), sweep_budget.value_or(300), seed);
      }
      int failures = 0;
      for (const SweepResult& r : run_sweep(variants, replicates, jobs, out_dir)) {
        print_report(out, r.label, r.report);
        failures += r.report.failures;
      }
      return failures > 0 ? 2 : 0;
    }

    if (vpc->parsed()) {
      const std::vector<VpcRow> rows = vpc_check(KernelParams::isotropic(vpc_dim, 1.0, vpc_ell, 0.0), vpc_dim,
                                                 {0.5 * vpc_ell, 0.2 * vpc_ell, 0.1 * vpc_ell});
      write_vpc_csv(out, rows);
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream csv((fs::path(out_dir) / "vpc.csv").string());
        write_vpc_csv(csv, rows);
      }
      return 0;
    }

    VerifyOptions vo;
    vo.seed = seed;
    bool all = true;
    run_verify(vo, [&](const CheckResult& r) {
      write_check(out, r);
      all = all && r.passed;
    });
    return all ? 0 : 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace nestbo
