// Preset studies: Newton-step error under different design rules with fixed
// hyperparameters, and the batch-size and step-size ablation sweeps.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nestbo/acquisition.hpp"
#include "nestbo/config.hpp"
#include "nestbo/harness.hpp"

namespace nestbo {

enum class DesignRule { nest_fixed, nest_plugin, nest_mc, gi, random };

std::string to_string(DesignRule rule);

/// Griewank on [0, 1]^d. Each replicate draws its hyperparameters, initial
/// design and `locations` test points, shared by every rule. Every (replicate,
/// test point) pair is one design run around that fixed point, in batches of
/// d until the budget is spent.
struct ScaleStudyConfig {
  int dim = 2;
  int replicates = 10;
  int locations = 10;
  int budget = 100;
  int init_points = 0;  // 0: 5, 10, 20, 30 for d = 2, 3, 4, 5
  /// Size of the separate sample the hyperparameters are fit on.
  int fit_points = 50;
  int mc_samples = 32;
  std::uint64_t seed = 0;
  std::vector<DesignRule> rules{DesignRule::nest_fixed, DesignRule::nest_plugin, DesignRule::nest_mc,
                                DesignRule::gi, DesignRule::random};

  int initial_points() const;
  void validate() const;
};

struct ErrorCurve {
  DesignRule rule;
  std::vector<int> evals;                   // evaluation counts
  std::vector<std::vector<double>> errors;  // [run][step]; NaN when undefined
  std::vector<double> median;               // per step over runs
  double median_final = 0.0;
};

struct ScaleStudyResult {
  int dim = 0;
  std::vector<ErrorCurve> curves;  // in cfg.rules order

  const ErrorCurve& curve(DesignRule rule) const;
};

ScaleStudyResult scale_study(const ScaleStudyConfig& cfg);

/// rule,eval_count,median_error
void write_scale_study_csv(std::ostream& os, const ScaleStudyResult& result);

struct SweepVariant {
  std::string label;
  ExperimentConfig cfg;
};

/// NeST-BO with b in {0.2d, d, 2d} (0.2d rounded, at least 1).
std::vector<SweepVariant> batch_study_variants(FunctionId function, int dim, int budget, std::uint64_t seed);

/// NeST-BO with line search against GIBO with each fixed step size.
std::vector<SweepVariant> step_size_variants(int dim, int budget, std::uint64_t seed,
                                             const std::vector<double>& steps = {1.0, 0.5, 0.1});

struct SweepResult {
  std::string label;
  ExperimentReport report;
};

/// Runs every variant; with a non-empty `out_dir` each variant writes into
/// its own subdirectory and summary.csv lists the final medians.
std::vector<SweepResult> run_sweep(const std::vector<SweepVariant>& variants, int replicates, int jobs,
                                   const std::string& out_dir = "");

}  // namespace nestbo
