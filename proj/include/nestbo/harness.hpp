// Seeded replicate execution, aggregation over replicates, and trace output.
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nestbo/config.hpp"
#include "nestbo/subspace.hpp"

namespace nestbo {

struct EvalRecord {
  int index = 0;
  Eigen::VectorXd point;  // ambient coordinates
  double y = 0.0;
  double best_so_far = 0.0;
  /// Best noiseless value evaluated so far minus the known optimum.
  std::optional<double> regret;
};

struct IterationLog {
  int iteration = 0;
  int evals_after = 0;
  Eigen::VectorXd iterate;  // ambient coordinates after the step
  std::string step_kind;
  double step_size = 0.0;
  bool converged = false;
  double acq_value = 0.0;
  double pi_g = 0.0;
  double pi_h = 0.0;
  double scale = 0.0;
  int model_dim = 0;
  bool refit = false;
  Eigen::VectorXd lengthscales;
  double signal_variance = 0.0;
  double noise_variance = 0.0;
};

struct SplitLog {
  int iteration = 0;
  int old_dim = 0;
  int new_dim = 0;
  bool saturated = false;
  /// Every stored point maps to the same ambient image before and after.
  bool preserved = true;
};

struct RunTrace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<EvalRecord> evals;
  std::vector<IterationLog> iterations;
  std::vector<SplitLog> splits;
  std::optional<Embedding> embedding;
  bool failed = false;
  std::string error;

  double final_best() const;
  std::optional<double> final_regret() const;
};

/// Runs one replicate to budget exhaustion. Module errors are caught and
/// leave a partial trace marked failed.
RunTrace run_replicate(const ExperimentConfig& cfg);

/// eval_index,y,best_so_far,regret with round-trip precision.
void write_trace_csv(std::ostream& os, const RunTrace& trace);
/// Full diagnostics: evaluations with points, iterations, splits, embedding.
void write_trace_json(std::ostream& os, const RunTrace& trace);

struct AggregateRow {
  int eval_index = 0;
  int count = 0;
  double median_best = 0.0;
  double stderr_best = 0.0;
  std::optional<double> median_regret;
  std::optional<double> stderr_regret;
};

struct ExperimentReport {
  std::vector<RunTrace> traces;  // in seed order
  std::vector<AggregateRow> aggregate;
  int failures = 0;

  std::optional<double> median_final_regret() const;
  double median_final_best() const;
};

double median(std::vector<double> v);

/// Aggregates best-so-far (and regret) curves of successful traces.
std::vector<AggregateRow> aggregate_traces(const std::vector<RunTrace>& traces);

/// Replicates use seeds cfg.seed .. cfg.seed + replicates - 1 and run on up
/// to `jobs` threads. With a non-empty `out_dir` this writes one CSV and one
/// JSON per replicate plus aggregate.csv and aggregate.json.
ExperimentReport run_experiment(const ExperimentConfig& cfg, int replicates, int jobs,
                                const std::string& out_dir = "");

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

}  // namespace nestbo
