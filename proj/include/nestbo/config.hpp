// Experiment configuration and its key-value file format.
//
//   [benchmark]
//   function = griewank        # sphere | rosenbrock | griewank | ackley | rff_prior
//   dim = 10
//   effective_dim = 0          # 0: every coordinate is active
//   noise_std = 0
//
//   [run]
//   method = nest_bo           # nest_bo | nest_bo_sub | gibo | sobol_random
//   budget = 200
//   seed = 0
//
// See README.md for the complete list of keys.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "nestbo/acquisition.hpp"
#include "nestbo/benchfns.hpp"
#include "nestbo/newton_step.hpp"

namespace nestbo {

enum class Method { nest_bo, nest_bo_sub, gibo, sobol_random };
enum class StartRule { random, center };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Raised for malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SubspaceConfig {
  int initial_dim = 4;
  int window = 10;
};

struct ExperimentConfig {
  // benchmark
  FunctionId function = FunctionId::sphere;
  int dim = 2;
  int effective_dim = 0;
  double noise_std = 0.0;
  /// Replaces the standard box with [-half_width, half_width]^d when set.
  std::optional<double> half_width;
  int rff_features = 1024;
  double rff_lengthscale = 0.0;  // 0: sqrt(d) / 10

  // run
  Method method = Method::nest_bo;
  int budget = 100;
  int batch_size = 0;  // 0: d (or the current subspace dimension)
  int init_points = 10;
  std::uint64_t seed = 0;
  StartRule start = StartRule::random;
  int refit_every = 1;
  int initial_fit_restarts = 3;
  int refit_restarts = 1;
  int fit_max_iterations = 100;
  int data_window = 0;
  bool evaluate_iterate = true;

  AcqConfig acq;
  double gibo_step = 0.5;
  ArmijoOptions armijo;
  SubspaceConfig subspace;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses a configuration file; throws ConfigError (including for a missing file).
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

/// The benchmark a replicate with this seed optimizes. Methods sharing a
/// seed see the same active dimensions and RFF draw.
BenchmarkSpec make_spec(const ExperimentConfig& cfg);

/// Loop settings implied by the method (criterion, batch size, update rule).
LoopConfig loop_config(const ExperimentConfig& cfg, int dim);

}  // namespace nestbo
