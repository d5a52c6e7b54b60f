#include "nestbo/config.hpp"

#include <fstream>
#include <sstream>

#include <boost/program_options.hpp>

namespace nestbo {

namespace po = boost::program_options;

std::string to_string(Method m) {
  switch (m) {
    case Method::nest_bo: return "nest_bo";
    case Method::nest_bo_sub: return "nest_bo_sub";
    case Method::gibo: return "gibo";
    case Method::sobol_random: return "sobol_random";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::nest_bo, Method::nest_bo_sub, Method::gibo, Method::sobol_random}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (dim < 1) fail("benchmark.dim must be >= 1");
  if (effective_dim < 0 || effective_dim > dim) fail("benchmark.effective_dim must lie in [0, dim]");
  if (!(noise_std >= 0.0)) fail("benchmark.noise_std must be >= 0");
  if (half_width && !(*half_width > 0.0)) fail("benchmark.half_width must be > 0");
  if (rff_features < 1) fail("benchmark.rff_features must be >= 1");
  if (function == FunctionId::rff_prior && effective_dim != 0 && effective_dim != dim) {
    fail("rff_prior does not support embedding");
  }
  if (budget < 1) fail("run.budget must be >= 1");
  if (batch_size < 0) fail("run.batch_size must be >= 0");
  if (method != Method::sobol_random) {
    const int b = batch_size > 0 ? batch_size : (method == Method::nest_bo_sub ? subspace.initial_dim : dim);
    if (init_points < 1) fail("run.init_points must be >= 1");
    if (budget < init_points + b) fail("run.budget must cover init_points plus one batch");
  }
  if (refit_every < 1) fail("run.refit_every must be >= 1");
  if (initial_fit_restarts < 1 || refit_restarts < 1) fail("fit restarts must be >= 1");
  if (fit_max_iterations < 1) fail("run.fit_max_iterations must be >= 1");
  if (data_window < 0) fail("run.data_window must be >= 0");
  if (!(gibo_step > 0.0)) fail("step.gibo_step must be > 0");
  if (method == Method::nest_bo_sub) {
    if (subspace.initial_dim < 1 || subspace.initial_dim > dim) fail("subspace.initial_dim must lie in [1, dim]");
    if (subspace.window < 1) fail("subspace.window must be >= 1");
  }
  try {
    acq.validate();
    armijo.validate();
  } catch (const std::invalid_argument& ex) {
    fail(ex.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::string function = "sphere", method = "nest_bo", start = "random", scale = "fixed";
  double half_width = 0.0;

  po::options_description desc;
  // clang-format off
  desc.add_options()
      ("benchmark.function", po::value(&function))
      ("benchmark.dim", po::value(&c.dim))
      ("benchmark.effective_dim", po::value(&c.effective_dim))
      ("benchmark.noise_std", po::value(&c.noise_std))
      ("benchmark.half_width", po::value(&half_width))
      ("benchmark.rff_features", po::value(&c.rff_features))
      ("benchmark.rff_lengthscale", po::value(&c.rff_lengthscale))
      ("run.method", po::value(&method))
      ("run.budget", po::value(&c.budget))
      ("run.batch_size", po::value(&c.batch_size))
      ("run.init_points", po::value(&c.init_points))
      ("run.seed", po::value(&c.seed))
      ("run.start", po::value(&start))
      ("run.refit_every", po::value(&c.refit_every))
      ("run.initial_fit_restarts", po::value(&c.initial_fit_restarts))
      ("run.refit_restarts", po::value(&c.refit_restarts))
      ("run.fit_max_iterations", po::value(&c.fit_max_iterations))
      ("run.data_window", po::value(&c.data_window))
      ("run.evaluate_iterate", po::value(&c.evaluate_iterate))
      ("acq.scale", po::value(&scale))
      ("acq.scale_value", po::value(&c.acq.scale.value))
      ("acq.mc_samples", po::value(&c.acq.scale.num_samples))
      ("acq.box_radius", po::value(&c.acq.box_radius))
      ("acq.num_restarts", po::value(&c.acq.num_restarts))
      ("acq.raw_samples", po::value(&c.acq.raw_samples))
      ("acq.inner_grad_tol", po::value(&c.acq.inner_grad_tol))
      ("acq.inner_max_iterations", po::value(&c.acq.inner_max_iterations))
      ("acq.fd_step", po::value(&c.acq.fd_step))
      ("step.gibo_step", po::value(&c.gibo_step))
      ("step.gamma0", po::value(&c.armijo.gamma0))
      ("step.shrink", po::value(&c.armijo.shrink))
      ("step.c1", po::value(&c.armijo.c1))
      ("step.max_steps", po::value(&c.armijo.max_steps))
      ("subspace.initial_dim", po::value(&c.subspace.initial_dim))
      ("subspace.window", po::value(&c.subspace.window));
  // clang-format on

  try {
    std::istringstream in(text);
    po::variables_map vm;
    po::store(po::parse_config_file(in, desc, false), vm);
    po::notify(vm);
    if (vm.count("benchmark.half_width")) c.half_width = half_width;
  } catch (const po::error& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }

  try {
    c.function = function_from_string(function);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  c.method = method_from_string(method);
  if (start == "random") {
    c.start = StartRule::random;
  } else if (start == "center") {
    c.start = StartRule::center;
  } else {
    throw ConfigError("run.start must be 'random' or 'center'");
  }
  if (scale == "fixed") {
    c.acq.scale.kind = ScaleMode::Kind::fixed;
  } else if (scale == "plugin") {
    c.acq.scale.kind = ScaleMode::Kind::plugin;
  } else if (scale == "monte_carlo") {
    c.acq.scale.kind = ScaleMode::Kind::monte_carlo;
  } else {
    throw ConfigError("acq.scale must be fixed, plugin or monte_carlo");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

BenchmarkSpec make_spec(const ExperimentConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 101));
  BenchmarkSpec spec;
  if (cfg.function == FunctionId::rff_prior) {
    spec = rff_prior_spec(cfg.dim, rng, cfg.rff_features, cfg.rff_lengthscale);
  } else {
    const int deff = cfg.effective_dim == 0 ? cfg.dim : cfg.effective_dim;
    spec = embedded_spec(cfg.function, cfg.dim, deff, rng);
  }
  if (cfg.half_width) {
    spec.lower = Eigen::VectorXd::Constant(cfg.dim, -*cfg.half_width);
    spec.upper = Eigen::VectorXd::Constant(cfg.dim, *cfg.half_width);
  }
  spec.noise_std = cfg.noise_std;
  spec.validate();
  return spec;
}

LoopConfig loop_config(const ExperimentConfig& cfg, int dim) {
  LoopConfig lc;
  lc.acq = cfg.acq;
  lc.batch_size = cfg.batch_size > 0 ? cfg.batch_size : dim;
  lc.armijo = cfg.armijo;
  lc.refit_every = cfg.refit_every;
  lc.initial_fit_restarts = cfg.initial_fit_restarts;
  lc.refit_restarts = cfg.refit_restarts;
  lc.fit_max_iterations = cfg.fit_max_iterations;
  lc.data_window = cfg.data_window;
  lc.evaluate_iterate = cfg.evaluate_iterate;
  if (cfg.method == Method::gibo) {
    lc.acq.criterion = Criterion::gi;
    lc.update = UpdateRule::fixed_step;
    lc.fixed_step = cfg.gibo_step;
  } else {
    lc.acq.criterion = Criterion::nest;
    lc.update = UpdateRule::line_search;
  }
  return lc;
}

}  // namespace nestbo
