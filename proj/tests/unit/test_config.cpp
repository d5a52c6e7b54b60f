#include "doctest.h"
#include "nestbo/config.hpp"

using namespace nestbo;

TEST_CASE("parse a full configuration") {
  const ExperimentConfig c = parse_config(R"(
[benchmark]
function = griewank
dim = 20
effective_dim = 5
noise_std = 0.1

[run]
method = nest_bo_sub
budget = 150
batch_size = 3
init_points = 8
seed = 17
start = center
evaluate_iterate = false

[acq]
scale = monte_carlo
mc_samples = 16
box_radius = 0.3

[step]
gibo_step = 0.25

[subspace]
initial_dim = 2
window = 6
)");
  CHECK(c.function == FunctionId::griewank);
  CHECK(c.dim == 20);
  CHECK(c.effective_dim == 5);
  CHECK(c.noise_std == 0.1);
  CHECK(c.method == Method::nest_bo_sub);
  CHECK(c.budget == 150);
  CHECK(c.batch_size == 3);
  CHECK(c.init_points == 8);
  CHECK(c.seed == 17u);
  CHECK(c.start == StartRule::center);
  CHECK_FALSE(c.evaluate_iterate);
  CHECK(c.acq.scale.kind == ScaleMode::Kind::monte_carlo);
  CHECK(c.acq.scale.num_samples == 16);
  CHECK(c.acq.box_radius == 0.3);
  CHECK(c.gibo_step == 0.25);
  CHECK(c.subspace.initial_dim == 2);
  CHECK(c.subspace.window == 6);
}

TEST_CASE("defaults") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.method == Method::nest_bo);
  CHECK(c.function == FunctionId::sphere);
  CHECK(c.evaluate_iterate);
  CHECK_FALSE(c.half_width.has_value());
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(parse_config("[run]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\nmethod = simplex\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[benchmark]\nfunction = himmelblau\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[benchmark]\ndim = two\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\nbudget = 5\ninit_points = 10\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[acq]\nscale = exact\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[benchmark]\ndim = 4\neffective_dim = 5\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/path/config.ini"), ConfigError);
}

TEST_CASE("loop settings implied by the method") {
  ExperimentConfig c;
  c.method = Method::gibo;
  c.gibo_step = 0.1;
  LoopConfig lc = loop_config(c, 7);
  CHECK(lc.batch_size == 7);
  CHECK(lc.acq.criterion == Criterion::gi);
  CHECK(lc.update == UpdateRule::fixed_step);
  CHECK(lc.fixed_step == 0.1);
  c.method = Method::nest_bo;
  c.batch_size = 2;
  lc = loop_config(c, 7);
  CHECK(lc.batch_size == 2);
  CHECK(lc.acq.criterion == Criterion::nest);
  CHECK(lc.update == UpdateRule::line_search);
}

TEST_CASE("methods share the benchmark draw for a seed") {
  ExperimentConfig a;
  a.function = FunctionId::griewank;
  a.dim = 30;
  a.effective_dim = 4;
  a.seed = 5;
  ExperimentConfig b = a;
  b.method = Method::sobol_random;
  CHECK(make_spec(a).active_dims == make_spec(b).active_dims);
}
