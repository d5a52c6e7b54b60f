#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "nestbo/harness.hpp"
#include "nestbo/studies.hpp"

using namespace nestbo;

namespace {

void check_trace_invariants(const RunTrace& t, const ExperimentConfig& cfg) {
  REQUIRE_FALSE(t.failed);
  CHECK(static_cast<int>(t.evals.size()) == cfg.budget);
  for (std::size_t k = 0; k < t.evals.size(); ++k) {
    CHECK(t.evals[k].index == static_cast<int>(k));
    if (k > 0) CHECK(t.evals[k].best_so_far <= t.evals[k - 1].best_so_far);
    if (t.evals[k].regret) CHECK(*t.evals[k].regret >= 0.0);
  }
}

ExperimentConfig small(Method m) {
  ExperimentConfig c;
  c.function = FunctionId::sphere;
  c.dim = 3;
  c.budget = 30;
  c.method = m;
  c.seed = 1;
  return c;
}

}  // namespace

TEST_CASE("sobol random search") {
  ExperimentConfig c = small(Method::sobol_random);
  c.budget = 100;
  const RunTrace t = run_replicate(c);
  check_trace_invariants(t, c);
  CHECK(t.iterations.empty());
}

TEST_CASE("every method produces a full, monotone trace") {
  for (Method m : {Method::nest_bo, Method::gibo, Method::nest_bo_sub}) {
    ExperimentConfig c = small(m);
    if (m == Method::nest_bo_sub) {
      c.function = FunctionId::griewank;
      c.dim = 12;
      c.effective_dim = 3;
      c.subspace.initial_dim = 2;
      c.subspace.window = 2;
      c.budget = 40;
    }
    const RunTrace t = run_replicate(c);
    check_trace_invariants(t, c);
    CHECK_FALSE(t.iterations.empty());
    for (const IterationLog& it : t.iterations) {
      if (m != Method::nest_bo_sub) CHECK(it.model_dim == c.dim);
      CHECK(it.lengthscales.size() == it.model_dim);
    }
    if (m == Method::nest_bo_sub) {
      REQUIRE(t.embedding.has_value());
      for (const SplitLog& s : t.splits) CHECK(s.preserved);
      for (const IterationLog& it : t.iterations) CHECK(it.model_dim <= t.embedding->target_dim);
    }
  }
}

TEST_CASE("nest_bo improves on the initial design on sphere") {
  ExperimentConfig c = small(Method::nest_bo);
  c.dim = 4;
  c.budget = 200;
  for (std::uint64_t s = 0; s < 10; ++s) {
    c.seed = s;
    const RunTrace t = run_replicate(c);
    REQUIRE_FALSE(t.failed);
    CHECK(t.final_best() < t.evals[c.init_points - 1].best_so_far);
  }
}

TEST_CASE("replicates are reproducible") {
  ExperimentConfig c = small(Method::nest_bo);
  c.noise_std = 0.1;
  std::ostringstream a, b;
  write_trace_csv(a, run_replicate(c));
  write_trace_csv(b, run_replicate(c));
  CHECK(a.str() == b.str());
  std::ostringstream ja, jb;
  write_trace_json(ja, run_replicate(c));
  write_trace_json(jb, run_replicate(c));
  CHECK(ja.str() == jb.str());
}

TEST_CASE("trace formats") {
  const RunTrace t = run_replicate(small(Method::nest_bo));
  std::ostringstream csv;
  write_trace_csv(csv, t);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "eval_index,y,best_so_far,regret");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == 30);

  std::ostringstream js;
  write_trace_json(js, t);
  const nlohmann::json j = nlohmann::json::parse(js.str());
  CHECK(j["evals"].size() == 30u);
  CHECK(j["iterations"].size() == t.iterations.size());
  CHECK(j["iterations"][0].contains("pi_h"));
}

TEST_CASE("aggregation") {
  ExperimentConfig c = small(Method::sobol_random);
  const ExperimentReport one = run_experiment(c, 1, 1);
  REQUIRE(one.aggregate.size() == one.traces[0].evals.size());
  for (std::size_t k = 0; k < one.aggregate.size(); ++k) {
    CHECK(one.aggregate[k].median_best == one.traces[0].evals[k].best_so_far);
    CHECK(one.aggregate[k].stderr_best == 0.0);
  }

  c.function = FunctionId::griewank;
  c.dim = 2;
  c.budget = 50;
  const ExperimentReport ten = run_experiment(c, 10, 2);
  CHECK(ten.failures == 0);
  CHECK(ten.traces.size() == 10u);
  for (std::size_t k = 0; k < ten.traces.size(); ++k) CHECK(ten.traces[k].seed == c.seed + k);
  for (std::size_t k = 1; k < ten.aggregate.size(); ++k) {
    CHECK(ten.aggregate[k].median_best <= ten.aggregate[k - 1].median_best);
  }
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("experiment output files") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "nestbo_unit_out";
  std::filesystem::remove_all(dir);
  run_experiment(small(Method::sobol_random), 2, 1, dir.string());
  CHECK(std::filesystem::exists(dir / "aggregate.csv"));
  CHECK(std::filesystem::exists(dir / "aggregate.json"));
  int csv = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) csv += e.path().extension() == ".csv";
  CHECK(csv == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep presets") {
  const auto batch = batch_study_variants(FunctionId::griewank, 10, 300, 0);
  REQUIRE(batch.size() == 3u);
  CHECK(batch[0].label == "b_0.2d");
  CHECK(batch[0].cfg.batch_size == 2);
  CHECK(batch[1].cfg.batch_size == 10);
  CHECK(batch[2].cfg.batch_size == 20);
  const auto steps = step_size_variants(4, 300, 0);
  REQUIRE(steps.size() == 4u);
  CHECK(steps[0].cfg.method == Method::nest_bo);
  for (std::size_t k = 1; k < steps.size(); ++k) CHECK(steps[k].cfg.method == Method::gibo);
  CHECK(steps[3].cfg.gibo_step == 0.1);
}

TEST_CASE("small scale study") {
  ScaleStudyConfig sc;
  sc.dim = 2;
  sc.replicates = 1;
  sc.locations = 2;
  sc.budget = 12;
  sc.fit_points = 20;
  sc.mc_samples = 4;
  const ScaleStudyResult r = scale_study(sc);
  REQUIRE(r.curves.size() == 5u);
  for (const ErrorCurve& c : r.curves) {
    CHECK(c.errors.size() == 2u);
    CHECK(c.evals.front() == sc.initial_points());
    CHECK(c.evals.back() == sc.budget);
  }
  std::ostringstream os;
  write_scale_study_csv(os, r);
  CHECK(os.str().rfind("rule,eval_count,median_error\n", 0) == 0);
  CHECK(sc.initial_points() == 5);
  sc.dim = 5;
  CHECK(sc.initial_points() == 30);
}
