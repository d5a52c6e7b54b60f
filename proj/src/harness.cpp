#include "nestbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "nestbo/newton_step.hpp"
#include "nestbo/sobol.hpp"

namespace nestbo {
namespace {

using nlohmann::json;

enum Stream : std::uint64_t { kStart = 1, kInit = 2, kAcq = 3, kFit = 4, kNoise = 5, kEmbed = 6, kSplit = 7 };

// Evaluates the benchmark, enforces the budget and keeps the records.
class Recorder {
 public:
  Recorder(const BenchmarkSpec& spec, const ExperimentConfig& cfg, RunTrace& trace)
      : spec_(spec), budget_(cfg.budget), trace_(trace), noise_(derive_seed(cfg.seed, kNoise)) {}

  int remaining() const { return budget_ - static_cast<int>(trace_.evals.size()); }
  double best() const { return best_; }

  double eval(const Eigen::VectorXd& ambient) {
    if (remaining() <= 0) throw std::logic_error("evaluation budget exceeded");
    const Eigen::VectorXd x = ambient.cwiseMax(spec_.lower).cwiseMin(spec_.upper);
    const double y = evaluate(spec_, x, &noise_);
    const double clean = spec_.noise_std > 0.0 ? evaluate_noiseless(spec_, x) : y;
    best_ = std::min(best_, y);
    best_clean_ = std::min(best_clean_, clean);
    EvalRecord r;
    r.index = static_cast<int>(trace_.evals.size());
    r.point = x;
    r.y = y;
    r.best_so_far = best_;
    if (spec_.optimum_value) r.regret = std::max(0.0, best_clean_ - *spec_.optimum_value);
    trace_.evals.push_back(std::move(r));
    return y;
  }

 private:
  const BenchmarkSpec& spec_;
  int budget_;
  RunTrace& trace_;
  Rng noise_;
  double best_ = std::numeric_limits<double>::infinity();
  double best_clean_ = std::numeric_limits<double>::infinity();
};

Eigen::VectorXd start_point(const ExperimentConfig& cfg, int dim) {
  if (cfg.start == StartRule::center) return Eigen::VectorXd::Constant(dim, 0.5);
  Rng rng(derive_seed(cfg.seed, kStart));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd u(dim);
  for (int i = 0; i < dim; ++i) u[i] = unit(rng);
  return u;
}

// Start point plus scrambled Sobol points, as rows of the unit cube.
Eigen::MatrixXd initial_design(const ExperimentConfig& cfg, const Eigen::VectorXd& start, int count) {
  const int dim = static_cast<int>(start.size());
  Eigen::MatrixXd x(count, dim);
  x.row(0) = start.transpose();
  if (count > 1) x.bottomRows(count - 1) = ScrambledSobol(dim, derive_seed(cfg.seed, kInit)).draw(count - 1);
  return x;
}

void log_iteration(RunTrace& trace, const IterationRecord& ir, const Eigen::VectorXd& ambient_iterate,
                   int iteration, const GpState& gp) {
  IterationLog log;
  log.iteration = iteration;
  log.evals_after = static_cast<int>(trace.evals.size());
  log.iterate = ambient_iterate;
  log.step_kind = ir.step.converged ? "converged" : to_string(ir.step.kind);
  log.step_size = ir.step.step_size;
  log.converged = ir.step.converged;
  log.acq_value = ir.batch.values.empty() ? 0.0 : ir.batch.values.back();
  log.pi_g = ir.belief.pi_g;
  log.pi_h = ir.belief.pi_h;
  log.scale = ir.scale_used;
  log.model_dim = gp.dim();
  log.refit = ir.refit;
  log.lengthscales = gp.params().lengthscales;
  log.signal_variance = gp.params().signal_variance;
  log.noise_variance = gp.params().noise_variance;
  trace.iterations.push_back(std::move(log));
}

void run_local(const ExperimentConfig& cfg, const BenchmarkSpec& spec, Recorder& rec, RunTrace& trace) {
  const int d = spec.ambient_dim;
  const Eigen::VectorXd range = spec.upper - spec.lower;
  const auto to_ambient = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return (spec.lower + u.cwiseProduct(range)).cwiseMax(spec.lower).cwiseMin(spec.upper);
  };

  LoopState st;
  st.lower = Eigen::VectorXd::Zero(d);
  st.upper = Eigen::VectorXd::Ones(d);
  st.fit_seed = derive_seed(cfg.seed, kFit);
  st.iterate = start_point(cfg, d);
  const Eigen::MatrixXd x0 = initial_design(cfg, st.iterate, std::min(cfg.init_points, cfg.budget));
  Eigen::VectorXd y0(x0.rows());
  for (Eigen::Index r = 0; r < x0.rows(); ++r) y0[r] = rec.eval(to_ambient(x0.row(r).transpose()));
  st.data = Dataset(x0, y0);

  const LoopConfig lc = loop_config(cfg, d);
  const BatchObjective objective = [&](const Eigen::MatrixXd& u) {
    Eigen::VectorXd y(u.rows());
    for (Eigen::Index r = 0; r < u.rows(); ++r) y[r] = rec.eval(to_ambient(u.row(r).transpose()));
    return y;
  };
  Rng acq_rng(derive_seed(cfg.seed, kAcq));
  while (rec.remaining() > 0) {
    const IterationRecord ir = nest_bo_iterate(st, lc, objective, acq_rng, rec.remaining());
    log_iteration(trace, ir, to_ambient(st.iterate), st.iteration, *st.gp);
  }
}

void run_subspace(const ExperimentConfig& cfg, const BenchmarkSpec& spec, Recorder& rec, RunTrace& trace) {
  Rng emb_rng(derive_seed(cfg.seed, kEmbed));
  Rng split_rng(derive_seed(cfg.seed, kSplit));
  Embedding e = new_embedding(spec.ambient_dim, cfg.subspace.initial_dim, emb_rng);
  const auto to_ambient_with = [&](const Embedding& emb, const Eigen::VectorXd& u) {
    return project_up(emb, (2.0 * u.array() - 1.0).matrix(), spec.lower, spec.upper);
  };
  const auto to_ambient = [&](const Eigen::VectorXd& u) { return to_ambient_with(e, u); };

  const int m0 = e.target_dim;
  LoopState st;
  st.lower = Eigen::VectorXd::Zero(m0);
  st.upper = Eigen::VectorXd::Ones(m0);
  st.fit_seed = derive_seed(cfg.seed, kFit);
  st.iterate = start_point(cfg, m0);
  const Eigen::MatrixXd x0 = initial_design(cfg, st.iterate, std::min(cfg.init_points, cfg.budget));
  Eigen::VectorXd y0(x0.rows());
  for (Eigen::Index r = 0; r < x0.rows(); ++r) y0[r] = rec.eval(to_ambient(x0.row(r).transpose()));
  st.data = Dataset(x0, y0);

  const BatchObjective objective = [&](const Eigen::MatrixXd& u) {
    Eigen::VectorXd y(u.rows());
    for (Eigen::Index r = 0; r < u.rows(); ++r) y[r] = rec.eval(to_ambient(u.row(r).transpose()));
    return y;
  };
  Rng acq_rng(derive_seed(cfg.seed, kAcq));
  std::vector<double> incumbents;
  bool saturated = false;
  while (rec.remaining() > 0) {
    const LoopConfig lc = loop_config(cfg, e.target_dim);
    const IterationRecord ir = nest_bo_iterate(st, lc, objective, acq_rng, rec.remaining());
    log_iteration(trace, ir, to_ambient(st.iterate), st.iteration, *st.gp);
    incumbents.push_back(rec.best());

    if (saturated || rec.remaining() <= 0 || !should_expand(incumbents, cfg.subspace.window)) continue;
    incumbents.clear();
    SplitResult sr = split(e, st.data.inputs, split_rng);
    SplitLog sl;
    sl.iteration = st.iteration;
    sl.old_dim = e.target_dim;
    sl.new_dim = sr.embedding.target_dim;
    sl.saturated = sr.saturated;
    if (sr.saturated) {
      saturated = true;
      trace.splits.push_back(sl);
      continue;
    }
    for (Eigen::Index r = 0; r < st.data.inputs.rows() && sl.preserved; ++r) {
      const Eigen::VectorXd before = to_ambient_with(e, st.data.inputs.row(r).transpose());
      const Eigen::VectorXd after = to_ambient_with(sr.embedding, sr.lifted.row(r).transpose());
      sl.preserved = (before.array() == after.array()).all();
    }
    trace.splits.push_back(sl);

    const std::vector<int>& parent = sr.embedding.history.back().parent;
    Eigen::VectorXd lifted_iterate(sr.embedding.target_dim);
    for (int k = 0; k < sr.embedding.target_dim; ++k) lifted_iterate[k] = st.iterate[parent[k]];
    e = std::move(sr.embedding);
    st.data.inputs = std::move(sr.lifted);
    st.iterate = lifted_iterate;
    st.lower = Eigen::VectorXd::Zero(e.target_dim);
    st.upper = Eigen::VectorXd::Ones(e.target_dim);
    refresh_model(st, loop_config(cfg, e.target_dim), true, true);
  }
  trace.embedding = e;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json embedding_json(const Embedding& e) {
  json h = json::array();
  for (const SplitEvent& ev : e.history) {
    h.push_back({{"old_dim", ev.old_dim}, {"new_dim", ev.new_dim}, {"parent", ev.parent}});
  }
  return {{"ambient_dim", e.ambient_dim}, {"target_dim", e.target_dim}, {"bin", e.bin},
          {"sign", e.sign}, {"history", h}};
}

}  // namespace

double RunTrace::final_best() const {
  return evals.empty() ? std::numeric_limits<double>::infinity() : evals.back().best_so_far;
}

std::optional<double> RunTrace::final_regret() const {
  return evals.empty() ? std::nullopt : evals.back().regret;
}

RunTrace run_replicate(const ExperimentConfig& cfg) {
  RunTrace trace;
  trace.method = to_string(cfg.method);
  trace.seed = cfg.seed;
  try {
    cfg.validate();
    const BenchmarkSpec spec = make_spec(cfg);
    Recorder rec(spec, cfg, trace);
    switch (cfg.method) {
      case Method::sobol_random: {
        ScrambledSobol sobol(spec.ambient_dim, derive_seed(cfg.seed, kInit));
        const Eigen::VectorXd range = spec.upper - spec.lower;
        while (rec.remaining() > 0) rec.eval(spec.lower + sobol.next().cwiseProduct(range));
        break;
      }
      case Method::nest_bo:
      case Method::gibo: run_local(cfg, spec, rec, trace); break;
      case Method::nest_bo_sub: run_subspace(cfg, spec, rec, trace); break;
    }
  } catch (const std::exception& ex) {
    trace.failed = true;
    trace.error = ex.what();
  }
  return trace;
}

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  os << "eval_index,y,best_so_far,regret\n";
  for (const EvalRecord& r : trace.evals) {
    os << r.index << ',' << fmt(r.y) << ',' << fmt(r.best_so_far) << ',';
    if (r.regret) os << fmt(*r.regret);
    os << '\n';
  }
}

void write_trace_json(std::ostream& os, const RunTrace& trace) {
  json j;
  j["method"] = trace.method;
  j["seed"] = trace.seed;
  j["failed"] = trace.failed;
  j["error"] = trace.error;
  json evals = json::array();
  for (const EvalRecord& r : trace.evals) {
    json e = {{"index", r.index}, {"x", vec_json(r.point)}, {"y", r.y}, {"best_so_far", r.best_so_far}};
    e["regret"] = r.regret ? json(*r.regret) : json(nullptr);
    evals.push_back(std::move(e));
  }
  j["evals"] = std::move(evals);
  json iters = json::array();
  for (const IterationLog& it : trace.iterations) {
    iters.push_back({{"iteration", it.iteration}, {"evals_after", it.evals_after},
                     {"iterate", vec_json(it.iterate)}, {"step_kind", it.step_kind},
                     {"step_size", it.step_size}, {"converged", it.converged},
                     {"acq_value", it.acq_value}, {"pi_g", it.pi_g}, {"pi_h", it.pi_h},
                     {"scale", it.scale}, {"model_dim", it.model_dim}, {"refit", it.refit},
                     {"lengthscales", vec_json(it.lengthscales)}, {"signal_variance", it.signal_variance},
                     {"noise_variance", it.noise_variance}});
  }
  j["iterations"] = std::move(iters);
  json splits = json::array();
  for (const SplitLog& s : trace.splits) {
    splits.push_back({{"iteration", s.iteration}, {"old_dim", s.old_dim}, {"new_dim", s.new_dim},
                      {"saturated", s.saturated}, {"preserved", s.preserved}});
  }
  j["splits"] = std::move(splits);
  j["embedding"] = trace.embedding ? embedding_json(*trace.embedding) : json(nullptr);
  os << j.dump(1) << '\n';
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<AggregateRow> aggregate_traces(const std::vector<RunTrace>& traces) {
  std::size_t longest = 0;
  for (const RunTrace& t : traces) {
    if (!t.failed) longest = std::max(longest, t.evals.size());
  }
  std::vector<AggregateRow> rows;
  for (std::size_t i = 0; i < longest; ++i) {
    std::vector<double> best, regret;
    for (const RunTrace& t : traces) {
      if (t.failed || t.evals.size() <= i) continue;
      best.push_back(t.evals[i].best_so_far);
      if (t.evals[i].regret) regret.push_back(*t.evals[i].regret);
    }
    AggregateRow row;
    row.eval_index = static_cast<int>(i);
    row.count = static_cast<int>(best.size());
    row.median_best = median(best);
    row.stderr_best = stderr_of(best);
    if (!regret.empty() && regret.size() == best.size()) {
      row.median_regret = median(regret);
      row.stderr_regret = stderr_of(regret);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << "eval_index,count,median_best,stderr_best,median_regret,stderr_regret\n";
  for (const AggregateRow& r : rows) {
    os << r.eval_index << ',' << r.count << ',' << fmt(r.median_best) << ',' << fmt(r.stderr_best) << ',';
    if (r.median_regret) os << fmt(*r.median_regret);
    os << ',';
    if (r.stderr_regret) os << fmt(*r.stderr_regret);
    os << '\n';
  }
}

std::optional<double> ExperimentReport::median_final_regret() const {
  std::vector<double> v;
  for (const RunTrace& t : traces) {
    if (t.failed) continue;
    const auto r = t.final_regret();
    if (!r) return std::nullopt;
    v.push_back(*r);
  }
  if (v.empty()) return std::nullopt;
  return median(v);
}

double ExperimentReport::median_final_best() const {
  std::vector<double> v;
  for (const RunTrace& t : traces) {
    if (!t.failed) v.push_back(t.final_best());
  }
  return median(v);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, int replicates, int jobs, const std::string& out_dir) {
  if (replicates < 1) throw std::invalid_argument("run_experiment: replicates must be >= 1");
  cfg.validate();
  ExperimentReport report;
  report.traces.resize(replicates);
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int k = next++; k < replicates; k = next++) {
      ExperimentConfig c = cfg;
      c.seed = cfg.seed + static_cast<std::uint64_t>(k);
      report.traces[k] = run_replicate(c);
    }
  };
  const int threads = std::clamp(jobs, 1, replicates);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const RunTrace& t : report.traces) report.failures += t.failed ? 1 : 0;
  report.aggregate = aggregate_traces(report.traces);

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const RunTrace& t : report.traces) {
      const std::string stem = (fs::path(out_dir) / ("replicate_" + std::to_string(t.seed))).string();
      std::ofstream csv(stem + ".csv");
      write_trace_csv(csv, t);
      std::ofstream js(stem + ".json");
      write_trace_json(js, t);
    }
    std::ofstream agg((fs::path(out_dir) / "aggregate.csv").string());
    write_aggregate_csv(agg, report.aggregate);
    json summary;
    summary["method"] = to_string(cfg.method);
    summary["function"] = to_string(cfg.function);
    summary["dim"] = cfg.dim;
    summary["budget"] = cfg.budget;
    summary["replicates"] = replicates;
    summary["failures"] = report.failures;
    json failed = json::array();
    for (const RunTrace& t : report.traces) {
      if (t.failed) failed.push_back({{"seed", t.seed}, {"error", t.error}});
    }
    summary["failed_runs"] = failed;
    summary["median_final_best"] = report.median_final_best();
    const auto mr = report.median_final_regret();
    summary["median_final_regret"] = mr ? json(*mr) : json(nullptr);
    std::ofstream js((fs::path(out_dir) / "aggregate.json").string());
    js << summary.dump(1) << '\n';
  }
  return report;
}

}  // namespace nestbo
