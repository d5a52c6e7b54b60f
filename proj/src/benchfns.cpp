#include "nestbo/benchfns.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace nestbo {
namespace {

Eigen::VectorXd active_part(const BenchmarkSpec& spec, ConstVecRef x) {
  if (spec.active_dims.empty()) return x;
  Eigen::VectorXd z(spec.active_dims.size());
  for (std::size_t i = 0; i < spec.active_dims.size(); ++i) z[i] = x[spec.active_dims[i]];
  return z;
}

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

double rosenbrock(const Eigen::VectorXd& x) {
  double f = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = x[i] - 1.0;
    f += 100.0 * a * a + b * b;
  }
  return f;
}

double griewank(const Eigen::VectorXd& x) {
  double sum = 0.0, prod = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i] / 4000.0;
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return sum - prod + 1.0;
}

double ackley(const Eigen::VectorXd& x) {
  const double d = static_cast<double>(x.size());
  double sq = 0.0, cs = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    cs += std::cos(2.0 * std::numbers::pi * x[i]);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / d)) - std::exp(cs / d) + 20.0 + std::numbers::e;
}

void griewank_derivatives(const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd c(d), s(d), root(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    root[i] = std::sqrt(static_cast<double>(i + 1));
    c[i] = std::cos(x[i] / root[i]);
    s[i] = std::sin(x[i] / root[i]);
  }
  // Product of c with one or two factors left out (no division by c).
  const auto prod_except = [&](Eigen::Index a, Eigen::Index b) {
    double p = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) if (k != a && k != b) p *= c[k];
    return p;
  };
  if (g != nullptr) {
    g->resize(d);
    for (Eigen::Index i = 0; i < d; ++i) (*g)[i] = x[i] / 2000.0 + s[i] / root[i] * prod_except(i, i);
  }
  if (h != nullptr) {
    h->resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      (*h)(i, i) = 1.0 / 2000.0 + c[i] / (root[i] * root[i]) * prod_except(i, i);
      for (Eigen::Index j = 0; j < i; ++j) {
        (*h)(i, j) = -(s[i] / root[i]) * (s[j] / root[j]) * prod_except(i, j);
        (*h)(j, i) = (*h)(i, j);
      }
    }
  }
}

void rosenbrock_derivatives(const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
  const Eigen::Index d = x.size();
  if (g != nullptr) g->setZero(d);
  if (h != nullptr) h->setZero(d, d);
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    if (g != nullptr) {
      (*g)[i] += -400.0 * x[i] * a + 2.0 * (x[i] - 1.0);
      (*g)[i + 1] += 200.0 * a;
    }
    if (h != nullptr) {
      (*h)(i, i) += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
      (*h)(i + 1, i + 1) += 200.0;
      (*h)(i, i + 1) += -400.0 * x[i];
      (*h)(i + 1, i) += -400.0 * x[i];
    }
  }
}

}  // namespace

std::string to_string(FunctionId id) {
  switch (id) {
    case FunctionId::sphere: return "sphere";
    case FunctionId::rosenbrock: return "rosenbrock";
    case FunctionId::griewank: return "griewank";
    case FunctionId::ackley: return "ackley";
    case FunctionId::rff_prior: return "rff_prior";
  }
  return "unknown";
}

FunctionId function_from_string(std::string_view name) {
  for (FunctionId id : {FunctionId::sphere, FunctionId::rosenbrock, FunctionId::griewank,
                        FunctionId::ackley, FunctionId::rff_prior}) {
    if (name == to_string(id)) return id;
  }
  throw std::invalid_argument("unknown benchmark function '" + std::string(name) + "'");
}

RffFunction sample_rff(int d, int num_features, double lengthscale, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sample_rff: d must be >= 1");
  if (num_features < 1) throw std::invalid_argument("sample_rff: need at least one feature");
  if (!(lengthscale > 0.0)) throw std::invalid_argument("sample_rff: lengthscale must be > 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  RffFunction f;
  f.lengthscale = lengthscale;
  f.weights.resize(num_features);
  f.frequencies.resize(num_features, d);
  f.phases.resize(num_features);
  for (int k = 0; k < num_features; ++k) {
    f.weights[k] = normal(rng);
    for (int i = 0; i < d; ++i) f.frequencies(k, i) = normal(rng) / lengthscale;
    f.phases[k] = phase(rng);
  }
  return f;
}

double rff_eval(const RffFunction& f, ConstVecRef x) {
  if (x.size() != f.dim()) throw std::invalid_argument("rff_eval: dimension mismatch");
  const double amp = std::sqrt(2.0 / f.num_features());
  const Eigen::VectorXd arg = f.frequencies * x + f.phases;
  return amp * f.weights.dot(arg.array().cos().matrix());
}

Eigen::VectorXd rff_grad(const RffFunction& f, ConstVecRef x) {
  if (x.size() != f.dim()) throw std::invalid_argument("rff_grad: dimension mismatch");
  const double amp = std::sqrt(2.0 / f.num_features());
  const Eigen::VectorXd arg = f.frequencies * x + f.phases;
  const Eigen::VectorXd coef = -amp * f.weights.cwiseProduct(arg.array().sin().matrix());
  return f.frequencies.transpose() * coef;
}

Eigen::MatrixXd rff_hess(const RffFunction& f, ConstVecRef x) {
  if (x.size() != f.dim()) throw std::invalid_argument("rff_hess: dimension mismatch");
  const double amp = std::sqrt(2.0 / f.num_features());
  const Eigen::VectorXd arg = f.frequencies * x + f.phases;
  const Eigen::VectorXd coef = -amp * f.weights.cwiseProduct(arg.array().cos().matrix());
  // theta^T diag(coef) theta is symmetric term by term
  return f.frequencies.transpose() * coef.asDiagonal() * f.frequencies;
}

double rff_heuristic_lengthscale(int d) { return std::sqrt(static_cast<double>(d)) / 10.0; }

void BenchmarkSpec::validate() const {
  if (ambient_dim < 1) throw std::invalid_argument("BenchmarkSpec: ambient_dim must be >= 1");
  if (lower.size() != ambient_dim || upper.size() != ambient_dim) {
    throw std::invalid_argument("BenchmarkSpec: bounds have wrong dimension");
  }
  if (!(lower.array() < upper.array()).all()) {
    throw std::invalid_argument("BenchmarkSpec: lower bound must be below upper bound");
  }
  if (!(noise_std >= 0.0)) throw std::invalid_argument("BenchmarkSpec: noise_std must be >= 0");
  std::vector<int> seen(ambient_dim, 0);
  for (int a : active_dims) {
    if (a < 0 || a >= ambient_dim || seen[a]++) {
      throw std::invalid_argument("BenchmarkSpec: invalid active dimension " + std::to_string(a));
    }
  }
  if (function == FunctionId::rff_prior && (!rff || rff->dim() != effective_dim())) {
    throw std::invalid_argument("BenchmarkSpec: rff_prior needs a feature draw of matching dimension");
  }
}

BenchmarkSpec make_benchmark(FunctionId id, int d) {
  if (d < 1) throw std::invalid_argument("make_benchmark: d must be >= 1");
  BenchmarkSpec s;
  s.function = id;
  s.ambient_dim = d;
  double half = 5.0;
  switch (id) {
    case FunctionId::sphere: half = static_cast<double>(d) * d; break;
    case FunctionId::rosenbrock: half = 5.0; break;
    case FunctionId::griewank: half = 300.0; break;
    case FunctionId::ackley: half = 5.0; break;
    case FunctionId::rff_prior:
      throw std::invalid_argument("make_benchmark: use rff_prior_spec for GP prior draws");
  }
  s.lower = Eigen::VectorXd::Constant(d, -half);
  s.upper = Eigen::VectorXd::Constant(d, half);
  s.optimum_value = 0.0;
  return s;
}

BenchmarkSpec embedded_spec(FunctionId base, int d, int d_eff, Rng& rng) {
  if (d_eff < 1 || d_eff > d) {
    throw std::invalid_argument("embedded_spec: need 1 <= d_eff <= d (got d_eff=" +
                                std::to_string(d_eff) + ", d=" + std::to_string(d) + ")");
  }
  BenchmarkSpec s = make_benchmark(base, d);
  if (d_eff == d) return s;
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  s.active_dims.assign(perm.begin(), perm.begin() + d_eff);
  std::sort(s.active_dims.begin(), s.active_dims.end());
  return s;
}

BenchmarkSpec rff_prior_spec(int d, Rng& rng, int num_features, double heuristic_lengthscale) {
  const double centre = heuristic_lengthscale > 0.0 ? heuristic_lengthscale : rff_heuristic_lengthscale(d);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  const double ell = jitter(rng) * centre;
  BenchmarkSpec s;
  s.function = FunctionId::rff_prior;
  s.ambient_dim = d;
  s.lower = Eigen::VectorXd::Zero(d);
  s.upper = Eigen::VectorXd::Ones(d);
  s.rff = std::make_shared<const RffFunction>(sample_rff(d, num_features, ell, rng));
  return s;
}

double evaluate_noiseless(const BenchmarkSpec& spec, ConstVecRef x) {
  if (x.size() != spec.ambient_dim) {
    throw std::invalid_argument("evaluate: expected " + std::to_string(spec.ambient_dim) +
                                " coordinates, got " + std::to_string(x.size()));
  }
  const Eigen::VectorXd z = active_part(spec, x);
  switch (spec.function) {
    case FunctionId::sphere: return sphere(z);
    case FunctionId::rosenbrock: return rosenbrock(z);
    case FunctionId::griewank: return griewank(z);
    case FunctionId::ackley: return ackley(z);
    case FunctionId::rff_prior: return rff_eval(*spec.rff, z);
  }
  throw std::logic_error("evaluate: unhandled function");
}

double evaluate(const BenchmarkSpec& spec, ConstVecRef x, Rng* noise_rng) {
  if (x.size() == spec.ambient_dim) {
    for (int i = 0; i < spec.ambient_dim; ++i) {
      if (!(x[i] >= spec.lower[i] && x[i] <= spec.upper[i])) {
        throw std::invalid_argument("evaluate: coordinate " + std::to_string(i) + " = " +
                                    std::to_string(x[i]) + " outside bounds");
      }
    }
  }
  double f = evaluate_noiseless(spec, x);
  if (spec.noise_std > 0.0) {
    if (noise_rng == nullptr) throw std::invalid_argument("evaluate: noisy spec needs an rng");
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    f += noise(*noise_rng);
  }
  return f;
}

Eigen::VectorXd true_gradient(const BenchmarkSpec& spec, ConstVecRef x) {
  const Eigen::VectorXd z = active_part(spec, x);
  Eigen::VectorXd gz;
  switch (spec.function) {
    case FunctionId::sphere: gz = 2.0 * z; break;
    case FunctionId::rosenbrock: rosenbrock_derivatives(z, &gz, nullptr); break;
    case FunctionId::griewank: griewank_derivatives(z, &gz, nullptr); break;
    case FunctionId::rff_prior: gz = rff_grad(*spec.rff, z); break;
    case FunctionId::ackley: throw std::invalid_argument("true_gradient: not available for ackley");
  }
  if (spec.active_dims.empty()) return gz;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.ambient_dim);
  for (std::size_t i = 0; i < spec.active_dims.size(); ++i) g[spec.active_dims[i]] = gz[i];
  return g;
}

Eigen::MatrixXd true_hessian(const BenchmarkSpec& spec, ConstVecRef x) {
  const Eigen::VectorXd z = active_part(spec, x);
  Eigen::MatrixXd hz;
  switch (spec.function) {
    case FunctionId::sphere: hz = 2.0 * Eigen::MatrixXd::Identity(z.size(), z.size()); break;
    case FunctionId::rosenbrock: rosenbrock_derivatives(z, nullptr, &hz); break;
    case FunctionId::griewank: griewank_derivatives(z, nullptr, &hz); break;
    case FunctionId::rff_prior: hz = rff_hess(*spec.rff, z); break;
    case FunctionId::ackley: throw std::invalid_argument("true_hessian: not available for ackley");
  }
  if (spec.active_dims.empty()) return hz;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(spec.ambient_dim, spec.ambient_dim);
  for (std::size_t i = 0; i < spec.active_dims.size(); ++i) {
    for (std::size_t j = 0; j < spec.active_dims.size(); ++j) {
      h(spec.active_dims[i], spec.active_dims[j]) = hz(i, j);
    }
  }
  return h;
}

}  // namespace nestbo
