#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nestbo/benchfns.hpp"
#include "nestbo/bounded_lbfgs.hpp"
#include "nestbo/hyperparams.hpp"
#include "oracles.hpp"

using namespace nestbo;
namespace to = testing_oracle;

namespace {

Dataset rff_data(std::uint64_t seed, int n, double ell, double noise_std) {
  Rng rng(seed);
  const RffFunction f = sample_rff(2, 2048, ell, rng);
  std::normal_distribution<double> eps(0.0, noise_std);
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    x.row(r) = to::uniform_vec(rng, 2, 0, 1).transpose();
    y[r] = rff_eval(f, x.row(r).transpose()) + eps(rng);
  }
  return Dataset(x, y);
}

// Direct evaluation of 0.5 y^T K^{-1} y + 0.5 log|K| + n/2 log(2 pi).
double ref_nlml(const Dataset& data, const KernelParams& p, double jitter) {
  const int n = data.size();
  Eigen::MatrixXd k(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) k(a, b) = to::se(data.inputs.row(a).transpose(), data.inputs.row(b).transpose(), p);
  k.diagonal().array() += p.noise_variance + jitter * p.signal_variance;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
  const double logdet = ldlt.vectorD().array().log().sum();
  return 0.5 * data.targets.dot(ldlt.solve(data.targets)) + 0.5 * logdet + 0.5 * n * std::log(2.0 * M_PI);
}

}  // namespace

TEST_CASE("marginal likelihood and its gradient") {
  const Dataset data = rff_data(1, 15, 0.3, 0.05);
  const KernelParams p(1.4, Eigen::Vector2d(0.3, 0.6), 0.01);
  Eigen::VectorXd grad;
  const double v = negative_log_marginal_likelihood(data, p, 1e-8, &grad);
  CHECK(v == doctest::Approx(ref_nlml(data, p, 1e-8)).epsilon(1e-9));
  REQUIRE(grad.size() == 4);

  const auto at = [&](int k, double step) {
    Eigen::VectorXd theta(4);
    theta << std::log(p.signal_variance), p.lengthscales.array().log().matrix(), std::log(p.noise_variance);
    theta[k] += step;
    return KernelParams(std::exp(theta[0]), theta.segment(1, 2).array().exp().matrix(), std::exp(theta[3]));
  };
  HyperPrior prior;
  Eigen::VectorXd pgrad;
  negative_log_posterior(data, p, 1e-8, prior, &pgrad);
  const double h = 1e-5;
  for (int k = 0; k < 4; ++k) {
    const double fd = (ref_nlml(data, at(k, h), 1e-8) - ref_nlml(data, at(k, -h), 1e-8)) / (2 * h);
    CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    const double fdp =
        (negative_log_posterior(data, at(k, h), 1e-8, prior) - negative_log_posterior(data, at(k, -h), 1e-8, prior)) /
        (2 * h);
    CHECK(pgrad[k] == doctest::Approx(fdp).epsilon(1e-5).scale(1.0));
  }
  prior.enabled = false;
  CHECK(negative_log_posterior(data, p, 1e-8, prior) == doctest::Approx(v).epsilon(1e-14));
}

TEST_CASE("degenerate targets") {
  const Dataset data(Eigen::MatrixXd::Random(2, 2), Eigen::VectorXd::Constant(2, 4.0));
  const FitResult r = fit_hyperparams(data);
  CHECK(r.status == FitStatus::degenerate);
  CHECK(r.params.noise_variance == FitOptions{}.bounds.noise_min);
}

TEST_CASE("fits are deterministic") {
  const Dataset data = rff_data(2, 20, 0.3, 0.01);
  FitOptions o;
  o.restarts = 1;
  o.seed = 42;
  const FitResult a = fit_hyperparams(data, o), b = fit_hyperparams(data, o);
  CHECK(a.params.lengthscales == b.params.lengthscales);
  CHECK(a.params.signal_variance == b.params.signal_variance);
  CHECK(a.params.noise_variance == b.params.noise_variance);
  CHECK(a.neg_log_likelihood == b.neg_log_likelihood);
}

TEST_CASE("lengthscale recovery from prior draws") {
  std::vector<double> ratios;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dataset data = rff_data(100 + s, 60, 0.2, 1e-2);
    FitOptions o;
    o.seed = s;
    const FitResult r = fit_hyperparams(data, o);
    ratios.push_back(std::sqrt(r.params.lengthscales.prod()) / 0.2);
  }
  std::nth_element(ratios.begin(), ratios.begin() + 5, ratios.end());
  MESSAGE("median fitted / true lengthscale " << ratios[5]);
  CHECK(ratios[5] > 0.5);
  CHECK(ratios[5] < 2.0);
}

TEST_CASE("bounded quasi-Newton respects its box") {
  // min (x0 - 3)^2 + (x1 + 1)^2 on [0, 2] x [-5, 5]
  const auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g << 2 * (x[0] - 3), 2 * (x[1] + 1);
    return (x[0] - 3) * (x[0] - 3) + (x[1] + 1) * (x[1] + 1);
  };
  LbfgsOptions o;
  const LbfgsResult r = minimize_bounded(f, Eigen::Vector2d(1, 1), Eigen::Vector2d(0, -5), Eigen::Vector2d(2, 5), o);
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.x[1] == doctest::Approx(-1.0).epsilon(1e-6));
}
