#include "nestbo/sobol.hpp"

#include <random>
#include <stdexcept>
#include <string>

#include <boost/random/sobol.hpp>

namespace nestbo {

struct ScrambledSobol::Engine {
  explicit Engine(int d) : gen(static_cast<std::size_t>(d)) {}
  boost::random::sobol_engine<std::uint32_t, 32> gen;
};

ScrambledSobol::ScrambledSobol(int dim, std::uint64_t seed) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("ScrambledSobol: dim must be >= 1");
  engine_ = std::make_unique<Engine>(dim);
  std::mt19937_64 rng(seed);
  shift_.resize(dim);
  for (int i = 0; i < dim; ++i) shift_[i] = static_cast<std::uint32_t>(rng() >> 32);
}

ScrambledSobol::~ScrambledSobol() = default;
ScrambledSobol::ScrambledSobol(ScrambledSobol&&) noexcept = default;
ScrambledSobol& ScrambledSobol::operator=(ScrambledSobol&&) noexcept = default;

Eigen::VectorXd ScrambledSobol::next() {
  Eigen::VectorXd p(dim_);
  for (int i = 0; i < dim_; ++i) {
    const std::uint32_t v = engine_->gen() ^ shift_[i];
    p[i] = (static_cast<double>(v) + 0.5) * 0x1p-32;
  }
  return p;
}

Eigen::MatrixXd ScrambledSobol::draw(int n) {
  if (n < 0) throw std::invalid_argument("ScrambledSobol::draw: negative count");
  Eigen::MatrixXd out(n, dim_);
  for (int r = 0; r < n; ++r) out.row(r) = next().transpose();
  return out;
}

Eigen::MatrixXd scale_to_box(const Eigen::MatrixXd& unit, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper) {
  if (unit.cols() != lower.size() || unit.cols() != upper.size()) {
    throw std::invalid_argument("scale_to_box: dimension mismatch");
  }
  Eigen::MatrixXd out(unit.rows(), unit.cols());
  for (Eigen::Index r = 0; r < unit.rows(); ++r) {
    out.row(r) = (lower.array() + unit.row(r).transpose().array() * (upper - lower).array())
                     .min(upper.array())
                     .transpose();
  }
  return out;
}

}  // namespace nestbo
