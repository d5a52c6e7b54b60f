#include <algorithm>

#include "doctest.h"
#include "nestbo/subspace.hpp"
#include "oracles.hpp"

using namespace nestbo;
namespace to = testing_oracle;

namespace {

Eigen::MatrixXd images(const Embedding& e, const Eigen::MatrixXd& v, const Eigen::VectorXd& lo,
                       const Eigen::VectorXd& hi) {
  Eigen::MatrixXd out(v.rows(), e.ambient_dim);
  for (Eigen::Index r = 0; r < v.rows(); ++r) out.row(r) = project_up(e, v.row(r).transpose(), lo, hi).transpose();
  return out;
}

bool column_sparse(const Embedding& e) {
  const Eigen::MatrixXd s = e.matrix();
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    if ((s.col(c).array() != 0.0).count() != 1 || s.col(c).cwiseAbs().sum() != 1.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("embedding construction") {
  Rng rng(1);
  const Embedding perm = new_embedding(5, 5, rng);
  for (int k = 0; k < 5; ++k) CHECK(perm.members(k).size() == 1u);

  const Embedding e = new_embedding(4, 2, rng);
  CHECK(e.members(0).size() == 2u);
  CHECK(e.members(1).size() == 2u);
  CHECK(column_sparse(e));

  Rng a(9), b(9);
  const Embedding ea = new_embedding(17, 5, a), eb = new_embedding(17, 5, b);
  CHECK(ea.bin == eb.bin);
  CHECK(ea.sign == eb.sign);
  CHECK_THROWS_AS(new_embedding(3, 4, rng), std::invalid_argument);
  CHECK_THROWS_AS(new_embedding(3, 0, rng), std::invalid_argument);
}

TEST_CASE("projection onto the ambient box") {
  Rng rng(2);
  const Embedding e = new_embedding(6, 3, rng);
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(6, -5.0), hi = Eigen::VectorXd::Constant(6, 10.0);
  CHECK((project_up(e, Eigen::VectorXd::Zero(3), lo, hi) - Eigen::VectorXd::Constant(6, 2.5)).norm() == 0.0);

  Embedding one;
  one.ambient_dim = 2;
  one.target_dim = 1;
  one.bin = {0, 0};
  one.sign = {1, 1};
  CHECK(project_up(one, Eigen::VectorXd::Ones(1), lo.head(2), hi.head(2)) == hi.head(2));
}

TEST_CASE("split examples") {
  Rng rng(3);
  const Embedding full = new_embedding(4, 4, rng);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Random(3, 4);
  const SplitResult sat = split(full, v, rng);
  CHECK(sat.saturated);
  CHECK(sat.embedding.bin == full.bin);
  CHECK(sat.lifted == v);

  const Embedding e = new_embedding(4, 2, rng);
  const SplitResult empty = split(e, Eigen::MatrixXd(0, 2), rng);
  CHECK(empty.embedding.target_dim == 4);
  CHECK(empty.lifted.rows() == 0);
  CHECK(empty.lifted.cols() == 4);
}

TEST_CASE("split preserves ambient images exactly") {
  Rng rng(4);
  std::mt19937_64 gen(5);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + static_cast<int>(gen() % 40);
    const int m0 = 1 + static_cast<int>(gen() % d);
    Embedding e = new_embedding(d, m0, rng);
    const Eigen::VectorXd lo = to::uniform_vec(gen, d, -3, 0), hi = to::uniform_vec(gen, d, 1, 4);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(1 + t % 7, m0);
    const Eigen::MatrixXd before = images(e, v, lo, hi);
    for (int round = 0; round < 8; ++round) {
      const SplitResult s = split(e, v, rng);
      CHECK(images(s.embedding, s.lifted, lo, hi) == before);
      CHECK(column_sparse(s.embedding));
      CHECK_NOTHROW(s.embedding.validate());
      if (!s.saturated) {
        CHECK(s.embedding.target_dim > e.target_dim);
        CHECK(s.embedding.history.size() == e.history.size() + 1);
      }
      e = s.embedding;
      v = s.lifted;
    }
  }
}

TEST_CASE("expansion rule") {
  CHECK(should_expand(std::vector<double>(10, 1.0), 10));
  CHECK(should_expand(std::vector<double>(11, 1.0), 10));
  CHECK_FALSE(should_expand(std::vector<double>(5, 1.0), 10));
  std::vector<double> inc(11, 1.0);
  inc[7] = 0.5;
  for (std::size_t k = 8; k < inc.size(); ++k) inc[k] = 0.5;
  CHECK_FALSE(should_expand(inc, 10));
}
