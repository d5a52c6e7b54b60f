#include "nestbo/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nestbo {

std::vector<int> Embedding::members(int k) const {
  std::vector<int> out;
  for (int i = 0; i < ambient_dim; ++i) {
    if (bin[i] == k) out.push_back(i);
  }
  return out;
}

Eigen::MatrixXd Embedding::matrix() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(target_dim, ambient_dim);
  for (int i = 0; i < ambient_dim; ++i) s(bin[i], i) = sign[i];
  return s;
}

void Embedding::validate() const {
  if (ambient_dim < 1 || target_dim < 1 || target_dim > ambient_dim) {
    throw std::invalid_argument("Embedding: need 1 <= target_dim <= ambient_dim");
  }
  if (static_cast<int>(bin.size()) != ambient_dim || static_cast<int>(sign.size()) != ambient_dim) {
    throw std::invalid_argument("Embedding: assignment has wrong length");
  }
  std::vector<int> count(target_dim, 0);
  for (int i = 0; i < ambient_dim; ++i) {
    if (bin[i] < 0 || bin[i] >= target_dim) throw std::invalid_argument("Embedding: bin out of range");
    if (sign[i] != 1 && sign[i] != -1) throw std::invalid_argument("Embedding: sign must be +-1");
    ++count[bin[i]];
  }
  for (int c : count) {
    if (c == 0) throw std::invalid_argument("Embedding: empty bin");
  }
}

Embedding new_embedding(int d, int m0, Rng& rng) {
  if (m0 < 1 || m0 > d) {
    throw std::invalid_argument("new_embedding: need 1 <= m0 <= d (got m0=" + std::to_string(m0) +
                                ", d=" + std::to_string(d) + ")");
  }
  Embedding e;
  e.ambient_dim = d;
  e.target_dim = m0;
  e.bin.assign(d, 0);
  e.sign.assign(d, 1);
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int k = 0; k < d; ++k) e.bin[perm[k]] = k % m0;
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < d; ++i) e.sign[i] = coin(rng) ? 1 : -1;
  return e;
}

Eigen::VectorXd project_up(const Embedding& e, const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper) {
  if (v.size() != e.target_dim) throw std::invalid_argument("project_up: subspace dimension mismatch");
  if (lower.size() != e.ambient_dim || upper.size() != e.ambient_dim) {
    throw std::invalid_argument("project_up: bounds have wrong dimension");
  }
  Eigen::VectorXd x(e.ambient_dim);
  for (int i = 0; i < e.ambient_dim; ++i) {
    const double c = e.sign[i] * v[e.bin[i]];
    const double mid = 0.5 * (lower[i] + upper[i]);
    const double half = 0.5 * (upper[i] - lower[i]);
    x[i] = std::clamp(mid + half * c, lower[i], upper[i]);
  }
  return x;
}

SplitResult split(const Embedding& e, const Eigen::MatrixXd& data_v, Rng& rng) {
  e.validate();
  if (data_v.rows() > 0 && data_v.cols() != e.target_dim) {
    throw std::invalid_argument("split: data has wrong subspace dimension");
  }
  SplitResult out;
  out.embedding = e;
  out.lifted = data_v;
  if (e.target_dim == e.ambient_dim) {
    out.saturated = true;
    return out;
  }

  SplitEvent ev;
  ev.old_dim = e.target_dim;
  ev.parent.resize(e.target_dim);
  std::iota(ev.parent.begin(), ev.parent.end(), 0);
  Embedding& ne = out.embedding;
  for (int k = 0; k < e.target_dim; ++k) {
    std::vector<int> dims = e.members(k);
    if (dims.size() < 2) continue;
    std::shuffle(dims.begin(), dims.end(), rng);
    const int child = ne.target_dim++;
    ev.parent.push_back(k);
    for (std::size_t j = dims.size() / 2; j < dims.size(); ++j) ne.bin[dims[j]] = child;
  }
  ev.new_dim = ne.target_dim;
  ne.history.push_back(ev);

  out.lifted.resize(data_v.rows(), ne.target_dim);
  for (int k = 0; k < ne.target_dim; ++k) out.lifted.col(k) = data_v.col(ev.parent[k]);
  return out;
}

bool should_expand(const std::vector<double>& incumbents, int window) {
  if (window < 1) throw std::invalid_argument("should_expand: window must be >= 1");
  const int n = static_cast<int>(incumbents.size());
  if (n < window) return false;
  for (int k = n - window; k < n; ++k) {
    if (k == 0) continue;
    const double prev = incumbents[k - 1];
    if (incumbents[k] < prev - 1e-12 * std::abs(prev)) return false;
  }
  return true;
}

}  // namespace nestbo
