// Nested sparse sign embeddings: each ambient coordinate copies one signed
// subspace coordinate, x_i = sign_i * v_bin(i), and bins split over time
// without moving any previously evaluated point.
#pragma once

#include <deque>
#include <vector>

#include <Eigen/Core>

#include "nestbo/random.hpp"

namespace nestbo {

struct SplitEvent {
  int old_dim = 0;
  int new_dim = 0;
  /// parent[k] is the old bin that new bin k descends from.
  std::vector<int> parent;
};

struct Embedding {
  int ambient_dim = 0;
  int target_dim = 0;
  std::vector<int> bin;   // per ambient dimension, in [0, target_dim)
  std::vector<int> sign;  // per ambient dimension, +1 or -1
  std::vector<SplitEvent> history;

  /// Ambient dimensions assigned to bin k, ascending.
  std::vector<int> members(int k) const;
  /// The m x d matrix S with one +-1 per column.
  Eigen::MatrixXd matrix() const;
  void validate() const;
};

/// Balanced assignment: dimensions dealt round-robin over a random
/// permutation, then random signs. Throws when m0 is outside [1, d].
Embedding new_embedding(int d, int m0, Rng& rng);

/// x_i = sign_i v_bin(i) in [-1, 1]^d, rescaled onto [lower, upper] and clamped.
Eigen::VectorXd project_up(const Embedding& e, const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper);

struct SplitResult {
  Embedding embedding;
  Eigen::MatrixXd lifted;  // n x m'
  bool saturated = false;
};

/// Splits every bin with at least two dimensions into two halves (order
/// randomized by `rng`); the second half receives a new bin index appended
/// after the existing ones. Historical subspace points are lifted by copying
/// each parent coordinate into its children, which leaves every ambient image
/// unchanged.
SplitResult split(const Embedding& e, const Eigen::MatrixXd& data_v, Rng& rng);

/// True when the last `window` incumbents show no strict improvement
/// (relative tolerance 1e-12) over the incumbent just before the window.
bool should_expand(const std::vector<double>& incumbents, int window = 10);

}  // namespace nestbo
