// Scrambled Sobol points with deterministic seeding.
#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Core>

namespace nestbo {

/// Sobol sequence randomized by a per-coordinate digital shift. The shift is
/// drawn from `seed`, so equal seeds give equal point sets.
class ScrambledSobol {
 public:
  ScrambledSobol(int dim, std::uint64_t seed);
  ~ScrambledSobol();
  ScrambledSobol(ScrambledSobol&&) noexcept;
  ScrambledSobol& operator=(ScrambledSobol&&) noexcept;

  int dim() const { return dim_; }
  /// Next point in (0, 1)^dim.
  Eigen::VectorXd next();
  /// `n` consecutive points as rows.
  Eigen::MatrixXd draw(int n);

 private:
  struct Engine;
  int dim_;
  std::unique_ptr<Engine> engine_;
  Eigen::Matrix<std::uint32_t, Eigen::Dynamic, 1> shift_;
};

/// Maps rows of a unit-cube matrix affinely onto [lower, upper].
Eigen::MatrixXd scale_to_box(const Eigen::MatrixXd& unit, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper);

}  // namespace nestbo
