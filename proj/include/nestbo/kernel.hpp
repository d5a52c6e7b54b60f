// Squared-exponential ARD kernel and its closed-form derivatives.
//
//   k(x, x') = sf2 * exp(-0.5 * sum_i (x_i - x'_i)^2 / l_i^2)
//
// With r = x - x' and L_ii = 1 / l_i^2, every derivative is a polynomial in
// r times k itself, so each function below evaluates k once and scales it.
// Derivatives "in x" act on the first argument, "in xp" on the second.
#pragma once

#include <utility>

#include <Eigen/Core>

namespace nestbo {

struct KernelParams {
  double signal_variance = 1.0;
  Eigen::VectorXd lengthscales;
  double noise_variance = 0.0;

  KernelParams() = default;
  KernelParams(double sf2, Eigen::VectorXd ell, double noise)
      : signal_variance(sf2), lengthscales(std::move(ell)), noise_variance(noise) {}

  /// Isotropic parameters in `dim` dimensions.
  static KernelParams isotropic(int dim, double sf2, double ell, double noise);

  int dim() const { return static_cast<int>(lengthscales.size()); }

  /// L_ii = 1 / l_i^2, computed on demand.
  double precision(int i) const { return 1.0 / (lengthscales[i] * lengthscales[i]); }

  /// Throws std::invalid_argument when a positivity invariant is broken.
  void validate() const;
};

using ConstVecRef = const Eigen::Ref<const Eigen::VectorXd>&;

namespace kernel {

double value(ConstVecRef x, ConstVecRef xp, const KernelParams& p);

/// dk/dx_i = -L_ii r_i k
double dk_dx(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i);

/// d2k/dx_i dxp_j = (L_ii d_ij - L_ii L_jj r_i r_j) k
double d2k_dx_dxp(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i, int j);

/// d2k/dx_i dx_j = (-L_ii d_ij + L_ii L_jj r_i r_j) k  (same for two xp derivatives)
double d2k_dx_dx(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i, int j);

/// d4k/dx_i dx_j dxp_i dxp_j, the diagonal entries of the vec(H) covariance.
double d4k(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i, int j);

// Values at x == xp. These are exact and need no point arguments.
double coincident_d2k_dx_dxp(const KernelParams& p, int i, int j);
double coincident_d2k_dx_dx(const KernelParams& p, int i, int j);
double coincident_d4k(const KernelParams& p, int i, int j);

/// Polynomial factor of d4k given r_i, r_j and the precisions (k excluded).
inline double d4k_factor(double li, double lj, double ri, double rj, bool same) {
  if (same) {
    const double a = li * ri * ri;
    return li * li * (a * a - 6.0 * a + 3.0);
  }
  const double a = li * ri * ri;
  const double b = lj * rj * rj;
  return li * lj * (a * b - a - b + 1.0);
}

}  // namespace kernel
}  // namespace nestbo
