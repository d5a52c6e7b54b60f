#include "nestbo/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nestbo {

KernelParams KernelParams::isotropic(int dim, double sf2, double ell, double noise) {
  return KernelParams(sf2, Eigen::VectorXd::Constant(dim, ell), noise);
}

void KernelParams::validate() const {
  if (!(signal_variance > 0.0)) throw std::invalid_argument("signal_variance must be > 0");
  if (lengthscales.size() == 0) throw std::invalid_argument("lengthscales must be non-empty");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0)) {
      throw std::invalid_argument("lengthscale " + std::to_string(i) + " must be > 0");
    }
  }
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise_variance must be >= 0");
}

namespace kernel {
namespace {

void check_dims(ConstVecRef x, ConstVecRef xp, const KernelParams& p) {
  if (x.size() != p.lengthscales.size() || xp.size() != p.lengthscales.size()) {
    throw std::invalid_argument("kernel: point dimension " + std::to_string(x.size()) + "/" +
                                std::to_string(xp.size()) + " does not match " +
                                std::to_string(p.lengthscales.size()) + " lengthscales");
  }
}

void check_index(const KernelParams& p, int i) {
  if (i < 0 || i >= p.dim()) {
    throw std::invalid_argument("kernel: index " + std::to_string(i) + " out of range");
  }
}

double unchecked_value(ConstVecRef x, ConstVecRef xp, const KernelParams& p) {
  double q = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double r = (x[i] - xp[i]) / p.lengthscales[i];
    q += r * r;
  }
  return p.signal_variance * std::exp(-0.5 * q);
}

}  // namespace

double value(ConstVecRef x, ConstVecRef xp, const KernelParams& p) {
  check_dims(x, xp, p);
  return unchecked_value(x, xp, p);
}

double dk_dx(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i) {
  check_dims(x, xp, p);
  check_index(p, i);
  return -p.precision(i) * (x[i] - xp[i]) * unchecked_value(x, xp, p);
}

double d2k_dx_dxp(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i, int j) {
  check_dims(x, xp, p);
  check_index(p, i);
  check_index(p, j);
  const double li = p.precision(i);
  const double lj = p.precision(j);
  const double delta = i == j ? li : 0.0;
  return (delta - li * lj * (x[i] - xp[i]) * (x[j] - xp[j])) * unchecked_value(x, xp, p);
}

double d2k_dx_dx(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i, int j) {
  check_dims(x, xp, p);
  check_index(p, i);
  check_index(p, j);
  const double li = p.precision(i);
  const double lj = p.precision(j);
  const double delta = i == j ? li : 0.0;
  return (-delta + li * lj * (x[i] - xp[i]) * (x[j] - xp[j])) * unchecked_value(x, xp, p);
}

double d4k(ConstVecRef x, ConstVecRef xp, const KernelParams& p, int i, int j) {
  check_dims(x, xp, p);
  check_index(p, i);
  check_index(p, j);
  const double f = d4k_factor(p.precision(i), p.precision(j), x[i] - xp[i], x[j] - xp[j], i == j);
  return f * unchecked_value(x, xp, p);
}

double coincident_d2k_dx_dxp(const KernelParams& p, int i, int j) {
  check_index(p, i);
  check_index(p, j);
  return i == j ? p.precision(i) * p.signal_variance : 0.0;
}

double coincident_d2k_dx_dx(const KernelParams& p, int i, int j) {
  check_index(p, i);
  check_index(p, j);
  return i == j ? -p.precision(i) * p.signal_variance : 0.0;
}

double coincident_d4k(const KernelParams& p, int i, int j) {
  check_index(p, i);
  check_index(p, j);
  const double li = p.precision(i);
  if (i == j) return 3.0 * li * li * p.signal_variance;
  return li * p.precision(j) * p.signal_variance;
}

}  // namespace kernel
}  // namespace nestbo
