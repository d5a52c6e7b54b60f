#include "nestbo/deriv_gp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "nestbo/errors.hpp"

namespace nestbo {

void Dataset::append(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw std::invalid_argument("Dataset::append: row/target mismatch");
  if (x.rows() == 0) return;
  if (inputs.cols() != 0 && x.cols() != inputs.cols()) {
    throw std::invalid_argument("Dataset::append: dimension mismatch");
  }
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd nx(n + x.rows(), x.cols());
  if (n > 0) nx.topRows(n) = inputs;
  nx.bottomRows(x.rows()) = x;
  Eigen::VectorXd ny(n + y.size());
  ny.head(n) = targets;
  ny.tail(y.size()) = y;
  inputs = std::move(nx);
  targets = std::move(ny);
}

void Dataset::validate() const {
  if (inputs.rows() != targets.size()) {
    throw std::invalid_argument("Dataset: " + std::to_string(inputs.rows()) + " inputs but " +
                                std::to_string(targets.size()) + " targets");
  }
  if (!targets.allFinite()) throw std::invalid_argument("Dataset: non-finite target");
  if (!inputs.allFinite()) throw std::invalid_argument("Dataset: non-finite input");
}

GpState::GpState(Dataset data, KernelParams params, GpOptions opts)
    : data_(std::move(data)), params_(std::move(params)) {
  params_.validate();
  data_.validate();
  if (!(opts.jitter > 0.0)) throw std::invalid_argument("GpState: jitter must be > 0");
  const int n = data_.size();
  if (n > 0 && data_.dim() != params_.dim()) {
    throw std::invalid_argument("GpState: data dimension " + std::to_string(data_.dim()) +
                                " does not match kernel dimension " +
                                std::to_string(params_.dim()));
  }
  shift_ = params_.noise_variance + opts.jitter * params_.signal_variance;

  Eigen::MatrixXd k(n, n);
  for (int a = 0; a < n; ++a) {
    k(a, a) = params_.signal_variance + shift_;
    for (int b = 0; b < a; ++b) {
      k(a, b) = kernel::value(data_.inputs.row(a).transpose(), data_.inputs.row(b).transpose(),
                              params_);
      k(b, a) = k(a, b);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "GpState: Cholesky failed for n=" << n << " (diag shift " << shift_
        << ", signal variance " << params_.signal_variance << ", min lengthscale "
        << params_.lengthscales.minCoeff() << ")";
    throw NumericalError(msg.str());
  }
  factor_ = llt.matrixL();
  whitened_targets_ = whiten(data_.targets);
  weights_ = factor_.transpose().triangularView<Eigen::Upper>().solve(whitened_targets_);
}

Eigen::VectorXd GpState::cross_covariance(ConstVecRef x) const {
  if (x.size() != params_.dim()) throw std::invalid_argument("cross_covariance: dimension mismatch");
  Eigen::VectorXd out(size());
  for (int a = 0; a < size(); ++a) out[a] = kernel::value(x, data_.inputs.row(a).transpose(), params_);
  return out;
}

Eigen::VectorXd GpState::whiten(const Eigen::VectorXd& b) const {
  return factor_.triangularView<Eigen::Lower>().solve(b);
}

double clamp_variance(double v, const char* what) {
  if (v >= 0.0) return v;
  if (v >= -1e-10) return 0.0;
  throw NumericalError(std::string(what) + ": negative variance " + std::to_string(v));
}

double posterior_mean(const GpState& gp, ConstVecRef x) {
  if (gp.size() == 0) {
    if (x.size() != gp.dim()) throw std::invalid_argument("posterior_mean: dimension mismatch");
    return 0.0;
  }
  return gp.cross_covariance(x).dot(gp.weights());
}

double posterior_var(const GpState& gp, ConstVecRef x) {
  if (x.size() != gp.dim()) throw std::invalid_argument("posterior_var: dimension mismatch");
  const double prior = gp.params().signal_variance;
  if (gp.size() == 0) return prior;
  const Eigen::VectorXd w = gp.whiten(gp.cross_covariance(x));
  return clamp_variance(prior - w.squaredNorm(), "posterior_var");
}

Eigen::VectorXd posterior_mean_grad(const GpState& gp, ConstVecRef x) {
  const int d = gp.dim();
  if (x.size() != d) throw std::invalid_argument("posterior_mean_grad: dimension mismatch");
  const KernelParams& p = gp.params();
  Eigen::VectorXd prec(d);
  for (int i = 0; i < d; ++i) prec[i] = p.precision(i);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  for (int a = 0; a < gp.size(); ++a) {
    const Eigen::VectorXd r = x - gp.data().inputs.row(a).transpose();
    const double kw = kernel::value(x, gp.data().inputs.row(a).transpose(), p) * gp.weights()[a];
    g.array() -= prec.array() * r.array() * kw;
  }
  return g;
}

DerivBelief grad_belief(const GpState& gp, ConstVecRef x) {
  const int d = gp.dim();
  if (x.size() != d) throw std::invalid_argument("grad_belief: dimension mismatch");
  const KernelParams& p = gp.params();
  Eigen::VectorXd prec(d);
  for (int i = 0; i < d; ++i) prec[i] = p.precision(i);

  DerivBelief b;
  b.mean_grad = Eigen::VectorXd::Zero(d);
  b.mean_hess = Eigen::MatrixXd::Zero(d, d);
  for (int a = 0; a < gp.size(); ++a) {
    const Eigen::VectorXd r = x - gp.data().inputs.row(a).transpose();
    const double kw = kernel::value(x, gp.data().inputs.row(a).transpose(), p) * gp.weights()[a];
    const Eigen::VectorXd lr = prec.cwiseProduct(r);
    b.mean_grad -= lr * kw;
    b.mean_hess.noalias() += (lr * lr.transpose()) * kw;
    b.mean_hess.diagonal() -= prec * kw;
  }
  b.mean_hess = 0.5 * (b.mean_hess + b.mean_hess.transpose()).eval();

  const PowerPair pw = FantasyConditioner(gp, x).power();
  b.pi_g = pw.pi_g;
  b.pi_h = pw.pi_h;
  return b;
}

PowerPair fantasy_power(const GpState& gp, ConstVecRef x, const Eigen::MatrixXd& pending) {
  FantasyConditioner cond(gp, x);
  if (pending.rows() > 0 && pending.cols() != gp.dim()) {
    throw std::invalid_argument("fantasy_power: pending inputs have wrong dimension");
  }
  for (Eigen::Index r = 0; r < pending.rows(); ++r) cond.append(pending.row(r).transpose());
  return cond.power();
}

double scale_factor(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess) {
  if (hess.rows() != grad.size() || hess.cols() != grad.size()) {
    throw std::invalid_argument("scale_factor: shape mismatch");
  }
  const double g2 = grad.squaredNorm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (hess + hess.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const Eigen::VectorXd abs_eig = eig.eigenvalues().cwiseAbs();
  const double sigma_min = abs_eig.minCoeff();
  const double norm = abs_eig.maxCoeff();
  if (sigma_min < 1e-10 * std::max(1.0, norm)) {
    throw SingularHessianError("scale_factor: sigma_min(H) = " + std::to_string(sigma_min));
  }
  if (g2 == 0.0) return 0.0;
  return g2 / (sigma_min * sigma_min);
}

double scale_factor(const DerivBelief& belief) {
  return scale_factor(belief.mean_grad, belief.mean_hess);
}

// ---------------------------------------------------------------------------

FantasyConditioner::FantasyConditioner(const GpState& gp, ConstVecRef x)
    : params_(gp.params()), shift_(gp.diagonal_shift()), dim_(gp.dim()), x_(x) {
  if (x.size() != dim_) throw std::invalid_argument("FantasyConditioner: dimension mismatch");
  const int d = dim_;
  const int nh = d * (d + 1) / 2;
  weight_.resize(d + nh);
  Eigen::VectorXd prior(d + nh);
  for (int i = 0; i < d; ++i) {
    weight_[i] = 1.0;
    prior[i] = kernel::coincident_d2k_dx_dxp(params_, i, i);
  }
  int o = d;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j, ++o) {
      hess_index_.emplace_back(i, j);
      weight_[o] = i == j ? 1.0 : 2.0;
      prior[o] = kernel::coincident_d4k(params_, i, j);
    }
  }

  const int n = gp.size();
  rows_ = n;
  points_ = gp.data().inputs;
  scaled_ = points_ * params_.lengthscales.cwiseInverse().asDiagonal();
  factor_ = gp.factor();
  whitened_.resize(n, num_ops());
  Eigen::VectorXd q(num_ops());
  for (int a = 0; a < n; ++a) {
    cross_ops(points_.row(a).transpose(), q);
    whitened_.row(a) = q.transpose();
  }
  if (n > 0) factor_.triangularView<Eigen::Lower>().solveInPlace(whitened_);
  residual_ = prior;
  if (n > 0) residual_ -= whitened_.colwise().squaredNorm().transpose();
}

void FantasyConditioner::cross_ops(ConstVecRef z, Eigen::VectorXd& q) const {
  const int d = dim_;
  q.resize(num_ops());
  const double k = kernel::value(x_, z, params_);
  Eigen::VectorXd lr(d);
  for (int i = 0; i < d; ++i) lr[i] = params_.precision(i) * (x_[i] - z[i]);
  for (int i = 0; i < d; ++i) q[i] = -lr[i] * k;
  int o = d;
  for (const auto& [i, j] : hess_index_) {
    const double diag = i == j ? params_.precision(i) : 0.0;
    q[o++] = (lr[i] * lr[j] - diag) * k;
  }
}

Eigen::VectorXd FantasyConditioner::kernel_column(ConstVecRef z) const {
  const Eigen::RowVectorXd zs = z.cwiseQuotient(params_.lengthscales).transpose();
  const Eigen::ArrayXd sq = (scaled_.topRows(rows_).rowwise() - zs).rowwise().squaredNorm().array();
  return (params_.signal_variance * (-0.5 * sq).exp()).matrix();
}

PowerPair FantasyConditioner::power_from(const Eigen::VectorXd& residual) const {
  double pg = 0.0, ph = 0.0;
  for (int i = 0; i < dim_; ++i) pg += residual[i];
  for (int o = dim_; o < num_ops(); ++o) ph += weight_[o] * residual[o];
  return {clamp_variance(pg, "pi_g"), clamp_variance(ph, "pi_h")};
}

FantasyConditioner::Trial FantasyConditioner::trial(ConstVecRef z) const {
  if (z.size() != dim_) throw std::invalid_argument("FantasyConditioner::trial: dimension mismatch");
  Trial t;
  Eigen::VectorXd w = kernel_column(z);
  double s = params_.signal_variance + shift_;
  if (rows_ > 0) {
    factor_.topLeftCorner(rows_, rows_).triangularView<Eigen::Lower>().solveInPlace(w);
    s -= w.squaredNorm();
  }
  // In exact arithmetic s >= shift; anything far below is a duplicated input.
  if (!(s > 0.5 * shift_)) {
    t.informative = false;
    t.whitened = Eigen::VectorXd::Zero(num_ops());
    t.power = power();
    return t;
  }
  cross_ops(z, t.whitened);
  if (rows_ > 0) t.whitened.noalias() -= whitened_.topRows(rows_).transpose() * w;
  t.whitened /= std::sqrt(s);
  t.power = power_from(residual_ - t.whitened.cwiseAbs2());
  return t;
}

void FantasyConditioner::append(ConstVecRef z) {
  if (z.size() != dim_) throw std::invalid_argument("FantasyConditioner::append: dimension mismatch");
  Eigen::VectorXd w = kernel_column(z);
  double s = params_.signal_variance + shift_;
  if (rows_ > 0) {
    factor_.topLeftCorner(rows_, rows_).triangularView<Eigen::Lower>().solveInPlace(w);
    s -= w.squaredNorm();
  }
  if (!(s > 0.5 * shift_)) {
    // Numerically a repeat of an existing input: no further information.
    pending_rows_.push_back(Eigen::VectorXd::Zero(num_ops()));
    return;
  }
  const double root = std::sqrt(s);
  Eigen::VectorXd u(num_ops());
  cross_ops(z, u);
  if (rows_ > 0) u.noalias() -= whitened_.topRows(rows_).transpose() * w;
  u /= root;

  const int m = rows_ + 1;
  factor_.conservativeResize(m, m);
  factor_.col(m - 1).setZero();
  factor_.row(m - 1).head(rows_) = w.transpose();
  factor_(m - 1, m - 1) = root;
  whitened_.conservativeResize(m, Eigen::NoChange);
  whitened_.row(m - 1) = u.transpose();
  points_.conservativeResize(m, dim_);
  points_.row(m - 1) = z.transpose();
  scaled_.conservativeResize(m, dim_);
  scaled_.row(m - 1) = z.cwiseQuotient(params_.lengthscales).transpose();
  residual_ -= u.cwiseAbs2();
  pending_rows_.push_back(std::move(u));
  rows_ = m;
}

void FantasyConditioner::apply_update(const Eigen::VectorXd& delta_ops, Eigen::VectorXd& grad,
                                      Eigen::MatrixXd& hess) const {
  grad += delta_ops.head(dim_);
  int o = dim_;
  for (const auto& [i, j] : hess_index_) {
    hess(i, j) += delta_ops[o];
    if (i != j) hess(j, i) += delta_ops[o];
    ++o;
  }
}

OutputScaling standardization(const Eigen::VectorXd& y) {
  OutputScaling s;
  if (y.size() == 0) return s;
  s.offset = y.mean();
  if (y.size() > 1) {
    const double var = (y.array() - s.offset).square().sum() / static_cast<double>(y.size() - 1);
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * std::max(1.0, std::abs(s.offset))) s.scale = sd;
  }
  return s;
}

}  // namespace nestbo
