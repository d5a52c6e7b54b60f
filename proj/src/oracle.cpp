#include "nestbo/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "nestbo/errors.hpp"

namespace nestbo {
namespace {

std::optional<Eigen::VectorXd> solve_nonsingular(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd lam = eig.eigenvalues();
  const double norm = lam.cwiseAbs().maxCoeff();
  if (lam.cwiseAbs().minCoeff() < 1e-10 * std::max(1.0, norm)) return std::nullopt;
  const Eigen::MatrixXd& q = eig.eigenvectors();
  return Eigen::VectorXd(q * (q.transpose() * g).cwiseQuotient(lam));
}

}  // namespace

Eigen::VectorXd fd_gradient(const ScalarFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += steps[i];
    xm[i] -= steps[i];
    g[i] = (f(xp) - f(xm)) / (2.0 * steps[i]);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const ScalarFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& steps) {
  const Eigen::Index d = x.size();
  Eigen::MatrixXd h(d, d);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += steps[i];
    xm[i] -= steps[i];
    h(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (steps[i] * steps[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += steps[i]; pp[j] += steps[j];
      pm[i] += steps[i]; pm[j] -= steps[j];
      mp[i] -= steps[i]; mp[j] += steps[j];
      mm[i] -= steps[i]; mm[j] -= steps[j];
      h(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * steps[i] * steps[j]);
      h(j, i) = h(i, j);
    }
  }
  return h;
}

Stencil make_stencil(const Eigen::VectorXd& center, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("make_stencil: h must be > 0");
  const Eigen::Index d = center.size();
  if (d < 1) throw std::invalid_argument("make_stencil: empty center");
  Stencil s;
  s.center = center;
  s.h = h;
  s.points.resize(d * d + d + 1, d);
  Eigen::Index r = 0;
  s.points.row(r++) = center.transpose();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (const double sgn : {1.0, -1.0}) {
      Eigen::VectorXd p = center;
      p[i] += sgn * h;
      s.points.row(r++) = p.transpose();
    }
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      for (const double sgn : {1.0, -1.0}) {
        Eigen::VectorXd p = center;
        p[i] += sgn * h;
        p[j] += sgn * h;
        s.points.row(r++) = p.transpose();
      }
    }
  }
  return s;
}

std::vector<VpcRow> vpc_check(const KernelParams& params, int d, const std::vector<double>& h_sweep,
                              const VpcOptions& opts) {
  if (params.dim() != d) throw std::invalid_argument("vpc_check: kernel dimension mismatch");
  if (opts.replicates < 1) throw std::invalid_argument("vpc_check: replicates must be >= 1");
  KernelParams p = params;
  p.noise_variance = opts.noise_variance;
  GpOptions go;
  go.jitter = opts.jitter;
  const GpState gp(Dataset(d), p, go);
  const Eigen::VectorXd center = Eigen::VectorXd::Zero(d);

  std::vector<VpcRow> rows;
  const PowerPair prior = fantasy_power(gp, center, Eigen::MatrixXd(0, d));
  rows.push_back({"prior", 0.0, prior.pi_g, prior.pi_h, "ok"});
  for (const double h : h_sweep) {
    VpcRow row;
    row.design = "stencil";
    row.h = h;
    try {
      const Stencil s = make_stencil(center, h);
      Eigen::MatrixXd z(s.points.rows() * opts.replicates, d);
      for (int c = 0; c < opts.replicates; ++c) z.middleRows(c * s.points.rows(), s.points.rows()) = s.points;
      const PowerPair pw = fantasy_power(gp, center, z);
      row.pi_g = pw.pi_g;
      row.pi_h = pw.pi_h;
    } catch (const std::exception& ex) {
      row.pi_g = row.pi_h = std::nan("");
      row.status = std::string("failed: ") + ex.what();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_vpc_csv(std::ostream& os, const std::vector<VpcRow>& rows) {
  os << "design,h,pi_g,pi_h,status\n";
  char buf[128];
  for (const VpcRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", r.h, r.pi_g, r.pi_h);
    std::string status = r.status;
    for (char& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << r.design << ',' << buf << ',' << status << '\n';
  }
}

std::optional<double> newton_error(const Eigen::VectorXd& true_grad, const Eigen::MatrixXd& true_hess,
                                   const GpState& gp, ConstVecRef x) {
  if (true_grad.size() != gp.dim() || true_hess.rows() != gp.dim()) {
    throw std::invalid_argument("newton_error: dimension mismatch");
  }
  const auto truth = solve_nonsingular(true_hess, true_grad);
  if (!truth) return std::nullopt;
  const DerivBelief b = grad_belief(gp, x);
  if ((b.mean_grad.array() == 0.0).all()) return truth->norm();
  const auto est = solve_nonsingular(b.mean_hess, b.mean_grad);
  if (!est) return std::nullopt;
  return (*truth - *est).norm();
}

std::optional<double> newton_error(const RffFunction& f, ConstVecRef x, const GpState& gp) {
  return newton_error(rff_grad(f, x), rff_hess(f, x), gp, x);
}

double brute_force_pi_h(const GpState& gp, ConstVecRef x) {
  const int d = gp.dim();
  if (d > 4) throw std::invalid_argument("brute_force_pi_h: refused for d > 4");
  if (x.size() != d) throw std::invalid_argument("brute_force_pi_h: dimension mismatch");
  const KernelParams& p = gp.params();
  const int n = gp.size();
  const int dd = d * d;
  Eigen::VectorXd prec(d);
  for (int i = 0; i < d; ++i) prec[i] = p.precision(i);

  // Prior 4th moments: sf2 (L_ij L_kl + L_ik L_jl + L_il L_jk), L diagonal.
  const auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  Eigen::MatrixXd prior(dd, dd);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
          prior(i * d + j, k * d + l) =
              p.signal_variance * (prec[i] * prec[k] * delta(i, j) * delta(k, l) +
                                   prec[i] * prec[j] * delta(i, k) * delta(j, l) +
                                   prec[i] * prec[j] * delta(i, l) * delta(j, k));
        }
      }
    }
  }
  if (n == 0) return prior.trace();

  Eigen::MatrixXd cross(dd, n);
  for (int a = 0; a < n; ++a) {
    const Eigen::VectorXd xa = gp.data().inputs.row(a).transpose();
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) cross(i * d + j, a) = kernel::d2k_dx_dx(x, xa, p, i, j);
    }
  }
  Eigen::MatrixXd kxx(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      kxx(a, b) = kernel::value(gp.data().inputs.row(a).transpose(), gp.data().inputs.row(b).transpose(), p);
    }
  }
  kxx.diagonal().array() += gp.diagonal_shift();
  const Eigen::MatrixXd post = prior - cross * Eigen::FullPivLU<Eigen::MatrixXd>(kxx).solve(cross.transpose());
  return clamp_variance(post.trace(), "brute_force_pi_h");
}

}  // namespace nestbo
