#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "coreset/error.hpp"
#include "coreset/rng.hpp"

namespace coreset {

// Multivariate Gaussian carrying its covariance and the lower Cholesky
// factor (cov = chol * chol^T). Immutable after construction.
class GaussianDist {
 public:
  GaussianDist(Eigen::VectorXd mean, Eigen::MatrixXd cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
      throw InputError("GaussianDist: dimension mismatch");
    if (!mean_.allFinite() || !cov_.allFinite())
      throw InputError("GaussianDist: non-finite parameters");
    const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
      throw InputError("GaussianDist: covariance asymmetry " +
                       std::to_string(asym));
    cov_ = ((cov_ + cov_.transpose()) / 2.0).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success)
      throw NumericalError("GaussianDist: covariance not positive definite");
    chol_ = llt.matrixL();
  }

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::MatrixXd& chol() const { return chol_; }

  double log_det_cov() const {
    return 2.0 * chol_.diagonal().array().log().sum();
  }

  Eigen::VectorXd sample(Rng& rng) const {
    return mean_ + chol_ * rng.normal_vector(dim());
  }

  // S iid draws, one per row.
  Eigen::MatrixXd sample(Eigen::Index s, Rng& rng) const {
    Eigen::MatrixXd draws(s, dim());
    for (Eigen::Index i = 0; i < s; ++i)
      draws.row(i) = (mean_ + chol_ * rng.normal_vector(dim())).transpose();
    return draws;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
};

// KL(from || to) between Gaussians of equal dimension.
inline double gaussian_kl(const GaussianDist& from, const GaussianDist& to) {
  if (from.dim() != to.dim()) throw InputError("gaussian_kl: dimension mismatch");
  const Eigen::Index d = from.dim();
  // Solve against to's Cholesky factor once.
  const auto& lt = to.chol();
  const Eigen::MatrixXd a =
      lt.triangularView<Eigen::Lower>().solve(from.chol());
  const Eigen::VectorXd b =
      lt.triangularView<Eigen::Lower>().solve(from.mean() - to.mean());
  const double trace_term = a.squaredNorm();
  const double quad_term = b.squaredNorm();
  const double logdet_term = to.log_det_cov() - from.log_det_cov();
  return 0.5 * (trace_term + quad_term - static_cast<double>(d) + logdet_term);
}

inline double gaussian_kl_symmetrized(const GaussianDist& a,
                                      const GaussianDist& b) {
  return gaussian_kl(a, b) + gaussian_kl(b, a);
}

}  // namespace coreset
