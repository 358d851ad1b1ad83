#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "coreset/error.hpp"
#include "coreset/gaussian.hpp"
#include "coreset/model.hpp"

namespace coreset {

// Inference for the mean of a Gaussian with known observation covariance:
//   theta ~ N(mu0, Sigma0),  x_n ~ N(theta, Sigma).
// Potentials are the per-datum log likelihoods up to constants,
//   f_n(theta) = -1/2 (x_n - theta)^T Sigma^{-1} (x_n - theta).
// The weighted posterior and all potential covariances are closed-form, so
// every estimator in the library can run without Monte Carlo on this model.
class GaussianMeanModel {
 public:
  static constexpr bool kHasConjugatePosterior = true;
  static constexpr bool kHasExactCovariance = true;

  GaussianMeanModel(Eigen::MatrixXd data, Eigen::VectorXd prior_mean,
                    Eigen::MatrixXd prior_cov, Eigen::MatrixXd like_cov)
      : data_(std::move(data)),
        prior_(std::move(prior_mean), std::move(prior_cov)) {
    const Eigen::Index d = prior_.dim();
    if (data_.cols() != d)
      throw InputError("GaussianMeanModel: data dimension mismatch");
    if (!data_.allFinite())
      throw InputError("GaussianMeanModel: non-finite data");
    if (like_cov.rows() != d || like_cov.cols() != d)
      throw InputError("GaussianMeanModel: likelihood covariance shape");
    Eigen::LLT<Eigen::MatrixXd> llt(like_cov);
    if (llt.info() != Eigen::Success)
      throw NumericalError(
          "GaussianMeanModel: likelihood covariance not positive definite");
    like_chol_ = llt.matrixL();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
    like_precision_ = llt.solve(eye);
    prior_precision_ =
        prior_.chol().triangularView<Eigen::Lower>().solve(eye).transpose() *
        prior_.chol().triangularView<Eigen::Lower>().solve(eye);
    prior_shift_ = prior_precision_ * prior_.mean();
    scaled_data_t_ = like_precision_ * data_.transpose();  // d x N
  }

  Eigen::Index size() const { return data_.rows(); }
  Eigen::Index dim() const { return prior_.dim(); }
  const GaussianDist& prior() const { return prior_; }
  const Eigen::MatrixXd& data() const { return data_; }

  Eigen::VectorXd potentials(const Eigen::VectorXd& theta) const {
    check_theta(theta);
    // -1/2 || Q^{-1}(x_n - theta) ||^2 rowwise.
    Eigen::MatrixXd resid = data_.transpose();  // d x N
    resid.colwise() -= theta;
    const Eigen::MatrixXd white =
        like_chol_.triangularView<Eigen::Lower>().solve(resid);
    return -0.5 * white.colwise().squaredNorm().transpose();
  }

  Eigen::VectorXd potentials(const Eigen::VectorXd& theta,
                             IndexSpan idx) const {
    check_theta(theta);
    Eigen::MatrixXd resid(dim(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j)
      resid.col(static_cast<Eigen::Index>(j)) =
          data_.row(idx[j]).transpose() - theta;
    const Eigen::MatrixXd white =
        like_chol_.triangularView<Eigen::Lower>().solve(resid);
    return -0.5 * white.colwise().squaredNorm().transpose();
  }

  // Closed-form weighted posterior. Zero weights recover the prior.
  GaussianDist weighted_posterior(const Eigen::VectorXd& w) const {
    check_weights(w);
    const double wsum = w.sum();
    const Eigen::MatrixXd prec = prior_precision_ + wsum * like_precision_;
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw NumericalError("weighted_posterior: precision factorization failed");
    const Eigen::VectorXd shift = prior_shift_ + scaled_data_t_ * w;
    const Eigen::VectorXd mean = llt.solve(shift);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim(), dim());
    Eigen::MatrixXd cov = llt.solve(eye);
    cov = ((cov + cov.transpose()) / 2.0).eval();
    return GaussianDist(mean, cov);
  }

  // --- closed-form potential covariances under a weighted posterior ---
  //
  // With Sigma = Q Q^T, nu_n = Q^{-1}(x_n - mu_w), Psi = Q^{-1} Sigma_w Q^{-T}:
  //   cov[f_n, f_m] = nu_m^T Psi nu_n + 1/2 tr(Psi^T Psi).

  Eigen::VectorXd potential_cov_with(const GaussianDist& post,
                                     const Eigen::VectorXd& a) const {
    const Stats st = stats(post);
    const Eigen::VectorXd pa = st.psi * (st.nu * a);
    return st.nu.transpose() * pa +
           Eigen::VectorXd::Constant(size(), st.c0 * a.sum());
  }

  Eigen::VectorXd potential_variances(const GaussianDist& post) const {
    const Stats st = stats(post);
    const Eigen::MatrixXd pn = st.psi * st.nu;
    return ((st.nu.array() * pn.array()).colwise().sum().transpose() + st.c0)
        .matrix();
  }

  double quadratic_form(const GaussianDist& post,
                        const Eigen::VectorXd& a) const {
    const Stats st = stats(post);
    const Eigen::VectorXd r = st.nu * a;
    const double s = a.sum();
    return r.dot(st.psi * r) + st.c0 * s * s;
  }

  Eigen::MatrixXd potential_cov_matrix(const GaussianDist& post,
                                       IndexSpan idx) const {
    const Stats st = stats(post);
    const Eigen::Index p = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd nu_sub(dim(), p);
    for (Eigen::Index j = 0; j < p; ++j)
      nu_sub.col(j) = st.nu.col(idx[static_cast<std::size_t>(j)]);
    Eigen::MatrixXd c = nu_sub.transpose() * (st.psi * nu_sub);
    c.array() += st.c0;
    return ((c + c.transpose()) / 2.0).eval();
  }

  double potential_covariance(const GaussianDist& post, Eigen::Index n,
                              Eigen::Index m) const {
    const Stats st = stats(post);
    return st.nu.col(m).dot(st.psi * st.nu.col(n)) + st.c0;
  }

  // --- weighted log joint and derivatives (quadratic in theta) ---

  double log_joint(const Eigen::VectorXd& theta, const Eigen::VectorXd& w) const {
    const Eigen::VectorXd d0 = theta - prior_.mean();
    return -0.5 * d0.dot(prior_precision_ * d0) + w.dot(potentials(theta));
  }

  Eigen::VectorXd log_joint_gradient(const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& w) const {
    return -prior_precision_ * (theta - prior_.mean()) + scaled_data_t_ * w -
           w.sum() * (like_precision_ * theta);
  }

  Eigen::MatrixXd log_joint_hessian(const Eigen::VectorXd& /*theta*/,
                                    const Eigen::VectorXd& w) const {
    return -prior_precision_ - w.sum() * like_precision_;
  }

 private:
  struct Stats {
    Eigen::MatrixXd nu;   // d x N, column n = Q^{-1}(x_n - mu_w)
    Eigen::MatrixXd psi;  // Q^{-1} Sigma_w Q^{-T}
    double c0;            // 1/2 tr(Psi^T Psi)
  };

  Stats stats(const GaussianDist& post) const {
    Stats st;
    Eigen::MatrixXd resid = data_.transpose();
    resid.colwise() -= post.mean();
    st.nu = like_chol_.triangularView<Eigen::Lower>().solve(resid);
    const Eigen::MatrixXd half =
        like_chol_.triangularView<Eigen::Lower>().solve(post.cov());
    st.psi = like_chol_.triangularView<Eigen::Lower>()
                 .solve(half.transpose())
                 .transpose();
    st.psi = ((st.psi + st.psi.transpose()) / 2.0).eval();
    st.c0 = 0.5 * st.psi.squaredNorm();
    return st;
  }

  void check_theta(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim() || !theta.allFinite())
      throw InputError("GaussianMeanModel: bad theta");
  }

  void check_weights(const Eigen::VectorXd& w) const {
    if (w.size() != size()) throw InputError("weights: length mismatch");
    if (!w.allFinite()) throw InputError("weights: non-finite entries");
    if ((w.array() < 0.0).any()) throw InputError("weights: negative entry");
  }

  Eigen::MatrixXd data_;  // N x d
  GaussianDist prior_;
  Eigen::MatrixXd like_chol_;       // Q, Sigma = Q Q^T
  Eigen::MatrixXd like_precision_;  // Sigma^{-1}
  Eigen::MatrixXd prior_precision_;
  Eigen::VectorXd prior_shift_;     // Sigma0^{-1} mu0
  Eigen::MatrixXd scaled_data_t_;   // Sigma^{-1} X^T
};

}  // namespace coreset
