#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "coreset/error.hpp"
#include "coreset/gaussian.hpp"
#include "coreset/model.hpp"
#include "coreset/rng.hpp"

namespace coreset {

// Radial basis function dictionary over low-dimensional positions. Centers
// are drawn uniformly from the data positions, a fixed number per scale,
// plus one near-constant basis (large scale, centered at the data mean).
struct RbfBasis {
  Eigen::MatrixXd centers;  // K x P
  Eigen::VectorXd scales;   // K

  Eigen::Index size() const { return scales.size(); }

  static RbfBasis generate(const Eigen::MatrixXd& positions,
                           Eigen::Index centers_per_scale,
                           const std::vector<double>& scales,
                           std::uint64_t seed,
                           double constant_scale = 100.0) {
    if (positions.rows() == 0) throw InputError("RbfBasis: empty positions");
    Rng rng(seed);
    const Eigen::Index k_total =
        centers_per_scale * static_cast<Eigen::Index>(scales.size()) + 1;
    RbfBasis basis;
    basis.centers.resize(k_total, positions.cols());
    basis.scales.resize(k_total);
    Eigen::Index k = 0;
    for (double s : scales) {
      for (Eigen::Index i = 0; i < centers_per_scale; ++i, ++k) {
        const auto row = static_cast<Eigen::Index>(
            rng.uniform_below(static_cast<std::uint64_t>(positions.rows())));
        basis.centers.row(k) = positions.row(row);
        basis.scales[k] = s;
      }
    }
    basis.centers.row(k) = positions.colwise().mean();
    basis.scales[k] = constant_scale;
    return basis;
  }

  // Feature matrix: B(n, k) = exp(-||x_n - mu_k||^2 / (2 sigma_k^2)).
  Eigen::MatrixXd features(const Eigen::MatrixXd& positions) const {
    Eigen::MatrixXd b(positions.rows(), size());
    for (Eigen::Index k = 0; k < size(); ++k) {
      const double inv2s2 = 1.0 / (2.0 * scales[k] * scales[k]);
      b.col(k) = (-(positions.rowwise() - centers.row(k))
                       .rowwise()
                       .squaredNorm()
                       .array() *
                  inv2s2)
                     .exp();
    }
    return b;
  }
};

// Bayesian linear regression on basis features with isotropic Gaussian prior:
//   alpha ~ N(mu0, sigma0^2 I),  y_n = b_n^T alpha + eps_n,  eps ~ N(0, sigma^2).
// Potentials: f_n(alpha) = -(y_n - alpha^T b_n)^2 / (2 sigma^2).
class RbfRegressionModel {
 public:
  static constexpr bool kHasConjugatePosterior = true;
  static constexpr bool kHasExactCovariance = true;

  RbfRegressionModel(Eigen::VectorXd responses, Eigen::MatrixXd features,
                     double noise_var, Eigen::VectorXd prior_mean,
                     double prior_var)
      : y_(std::move(responses)),
        b_(std::move(features)),
        noise_var_(noise_var),
        prior_var_(prior_var),
        prior_(std::move(prior_mean),
               prior_var * Eigen::MatrixXd::Identity(
                               b_.cols(), b_.cols())) {
    if (y_.size() != b_.rows())
      throw InputError("RbfRegressionModel: response/feature length mismatch");
    if (prior_.dim() != b_.cols())
      throw InputError("RbfRegressionModel: prior dimension mismatch");
    if (noise_var_ <= 0.0 || prior_var_ <= 0.0)
      throw InputError("RbfRegressionModel: variances must be positive");
    if (!y_.allFinite() || !b_.allFinite())
      throw InputError("RbfRegressionModel: non-finite inputs");
  }

  Eigen::Index size() const { return y_.size(); }
  Eigen::Index dim() const { return b_.cols(); }
  const GaussianDist& prior() const { return prior_; }
  const Eigen::VectorXd& responses() const { return y_; }
  const Eigen::MatrixXd& feature_matrix() const { return b_; }
  double noise_var() const { return noise_var_; }

  Eigen::VectorXd potentials(const Eigen::VectorXd& alpha) const {
    check_theta(alpha);
    return -(y_ - b_ * alpha).array().square().matrix() / (2.0 * noise_var_);
  }

  Eigen::VectorXd potentials(const Eigen::VectorXd& alpha,
                             IndexSpan idx) const {
    check_theta(alpha);
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double r = y_[idx[j]] - b_.row(idx[j]).dot(alpha);
      out[static_cast<Eigen::Index>(j)] = -r * r / (2.0 * noise_var_);
    }
    return out;
  }

  GaussianDist weighted_posterior(const Eigen::VectorXd& w) const {
    check_weights(w);
    Eigen::MatrixXd prec =
        Eigen::MatrixXd::Identity(dim(), dim()) / prior_var_;
    prec.selfadjointView<Eigen::Lower>().rankUpdate(
        (b_.array().colwise() * (w.array() / noise_var_).sqrt())
            .matrix()
            .transpose());
    prec = prec.selfadjointView<Eigen::Lower>();
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw NumericalError("weighted_posterior: precision factorization failed");
    const Eigen::VectorXd shift = prior_.mean() / prior_var_ +
                                  b_.transpose() * (w.cwiseProduct(y_)) /
                                      noise_var_;
    const Eigen::VectorXd mean = llt.solve(shift);
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(dim(), dim()));
    cov = ((cov + cov.transpose()) / 2.0).eval();
    return GaussianDist(mean, cov);
  }

  // --- closed-form potential covariances ---
  //
  // With Sigma_w = L L^T, beta_n = L^T b_n, nu_n = y_n - mu_w^T b_n:
  //   cov[f_n, f_m] = sigma^{-4} (nu_n nu_m beta_n^T beta_m
  //                               + 1/2 (beta_n^T beta_m)^2).

  Eigen::VectorXd potential_cov_with(const GaussianDist& post,
                                     const Eigen::VectorXd& a) const {
    const Stats st = stats(post);
    const Eigen::VectorXd q = st.beta.transpose() * a.cwiseProduct(st.nu);
    const Eigen::MatrixXd m = st.beta.transpose() *
                              (st.beta.array().colwise() * a.array()).matrix();
    const Eigen::VectorXd first = st.nu.cwiseProduct(st.beta * q);
    const Eigen::VectorXd second =
        0.5 * ((st.beta * m).array() * st.beta.array()).rowwise().sum().matrix();
    return (first + second) / (noise_var_ * noise_var_);
  }

  Eigen::VectorXd potential_variances(const GaussianDist& post) const {
    const Stats st = stats(post);
    const Eigen::VectorXd s = st.beta.rowwise().squaredNorm();
    return (st.nu.array().square() * s.array() + 0.5 * s.array().square())
               .matrix() /
           (noise_var_ * noise_var_);
  }

  double quadratic_form(const GaussianDist& post,
                        const Eigen::VectorXd& a) const {
    const Stats st = stats(post);
    const Eigen::VectorXd q = st.beta.transpose() * a.cwiseProduct(st.nu);
    const Eigen::MatrixXd m = st.beta.transpose() *
                              (st.beta.array().colwise() * a.array()).matrix();
    return (q.squaredNorm() + 0.5 * m.squaredNorm()) /
           (noise_var_ * noise_var_);
  }

  Eigen::MatrixXd potential_cov_matrix(const GaussianDist& post,
                                       IndexSpan idx) const {
    const Stats st = stats(post);
    const Eigen::Index p = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd beta_sub(p, dim());
    Eigen::VectorXd nu_sub(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      beta_sub.row(j) = st.beta.row(idx[static_cast<std::size_t>(j)]);
      nu_sub[j] = st.nu[idx[static_cast<std::size_t>(j)]];
    }
    const Eigen::MatrixXd g = beta_sub * beta_sub.transpose();
    Eigen::MatrixXd c =
        ((nu_sub * nu_sub.transpose()).array() * g.array() +
         0.5 * g.array().square())
            .matrix() /
        (noise_var_ * noise_var_);
    return ((c + c.transpose()) / 2.0).eval();
  }

  double potential_covariance(const GaussianDist& post, Eigen::Index n,
                              Eigen::Index m) const {
    const Stats st = stats(post);
    const double g = st.beta.row(n).dot(st.beta.row(m));
    return (st.nu[n] * st.nu[m] * g + 0.5 * g * g) /
           (noise_var_ * noise_var_);
  }

  // --- weighted log joint (quadratic in alpha) ---

  double log_joint(const Eigen::VectorXd& alpha,
                   const Eigen::VectorXd& w) const {
    const double prior_term =
        -0.5 * (alpha - prior_.mean()).squaredNorm() / prior_var_;
    return prior_term + w.dot(potentials(alpha));
  }

  Eigen::VectorXd log_joint_gradient(const Eigen::VectorXd& alpha,
                                     const Eigen::VectorXd& w) const {
    return -(alpha - prior_.mean()) / prior_var_ +
           b_.transpose() * (w.cwiseProduct(y_ - b_ * alpha)) / noise_var_;
  }

  Eigen::MatrixXd log_joint_hessian(const Eigen::VectorXd& /*alpha*/,
                                    const Eigen::VectorXd& w) const {
    Eigen::MatrixXd h = -Eigen::MatrixXd::Identity(dim(), dim()) / prior_var_;
    h.noalias() -=
        b_.transpose() * (b_.array().colwise() * (w.array() / noise_var_)).matrix();
    return h;
  }

 private:
  struct Stats {
    Eigen::MatrixXd beta;  // N x K, row n = (L^T b_n)^T
    Eigen::VectorXd nu;    // y - B mu_w
  };

  Stats stats(const GaussianDist& post) const {
    return Stats{b_ * post.chol(), y_ - b_ * post.mean()};
  }

  void check_theta(const Eigen::VectorXd& alpha) const {
    if (alpha.size() != dim() || !alpha.allFinite())
      throw InputError("RbfRegressionModel: bad coefficient vector");
  }

  void check_weights(const Eigen::VectorXd& w) const {
    if (w.size() != size()) throw InputError("weights: length mismatch");
    if (!w.allFinite()) throw InputError("weights: non-finite entries");
    if ((w.array() < 0.0).any()) throw InputError("weights: negative entry");
  }

  Eigen::VectorXd y_;
  Eigen::MatrixXd b_;  // N x K
  double noise_var_;
  double prior_var_;
  GaussianDist prior_;
};

}  // namespace coreset
