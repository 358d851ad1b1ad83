#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "coreset/error.hpp"
#include "coreset/gaussian.hpp"
#include "coreset/model.hpp"

namespace coreset {

// Stable scalar kernels. All are exact to double precision for |x| <= 500.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double log_softplus(double x) {
  // For very negative x, softplus(x) ~ e^x (1 - e^x/2), so log softplus ~ x.
  if (x < -33.0) return x;
  return std::log(softplus(x));
}

// Per-point value / gradient / Hessian of the GLM potentials at theta.
// The Hessian of f_n is hess_scale[n] * z_n z_n^T.
struct GlmDerivatives {
  Eigen::VectorXd value;
  Eigen::MatrixXd gradient;  // N x (D+1), row n = grad f_n
  Eigen::VectorXd hess_scale;
};

// Logistic or Poisson regression with augmented covariates z_n = [x_n; 1].
//   logistic: y_n in {-1,+1},  y_n | z_n ~ Bern(sigmoid(z_n^T theta))
//   poisson:  y_n in N,        y_n | z_n ~ Poisson(softplus(z_n^T theta))
class GlmModel {
 public:
  enum class Kind { logistic, poisson };

  static constexpr bool kHasConjugatePosterior = false;
  static constexpr bool kHasExactCovariance = false;

  GlmModel(Kind kind, Eigen::MatrixXd covariates, Eigen::VectorXd labels,
           GaussianDist prior)
      : kind_(kind), y_(std::move(labels)), prior_(std::move(prior)) {
    if (covariates.rows() != y_.size())
      throw InputError("GlmModel: covariate/label length mismatch");
    if (!covariates.allFinite() || !y_.allFinite())
      throw InputError("GlmModel: non-finite inputs");
    if (prior_.dim() != covariates.cols() + 1)
      throw InputError("GlmModel: prior dimension must be D+1");
    z_.resize(covariates.rows(), covariates.cols() + 1);
    z_.leftCols(covariates.cols()) = covariates;
    z_.col(covariates.cols()).setOnes();
    for (Eigen::Index n = 0; n < y_.size(); ++n) {
      if (kind_ == Kind::logistic) {
        if (y_[n] != 1.0 && y_[n] != -1.0)
          throw InputError("GlmModel: logistic labels must be +/-1");
      } else {
        if (y_[n] < 0.0 || y_[n] != std::floor(y_[n]))
          throw InputError("GlmModel: poisson labels must be counts");
      }
    }
    const Eigen::MatrixXd eye =
        Eigen::MatrixXd::Identity(prior_.dim(), prior_.dim());
    const Eigen::MatrixXd linv =
        prior_.chol().triangularView<Eigen::Lower>().solve(eye);
    prior_precision_ = linv.transpose() * linv;
    log_y_factorial_ = Eigen::VectorXd::Zero(y_.size());
    if (kind_ == Kind::poisson)
      for (Eigen::Index n = 0; n < y_.size(); ++n)
        log_y_factorial_[n] = std::lgamma(y_[n] + 1.0);
  }

  Kind kind() const { return kind_; }
  Eigen::Index size() const { return y_.size(); }
  Eigen::Index dim() const { return z_.cols(); }
  const GaussianDist& prior() const { return prior_; }
  const Eigen::MatrixXd& augmented_covariates() const { return z_; }
  const Eigen::VectorXd& labels() const { return y_; }

  Eigen::VectorXd potentials(const Eigen::VectorXd& theta) const {
    check_theta(theta);
    const Eigen::VectorXd u = z_ * theta;
    Eigen::VectorXd f(size());
    for (Eigen::Index n = 0; n < size(); ++n) f[n] = value_at(u[n], n);
    return f;
  }

  Eigen::VectorXd potentials(const Eigen::VectorXd& theta,
                             IndexSpan idx) const {
    check_theta(theta);
    Eigen::VectorXd f(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j)
      f[static_cast<Eigen::Index>(j)] =
          value_at(z_.row(idx[j]).dot(theta), idx[j]);
    return f;
  }

  // Potential values at several parameter draws at once; rows follow draws.
  // This is the hot path of the Monte Carlo estimators; the logistic case
  // stays in Eigen array expressions so the transcendentals vectorize.
  Eigen::MatrixXd potentials_at_draws(const Eigen::MatrixXd& draws) const {
    if (draws.cols() != dim() || !draws.allFinite())
      throw InputError("GlmModel: bad draw matrix");
    const Eigen::MatrixXd u = draws * z_.transpose();  // S x N
    if (kind_ == Kind::logistic) {
      // f = -softplus(-y u) = min(y u, 0) - log(1 + exp(-|y u|)); the
      // dropped log1p refinement is below double resolution here.
      const Eigen::ArrayXXd m =
          u.array().rowwise() * y_.transpose().array();
      return (m.min(0.0) - (1.0 + (-m.abs()).exp()).log()).matrix();
    }
    Eigen::MatrixXd f(u.rows(), u.cols());
    for (Eigen::Index n = 0; n < u.cols(); ++n)
      for (Eigen::Index s = 0; s < u.rows(); ++s)
        f(s, n) = value_at(u(s, n), n);
    return f;
  }

  GlmDerivatives derivatives(const Eigen::VectorXd& theta) const {
    check_theta(theta);
    const Eigen::VectorXd u = z_ * theta;
    GlmDerivatives out;
    out.value.resize(size());
    out.hess_scale.resize(size());
    Eigen::VectorXd grad_scale(size());
    for (Eigen::Index n = 0; n < size(); ++n) {
      double v, g, h;
      scalar_derivatives(u[n], n, v, g, h);
      out.value[n] = v;
      grad_scale[n] = g;
      out.hess_scale[n] = h;
    }
    out.gradient = z_.array().colwise() * grad_scale.array();
    return out;
  }

  // --- weighted log joint ---

  double log_joint(const Eigen::VectorXd& theta, const Eigen::VectorXd& w) const {
    const Eigen::VectorXd d0 = theta - prior_.mean();
    return -0.5 * d0.dot(prior_precision_ * d0) + w.dot(potentials(theta));
  }

  Eigen::VectorXd log_joint_gradient(const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& w) const {
    check_theta(theta);
    const Eigen::VectorXd u = z_ * theta;
    Eigen::VectorXd gs(size());
    for (Eigen::Index n = 0; n < size(); ++n) {
      double v, g, h;
      scalar_derivatives(u[n], n, v, g, h);
      gs[n] = g;
    }
    return -prior_precision_ * (theta - prior_.mean()) +
           z_.transpose() * w.cwiseProduct(gs);
  }

  Eigen::MatrixXd log_joint_hessian(const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& w) const {
    check_theta(theta);
    const Eigen::VectorXd u = z_ * theta;
    Eigen::VectorXd hs(size());
    for (Eigen::Index n = 0; n < size(); ++n) {
      double v, g, h;
      scalar_derivatives(u[n], n, v, g, h);
      hs[n] = h;
    }
    const Eigen::VectorXd scale = w.cwiseProduct(hs);
    Eigen::MatrixXd hess = -prior_precision_;
    hess.noalias() +=
        z_.transpose() * (z_.array().colwise() * scale.array()).matrix();
    return hess;
  }

 private:
  double value_at(double u, Eigen::Index n) const {
    if (kind_ == Kind::logistic) return -softplus(-y_[n] * u);
    return y_[n] * log_softplus(u) - softplus(u) - log_y_factorial_[n];
  }

  void scalar_derivatives(double u, Eigen::Index n, double& value,
                          double& grad, double& hess) const {
    if (kind_ == Kind::logistic) {
      const double m = y_[n] * u;
      value = -softplus(-m);
      grad = y_[n] * sigmoid(-m);
      hess = -sigmoid(m) * sigmoid(-m);
      return;
    }
    const double y = y_[n];
    const double sig = sigmoid(u);
    const double sigp = sig * (1.0 - sig);
    value = y * log_softplus(u) - softplus(u) - log_y_factorial_[n];
    // r = sigmoid/softplus and t = sigmoid'/softplus both tend to 1 as
    // u -> -inf; guard the 0/0 region.
    double r, t;
    if (u < -30.0) {
      r = 1.0;
      t = 1.0;
    } else {
      const double sp = softplus(u);
      r = sig / sp;
      t = sigp / sp;
    }
    grad = y * r - sig;
    hess = y * (t - r * r) - sigp;
  }

  void check_theta(const Eigen::VectorXd& theta) const {
    if (theta.size() != dim() || !theta.allFinite())
      throw InputError("GlmModel: bad theta");
  }

  Kind kind_;
  Eigen::MatrixXd z_;  // N x (D+1), last column ones
  Eigen::VectorXd y_;
  GaussianDist prior_;
  Eigen::MatrixXd prior_precision_;
  Eigen::VectorXd log_y_factorial_;
};

}  // namespace coreset
