#pragma once

#include <Eigen/Dense>
#include <concepts>
#include <span>
#include <vector>

#include "coreset/gaussian.hpp"
#include "coreset/weights.hpp"

namespace coreset {

using IndexSpan = std::span<const Eigen::Index>;

// A probabilistic model decomposed into N per-datum potentials plus a
// Gaussian base density. Potentials drop additive constants that do not
// depend on the latent parameter.
template <class M>
concept PotentialFamily = requires(const M& m, const Eigen::VectorXd& theta,
                                   IndexSpan idx) {
  { m.size() } -> std::convertible_to<Eigen::Index>;
  { m.dim() } -> std::convertible_to<Eigen::Index>;
  { m.prior() } -> std::convertible_to<const GaussianDist&>;
  { m.potentials(theta) } -> std::convertible_to<Eigen::VectorXd>;
  { m.potentials(theta, idx) } -> std::convertible_to<Eigen::VectorXd>;
};

// Weighted log joint density (up to an additive constant) and its first two
// derivatives in theta; everything Newton needs for a Laplace fit.
template <class M>
concept SmoothFamily = PotentialFamily<M> &&
    requires(const M& m, const Eigen::VectorXd& theta,
             const Eigen::VectorXd& w) {
  { m.log_joint(theta, w) } -> std::convertible_to<double>;
  { m.log_joint_gradient(theta, w) } -> std::convertible_to<Eigen::VectorXd>;
  { m.log_joint_hessian(theta, w) } -> std::convertible_to<Eigen::MatrixXd>;
};

// Closed-form weighted posterior.
template <class M>
concept ConjugateFamily = PotentialFamily<M> &&
    requires(const M& m, const Eigen::VectorXd& w) {
  { m.weighted_posterior(w) } -> std::convertible_to<GaussianDist>;
};

// Closed-form potential covariances under the weighted posterior. The
// vectorized forms are what the estimators consume:
//   potential_cov_with(post, a)[n] = cov[f_n, f^T a]
//   quadratic_form(post, a)        = var[f^T a]
template <class M>
concept ExactCovarianceFamily = ConjugateFamily<M> &&
    requires(const M& m, const GaussianDist& post, const Eigen::VectorXd& a,
             IndexSpan idx, Eigen::Index n) {
  { m.potential_cov_with(post, a) } -> std::convertible_to<Eigen::VectorXd>;
  { m.potential_variances(post) } -> std::convertible_to<Eigen::VectorXd>;
  { m.quadratic_form(post, a) } -> std::convertible_to<double>;
  { m.potential_cov_matrix(post, idx) } -> std::convertible_to<Eigen::MatrixXd>;
  { m.potential_covariance(post, n, n) } -> std::convertible_to<double>;
};

namespace detail {

inline std::vector<Eigen::Index> all_indices(Eigen::Index n) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

}  // namespace detail

// Potential values at a batch of parameter draws (rows). Models may provide
// a fused implementation; otherwise evaluate row by row.
template <PotentialFamily M>
Eigen::MatrixXd potentials_at_draws(const M& model, const Eigen::MatrixXd& draws) {
  if constexpr (requires { model.potentials_at_draws(draws); }) {
    return model.potentials_at_draws(draws);
  } else {
    Eigen::MatrixXd out(draws.rows(), model.size());
    for (Eigen::Index s = 0; s < draws.rows(); ++s)
      out.row(s) = model.potentials(draws.row(s).transpose()).transpose();
    return out;
  }
}

template <PotentialFamily M>
Eigen::MatrixXd potentials_at_draws(const M& model, const Eigen::MatrixXd& draws,
                                    IndexSpan idx) {
  Eigen::MatrixXd out(draws.rows(), static_cast<Eigen::Index>(idx.size()));
  for (Eigen::Index s = 0; s < draws.rows(); ++s)
    out.row(s) = model.potentials(draws.row(s).transpose(), idx).transpose();
  return out;
}

// Closed-form covariance of two potentials under the weighted posterior.
template <ExactCovarianceFamily M>
double exact_potential_covariance(const M& model, const Weights& w,
                                  Eigen::Index n, Eigen::Index m) {
  const GaussianDist post = model.weighted_posterior(w.values);
  return model.potential_covariance(post, n, m);
}

}  // namespace coreset
