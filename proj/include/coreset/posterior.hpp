#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "coreset/error.hpp"
#include "coreset/gaussian.hpp"
#include "coreset/model.hpp"
#include "coreset/rng.hpp"

namespace coreset {

enum class SamplerStrategy { exact_conjugate, laplace, laplace_mh };

struct SamplerConfig {
  double newton_tol = 1e-8;  // gradient norm at the mode
  int newton_max_iter = 100;
  int newton_max_halvings = 50;
  double mh_step_scale = 0.0;  // 0 selects the 2.38^2/D default
  int mh_burnin = 500;
  int mh_thin = 10;
};

// Gaussian approximation N(theta*, H^{-1}) at the mode of
// log pi_0(theta) + sum_n w_n f_n(theta), found by damped Newton ascent.
template <SmoothFamily M>
GaussianDist laplace_approximation(const M& model, const Eigen::VectorXd& w,
                                   const SamplerConfig& cfg = {},
                                   const Eigen::VectorXd* init = nullptr) {
  if (w.size() != model.size() || !w.allFinite())
    throw InputError("laplace_approximation: bad weights");
  Eigen::VectorXd theta =
      (init != nullptr && init->size() == model.dim()) ? *init
                                                       : model.prior().mean();
  double value = model.log_joint(theta, w);
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    const Eigen::VectorXd grad = model.log_joint_gradient(theta, w);
    if (grad.norm() <= cfg.newton_tol) break;
    const Eigen::MatrixXd neg_hess = -model.log_joint_hessian(theta, w);
    Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
    if (llt.info() != Eigen::Success)
      throw NumericalError(
          "laplace_approximation: indefinite Hessian at iterate " +
          std::to_string(it));
    const Eigen::VectorXd step = llt.solve(grad);
    double alpha = 1.0;
    bool moved = false;
    // Slack of a few ulps of the objective keeps the final Newton steps
    // from being rejected once per-step gains drop below rounding.
    const double slack = 1e-12 * (1.0 + std::abs(value));
    for (int h = 0; h <= cfg.newton_max_halvings; ++h) {
      const Eigen::VectorXd cand = theta + alpha * step;
      const double cand_value = model.log_joint(cand, w);
      if (std::isfinite(cand_value) && cand_value >= value - slack) {
        theta = cand;
        value = cand_value;
        moved = true;
        break;
      }
      alpha /= 2.0;
    }
    if (!moved)
      throw ConvergenceError(
          "laplace_approximation: line search stalled at iterate " +
              std::to_string(it),
          theta);
  }
  const Eigen::VectorXd grad = model.log_joint_gradient(theta, w);
  if (grad.norm() > cfg.newton_tol)
    throw ConvergenceError("laplace_approximation: Newton did not converge (" +
                               std::to_string(grad.norm()) + " > tol)",
                           theta);
  const Eigen::MatrixXd neg_hess = -model.log_joint_hessian(theta, w);
  Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
  if (llt.info() != Eigen::Success)
    throw NumericalError("laplace_approximation: indefinite Hessian at mode");
  Eigen::MatrixXd cov =
      llt.solve(Eigen::MatrixXd::Identity(model.dim(), model.dim()));
  cov = ((cov + cov.transpose()) / 2.0).eval();
  return GaussianDist(theta, cov);
}

struct MhResult {
  Eigen::MatrixXd draws;
  double acceptance_rate = 0.0;
};

// Random-walk Metropolis-Hastings on the weighted log joint; returns
// `keep` states taken every `thin` steps after `burnin`.
template <SmoothFamily M>
MhResult mh_chain(const M& model, const Eigen::VectorXd& w,
                  const Eigen::VectorXd& start,
                  const Eigen::MatrixXd& proposal_chol, Eigen::Index keep,
                  int burnin, int thin, Rng& rng) {
  if (keep < 1) throw InputError("mh_chain: keep must be >= 1");
  if (thin < 1) thin = 1;
  Eigen::VectorXd state = start;
  double logp = model.log_joint(state, w);
  MhResult out;
  out.draws.resize(keep, model.dim());
  long accepted = 0, total = 0;
  Eigen::Index stored = 0;
  const long steps = burnin + static_cast<long>(thin) * keep;
  for (long step = 1; step <= steps; ++step) {
    const Eigen::VectorXd cand =
        state + proposal_chol * rng.normal_vector(model.dim());
    const double cand_logp = model.log_joint(cand, w);
    ++total;
    if (std::isfinite(cand_logp) &&
        std::log(std::max(rng.uniform(), 1e-300)) <= cand_logp - logp) {
      state = cand;
      logp = cand_logp;
      ++accepted;
    }
    if (step > burnin && (step - burnin) % thin == 0 && stored < keep)
      out.draws.row(stored++) = state.transpose();
  }
  out.acceptance_rate =
      total > 0 ? static_cast<double>(accepted) / static_cast<double>(total)
                : 0.0;
  return out;
}

// Draws S samples from (an approximation of) the coreset posterior
// pi_w \propto exp(w^T f(theta)) pi_0(theta). Stateless; the caller owns the
// rng stream. `mode_io`, when given, warm-starts the Laplace Newton solve and
// receives the located mode back.
struct PosteriorSampler {
  SamplerStrategy strategy = SamplerStrategy::exact_conjugate;
  SamplerConfig config = {};

  template <PotentialFamily M>
  Eigen::MatrixXd sample(const M& model, const Eigen::VectorXd& w,
                         Eigen::Index s, Rng& rng,
                         Eigen::VectorXd* mode_io = nullptr) const {
    if (s < 1) throw InputError("sample: S must be >= 1");
    Eigen::MatrixXd draws;
    if (strategy == SamplerStrategy::exact_conjugate) {
      if constexpr (ConjugateFamily<M>) {
        draws = model.weighted_posterior(w).sample(s, rng);
      } else {
        throw CapabilityError(
            "exact-conjugate sampling requires a conjugate model");
      }
    } else {
      if constexpr (SmoothFamily<M>) {
        const Eigen::VectorXd* init =
            (mode_io != nullptr && mode_io->size() == model.dim()) ? mode_io
                                                                   : nullptr;
        const GaussianDist lap = laplace_approximation(model, w, config, init);
        if (mode_io != nullptr) *mode_io = lap.mean();
        if (strategy == SamplerStrategy::laplace) {
          draws = lap.sample(s, rng);
        } else {
          const double scale =
              config.mh_step_scale > 0.0
                  ? config.mh_step_scale
                  : 2.38 * 2.38 / static_cast<double>(model.dim());
          const Eigen::MatrixXd prop_chol = std::sqrt(scale) * lap.chol();
          draws = mh_chain(model, w, lap.mean(), prop_chol, s,
                           config.mh_burnin, config.mh_thin, rng)
                      .draws;
        }
      } else {
        throw CapabilityError(
            "laplace strategies need log-joint derivatives");
      }
    }
    if (!draws.allFinite())
      throw NumericalError("sample: non-finite posterior draws");
    return draws;
  }
};

}  // namespace coreset
