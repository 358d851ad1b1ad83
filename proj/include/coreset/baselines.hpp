#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "coreset/error.hpp"
#include "coreset/model.hpp"
#include "coreset/posterior.hpp"
#include "coreset/rng.hpp"
#include "coreset/sparse_vi.hpp"
#include "coreset/weights.hpp"

namespace coreset {

// Finite-dimensional potential projections: column n holds
//   ghat_n = S^{-1/2} [f_n(theta_1) - fbar_n, ..., f_n(theta_S) - fbar_n]
// for draws theta_s from the weighting distribution. ||ghat_n||^2 is the
// sample variance of f_n under that distribution.
struct ProjectedVectors {
  Eigen::MatrixXd atoms;  // S_proj x N

  Eigen::Index projection_dim() const { return atoms.rows(); }
  Eigen::Index size() const { return atoms.cols(); }
};

template <PotentialFamily M>
ProjectedVectors random_projection(const M& model,
                                   const GaussianDist& weighting,
                                   Eigen::Index s_proj, Rng& rng) {
  if (s_proj < 1) throw InputError("random_projection: S_proj must be >= 1");
  if (weighting.dim() != model.dim())
    throw InputError("random_projection: weighting dimension mismatch");
  const Eigen::MatrixXd draws = weighting.sample(s_proj, rng);
  Eigen::MatrixXd f = potentials_at_draws(model, draws);
  if (!f.allFinite())
    throw NumericalError("random_projection: non-finite potential values");
  f.rowwise() -= f.colwise().mean();
  return ProjectedVectors{f / std::sqrt(static_cast<double>(s_proj))};
}

// || sum_n ghat_n - sum_n w_n ghat_n ||^2, the sparse regression objective
// the Hilbert-space constructions minimize.
inline double hilbert_residual_norm2(const ProjectedVectors& pv,
                                     const Eigen::VectorXd& w) {
  if (w.size() != pv.size())
    throw InputError("hilbert_residual_norm2: weight length mismatch");
  return (pv.atoms * (Eigen::VectorXd::Ones(w.size()) - w)).squaredNorm();
}

enum class WeightingMode { optimal, realistic };

template <PotentialFamily M>
GaussianDist posterior_moments(const M& model) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.size());
  if constexpr (ConjugateFamily<M>) {
    return model.weighted_posterior(ones);
  } else if constexpr (SmoothFamily<M>) {
    return laplace_approximation(model, ones);
  } else {
    throw CapabilityError("posterior_moments: no moments available");
  }
}

// Prior-to-posterior interpolation at position u with per-component
// (1 + noise * eps) perturbations, eps ~ Unif[-1,1]. The covariance is
// perturbed on the upper triangle, mirrored, then eigenvalue-clipped
// at 1e-8 to restore positive definiteness.
template <PotentialFamily M>
GaussianDist make_weighting_at(const M& model, double u, double noise,
                               Rng& rng) {
  const GaussianDist posterior = posterior_moments(model);
  const GaussianDist& prior = model.prior();
  Eigen::VectorXd mean = (1.0 - u) * prior.mean() + u * posterior.mean();
  Eigen::MatrixXd cov = (1.0 - u) * prior.cov() + u * posterior.cov();
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    mean[i] *= 1.0 + noise * rng.uniform(-1.0, 1.0);
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = i; j < cov.cols(); ++j) {
      cov(i, j) *= 1.0 + noise * rng.uniform(-1.0, 1.0);
      cov(j, i) = cov(i, j);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success)
    throw NumericalError("make_weighting: PSD projection failed");
  const Eigen::VectorXd evals = es.eigenvalues().cwiseMax(1e-8);
  cov = es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
  cov = ((cov + cov.transpose()) / 2.0).eval();
  return GaussianDist(mean, cov);
}

// Reference distribution for the projection. `optimal` copies the posterior
// moments verbatim; `realistic` interpolates uniformly between prior and
// posterior moments and adds 75% relative noise per component.
template <PotentialFamily M>
GaussianDist make_weighting(const M& model, WeightingMode mode, Rng& rng,
                            double noise = 0.75) {
  if (mode == WeightingMode::optimal) return posterior_moments(model);
  return make_weighting_at(model, rng.uniform(), noise, rng);
}

using GigaObserver =
    std::function<void(Eigen::Index m, const Weights& w, double elapsed_s)>;

// Greedy iterative geodesic ascent on the projected atoms: normalize the
// atoms and the target sum, repeatedly pick the atom whose sphere tangent
// aligns best with the residual direction, take the closed-form geodesic
// step, and scale the final iterate along its ray to minimize the residual
// norm. Deterministic; ties break to the lowest index; stops early once the
// objective falls below 1e-12.
inline Weights giga(const ProjectedVectors& pv, Eigen::Index m_budget,
                    const GigaObserver& observer = {}) {
  const Eigen::Index n = pv.size();
  if (m_budget < 0) throw InputError("giga: negative budget");
  const Eigen::VectorXd target = pv.atoms.rowwise().sum();
  const double target_norm = target.norm();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  if (target_norm <= 0.0 || m_budget == 0) {
    // Zero target: nothing to represent.
    Weights out = Weights::from_values(w);
    for (Eigen::Index m = 1; m <= m_budget; ++m)
      if (observer) observer(m, out, 0.0);
    return out;
  }

  const Eigen::VectorXd atom_norms = pv.atoms.colwise().norm();
  const double atom_floor =
      1e-14 * std::max(1.0, atom_norms.maxCoeff());
  Eigen::MatrixXd unit_atoms(pv.projection_dim(), n);
  std::vector<char> usable(static_cast<std::size_t>(n), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (atom_norms[j] > atom_floor) {
      unit_atoms.col(j) = pv.atoms.col(j) / atom_norms[j];
      usable[static_cast<std::size_t>(j)] = 1;
    } else {
      unit_atoms.col(j).setZero();
    }
  }
  const Eigen::VectorXd ell = target / target_norm;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);  // weights on unit atoms
  Eigen::VectorXd y = Eigen::VectorXd::Zero(pv.projection_dim());
  bool started = false;

  using Clock = std::chrono::steady_clock;
  double elapsed = 0.0;
  auto segment_start = Clock::now();

  const auto scaled_weights = [&]() {
    const double beta = std::max(0.0, target_norm * ell.dot(y));
    Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j)
      if (u[j] > 0.0) values[j] = beta * u[j] / atom_norms[j];
    return Weights::from_values(values);
  };
  const auto objective = [&]() {
    const double align = std::max(0.0, ell.dot(y));
    return target_norm * target_norm * (1.0 - align * align);
  };

  bool done = false;
  for (Eigen::Index m = 1; m <= m_budget; ++m) {
    if (!done && !started) {
      // First step: best absolute alignment with the target direction.
      Eigen::Index best = -1;
      double best_score = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!usable[static_cast<std::size_t>(j)]) continue;
        const double score = ell.dot(unit_atoms.col(j));
        if (score > best_score) {
          best_score = score;
          best = j;
        }
      }
      if (best < 0) {
        done = true;
      } else {
        y = unit_atoms.col(best);
        u[best] = 1.0;
        started = true;
      }
    } else if (!done) {
      const double a = ell.dot(y);
      const Eigen::VectorXd resid_dir = ell - a * y;
      const double resid_norm = resid_dir.norm();
      if (resid_norm <= 1e-14) {
        done = true;
      } else {
        Eigen::Index best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
          if (!usable[static_cast<std::size_t>(j)]) continue;
          const double cy = y.dot(unit_atoms.col(j));
          const double denom = 1.0 - cy * cy;
          if (denom <= 1e-14) continue;  // atom parallel to the iterate
          const double score =
              resid_dir.dot(unit_atoms.col(j)) / std::sqrt(denom);
          if (score > best_score) {
            best_score = score;
            best = j;
          }
        }
        if (best < 0) {
          done = true;
        } else {
          const double b = ell.dot(unit_atoms.col(best));
          const double c = y.dot(unit_atoms.col(best));
          const double g_add = b - a * c;
          const double g_keep = a - b * c;
          if (g_add + g_keep <= 0.0) {
            done = true;
          } else {
            const double gamma =
                std::clamp(g_add / (g_add + g_keep), 0.0, 1.0);
            const Eigen::VectorXd y_new =
                (1.0 - gamma) * y + gamma * unit_atoms.col(best);
            const double eta = y_new.norm();
            if (eta <= 1e-14) {
              done = true;
            } else {
              y = y_new / eta;
              u = ((1.0 - gamma) * u).eval();
              u[best] += gamma;
              u /= eta;
            }
          }
        }
      }
    }
    if (objective() < 1e-12) done = true;
    if (observer) {
      elapsed +=
          std::chrono::duration<double>(Clock::now() - segment_start).count();
      observer(m, scaled_weights(), elapsed);
      segment_start = Clock::now();
    }
  }
  return scaled_weights();
}

// M indices drawn without replacement, each carrying weight N/M so the
// weighted potential sum is unbiased for the full sum.
inline Weights uniform_subsample(Eigen::Index n, Eigen::Index m, Rng& rng) {
  if (m < 1 || m > n)
    throw InputError("uniform_subsample: need 1 <= M <= N");
  const auto idx = rng.sample_without_replacement(n, m);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  const double weight = static_cast<double>(n) / static_cast<double>(m);
  for (auto i : idx) values[i] = weight;
  return Weights::from_values(values);
}

}  // namespace coreset
