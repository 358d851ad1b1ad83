#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coreset/error.hpp"
#include "coreset/model.hpp"
#include "coreset/nnls.hpp"
#include "coreset/posterior.hpp"
#include "coreset/rng.hpp"
#include "coreset/weights.hpp"

namespace coreset {

// Sample variance below this is treated as a constant potential; its
// correlation with anything is reported as zero.
inline constexpr double kVarianceGuard = 1e-12;

// S rows of mean-centered potential evaluations. In subsampled mode the
// columns cover only `index_map`; otherwise they cover all N potentials.
struct CenteredPotentialMatrix {
  Eigen::MatrixXd rows;                  // S x P
  std::vector<Eigen::Index> index_map;   // empty => identity (P == N)
  Eigen::VectorXd col_variance;          // (1/S) column sums of squares

  Eigen::Index draw_count() const { return rows.rows(); }
  Eigen::Index col_count() const { return rows.cols(); }
  bool full() const { return index_map.empty(); }

  Eigen::Index global_index(Eigen::Index local) const {
    return full() ? local : index_map[static_cast<std::size_t>(local)];
  }

  // Residual direction 1 - w restricted to the covered columns.
  Eigen::VectorXd restrict_residual(const Eigen::VectorXd& w) const {
    if (full()) return Eigen::VectorXd::Ones(w.size()) - w;
    Eigen::VectorXd a(col_count());
    for (Eigen::Index j = 0; j < col_count(); ++j)
      a[j] = 1.0 - w[index_map[static_cast<std::size_t>(j)]];
    return a;
  }
};

template <PotentialFamily M>
CenteredPotentialMatrix centered_potentials(
    const M& model, const Eigen::MatrixXd& draws,
    const std::vector<Eigen::Index>* restrict_to = nullptr) {
  if (draws.rows() < 1) throw InputError("centered_potentials: no draws");
  CenteredPotentialMatrix out;
  if (restrict_to == nullptr) {
    out.rows = potentials_at_draws(model, draws);
  } else {
    out.rows = potentials_at_draws(
        model, draws, IndexSpan(restrict_to->data(), restrict_to->size()));
    out.index_map = *restrict_to;
  }
  if (!out.rows.allFinite()) {
    for (Eigen::Index j = 0; j < out.rows.cols(); ++j)
      if (!out.rows.col(j).allFinite())
        throw NumericalError("centered_potentials: non-finite potential " +
                             std::to_string(out.global_index(j)));
  }
  out.rows.rowwise() -= out.rows.colwise().mean();
  out.col_variance = out.rows.colwise().squaredNorm().transpose() /
                     static_cast<double>(out.rows.rows());
  return out;
}

// Correlation statistic between each covered potential and the residual
// f^T (1 - w): diag[C]^{-1/2} C (1 - w) with C the sample second-moment
// matrix of the centered rows. Columns with negligible variance get zero.
inline Eigen::VectorXd estimate_correlations(const CenteredPotentialMatrix& g,
                                             const Eigen::VectorXd& w) {
  const Eigen::VectorXd a = g.restrict_residual(w);
  const Eigen::VectorXd r = g.rows * a;
  Eigen::VectorXd c =
      g.rows.transpose() * r / static_cast<double>(g.draw_count());
  for (Eigen::Index j = 0; j < c.size(); ++j)
    c[j] = g.col_variance[j] < kVarianceGuard
               ? 0.0
               : c[j] / std::sqrt(g.col_variance[j]);
  return c;
}

// Monte Carlo estimate of grad_w KL(pi_w || pi_1), restricted to the
// covered columns: D = -(1/S) sum_s g_s g_s^T (1 - w).
inline Eigen::VectorXd estimate_kl_gradient(const CenteredPotentialMatrix& g,
                                            const Eigen::VectorXd& w) {
  const Eigen::VectorXd a = g.restrict_residual(w);
  const Eigen::VectorXd r = g.rows * a;
  return -(g.rows.transpose() * r) / static_cast<double>(g.draw_count());
}

// Greedy selection: largest |corr| among active entries, largest signed corr
// among inactive ones; ties break to the lowest index.
inline Eigen::Index select_greedy(const Eigen::VectorXd& corr,
                                  const std::vector<char>& active) {
  if (corr.size() < 1) throw InputError("select_greedy: empty correlations");
  if (!corr.allFinite())
    throw InputError("select_greedy: non-finite correlations");
  Eigen::Index best = 0;
  double best_score = active[0] ? std::abs(corr[0]) : corr[0];
  for (Eigen::Index n = 1; n < corr.size(); ++n) {
    const double score =
        active[static_cast<std::size_t>(n)] ? std::abs(corr[n]) : corr[n];
    if (score > best_score) {
      best_score = score;
      best = n;
    }
  }
  return best;
}

inline Eigen::Index select_greedy(const Eigen::VectorXd& corr,
                                  const Weights& w) {
  std::vector<char> active(static_cast<std::size_t>(corr.size()), 0);
  for (auto n : w.active) active[static_cast<std::size_t>(n)] = 1;
  return select_greedy(corr, active);
}

// ---------------------------------------------------------------------------
// Moment estimator: one interface for the Monte Carlo estimators and their
// closed-form replacements on models with exact potential covariances.
// ---------------------------------------------------------------------------

template <PotentialFamily Model>
class MomentEstimator {
 public:
  MomentEstimator(const Model& model, const PosteriorSampler& sampler,
                  Eigen::Index s, bool use_exact, Rng& rng)
      : model_(model), sampler_(sampler), s_(s), exact_(use_exact), rng_(rng) {
    if constexpr (!ExactCovarianceFamily<Model>) {
      if (exact_)
        throw CapabilityError(
            "exact estimators require closed-form covariances");
    }
  }

  bool exact() const { return exact_; }

  Eigen::VectorXd correlations(const Eigen::VectorXd& w,
                               const std::vector<Eigen::Index>* idx) {
    if (!exact_) return estimate_correlations(centered(w, idx), w);
    if constexpr (ExactCovarianceFamily<Model>) {
      const GaussianDist post = model_.weighted_posterior(w);
      Eigen::VectorXd c, v;
      exact_cov_residual(post, w, idx, c, v);
      for (Eigen::Index j = 0; j < c.size(); ++j)
        c[j] = v[j] < kVarianceGuard ? 0.0 : c[j] / std::sqrt(v[j]);
      return c;
    }
    throw CapabilityError("unreachable");
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& w,
                           const std::vector<Eigen::Index>* idx) {
    if (!exact_) return estimate_kl_gradient(centered(w, idx), w);
    if constexpr (ExactCovarianceFamily<Model>) {
      const GaussianDist post = model_.weighted_posterior(w);
      Eigen::VectorXd c, v;
      exact_cov_residual(post, w, idx, c, v);
      return -c;
    }
    throw CapabilityError("unreachable");
  }

  // Gradient together with the per-potential variances under pi_w, which
  // the weight updates use as a diagonal step preconditioner. The raw
  // gradient scales with N times the shared potential curvature, so a unit
  // step on it overshoots onto a flat plateau; dividing by var[f_n] makes a
  // unit step land at the optimal single-coordinate weight and keeps the
  // update invariant to rescaling the potentials.
  struct GradientStats {
    Eigen::VectorXd gradient;
    Eigen::VectorXd curvature;  // var[f_n], restricted like the gradient
  };

  GradientStats gradient_with_curvature(const Eigen::VectorXd& w,
                                        const std::vector<Eigen::Index>* idx) {
    GradientStats out;
    if (!exact_) {
      const CenteredPotentialMatrix g = centered(w, idx);
      out.gradient = estimate_kl_gradient(g, w);
      out.curvature = g.col_variance;
      return out;
    }
    if constexpr (ExactCovarianceFamily<Model>) {
      const GaussianDist post = model_.weighted_posterior(w);
      Eigen::VectorXd c, v;
      exact_cov_residual(post, w, idx, c, v);
      out.gradient = -c;
      out.curvature = std::move(v);
      return out;
    }
    throw CapabilityError("unreachable");
  }

  // Chain-rule gradients and curvatures of the scale-and-add objective at
  // omega = beta w + alpha 1_n: d/dbeta = w^T D, d/dalpha = D_n, with
  // curvatures var[f^T w] and var[f_n].
  struct ScaleAddStats {
    double g_alpha = 0.0, g_beta = 0.0;
    double curv_alpha = 0.0, curv_beta = 0.0;
  };

  ScaleAddStats scale_add_stats(const Eigen::VectorXd& omega,
                                const Eigen::VectorXd& w_base,
                                Eigen::Index star_pos,
                                const std::vector<Eigen::Index>* idx) {
    ScaleAddStats out;
    if (!exact_) {
      const CenteredPotentialMatrix g = centered(omega, idx);
      const Eigen::VectorXd d = estimate_kl_gradient(g, omega);
      out.g_alpha = d[star_pos];
      out.curv_alpha = g.col_variance[star_pos];
      Eigen::VectorXd w_restricted(g.col_count());
      for (Eigen::Index j = 0; j < g.col_count(); ++j)
        w_restricted[j] = w_base[g.global_index(j)];
      out.g_beta = w_restricted.dot(d);
      out.curv_beta = (g.rows * w_restricted).squaredNorm() /
                      static_cast<double>(g.draw_count());
      return out;
    }
    if constexpr (ExactCovarianceFamily<Model>) {
      const GaussianDist post = model_.weighted_posterior(omega);
      Eigen::VectorXd c, v;
      exact_cov_residual(post, omega, idx, c, v);
      out.g_alpha = -c[star_pos];
      out.curv_alpha = v[star_pos];
      if (idx == nullptr) {
        out.g_beta = w_base.dot(-c);
        out.curv_beta = model_.quadratic_form(post, w_base);
      } else {
        const Eigen::MatrixXd cov = model_.potential_cov_matrix(
            post, IndexSpan(idx->data(), idx->size()));
        Eigen::VectorXd w_restricted(cov.rows());
        for (Eigen::Index j = 0; j < w_restricted.size(); ++j)
          w_restricted[j] = w_base[(*idx)[static_cast<std::size_t>(j)]];
        out.g_beta = w_restricted.dot(-c);
        out.curv_beta = w_restricted.dot(cov * w_restricted);
      }
      return out;
    }
    throw CapabilityError("unreachable");
  }

  CenteredPotentialMatrix centered(const Eigen::VectorXd& w,
                                   const std::vector<Eigen::Index>* idx) {
    const Eigen::MatrixXd draws =
        sampler_.sample(model_, w, s_, rng_, &mode_hint_);
    return centered_potentials(model_, draws, idx);
  }

 private:
  // c[j] = cov_w[f_j, f^T a], v[j] = var_w[f_j] over the restriction, with
  // a = (1 - w) restricted. Restricted mode mirrors the Monte Carlo
  // estimator: the residual only runs over covered indices.
  void exact_cov_residual(const GaussianDist& post, const Eigen::VectorXd& w,
                          const std::vector<Eigen::Index>* idx,
                          Eigen::VectorXd& c, Eigen::VectorXd& v) const
    requires ExactCovarianceFamily<Model>
  {
    if (idx == nullptr) {
      const Eigen::VectorXd a = Eigen::VectorXd::Ones(w.size()) - w;
      c = model_.potential_cov_with(post, a);
      v = model_.potential_variances(post);
      return;
    }
    const Eigen::MatrixXd cov = model_.potential_cov_matrix(
        post, IndexSpan(idx->data(), idx->size()));
    Eigen::VectorXd a(cov.rows());
    for (Eigen::Index j = 0; j < a.size(); ++j)
      a[j] = 1.0 - w[(*idx)[static_cast<std::size_t>(j)]];
    c = cov * a;
    v = cov.diagonal();
  }

  const Model& model_;
  const PosteriorSampler& sampler_;
  Eigen::Index s_;
  bool exact_;
  Rng& rng_;
  Eigen::VectorXd mode_hint_;
};

// ---------------------------------------------------------------------------
// Weight updates
// ---------------------------------------------------------------------------

namespace detail {

// Positions of `targets` inside the restriction (or identity when full).
inline std::vector<Eigen::Index> positions_in(
    const std::vector<Eigen::Index>& targets,
    const std::vector<Eigen::Index>* idx) {
  if (idx == nullptr) return targets;
  std::vector<Eigen::Index> pos(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto it = std::lower_bound(idx->begin(), idx->end(), targets[k]);
    if (it == idx->end() || *it != targets[k])
      throw InputError("restriction does not cover an active index");
    pos[k] = static_cast<Eigen::Index>(it - idx->begin());
  }
  return pos;
}

}  // namespace detail

// T projected-SGD steps on the coordinates in `active`; gamma_t = gamma0/t,
// each coordinate's gradient preconditioned by its potential variance.
// Coordinates outside `active` are untouched.
template <PotentialFamily Model>
Eigen::VectorXd update_weights_sgd_core(
    MomentEstimator<Model>& est, Eigen::VectorXd w,
    const std::vector<Eigen::Index>& active, Eigen::Index t_steps,
    double gamma0, const std::vector<Eigen::Index>* restrict_to) {
  if (active.empty()) throw InputError("update_weights_sgd: empty active set");
  const auto pos = detail::positions_in(active, restrict_to);
  for (Eigen::Index t = 1; t <= t_steps; ++t) {
    const auto stats = est.gradient_with_curvature(w, restrict_to);
    const double gamma = gamma0 / static_cast<double>(t);
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double curv = stats.curvature[pos[k]];
      if (curv < kVarianceGuard) continue;
      w[active[k]] =
          std::max(0.0, w[active[k]] - gamma * stats.gradient[pos[k]] / curv);
    }
    if (!w.allFinite())
      throw NumericalError("update_weights_sgd: diverged at step " +
                           std::to_string(t) + " (reduce gamma0)");
  }
  return w;
}

// Scale-and-add update: optimize (alpha, beta) >= 0 for beta*w + alpha*1_n
// by projected SGD on the two scalars, using chain-rule gradients
// [d/dbeta; d/dalpha] = [w 1_n]^T grad_w KL, each preconditioned by the
// matching directional variance.
template <PotentialFamily Model>
Eigen::VectorXd update_weights_single_core(
    MomentEstimator<Model>& est, const Eigen::VectorXd& w, Eigen::Index n_star,
    Eigen::Index t_steps, double gamma0,
    const std::vector<Eigen::Index>* restrict_to) {
  double alpha = 0.0, beta = 1.0;
  std::vector<Eigen::Index> star{n_star};
  const auto star_pos = detail::positions_in(star, restrict_to);
  Eigen::VectorXd omega = w;
  for (Eigen::Index t = 1; t <= t_steps; ++t) {
    omega = beta * w;
    omega[n_star] += alpha;
    if (!omega.allFinite())
      throw NumericalError("update_weights_single: diverged at step " +
                           std::to_string(t) + " (reduce gamma0)");
    const auto stats = est.scale_add_stats(omega, w, star_pos[0], restrict_to);
    const double gamma = gamma0 / static_cast<double>(t);
    if (stats.curv_beta >= kVarianceGuard)
      beta = std::max(0.0, beta - gamma * stats.g_beta / stats.curv_beta);
    if (stats.curv_alpha >= kVarianceGuard)
      alpha = std::max(0.0, alpha - gamma * stats.g_alpha / stats.curv_alpha);
    if (!std::isfinite(alpha) || !std::isfinite(beta))
      throw NumericalError("update_weights_single: diverged at step " +
                           std::to_string(t) + " (reduce gamma0)");
  }
  omega = beta * w;
  omega[n_star] += alpha;
  return omega;
}

// Quadratic-model update: solve the nonnegative least squares problem
//   v* = argmin_{v >= 0, supp(v) in active} || L^T v - (L^T w - L^{-1} D) ||
// with L L^T = H = (1/S) sum_s g_s g_s^T (1 - g_s^T (1-w)), then blend
// w <- (1-gamma) w + gamma v*. Returns nullopt when H is not positive
// definite on the active coordinates; the caller falls back to SGD.
inline std::optional<Eigen::VectorXd> update_weights_quadratic(
    const CenteredPotentialMatrix& g, const Eigen::VectorXd& w,
    const std::vector<Eigen::Index>& active, double gamma) {
  if (active.empty())
    throw InputError("update_weights_quadratic: empty active set");
  const Eigen::VectorXd a = g.restrict_residual(w);
  const Eigen::VectorXd r = g.rows * a;  // per-draw residual projections
  const double s = static_cast<double>(g.draw_count());

  const auto pos = detail::positions_in(
      active, g.full() ? nullptr : &g.index_map);
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd g_act(g.draw_count(), k);
  for (Eigen::Index j = 0; j < k; ++j)
    g_act.col(j) = g.rows.col(pos[static_cast<std::size_t>(j)]);

  Eigen::VectorXd d_act = -(g_act.transpose() * r) / s;
  const Eigen::MatrixXd h =
      g_act.transpose() *
      (g_act.array().colwise() * (1.0 - r.array())).matrix() / s;
  const Eigen::MatrixXd h_sym = ((h + h.transpose()) / 2.0).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(h_sym);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXd l = llt.matrixL();
  if (l.diagonal().minCoeff() <=
      1e-10 * std::max(1.0, l.diagonal().maxCoeff()))
    return std::nullopt;

  Eigen::VectorXd w_act(k);
  for (Eigen::Index j = 0; j < k; ++j)
    w_act[j] = w[active[static_cast<std::size_t>(j)]];
  const Eigen::VectorXd target =
      l.transpose() * w_act -
      l.triangularView<Eigen::Lower>().solve(d_act);
  const Eigen::VectorXd v = nnls(l.transpose(), target);

  Eigen::VectorXd out = w;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index n = active[static_cast<std::size_t>(j)];
    out[n] = std::max(0.0, (1.0 - gamma) * w[n] + gamma * v[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Greedy construction (full algorithm)
// ---------------------------------------------------------------------------

enum class UpdateVariant { full_sgd, single, quadratic };

struct SparseViConfig {
  Eigen::Index iterations = 0;           // M: greedy iterations
  Eigen::Index samples = 100;            // S: draws per moment estimate
  Eigen::Index sgd_steps = 100;          // T: SGD steps per weight update
  double gamma0 = 1.0;                   // gamma_t = gamma0 / t
  std::optional<Eigen::Index> subsample; // U: restriction size for large N
  UpdateVariant variant = UpdateVariant::full_sgd;
  std::uint64_t seed = 0;
  bool force_monte_carlo = false;        // ignore closed-form covariances

  void validate(Eigen::Index n) const {
    if (iterations < 0 || samples < 0 || sgd_steps < 0)
      throw InputError("SparseViConfig: negative counts");
    if (!(gamma0 > 0.0)) throw InputError("SparseViConfig: gamma0 must be > 0");
    if (subsample && (*subsample < 1 || *subsample > n))
      throw InputError("SparseViConfig: subsample size out of range");
  }
};

// Observer invoked after each greedy iteration with the current weights and
// the construction time so far; observer time is not counted.
using ConstructionObserver =
    std::function<void(Eigen::Index m, const Weights& w, double elapsed_s)>;

// Greedy sparse variational construction: M rounds of sample -> center ->
// correlate -> select -> reweight. On models with closed-form covariances
// all moment computations skip Monte Carlo unless force_monte_carlo is set;
// the quadratic variant always uses draws since its curvature estimate is
// defined in terms of them.
template <PotentialFamily Model>
Weights sparse_vi(const Model& model, const PosteriorSampler& sampler,
                  const SparseViConfig& cfg,
                  const ConstructionObserver& observer = {}) {
  const Eigen::Index n = model.size();
  cfg.validate(n);
  const bool exact = [&] {
    if constexpr (ExactCovarianceFamily<Model>)
      return !cfg.force_monte_carlo && cfg.variant != UpdateVariant::quadratic;
    else
      return false;
  }();
  Rng rng(derive_seed(cfg.seed, "sparse-vi"));
  MomentEstimator<Model> est(model, sampler, cfg.samples, exact, rng);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> selected;  // insertion order, unique
  std::vector<char> selected_mask(static_cast<std::size_t>(n), 0);
  const bool restricted = cfg.subsample && *cfg.subsample < n;

  using Clock = std::chrono::steady_clock;
  double elapsed = 0.0;
  auto segment_start = Clock::now();

  for (Eigen::Index m = 1; m <= cfg.iterations; ++m) {
    try {
      // Restriction I \cup U with U fresh each greedy iteration.
      std::vector<Eigen::Index> covered;
      const std::vector<Eigen::Index>* idx = nullptr;
      if (restricted) {
        covered = rng.sample_without_replacement(n, *cfg.subsample);
        std::vector<Eigen::Index> sel_sorted = selected;
        std::sort(sel_sorted.begin(), sel_sorted.end());
        std::vector<Eigen::Index> merged;
        merged.reserve(covered.size() + sel_sorted.size());
        std::set_union(covered.begin(), covered.end(), sel_sorted.begin(),
                       sel_sorted.end(), std::back_inserter(merged));
        covered = std::move(merged);
        idx = &covered;
      }

      CenteredPotentialMatrix sel_draws;  // reused by the quadratic update
      Eigen::VectorXd corr;
      if (cfg.variant == UpdateVariant::quadratic) {
        sel_draws = est.centered(w, idx);
        corr = estimate_correlations(sel_draws, w);
      } else {
        corr = est.correlations(w, idx);
      }
      std::vector<char> active_local(static_cast<std::size_t>(corr.size()), 0);
      if (idx == nullptr) {
        active_local = selected_mask;
      } else {
        for (std::size_t j = 0; j < idx->size(); ++j)
          active_local[j] = selected_mask[static_cast<std::size_t>((*idx)[j])];
      }
      const Eigen::Index local = select_greedy(corr, active_local);
      const Eigen::Index n_star =
          idx == nullptr ? local : (*idx)[static_cast<std::size_t>(local)];
      if (!selected_mask[static_cast<std::size_t>(n_star)]) {
        selected_mask[static_cast<std::size_t>(n_star)] = 1;
        selected.push_back(n_star);
      }

      switch (cfg.variant) {
        case UpdateVariant::full_sgd:
          w = update_weights_sgd_core(est, std::move(w), selected,
                                      cfg.sgd_steps, cfg.gamma0, idx);
          break;
        case UpdateVariant::single:
          w = update_weights_single_core(est, w, n_star, cfg.sgd_steps,
                                         cfg.gamma0, idx);
          break;
        case UpdateVariant::quadratic: {
          const double gamma = cfg.gamma0 / static_cast<double>(m);
          auto updated = update_weights_quadratic(sel_draws, w, selected, gamma);
          if (updated) {
            w = std::move(*updated);
          } else {
            // Indefinite curvature estimate: take one SGD step instead.
            const auto stats = est.gradient_with_curvature(w, idx);
            const auto pos = detail::positions_in(selected, idx);
            for (std::size_t k = 0; k < selected.size(); ++k) {
              const double curv = stats.curvature[pos[k]];
              if (curv < kVarianceGuard) continue;
              w[selected[k]] = std::max(
                  0.0, w[selected[k]] - gamma * stats.gradient[pos[k]] / curv);
            }
          }
          break;
        }
      }
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("sparse_vi iteration " + std::to_string(m) +
                                 ": " + e.what(),
                             e.last_iterate());
    } catch (const NumericalError& e) {
      throw NumericalError("sparse_vi iteration " + std::to_string(m) + ": " +
                           e.what());
    }

    if (observer) {
      elapsed += std::chrono::duration<double>(Clock::now() - segment_start)
                     .count();
      observer(m, Weights::from_values(w), elapsed);
      segment_start = Clock::now();
    }
  }
  return Weights::from_values(w);
}

// Spec-shaped wrappers over the cores, for direct use and tests. The active
// coordinates are the support of `w`.
template <PotentialFamily Model>
Weights update_weights_sgd(const Model& model, const PosteriorSampler& sampler,
                           const Weights& w, Eigen::Index t_steps,
                           double gamma0, Eigen::Index samples, Rng& rng,
                           std::optional<Eigen::Index> subsample = {},
                           bool force_monte_carlo = false) {
  const bool exact = [&] {
    if constexpr (ExactCovarianceFamily<Model>) return !force_monte_carlo;
    else return false;
  }();
  MomentEstimator<Model> est(model, sampler, samples, exact, rng);
  std::vector<Eigen::Index> covered;
  const std::vector<Eigen::Index>* idx = nullptr;
  if (subsample && *subsample < model.size()) {
    covered = rng.sample_without_replacement(model.size(), *subsample);
    std::vector<Eigen::Index> sel = w.active;
    std::sort(sel.begin(), sel.end());
    std::vector<Eigen::Index> merged;
    std::set_union(covered.begin(), covered.end(), sel.begin(), sel.end(),
                   std::back_inserter(merged));
    covered = std::move(merged);
    idx = &covered;
  }
  return Weights::from_values(update_weights_sgd_core(
      est, w.values, w.active, t_steps, gamma0, idx));
}

template <PotentialFamily Model>
Weights update_weights_single(const Model& model,
                              const PosteriorSampler& sampler,
                              const Weights& w, Eigen::Index n_star,
                              Eigen::Index t_steps, double gamma0,
                              Eigen::Index samples, Rng& rng,
                              bool force_monte_carlo = false) {
  if (n_star < 0 || n_star >= model.size())
    throw InputError("update_weights_single: bad index");
  const bool exact = [&] {
    if constexpr (ExactCovarianceFamily<Model>) return !force_monte_carlo;
    else return false;
  }();
  MomentEstimator<Model> est(model, sampler, samples, exact, rng);
  return Weights::from_values(update_weights_single_core(
      est, w.values, n_star, t_steps, gamma0, nullptr));
}

// ---------------------------------------------------------------------------
// l1-regularized construction
// ---------------------------------------------------------------------------

// Prior-predictive potential scales var_0[f_n], closed-form where available,
// Monte Carlo under the prior otherwise (1/S normalization throughout).
template <PotentialFamily Model>
Eigen::VectorXd potential_prior_scales(const Model& model, Eigen::Index samples,
                                       std::uint64_t seed,
                                       bool force_monte_carlo = false) {
  if constexpr (ExactCovarianceFamily<Model>) {
    if (!force_monte_carlo) {
      const GaussianDist post =
          model.weighted_posterior(Eigen::VectorXd::Zero(model.size()));
      return model.potential_variances(post);
    }
  }
  Rng rng(derive_seed(seed, "prior-scales"));
  const Eigen::MatrixXd draws = model.prior().sample(samples, rng);
  const CenteredPotentialMatrix g = centered_potentials(model, draws);
  return g.col_variance;
}

// Upper end of the regularization path: max_n |cov_0[f_n, f^T 1]|.
template <PotentialFamily Model>
double l1_lambda_upper(const Model& model, Eigen::Index samples,
                       std::uint64_t seed, bool force_monte_carlo = false) {
  if constexpr (ExactCovarianceFamily<Model>) {
    if (!force_monte_carlo) {
      const GaussianDist post =
          model.weighted_posterior(Eigen::VectorXd::Zero(model.size()));
      return model.potential_cov_with(post, Eigen::VectorXd::Ones(model.size()))
          .cwiseAbs()
          .maxCoeff();
    }
  }
  Rng rng(derive_seed(seed, "lambda-upper"));
  const Eigen::MatrixXd draws = model.prior().sample(samples, rng);
  const CenteredPotentialMatrix g = centered_potentials(model, draws);
  return estimate_kl_gradient(g, Eigen::VectorXd::Zero(model.size()))
      .cwiseAbs()
      .maxCoeff();
}

struct L1Config {
  double lambda = 0.0;
  Eigen::Index steps = 100;
  double gamma0 = 1.0;
  Eigen::Index samples = 100;
  std::uint64_t seed = 0;
  bool force_monte_carlo = false;
  Eigen::Index abort_above_nnz = 0;  // 0 disables the early return
};

struct L1Result {
  Weights w;
  bool aborted = false;
};

// Proximal gradient descent on KL(pi_w || pi) + lambda * scales^T w over
// w >= 0, in the same variance-preconditioned metric as the SGD updates
// (which leaves the lambda_u threshold semantics untouched: a coordinate
// stays at zero exactly when |D_n| <= lambda * scales_n). The shrinkage
// prox is composed with projection onto the nonnegative orthant (the sign
// factor is redundant there).
template <PotentialFamily Model>
L1Result l1_construct(const Model& model, const PosteriorSampler& sampler,
                      const Eigen::VectorXd& scales, const L1Config& cfg) {
  if (cfg.lambda < 0.0) throw InputError("l1_construct: lambda must be >= 0");
  if (scales.size() != model.size())
    throw InputError("l1_construct: scales length mismatch");
  const bool exact = [&] {
    if constexpr (ExactCovarianceFamily<Model>) return !cfg.force_monte_carlo;
    else return false;
  }();
  Rng rng(derive_seed(cfg.seed, "l1"));
  MomentEstimator<Model> est(model, sampler, cfg.samples, exact, rng);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(model.size());
  for (Eigen::Index t = 1; t <= cfg.steps; ++t) {
    const double gamma = cfg.gamma0 / static_cast<double>(t);
    const auto stats = est.gradient_with_curvature(w, nullptr);
    for (Eigen::Index n = 0; n < w.size(); ++n) {
      const double curv = stats.curvature[n];
      if (curv < kVarianceGuard) continue;
      w[n] = std::max(0.0, w[n] - gamma * (stats.gradient[n] +
                                           cfg.lambda * scales[n]) /
                               curv);
    }
    if (!w.allFinite())
      throw NumericalError("l1_construct: diverged at step " +
                           std::to_string(t) + " (reduce gamma0)");
    if (cfg.abort_above_nnz > 0) {
      const Eigen::Index nnz = (w.array() > 0.0).count();
      if (nnz > cfg.abort_above_nnz)
        return L1Result{Weights::from_values(w), true};
    }
  }
  return L1Result{Weights::from_values(w), false};
}

struct L1SearchConfig {
  Eigen::Index target_size = 1;  // M
  Eigen::Index steps = 100;
  double gamma0 = 1.0;
  Eigen::Index samples = 100;
  std::uint64_t seed = 0;
  bool force_monte_carlo = false;
  int max_bisections = 20;
  Eigen::Index scale_samples = 1024;
};

struct L1SearchResult {
  Weights w;
  double lambda = 0.0;
  bool conforming = false;  // ||w||_0 <= M achieved
};

// Bisect the regularization strength for a solution with ||w||_0 <= M.
// Inner optimizations return early once the support exceeds 2M. Among
// conforming solutions the densest one (largest support) is kept.
template <PotentialFamily Model>
L1SearchResult l1_binary_search(const Model& model,
                                const PosteriorSampler& sampler,
                                const L1SearchConfig& cfg) {
  if (cfg.target_size < 1) throw InputError("l1_binary_search: M must be >= 1");
  const Eigen::VectorXd scales = potential_prior_scales(
      model, cfg.scale_samples, cfg.seed, cfg.force_monte_carlo);
  L1Config run;
  run.steps = cfg.steps;
  run.gamma0 = cfg.gamma0;
  run.samples = cfg.samples;
  run.seed = cfg.seed;
  run.force_monte_carlo = cfg.force_monte_carlo;
  run.abort_above_nnz = 2 * cfg.target_size;

  const auto attempt = [&](double lambda) {
    run.lambda = lambda;
    return l1_construct(model, sampler, scales, run);
  };

  L1SearchResult best;
  best.conforming = false;
  Eigen::Index best_nnz = -1;
  Eigen::Index sparsest_nnz = std::numeric_limits<Eigen::Index>::max();
  const auto consider = [&](const L1Result& r, double lambda) {
    const Eigen::Index nnz = r.w.nnz();
    if (!r.aborted && nnz <= cfg.target_size) {
      if (nnz > best_nnz) {
        best = L1SearchResult{r.w, lambda, true};
        best_nnz = nnz;
      }
      return true;
    }
    if (!best.conforming && nnz < sparsest_nnz) {
      best = L1SearchResult{r.w, lambda, false};
      sparsest_nnz = nnz;
    }
    return false;
  };

  if (cfg.target_size >= model.size()) {
    // The cardinality constraint is vacuous: no shrinkage needed.
    run.abort_above_nnz = 0;
    const L1Result r = attempt(0.0);
    return L1SearchResult{r.w, 0.0, true};
  }

  double lo = 0.0;
  double hi = l1_lambda_upper(model, cfg.scale_samples, cfg.seed,
                              cfg.force_monte_carlo);
  consider(attempt(hi), hi);
  for (int b = 0; b < cfg.max_bisections; ++b) {
    const double mid = 0.5 * (lo + hi);
    if (consider(attempt(mid), mid))
      hi = mid;
    else
      lo = mid;
  }
  return best;
}

}  // namespace coreset
