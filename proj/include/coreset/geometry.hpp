#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>

#include "coreset/error.hpp"
#include "coreset/model.hpp"
#include "coreset/posterior.hpp"
#include "coreset/quadrature.hpp"
#include "coreset/rng.hpp"
#include "coreset/sparse_vi.hpp"

namespace coreset {

// Full matrix of potential covariances under pi_w: the Fisher information
// metric of the coreset family at w, G(w) = cov_w[f].
template <ExactCovarianceFamily M>
Eigen::MatrixXd fisher_metric_exact(const M& model, const Eigen::VectorXd& w) {
  const GaussianDist post = model.weighted_posterior(w);
  const auto idx = detail::all_indices(model.size());
  return model.potential_cov_matrix(post, IndexSpan(idx.data(), idx.size()));
}

template <PotentialFamily M>
Eigen::MatrixXd fisher_metric_mc(const M& model, const PosteriorSampler& sampler,
                                 const Eigen::VectorXd& w, Eigen::Index s,
                                 Rng& rng) {
  if (s < 2) throw InputError("fisher_metric_mc: need at least two draws");
  const Eigen::MatrixXd draws = sampler.sample(model, w, s, rng);
  const CenteredPotentialMatrix g = centered_potentials(model, draws);
  return g.rows.transpose() * g.rows / static_cast<double>(s);
}

enum class MetricBackend { exact, monte_carlo };

// Uniform callable front over the two metric backends.
template <PotentialFamily M>
class MetricEvaluator {
 public:
  static MetricEvaluator exact(const M& model) {
    MetricEvaluator ev(model);
    ev.backend_ = MetricBackend::exact;
    return ev;
  }

  static MetricEvaluator monte_carlo(const M& model,
                                     const PosteriorSampler& sampler,
                                     Eigen::Index s, std::uint64_t seed) {
    MetricEvaluator ev(model);
    ev.backend_ = MetricBackend::monte_carlo;
    ev.sampler_ = sampler;
    ev.samples_ = s;
    ev.seed_ = seed;
    return ev;
  }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& w) const {
    if (backend_ == MetricBackend::exact) {
      if constexpr (ExactCovarianceFamily<M>) {
        return fisher_metric_exact(*model_, w);
      } else {
        throw CapabilityError("exact metric requires closed-form covariances");
      }
    }
    // Fresh deterministic stream per call, salted by the call counter.
    Rng rng(derive_seed(seed_, "metric", {static_cast<std::uint64_t>(calls_++)}));
    return fisher_metric_mc(*model_, sampler_, w, samples_, rng);
  }

 private:
  explicit MetricEvaluator(const M& model) : model_(&model) {}
  const M* model_;
  MetricBackend backend_ = MetricBackend::exact;
  PosteriorSampler sampler_ = {};
  Eigen::Index samples_ = 100;
  std::uint64_t seed_ = 0;
  mutable std::uint64_t calls_ = 0;
};

// Squared misalignment of the initial geodesic tangents toward the full
// posterior and toward w, measured in the metric at the reference weights:
// J(w; what) = (1-w)^T G(what) (1-w).
template <ExactCovarianceFamily M>
double hilbert_objective(const M& model, const Eigen::VectorXd& w,
                         const Eigen::VectorXd& what) {
  const GaussianDist post = model.weighted_posterior(what);
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(model.size()) - w;
  return model.quadratic_form(post, a);
}

// Full correlation corr_w[f_n, f^T (1-w)], the scale-free greedy selection
// score. Zero-variance guards match the Monte Carlo estimator.
template <ExactCovarianceFamily M>
double greedy_alignment_score(const M& model, const Eigen::VectorXd& w,
                              Eigen::Index n) {
  const GaussianDist post = model.weighted_posterior(w);
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(model.size()) - w;
  const double c = model.potential_cov_with(post, a)[n];
  const double v = model.potential_variances(post)[n];
  const double resid_var = model.quadratic_form(post, a);
  if (v < kVarianceGuard || resid_var < kVarianceGuard) return 0.0;
  return c / std::sqrt(v * resid_var);
}

// Directed and symmetrized KL divergences between pi_w and pi_1 expressed
// as integrals of the metric along the straight path gamma(t) = (1-t)w + t1:
//   KL(pi_w || pi)              = int_0^1 (1-t) h(t) dt
//   KL(pi || pi_w)              = int_0^1 t h(t) dt
//   KL(pi_w||pi) + KL(pi||pi_w) = int_0^1 h(t) dt
// with h(t) = (1-w)^T G(gamma(t)) (1-w).
struct PathKlEstimate {
  double symmetrized = 0.0;
  double forward = 0.0;  // KL(pi_w || pi)
  double reverse = 0.0;  // KL(pi || pi_w)
};

// Quadrature over a caller-supplied h(t).
template <class F>
PathKlEstimate path_kl_quadrature(F&& h, const GaussLegendre& gl) {
  PathKlEstimate out;
  for (Eigen::Index i = 0; i < gl.nodes.size(); ++i) {
    const double t = gl.nodes[i];
    const double ht = h(t);
    out.symmetrized += gl.weights[i] * ht;
    out.forward += gl.weights[i] * (1.0 - t) * ht;
    out.reverse += gl.weights[i] * t * ht;
  }
  return out;
}

template <ExactCovarianceFamily M>
PathKlEstimate symmetrized_kl_quadrature(const M& model,
                                         const Eigen::VectorXd& w,
                                         int nodes = 50) {
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(model.size()) - w;
  const auto h = [&](double t) {
    const Eigen::VectorXd gamma = w + t * a;
    return model.quadratic_form(model.weighted_posterior(gamma), a);
  };
  return path_kl_quadrature(h, GaussLegendre::unit_interval(nodes));
}

// Monte Carlo over the path position. The symmetrized estimate averages
// h(U) with U ~ Unif[0,1]; the directed estimates average h at Beta(1,2)
// and Beta(2,1) positions with a 1/2 factor so that their expectations
// equal the directed integrals above.
template <ExactCovarianceFamily M>
PathKlEstimate symmetrized_kl_mc_path(const M& model, const Eigen::VectorXd& w,
                                      Eigen::Index samples, Rng& rng) {
  if (samples < 1) throw InputError("symmetrized_kl_mc_path: need samples");
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(model.size()) - w;
  const auto h = [&](double t) {
    const Eigen::VectorXd gamma = w + t * a;
    return model.quadratic_form(model.weighted_posterior(gamma), a);
  };
  PathKlEstimate out;
  for (Eigen::Index i = 0; i < samples; ++i) {
    out.symmetrized += h(rng.uniform());
    out.forward += 0.5 * h(1.0 - std::sqrt(rng.uniform()));  // Beta(1,2)
    out.reverse += 0.5 * h(std::sqrt(rng.uniform()));        // Beta(2,1)
  }
  const double s = static_cast<double>(samples);
  out.symmetrized /= s;
  out.forward /= s;
  out.reverse /= s;
  return out;
}

// Metric-variation constant of the symmetrized-KL bound:
//   C(w; what) = int_0^1 lambda_max(G(what)^{-1/2} G(gamma(t)) G(what)^{-1/2}) dt.
// The product C * J upper-bounds the symmetrized KL divergence; C = 1 when
// the metric is constant along the path.
inline double bound_constant_fn(
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& metric,
    const Eigen::VectorXd& w, const Eigen::VectorXd& what, int nodes = 50) {
  const Eigen::MatrixXd g_ref = metric(what);
  Eigen::LLT<Eigen::MatrixXd> llt(
      ((g_ref + g_ref.transpose()) / 2.0).eval());
  if (llt.info() != Eigen::Success)
    throw NumericalError("bound_constant: reference metric not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  if (l.diagonal().minCoeff() <=
      1e-12 * std::max(1.0, l.diagonal().maxCoeff()))
    throw NumericalError("bound_constant: reference metric near-singular");
  const Eigen::VectorXd a = Eigen::VectorXd::Ones(w.size()) - w;
  const GaussLegendre gl = GaussLegendre::unit_interval(nodes);
  return gl.integrate([&](double t) {
    const Eigen::VectorXd gamma = w + t * a;
    const Eigen::MatrixXd g_t = metric(gamma);
    const Eigen::MatrixXd half =
        l.triangularView<Eigen::Lower>().solve(g_t);
    Eigen::MatrixXd whitened = l.triangularView<Eigen::Lower>()
                                   .solve(half.transpose())
                                   .transpose();
    whitened = ((whitened + whitened.transpose()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(whitened,
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw NumericalError("bound_constant: eigensolver failed");
    return es.eigenvalues().maxCoeff();
  });
}

template <ExactCovarianceFamily M>
double bound_constant(const M& model, const Eigen::VectorXd& w,
                      const Eigen::VectorXd& what, int nodes = 50) {
  return bound_constant_fn(
      [&](const Eigen::VectorXd& v) { return fisher_metric_exact(model, v); },
      w, what, nodes);
}

}  // namespace coreset
