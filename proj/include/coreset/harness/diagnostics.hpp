#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "coreset/geometry.hpp"
#include "coreset/models/gaussian_mean.hpp"
#include "coreset/sparse_vi.hpp"

namespace coreset {

struct DiagReport {
  std::string name;
  bool pass = false;
  std::vector<std::string> lines;
};

namespace detail {

inline GaussianMeanModel diag_model(Eigen::Index n, Eigen::Index d,
                                    std::uint64_t seed) {
  Rng rng(seed);
  return GaussianMeanModel(rng.normal_matrix(n, d), Eigen::VectorXd::Zero(d),
                           Eigen::MatrixXd::Identity(d, d),
                           Eigen::MatrixXd::Identity(d, d));
}

inline std::string fmt(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

}  // namespace detail

// Path-integral identities for the KL divergence: Gauss-Legendre quadrature
// of the metric along the straight path reproduces the closed-form Gaussian
// KL divergences (directed and symmetrized) to 1e-6 relative.
inline DiagReport check_path_integrals(std::uint64_t seed = 3,
                                       int points = 10, int nodes = 50,
                                       double tol = 1e-6) {
  DiagReport report{"path-integral identities (lemma)", true, {}};
  const auto model = detail::diag_model(30, 5, seed);
  Rng rng(derive_seed(seed, "path-kl"));
  for (int rep = 0; rep < points; ++rep) {
    Eigen::VectorXd w(30);
    for (Eigen::Index i = 0; i < 30; ++i) w[i] = rng.uniform(0.0, 1.5);
    const auto est = symmetrized_kl_quadrature(model, w, nodes);
    const GaussianDist pw = model.weighted_posterior(w);
    const GaussianDist p1 =
        model.weighted_posterior(Eigen::VectorXd::Ones(30));
    const double fwd = gaussian_kl(pw, p1);
    const double rev = gaussian_kl(p1, pw);
    const double sym = fwd + rev;
    const double err_f = std::abs(est.forward - fwd) / std::max(1e-300, fwd);
    const double err_r = std::abs(est.reverse - rev) / std::max(1e-300, rev);
    const double err_s =
        std::abs(est.symmetrized - sym) / std::max(1e-300, sym);
    const double worst = std::max({err_f, err_r, err_s});
    if (worst > tol) report.pass = false;
    report.lines.push_back(detail::fmt(
        "point %.0f: worst relative error %.3g", static_cast<double>(rep),
        worst));
  }
  return report;
}

// Greedy selection equivalence: the correlation argmax equals the
// grid-search minimizer of the geodesic-tangent misalignment over (n, t).
inline DiagReport check_alignment_rule(std::uint64_t seed = 4,
                                       int instances = 10, int grid = 200,
                                       double t_max = 5.0) {
  DiagReport report{"greedy selection vs tangent alignment (prop1)", true, {}};
  for (int inst = 0; inst < instances; ++inst) {
    const auto model =
        detail::diag_model(10, 2, seed + static_cast<std::uint64_t>(inst));
    Rng rng(derive_seed(seed, "align", {static_cast<std::uint64_t>(inst)}));
    Eigen::VectorXd w(10);
    for (Eigen::Index i = 0; i < 10; ++i)
      w[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.5, 1.3);

    Eigen::VectorXd corr(10);
    for (Eigen::Index n = 0; n < 10; ++n)
      corr[n] = greedy_alignment_score(model, w, n);
    const Eigen::Index rule_pick =
        select_greedy(corr, Weights::from_values(w));

    const Eigen::MatrixXd g = fisher_metric_exact(model, w);
    const Eigen::VectorXd a = Eigen::VectorXd::Ones(10) - w;
    const Eigen::VectorXd ga = g * a;
    Eigen::Index best_n = -1;
    double best_val = std::numeric_limits<double>::infinity();
    for (Eigen::Index n = 0; n < 10; ++n) {
      const bool active = w[n] > 0.0;
      for (int k = 0; k < grid; ++k) {
        const double t = t_max * (k + 1) / grid;
        for (const double tt : {t, active ? -t : t}) {
          const double val = tt * tt * g(n, n) - 2.0 * tt * ga[n];
          if (val < best_val) {
            best_val = val;
            best_n = n;
          }
        }
      }
    }
    const bool ok = rule_pick == best_n;
    if (!ok) report.pass = false;
    report.lines.push_back(
        "instance " + std::to_string(inst) + ": rule=" +
        std::to_string(rule_pick) + " grid=" + std::to_string(best_n) +
        (ok ? " (match)" : " (MISMATCH)"));
  }
  return report;
}

// Metric-variation bound: symmetrized KL <= C(w; what) * J(w; what) + 1e-8
// on random weight pairs of an instance with a positive-definite reference
// metric.
inline DiagReport check_kl_bound(std::uint64_t seed = 5, int pairs = 20,
                                 double slack = 1e-8) {
  DiagReport report{"symmetrized-KL bound (prop2)", true, {}};
  const auto model = detail::diag_model(6, 8, seed);
  Rng rng(derive_seed(seed, "bound"));
  for (int rep = 0; rep < pairs; ++rep) {
    Eigen::VectorXd w(6), what(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      w[i] = rng.uniform(0.0, 1.2);
      what[i] = rng.uniform(0.0, 1.2);
    }
    const double j = hilbert_objective(model, w, what);
    const double c = bound_constant(model, w, what);
    const GaussianDist pw = model.weighted_posterior(w);
    const GaussianDist p1 = model.weighted_posterior(Eigen::VectorXd::Ones(6));
    const double sym = gaussian_kl(pw, p1) + gaussian_kl(p1, pw);
    const bool ok = sym <= c * j + slack;
    if (!ok) report.pass = false;
    report.lines.push_back(
        detail::fmt("pair: sym-KL %.6g vs bound %.6g", sym, c * j) +
        (ok ? "" : " (VIOLATION)"));
  }
  return report;
}

}  // namespace coreset
