#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coreset/models/gaussian_mean.hpp"
#include "coreset/models/glm.hpp"
#include "coreset/posterior.hpp"
#include "oracles.hpp"

using namespace coreset;

namespace {

GaussianMeanModel gauss_model(Eigen::Index n, Eigen::Index d,
                              std::uint64_t seed) {
  Rng rng(seed);
  return GaussianMeanModel(rng.normal_matrix(n, d), Eigen::VectorXd::Zero(d),
                           Eigen::MatrixXd::Identity(d, d),
                           Eigen::MatrixXd::Identity(d, d));
}

GlmModel logistic_synthetic(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd x = rng.normal_matrix(n, 2);
  const Eigen::VectorXd theta = (Eigen::VectorXd(3) << 3.0, 3.0, 0.0).finished();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = x(i, 0) * theta[0] + x(i, 1) * theta[1] + theta[2];
    y[i] = rng.uniform() < sigmoid(u) ? 1.0 : -1.0;
  }
  return GlmModel(GlmModel::Kind::logistic, x, y,
                  GaussianDist(Eigen::VectorXd::Zero(3),
                               Eigen::MatrixXd::Identity(3, 3)));
}

// Minimal smooth family whose log joint is convex; used to hit the
// indefinite-Hessian error path.
struct ConvexStub {
  GaussianDist prior_dist{Eigen::VectorXd::Zero(1),
                          Eigen::MatrixXd::Identity(1, 1)};
  Eigen::Index size() const { return 1; }
  Eigen::Index dim() const { return 1; }
  const GaussianDist& prior() const { return prior_dist; }
  Eigen::VectorXd potentials(const Eigen::VectorXd& th) const {
    return Eigen::VectorXd::Constant(1, th[0] * th[0]);
  }
  Eigen::VectorXd potentials(const Eigen::VectorXd& th, IndexSpan) const {
    return potentials(th);
  }
  double log_joint(const Eigen::VectorXd& th, const Eigen::VectorXd& w) const {
    return (2.0 * w[0] - 0.5) * th[0] * th[0] + th[0];
  }
  Eigen::VectorXd log_joint_gradient(const Eigen::VectorXd& th,
                                     const Eigen::VectorXd& w) const {
    return Eigen::VectorXd::Constant(1, (4.0 * w[0] - 1.0) * th[0] + 1.0);
  }
  Eigen::MatrixXd log_joint_hessian(const Eigen::VectorXd&,
                                    const Eigen::VectorXd& w) const {
    return Eigen::MatrixXd::Constant(1, 1, 4.0 * w[0] - 1.0);
  }
};

}  // namespace

TEST_CASE("laplace equals the conjugate posterior on gaussian models") {
  const auto model = gauss_model(10, 3, 21);
  Rng rng(22);
  Eigen::VectorXd w(10);
  for (Eigen::Index i = 0; i < 10; ++i) w[i] = rng.uniform(0.0, 2.0);
  const GaussianDist lap = laplace_approximation(model, w);
  const GaussianDist exact = model.weighted_posterior(w);
  REQUIRE((lap.mean() - exact.mean()).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE((lap.cov() - exact.cov()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("laplace mode is zero on a sign-symmetric logistic dataset") {
  // Closed under (x, y) -> (-x, -y) and under label flips, so the weighted
  // log joint is even in theta and the prior mean 0 is the mode.
  Eigen::MatrixXd x(8, 1);
  x << 0.7, 0.7, -0.7, -0.7, 2.1, 2.1, -2.1, -2.1;
  Eigen::VectorXd y(8);
  y << 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0;
  const GlmModel model(GlmModel::Kind::logistic, x, y,
                       GaussianDist(Eigen::VectorXd::Zero(2),
                                    Eigen::MatrixXd::Identity(2, 2)));
  const GaussianDist lap =
      laplace_approximation(model, Eigen::VectorXd::Ones(8));
  REQUIRE(lap.mean().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("laplace satisfies its first-order optimality contract") {
  const auto model = logistic_synthetic(40, 23);
  Rng rng(24);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(40);
  for (Eigen::Index i = 0; i < 12; ++i)
    w[static_cast<Eigen::Index>(rng.uniform_below(40))] = rng.uniform(0.2, 3.0);
  const GaussianDist lap = laplace_approximation(model, w);
  REQUIRE(model.log_joint_gradient(lap.mean(), w).norm() <= 1e-8);
}

TEST_CASE("laplace error paths are typed") {
  const auto model = logistic_synthetic(30, 25);
  SamplerConfig cfg;
  cfg.newton_max_iter = 0;
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(30);
  try {
    laplace_approximation(model, w, cfg);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    REQUIRE(e.last_iterate().size() == 3);
  }
  // Convex log joint: negative Hessian is indefinite.
  REQUIRE_THROWS_AS(
      laplace_approximation(ConvexStub{}, Eigen::VectorXd::Ones(1)),
      NumericalError);
}

TEST_CASE("exact-conjugate sampling from the prior hits mu0 within 4 SE") {
  const auto model = gauss_model(6, 2, 26);
  PosteriorSampler sampler{SamplerStrategy::exact_conjugate};
  Rng rng(27);
  const Eigen::MatrixXd draws =
      sampler.sample(model, Eigen::VectorXd::Zero(6), 100000, rng);
  const Eigen::VectorXd mean = draws.colwise().mean();
  const double se = 1.0 / std::sqrt(100000.0);  // prior stdev is 1
  REQUIRE((mean - model.prior().mean()).cwiseAbs().maxCoeff() < 4.0 * se);
}

TEST_CASE("exact-conjugate draw covariance matches Sigma_w within 3 SE") {
  const auto model = gauss_model(8, 2, 28);
  Rng wr(29);
  Eigen::VectorXd w(8);
  for (Eigen::Index i = 0; i < 8; ++i) w[i] = wr.uniform(0.0, 1.5);
  const GaussianDist post = model.weighted_posterior(w);
  PosteriorSampler sampler{SamplerStrategy::exact_conjugate};
  Rng rng(30);
  const Eigen::Index s = 100000;
  const Eigen::MatrixXd draws = sampler.sample(model, w, s, rng);
  const Eigen::MatrixXd centered = draws.rowwise() - draws.colwise().mean();
  const Eigen::MatrixXd sample_cov =
      centered.transpose() * centered / static_cast<double>(s - 1);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double se = std::sqrt((post.cov()(i, i) * post.cov()(j, j) +
                                   post.cov()(i, j) * post.cov()(i, j)) /
                                  static_cast<double>(s));
      REQUIRE(std::abs(sample_cov(i, j) - post.cov()(i, j)) < 3.0 * se);
    }
}

TEST_CASE("laplace sampling agrees with exact sampling on conjugate models") {
  const auto model = gauss_model(8, 2, 31);
  Rng wr(32);
  Eigen::VectorXd w(8);
  for (Eigen::Index i = 0; i < 8; ++i) w[i] = wr.uniform(0.0, 1.5);
  PosteriorSampler exact{SamplerStrategy::exact_conjugate};
  PosteriorSampler lap{SamplerStrategy::laplace};
  Rng r1(33), r2(34);
  const Eigen::Index s = 100000;
  const Eigen::MatrixXd d1 = exact.sample(model, w, s, r1);
  const Eigen::MatrixXd d2 = lap.sample(model, w, s, r2);
  // Two-sample agreement of means and covariances at Monte Carlo tolerance.
  const GaussianDist post = model.weighted_posterior(w);
  const double mean_tol =
      8.0 * std::sqrt(post.cov().diagonal().maxCoeff() / s);
  REQUIRE((d1.colwise().mean() - d2.colwise().mean()).cwiseAbs().maxCoeff() <
          mean_tol);
  const auto cov_of = [&](const Eigen::MatrixXd& d) {
    const Eigen::MatrixXd c = d.rowwise() - d.colwise().mean();
    return Eigen::MatrixXd(c.transpose() * c / static_cast<double>(s - 1));
  };
  REQUIRE((cov_of(d1) - cov_of(d2)).cwiseAbs().maxCoeff() <
          8.0 * post.cov().cwiseAbs().maxCoeff() / std::sqrt(s));
}

TEST_CASE("laplace-mh acceptance rate sits in the healthy band") {
  const auto model = logistic_synthetic(50, 35);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(50);
  const GaussianDist lap = laplace_approximation(model, w);
  const double scale = 2.38 * 2.38 / 3.0;
  Rng rng(36);
  const MhResult res = mh_chain(model, w, lap.mean(),
                                std::sqrt(scale) * lap.chol(), 200, 500, 10,
                                rng);
  REQUIRE(res.acceptance_rate > 0.1);
  REQUIRE(res.acceptance_rate < 0.9);
  REQUIRE(res.draws.rows() == 200);
  REQUIRE(res.draws.allFinite());
}

TEST_CASE("laplace-mh draws concentrate near the posterior mode") {
  const auto model = logistic_synthetic(60, 37);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(60);
  PosteriorSampler sampler{SamplerStrategy::laplace_mh};
  Rng rng(38);
  const Eigen::MatrixXd draws = sampler.sample(model, w, 400, rng);
  const GaussianDist lap = laplace_approximation(model, w);
  const Eigen::VectorXd mean = draws.colwise().mean();
  // Chain mean within a few posterior standard deviations of the mode.
  for (Eigen::Index j = 0; j < 3; ++j)
    REQUIRE(std::abs(mean[j] - lap.mean()[j]) <
            5.0 * std::sqrt(lap.cov()(j, j)));
}

TEST_CASE("sampling is deterministic given the seed") {
  const auto model = gauss_model(5, 2, 39);
  PosteriorSampler sampler{SamplerStrategy::exact_conjugate};
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(5);
  Rng r1(40), r2(40);
  const Eigen::MatrixXd d1 = sampler.sample(model, w, 50, r1);
  const Eigen::MatrixXd d2 = sampler.sample(model, w, 50, r2);
  REQUIRE(d1 == d2);
}

TEST_CASE("sampler rejects invalid requests") {
  const auto model = gauss_model(5, 2, 41);
  PosteriorSampler sampler{SamplerStrategy::exact_conjugate};
  Rng rng(42);
  REQUIRE_THROWS_AS(sampler.sample(model, Eigen::VectorXd::Ones(5), 0, rng),
                    InputError);
  const auto glm = logistic_synthetic(10, 43);
  PosteriorSampler bad{SamplerStrategy::exact_conjugate};
  REQUIRE_THROWS_AS(bad.sample(glm, Eigen::VectorXd::Ones(10), 5, rng),
                    CapabilityError);
}
