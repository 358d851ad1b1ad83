#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coreset/models/gaussian_mean.hpp"
#include "coreset/models/glm.hpp"
#include "coreset/models/rbf_regression.hpp"
#include "oracles.hpp"

using namespace coreset;

namespace {

GaussianMeanModel toy_1d(std::vector<double> xs, double prior_var = 1.0,
                         double like_var = 1.0) {
  Eigen::MatrixXd data(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i)
    data(static_cast<Eigen::Index>(i), 0) = xs[i];
  return GaussianMeanModel(data, Eigen::VectorXd::Zero(1),
                           prior_var * Eigen::MatrixXd::Identity(1, 1),
                           like_var * Eigen::MatrixXd::Identity(1, 1));
}

GaussianMeanModel random_model(Eigen::Index n, Eigen::Index d,
                               std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd data = rng.normal_matrix(n, d);
  return GaussianMeanModel(data, Eigen::VectorXd::Zero(d),
                           Eigen::MatrixXd::Identity(d, d),
                           Eigen::MatrixXd::Identity(d, d));
}

RbfRegressionModel random_rbf(Eigen::Index n, Eigen::Index k,
                              std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd positions = rng.normal_matrix(n, 2);
  RbfBasis basis = RbfBasis::generate(positions, (k - 1) / 2,
                                      {0.5, 1.5}, seed + 1);
  const Eigen::MatrixXd feats = basis.features(positions);
  const Eigen::VectorXd y = rng.normal_vector(n);
  return RbfRegressionModel(y, feats, 0.5,
                            Eigen::VectorXd::Zero(feats.cols()), 2.0);
}

}  // namespace

TEST_CASE("weighted posterior: zero weights recover the prior") {
  const auto model = random_model(8, 3, 1);
  const GaussianDist post =
      model.weighted_posterior(Eigen::VectorXd::Zero(8));
  REQUIRE((post.mean() - model.prior().mean()).norm() < 1e-12);
  REQUIRE((post.cov() - model.prior().cov()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("weighted posterior: 1-d hand value and quadrature cross-check") {
  const auto model = toy_1d({1.0, 3.0});
  const GaussianDist post =
      model.weighted_posterior(Eigen::VectorXd::Ones(2));
  REQUIRE(post.cov()(0, 0) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  REQUIRE(post.mean()[0] == Catch::Approx(4.0 / 3.0).epsilon(1e-12));

  // Same moments from quadrature of the unnormalized density.
  const auto logpdf = [&](double th) {
    return -0.5 * th * th - 0.5 * (1.0 - th) * (1.0 - th) -
           0.5 * (3.0 - th) * (3.0 - th);
  };
  const auto mom = oracles::density_moments_1d(logpdf, -10.0, 10.0);
  REQUIRE(post.mean()[0] == Catch::Approx(mom.mean).epsilon(1e-6));
  REQUIRE(post.cov()(0, 0) == Catch::Approx(mom.var).epsilon(1e-6));
}

TEST_CASE("weighted posterior: identity covariances force Sigma/(N+1)") {
  const Eigen::Index n = 7, d = 3;
  const auto model = random_model(n, d, 2);
  const GaussianDist post = model.weighted_posterior(Eigen::VectorXd::Ones(n));
  const Eigen::MatrixXd expected =
      Eigen::MatrixXd::Identity(d, d) / static_cast<double>(n + 1);
  REQUIRE((post.cov() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("weighted posterior matches sequential conjugate updates") {
  // Independent oracle: fold data in one point at a time with the
  // single-observation update rule.
  const Eigen::Index n = 6, d = 2;
  Rng rng(3);
  const Eigen::MatrixXd data = rng.normal_matrix(n, d);
  Eigen::MatrixXd sigma0(2, 2), sigma(2, 2);
  sigma0 << 2.0, 0.3, 0.3, 1.0;
  sigma << 1.0, -0.2, -0.2, 0.5;
  const Eigen::VectorXd mu0 = (Eigen::VectorXd(2) << 0.5, -1.0).finished();
  const GaussianMeanModel model(data, mu0, sigma0, sigma);

  Eigen::MatrixXd cov = sigma0;
  Eigen::VectorXd mean = mu0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::MatrixXd gain = cov * (cov + sigma).inverse();
    mean = mean + gain * (data.row(i).transpose() - mean);
    cov = cov - gain * cov;
  }
  const GaussianDist post = model.weighted_posterior(Eigen::VectorXd::Ones(n));
  REQUIRE((post.mean() - mean).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE((post.cov() - cov).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("weighted posterior rejects bad weights") {
  const auto model = random_model(4, 2, 4);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  w[1] = std::nan("");
  REQUIRE_THROWS_AS(model.weighted_posterior(w), InputError);
  w[1] = -0.5;
  REQUIRE_THROWS_AS(model.weighted_posterior(w), InputError);
  REQUIRE_THROWS_AS(model.weighted_posterior(Eigen::VectorXd::Ones(3)),
                    InputError);
}

TEST_CASE("posterior shrinkage order in the PSD sense") {
  const auto model = random_model(10, 3, 5);
  Rng rng(6);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd w(10);
    for (Eigen::Index i = 0; i < 10; ++i) w[i] = rng.uniform(0.0, 2.0);
    const Eigen::Index n =
        static_cast<Eigen::Index>(rng.uniform_below(10));
    Eigen::VectorXd w2 = w;
    w2[n] += rng.uniform(0.1, 1.0);
    const Eigen::MatrixXd gap = model.weighted_posterior(w).cov() -
                                model.weighted_posterior(w2).cov();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gap);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("exact potential covariance: hand value 2.125") {
  // d=1, Sigma0=Sigma=1, single datum x=4, w=1: Sigma_w=1/2, mu_w=2,
  // nu=2, Psi=1/2 -> 2*0.5*2 + 0.5*0.25 = 2.125.
  const auto model = toy_1d({4.0});
  const Weights w = Weights::from_values(Eigen::VectorXd::Ones(1));
  const double cov = exact_potential_covariance(model, w, 0, 0);
  REQUIRE(cov == Catch::Approx(2.125).epsilon(1e-12));

  // Monte Carlo oracle: 10^6 draws agree within 1% relative.
  Rng rng(7);
  const GaussianDist post = model.weighted_posterior(w.values);
  const Eigen::Index s = 1000000;
  Eigen::VectorXd f(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const double th = post.mean()[0] + post.chol()(0, 0) * rng.normal();
    f[i] = -0.5 * (4.0 - th) * (4.0 - th);
  }
  const auto est = oracles::mc_covariance(f, f);
  REQUIRE(std::abs(est.cov - cov) / cov < 0.01);
}

TEST_CASE("exact potential covariance: nu terms vanish at the mean") {
  // Datum at the posterior mean: covariance reduces to 1/2 tr(Psi^T Psi).
  const auto model = toy_1d({0.0});
  const Weights w = Weights::from_values(Eigen::VectorXd::Ones(1));
  // mu_w = 0 = x_1, Sigma_w = 1/2, Psi = 1/2.
  REQUIRE(exact_potential_covariance(model, w, 0, 0) ==
          Catch::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("exact potential covariance is symmetric in its indices") {
  const auto model = random_model(6, 2, 8);
  Rng rng(9);
  Eigen::VectorXd wv(6);
  for (Eigen::Index i = 0; i < 6; ++i) wv[i] = rng.uniform(0.0, 1.5);
  const Weights w = Weights::from_values(wv);
  for (int rep = 0; rep < 5; ++rep) {
    const auto n = static_cast<Eigen::Index>(rng.uniform_below(6));
    const auto m = static_cast<Eigen::Index>(rng.uniform_below(6));
    REQUIRE(exact_potential_covariance(model, w, n, m) ==
            Catch::Approx(exact_potential_covariance(model, w, m, n))
                .epsilon(1e-12));
  }
}

TEMPLATE_TEST_CASE_SIG(
    "exact covariances agree with Monte Carlo within 3 standard errors",
    "[models]", ((int Which), Which), 0, 1) {
  // Runs for both closed-form models over 20 random (w, n, m) triples.
  const Eigen::Index n_data = 12;
  Rng rng(100 + Which);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd wv(n_data);
    for (Eigen::Index i = 0; i < n_data; ++i) wv[i] = rng.uniform(0.0, 1.2);
    const auto a = static_cast<Eigen::Index>(rng.uniform_below(n_data));
    const auto b = static_cast<Eigen::Index>(rng.uniform_below(n_data));
    const Eigen::Index s = 100000;

    const auto check = [&](const auto& model) {
      const GaussianDist post = model.weighted_posterior(wv);
      const double exact = model.potential_covariance(post, a, b);
      Rng draw_rng(derive_seed(200 + Which, {static_cast<std::uint64_t>(rep)}));
      const Eigen::MatrixXd draws = post.sample(s, draw_rng);
      Eigen::VectorXd fa(s), fb(s);
      for (Eigen::Index i = 0; i < s; ++i) {
        const Eigen::VectorXd th = draws.row(i).transpose();
        const std::vector<Eigen::Index> pair{a, b};
        const Eigen::VectorXd f =
            model.potentials(th, IndexSpan(pair.data(), pair.size()));
        fa[i] = f[0];
        fb[i] = f[1];
      }
      const auto est = oracles::mc_covariance(fa, fb);
      REQUIRE(std::abs(est.cov - exact) < 3.0 * est.stderr_);
    };

    if constexpr (Which == 0)
      check(random_model(n_data, 3, 50 + rep));
    else
      check(random_rbf(n_data, 7, 60 + rep));
  }
}

TEST_CASE("rbf regression posterior matches the stacked normal equations") {
  const auto model = random_rbf(15, 9, 11);
  Rng rng(12);
  Eigen::VectorXd wv(15);
  for (Eigen::Index i = 0; i < 15; ++i) wv[i] = rng.uniform(0.0, 2.0);

  // Oracle: dense precision assembled directly.
  const Eigen::MatrixXd b = model.feature_matrix();
  const Eigen::Index k = b.cols();
  Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(k, k) / 2.0;
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < 15; ++i) {
    prec += wv[i] / 0.5 * b.row(i).transpose() * b.row(i);
    shift += wv[i] / 0.5 * model.responses()[i] * b.row(i).transpose();
  }
  const Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd mean = cov * shift;

  const GaussianDist post = model.weighted_posterior(wv);
  REQUIRE((post.cov() - cov).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE((post.mean() - mean).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rbf basis generation is seeded and shaped per the recipe") {
  Rng rng(13);
  const Eigen::MatrixXd positions = rng.normal_matrix(40, 2);
  const std::vector<double> scales{0.2, 0.4, 0.8, 1.2, 1.6, 2.0};
  const RbfBasis b1 = RbfBasis::generate(positions, 50, scales, 99);
  const RbfBasis b2 = RbfBasis::generate(positions, 50, scales, 99);
  REQUIRE(b1.size() == 301);
  REQUIRE(b1.scales[300] == 100.0);
  REQUIRE((b1.centers - b2.centers).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((b1.centers.row(300).transpose() -
           positions.colwise().mean().transpose())
              .norm() < 1e-12);
  // All non-constant centers are data positions.
  for (Eigen::Index k = 0; k < 300; ++k) {
    double best = 1e9;
    for (Eigen::Index i = 0; i < positions.rows(); ++i)
      best = std::min(best, (positions.row(i) - b1.centers.row(k)).norm());
    REQUIRE(best == 0.0);
  }
}

TEST_CASE("logistic potentials at theta = 0") {
  Rng rng(14);
  const Eigen::MatrixXd x = rng.normal_matrix(9, 2);
  Eigen::VectorXd y(9);
  for (Eigen::Index i = 0; i < 9; ++i) y[i] = (i % 2 == 0) ? 1.0 : -1.0;
  const GlmModel model(GlmModel::Kind::logistic, x, y,
                       GaussianDist(Eigen::VectorXd::Zero(3),
                                    Eigen::MatrixXd::Identity(3, 3)));
  const Eigen::VectorXd f = model.potentials(Eigen::VectorXd::Zero(3));
  for (Eigen::Index i = 0; i < 9; ++i)
    REQUIRE(f[i] == Catch::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("poisson potential at u = 0, y = 1") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  const GlmModel model(GlmModel::Kind::poisson, x, y,
                       GaussianDist(Eigen::VectorXd::Zero(2),
                                    Eigen::MatrixXd::Identity(2, 2)));
  // theta = 0 makes z^T theta = 0: rate log 2, f = -log2 + log log 2.
  const Eigen::VectorXd f = model.potentials(Eigen::VectorXd::Zero(2));
  REQUIRE(f[0] == Catch::Approx(-std::log(2.0) + std::log(std::log(2.0)))
                      .epsilon(1e-12));
}

TEST_CASE("glm derivatives match finite differences") {
  Rng rng(15);
  for (auto kind : {GlmModel::Kind::logistic, GlmModel::Kind::poisson}) {
    const Eigen::Index n = 7, d = 2;
    const Eigen::MatrixXd x = rng.normal_matrix(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
      y[i] = kind == GlmModel::Kind::logistic
                 ? (rng.uniform() < 0.5 ? -1.0 : 1.0)
                 : std::floor(rng.uniform(0.0, 5.0));
    const GlmModel model(kind, x, y,
                         GaussianDist(Eigen::VectorXd::Zero(d + 1),
                                      Eigen::MatrixXd::Identity(d + 1, d + 1)));
    const Eigen::VectorXd theta = rng.normal_vector(d + 1);
    const GlmDerivatives der = model.derivatives(theta);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::vector<Eigen::Index> one{i};
      const auto fi = [&](const Eigen::VectorXd& th) {
        return model.potentials(th, IndexSpan(one.data(), 1))[0];
      };
      const Eigen::VectorXd fd = oracles::fd_gradient(fi, theta, 1e-5);
      const double scale = std::max(1.0, fd.norm());
      REQUIRE((der.gradient.row(i).transpose() - fd).norm() / scale < 1e-6);

      // Hessian contribution against finite differences of the gradient.
      const Eigen::VectorXd z = model.augmented_covariates().row(i).transpose();
      const Eigen::MatrixXd hess = der.hess_scale[i] * z * z.transpose();
      for (Eigen::Index j = 0; j < d + 1; ++j) {
        Eigen::VectorXd hi = theta, lo = theta;
        hi[j] += 1e-5;
        lo[j] -= 1e-5;
        const Eigen::VectorXd col =
            (model.derivatives(hi).gradient.row(i) -
             model.derivatives(lo).gradient.row(i))
                .transpose() /
            2e-5;
        const double hscale = std::max(1.0, col.norm());
        REQUIRE((hess.col(j) - col).norm() / hscale < 1e-5);
      }
    }
  }
}

TEST_CASE("glm potentials survive extreme linear predictors") {
  // |z^T theta| up to 500 must stay finite for values and derivatives.
  const Eigen::MatrixXd x = (Eigen::MatrixXd(2, 1) << 1.0, -1.0).finished();
  const Eigen::VectorXd ylog = (Eigen::VectorXd(2) << 1.0, -1.0).finished();
  const Eigen::VectorXd ypois = (Eigen::VectorXd(2) << 3.0, 0.0).finished();
  const GaussianDist prior(Eigen::VectorXd::Zero(2),
                           Eigen::MatrixXd::Identity(2, 2));
  const GlmModel logistic(GlmModel::Kind::logistic, x, ylog, prior);
  const GlmModel poisson(GlmModel::Kind::poisson, x, ypois, prior);
  for (double scale : {-500.0, -100.0, 100.0, 500.0}) {
    const Eigen::VectorXd theta =
        (Eigen::VectorXd(2) << scale, 0.0).finished();
    for (const GlmModel* m : {&logistic, &poisson}) {
      REQUIRE(m->potentials(theta).allFinite());
      const GlmDerivatives der = m->derivatives(theta);
      REQUIRE(der.value.allFinite());
      REQUIRE(der.gradient.allFinite());
      REQUIRE(der.hess_scale.allFinite());
    }
  }
}

TEST_CASE("glm rejects invalid labels and non-finite theta") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 1);
  const GaussianDist prior(Eigen::VectorXd::Zero(2),
                           Eigen::MatrixXd::Identity(2, 2));
  REQUIRE_THROWS_AS(GlmModel(GlmModel::Kind::logistic, x,
                             (Eigen::VectorXd(2) << 1.0, 0.5).finished(),
                             prior),
                    InputError);
  REQUIRE_THROWS_AS(GlmModel(GlmModel::Kind::poisson, x,
                             (Eigen::VectorXd(2) << 2.0, -1.0).finished(),
                             prior),
                    InputError);
  const GlmModel ok(GlmModel::Kind::logistic, x,
                    (Eigen::VectorXd(2) << 1.0, -1.0).finished(), prior);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(2);
  bad[0] = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(ok.potentials(bad), InputError);
}
