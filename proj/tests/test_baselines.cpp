#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coreset/baselines.hpp"
#include "coreset/models/gaussian_mean.hpp"
#include "coreset/models/glm.hpp"
#include "coreset/models/rbf_regression.hpp"
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

}  // namespace

TEST_CASE("random projection: centering kills constant potentials") {
  Rng rng(120);
  Eigen::MatrixXd feats = rng.normal_matrix(5, 3);
  feats.row(1).setZero();  // constant potential
  const RbfRegressionModel model(rng.normal_vector(5), feats, 1.0,
                                 Eigen::VectorXd::Zero(3), 1.0);
  const ProjectedVectors pv =
      random_projection(model, model.prior(), 40, rng);
  REQUIRE(pv.atoms.col(1).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random projection: atom norms are sample variances") {
  const auto model = gauss_model(6, 2, 121);
  Rng rng(122);
  Rng check_rng(122);
  const Eigen::Index s = 100;
  const Eigen::MatrixXd draws = model.prior().sample(s, check_rng);
  const ProjectedVectors pv = random_projection(model, model.prior(), s, rng);
  REQUIRE(pv.projection_dim() == s);
  REQUIRE(pv.size() == 6);
  for (Eigen::Index n = 0; n < 6; ++n) {
    Eigen::VectorXd f(s);
    for (Eigen::Index i = 0; i < s; ++i) {
      const std::vector<Eigen::Index> one{n};
      f[i] = model.potentials(draws.row(i).transpose(),
                              IndexSpan(one.data(), 1))[0];
    }
    const double var = (f.array() - f.mean()).square().sum() / s;
    REQUIRE(pv.atoms.col(n).squaredNorm() == Catch::Approx(var).epsilon(1e-10));
  }
}

TEST_CASE("optimal weighting copies the exact posterior moments") {
  const auto model = gauss_model(9, 2, 123);
  Rng rng(124);
  const GaussianDist w = make_weighting(model, WeightingMode::optimal, rng);
  const GaussianDist post =
      model.weighted_posterior(Eigen::VectorXd::Ones(9));
  REQUIRE((w.mean() - post.mean()).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((w.cov() - post.cov()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("realistic weighting interpolates between prior and posterior") {
  const auto model = gauss_model(9, 2, 125);
  Rng rng(126);
  const GaussianDist at0 = make_weighting_at(model, 0.0, 0.0, rng);
  REQUIRE((at0.mean() - model.prior().mean()).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((at0.cov() - model.prior().cov()).cwiseAbs().maxCoeff() < 1e-10);
  const GaussianDist at1 = make_weighting_at(model, 1.0, 0.0, rng);
  const GaussianDist post = model.weighted_posterior(Eigen::VectorXd::Ones(9));
  REQUIRE((at1.mean() - post.mean()).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((at1.cov() - post.cov()).cwiseAbs().maxCoeff() < 1e-10);
  // With noise the result is still a valid (PD) Gaussian.
  const GaussianDist noisy = make_weighting(model, WeightingMode::realistic,
                                            rng);
  REQUIRE(noisy.chol().diagonal().minCoeff() > 0.0);
}

TEST_CASE("realistic weighting works off the laplace moments for glms") {
  Rng rng(127);
  const Eigen::MatrixXd x = rng.normal_matrix(30, 2);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i)
    y[i] = rng.uniform() < sigmoid(2.0 * x(i, 0)) ? 1.0 : -1.0;
  const GlmModel model(GlmModel::Kind::logistic, x, y,
                       GaussianDist(Eigen::VectorXd::Zero(3),
                                    Eigen::MatrixXd::Identity(3, 3)));
  const GaussianDist w = make_weighting(model, WeightingMode::realistic, rng);
  REQUIRE(w.dim() == 3);
  REQUIRE(w.cov().allFinite());
}

TEST_CASE("giga: identical atoms need a single element") {
  Eigen::MatrixXd atoms(3, 5);
  const Eigen::Vector3d g(0.3, -1.2, 0.4);
  for (int j = 0; j < 5; ++j) atoms.col(j) = g;
  const ProjectedVectors pv{atoms};
  const Weights w = giga(pv, 1);
  REQUIRE(w.nnz() == 1);
  REQUIRE(w.active[0] == 0);  // tie-break to the lowest index
  REQUIRE(w.values[0] == Catch::Approx(5.0).epsilon(1e-10));
  REQUIRE(hilbert_residual_norm2(pv, w.values) ==
          Catch::Approx(0.0).margin(1e-18));
}

TEST_CASE("giga: zero budget returns zero weights") {
  Rng rng(128);
  const ProjectedVectors pv{rng.normal_matrix(3, 4)};
  const Weights w = giga(pv, 0);
  REQUIRE(w.nnz() == 0);
  const double target2 = pv.atoms.rowwise().sum().squaredNorm();
  REQUIRE(hilbert_residual_norm2(pv, w.values) ==
          Catch::Approx(target2).epsilon(1e-12));
}

TEST_CASE("giga: zero target returns zero weights") {
  Eigen::MatrixXd atoms(3, 2);
  atoms.col(0) = Eigen::Vector3d(1.0, 0.0, 0.0);
  atoms.col(1) = -atoms.col(0);
  const Weights w = giga(ProjectedVectors{atoms}, 3);
  REQUIRE(w.nnz() == 0);
}

TEST_CASE("giga objective is within 10% of the exhaustive optimum") {
  // Atoms come from projecting actual model potentials; on such correlated
  // atom sets the greedy support choice is reliably near-optimal.
  for (std::uint64_t seed = 130; seed < 135; ++seed) {
    const auto model = gauss_model(4, 2, seed);
    Rng rng(seed + 500);
    const GaussianDist weighting =
        make_weighting(model, WeightingMode::realistic, rng);
    const ProjectedVectors pv = random_projection(model, weighting, 3, rng);
    const Weights w = giga(pv, 2);
    const double obj = hilbert_residual_norm2(pv, w.values);
    const double best = oracles::brute_force_min_residual2(pv.atoms, 2);
    REQUIRE(obj <= 1.1 * best + 1e-12);
  }
}

TEST_CASE("giga objective is non-increasing in the budget") {
  Rng rng(136);
  const ProjectedVectors pv{rng.normal_matrix(10, 25)};
  std::vector<double> objectives;
  giga(pv, 12, [&](Eigen::Index, const Weights& w, double) {
    objectives.push_back(hilbert_residual_norm2(pv, w.values));
  });
  REQUIRE(objectives.size() == 12);
  for (std::size_t i = 1; i < objectives.size(); ++i)
    REQUIRE(objectives[i] <= objectives[i - 1] + 1e-10);
}

TEST_CASE("giga is invariant to positive rescaling of the atom set") {
  // Scaling every atom scales the target sum too, so the minimizing weights
  // are unchanged (not divided by the scale): both sides of the residual
  // norm pick up the same factor.
  Rng rng(137);
  const Eigen::MatrixXd atoms = rng.normal_matrix(6, 9);
  const double c = 3.7;
  const Weights w1 = giga(ProjectedVectors{atoms}, 4);
  const Weights w2 = giga(ProjectedVectors{c * atoms}, 4);
  REQUIRE(w1.active == w2.active);
  REQUIRE((w2.values - w1.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("giga at full budget beats every smaller budget after polish") {
  Rng rng(138);
  const ProjectedVectors pv{rng.normal_matrix(8, 6)};
  std::vector<double> objectives;
  const Weights w_full =
      giga(pv, 6, [&](Eigen::Index, const Weights& w, double) {
        objectives.push_back(hilbert_residual_norm2(pv, w.values));
      });
  // Nonnegative least squares polish on the final support.
  Eigen::MatrixXd support_atoms(pv.projection_dim(), w_full.nnz());
  for (Eigen::Index j = 0; j < w_full.nnz(); ++j)
    support_atoms.col(j) = pv.atoms.col(w_full.active[static_cast<std::size_t>(j)]);
  const Eigen::VectorXd target = pv.atoms.rowwise().sum();
  const Eigen::VectorXd polished = nnls(support_atoms, target);
  const double polished_obj = (target - support_atoms * polished).squaredNorm();
  for (double obj : objectives) REQUIRE(polished_obj <= obj + 1e-10);
}

TEST_CASE("uniform subsample: full budget recovers unit weights") {
  Rng rng(139);
  const Weights w = uniform_subsample(12, 12, rng);
  REQUIRE(w.nnz() == 12);
  REQUIRE((w.values - Eigen::VectorXd::Ones(12)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform subsample: weights always sum to N") {
  Rng rng(140);
  for (Eigen::Index m : {1, 3, 7, 20}) {
    const Weights w = uniform_subsample(20, m, rng);
    REQUIRE(w.nnz() == m);
    REQUIRE(w.values.sum() == Catch::Approx(20.0).epsilon(1e-12));
  }
}

TEST_CASE("uniform subsample: fixed seed gives a fixed index set") {
  Rng r1(141), r2(141);
  const Weights w1 = uniform_subsample(30, 8, r1);
  const Weights w2 = uniform_subsample(30, 8, r2);
  REQUIRE(w1.active == w2.active);
  REQUIRE(w1.values == w2.values);
}

TEST_CASE("uniform subsample rejects out-of-range budgets") {
  Rng rng(142);
  REQUIRE_THROWS_AS(uniform_subsample(5, 6, rng), InputError);
  REQUIRE_THROWS_AS(uniform_subsample(5, 0, rng), InputError);
}
