#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coreset/error.hpp"
#include "coreset/models/gaussian_mean.hpp"
#include "coreset/models/glm.hpp"
#include "coreset/models/rbf_regression.hpp"
#include "coreset/rng.hpp"

namespace coreset {

enum class SyntheticKind { gaussian_mean, rbf_regression, logistic, poisson };
enum class CsvSchema { points, regression, classification, counts };

struct Dataset {
  Eigen::MatrixXd x;  // N x P covariates or point coordinates
  Eigen::VectorXd y;  // empty for point datasets

  bool has_response() const { return y.size() > 0; }
  Eigen::Index size() const { return x.rows(); }
};

struct SyntheticParams {
  Eigen::Index n = 0;  // 0 selects the per-kind default
  Eigen::Index d = 0;
};

namespace detail {

inline long sample_poisson(double rate, Rng& rng) {
  // Knuth's product method; rates here are small (softplus of a unit-scale
  // linear predictor).
  if (rate <= 0.0) return 0;
  const double limit = std::exp(-rate);
  long k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform();
  } while (p > limit);
  return k - 1;
}

}  // namespace detail

// Seeded synthetic datasets. Defaults follow the reference experiments:
// gaussian-mean d=200 N=1000; logistic d=2 N=500 with theta = [3, 3, 0];
// poisson d=1 N=500 with theta = [1, 0]; rbf positions in the plane.
inline Dataset generate_synthetic(SyntheticKind kind,
                                  const SyntheticParams& params,
                                  std::uint64_t seed) {
  Rng rng(derive_seed(seed, "synthetic"));
  Dataset ds;
  switch (kind) {
    case SyntheticKind::gaussian_mean: {
      const Eigen::Index d = params.d > 0 ? params.d : 200;
      const Eigen::Index n = params.n > 0 ? params.n : 1000;
      const Eigen::VectorXd theta = rng.normal_vector(d);
      ds.x = rng.normal_matrix(n, d);
      ds.x.rowwise() += theta.transpose();
      break;
    }
    case SyntheticKind::rbf_regression: {
      const Eigen::Index d = params.d > 0 ? params.d : 2;
      const Eigen::Index n = params.n > 0 ? params.n : 500;
      ds.x = 2.0 * rng.normal_matrix(n, d);
      // Response surface: a few random bumps plus observation noise.
      const int bumps = 5;
      const Eigen::MatrixXd centers = 2.0 * rng.normal_matrix(bumps, d);
      const Eigen::VectorXd amps = rng.normal_vector(bumps) * 2.0;
      ds.y.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double v = 0.0;
        for (int b = 0; b < bumps; ++b)
          v += amps[b] * std::exp(-(ds.x.row(i) - centers.row(b)).squaredNorm() /
                                  2.0);
        ds.y[i] = v + 0.1 * rng.normal();
      }
      break;
    }
    case SyntheticKind::logistic: {
      const Eigen::Index d = params.d > 0 ? params.d : 2;
      const Eigen::Index n = params.n > 0 ? params.n : 500;
      Eigen::VectorXd theta(d + 1);
      if (d == 2) {
        theta << 3.0, 3.0, 0.0;
      } else {
        theta = rng.normal_vector(d + 1);
      }
      ds.x = rng.normal_matrix(n, d);
      ds.y.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = ds.x.row(i).dot(theta.head(d)) + theta[d];
        ds.y[i] = rng.uniform() < sigmoid(u) ? 1.0 : -1.0;
      }
      break;
    }
    case SyntheticKind::poisson: {
      const Eigen::Index d = params.d > 0 ? params.d : 1;
      const Eigen::Index n = params.n > 0 ? params.n : 500;
      Eigen::VectorXd theta(d + 1);
      if (d == 1) {
        theta << 1.0, 0.0;
      } else {
        theta = rng.normal_vector(d + 1);
      }
      ds.x = rng.normal_matrix(n, d);
      ds.y.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = ds.x.row(i).dot(theta.head(d)) + theta[d];
        ds.y[i] = static_cast<double>(detail::sample_poisson(softplus(u), rng));
      }
      break;
    }
  }
  return ds;
}

inline std::string expected_header(CsvSchema schema, Eigen::Index d) {
  std::string h = schema == CsvSchema::points ? "" : "y";
  for (Eigen::Index j = 1; j <= d; ++j)
    h += (h.empty() ? "" : ",") + std::string("x") + std::to_string(j);
  return h;
}

// Parses `y,x1..xD` (response schemas) or `x1..xD` (point schema) CSV files.
// Value domains are validated per schema; malformed rows carry line numbers.
inline Dataset load_csv(const std::string& path, CsvSchema schema) {
  std::ifstream in(path);
  if (!in) throw InputError("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_csv: empty file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Infer the dimension from the header, then demand an exact match.
  const bool with_response = schema != CsvSchema::points;
  Eigen::Index d = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    d = static_cast<Eigen::Index>(cols.size()) - (with_response ? 1 : 0);
    if (d < 1 || line != expected_header(schema, d))
      throw SchemaError(expected_header(schema, std::max<Eigen::Index>(d, 1)),
                        line);
  }

  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("load_csv: bad number '" + tok + "'", line_no);
      }
    }
    if (static_cast<Eigen::Index>(row.size()) != d + (with_response ? 1 : 0))
      throw ParseError("load_csv: wrong field count", line_no);
    for (double v : row)
      if (!std::isfinite(v))
        throw InputError("load_csv: non-finite value at line " +
                         std::to_string(line_no));
    if (schema == CsvSchema::classification && row[0] != 1.0 && row[0] != -1.0)
      throw ParseError("load_csv: classification label must be +/-1", line_no);
    if (schema == CsvSchema::counts &&
        (row[0] < 0.0 || row[0] != std::floor(row[0])))
      throw ParseError("load_csv: count label must be a natural number",
                       line_no);
    rows.push_back(std::move(row));
  }

  Dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  ds.x.resize(n, d);
  if (with_response) ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (with_response) {
      ds.y[i] = row[0];
      for (Eigen::Index j = 0; j < d; ++j)
        ds.x(i, j) = row[static_cast<std::size_t>(j + 1)];
    } else {
      for (Eigen::Index j = 0; j < d; ++j)
        ds.x(i, j) = row[static_cast<std::size_t>(j)];
    }
  }
  return ds;
}

inline void write_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw InputError("write_csv: cannot open " + path);
  const CsvSchema schema =
      ds.has_response() ? CsvSchema::regression : CsvSchema::points;
  out << expected_header(schema, ds.x.cols()) << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    std::string line;
    if (ds.has_response()) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.y[i]);
      line = buf;
    }
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.x(i, j));
      line += (line.empty() ? "" : ",") + std::string(buf);
    }
    out << line << "\n";
  }
}

// ---------------------------------------------------------------------------
// Model construction from datasets
// ---------------------------------------------------------------------------

struct GaussianMeanHyper {
  double prior_var = 1.0;
  double like_var = 1.0;
};

inline GaussianMeanModel make_gaussian_mean_model(
    const Dataset& ds, const GaussianMeanHyper& hyper = {}) {
  if (ds.size() == 0) throw InputError("empty dataset");
  const Eigen::Index d = ds.x.cols();
  return GaussianMeanModel(
      ds.x, Eigen::VectorXd::Zero(d),
      hyper.prior_var * Eigen::MatrixXd::Identity(d, d),
      hyper.like_var * Eigen::MatrixXd::Identity(d, d));
}

struct RbfHyper {
  Eigen::Index centers_per_scale = 50;
  std::vector<double> scales = {0.2, 0.4, 0.8, 1.2, 1.6, 2.0};
  double constant_scale = 100.0;
  std::uint64_t basis_seed = 0;
  // Prior variance convention: raw second moment of the responses by
  // default; set true to use the centered variance instead.
  bool centered_second_moment = false;
};

inline RbfRegressionModel make_rbf_model(const Dataset& ds,
                                         const RbfHyper& hyper = {}) {
  if (ds.size() == 0 || !ds.has_response())
    throw InputError("rbf model needs a response dataset");
  const RbfBasis basis =
      RbfBasis::generate(ds.x, hyper.centers_per_scale, hyper.scales,
                         hyper.basis_seed, hyper.constant_scale);
  const Eigen::MatrixXd feats = basis.features(ds.x);
  const double mean = ds.y.mean();
  const double second_moment = ds.y.squaredNorm() / ds.size();
  const double variance =
      (ds.y.array() - mean).square().sum() / ds.size();
  const double prior_var =
      hyper.centered_second_moment ? variance : second_moment;
  return RbfRegressionModel(
      ds.y, feats, std::max(variance, 1e-12),
      Eigen::VectorXd::Constant(feats.cols(), mean),
      std::max(prior_var, 1e-12));
}

struct GlmHyper {
  double prior_var = 1.0;
};

inline GlmModel make_glm_model(const Dataset& ds, GlmModel::Kind kind,
                               const GlmHyper& hyper = {}) {
  if (ds.size() == 0 || !ds.has_response())
    throw InputError("glm model needs a response dataset");
  const Eigen::Index d = ds.x.cols() + 1;
  return GlmModel(kind, ds.x, ds.y,
                  GaussianDist(Eigen::VectorXd::Zero(d),
                               hyper.prior_var *
                                   Eigen::MatrixXd::Identity(d, d)));
}

}  // namespace coreset
