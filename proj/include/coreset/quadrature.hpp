#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "coreset/error.hpp"

namespace coreset {

// Gauss-Legendre nodes and weights on [0, 1] via Golub-Welsch.
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  static GaussLegendre unit_interval(int k) {
    if (k < 1) throw InputError("GaussLegendre: need at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(k, k);
    for (int i = 1; i < k; ++i) {
      const double b =
          static_cast<double>(i) / std::sqrt(4.0 * i * i - 1.0);
      jacobi(i - 1, i) = b;
      jacobi(i, i - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success)
      throw NumericalError("GaussLegendre: eigensolver failed");
    GaussLegendre out;
    out.nodes = (es.eigenvalues().array() + 1.0) / 2.0;  // [-1,1] -> [0,1]
    // Weights on [-1,1] are 2 v0^2; halving for the interval map cancels it.
    out.weights =
        es.eigenvectors().row(0).transpose().array().square().matrix();
    return out;
  }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i)
      acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

}  // namespace coreset
