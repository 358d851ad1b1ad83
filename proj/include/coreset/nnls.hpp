#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "coreset/error.hpp"

namespace coreset {

// Lawson-Hanson active-set solver for min_{v >= 0} || A v - y ||_2.
// Dense, intended for the small systems arising in quadratic weight updates
// (a few hundred variables at most).
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                            double tol = -1.0) {
  const Eigen::Index n = a.cols();
  if (a.rows() != y.size()) throw InputError("nnls: shape mismatch");
  if (tol <= 0.0)
    tol = 10.0 * std::numeric_limits<double>::epsilon() *
          a.cwiseAbs().maxCoeff() * static_cast<double>(std::max(a.rows(), n));

  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::Index n_passive = 0;

  const auto solve_passive = [&](Eigen::VectorXd& s) {
    Eigen::MatrixXd ap(a.rows(), n_passive);
    std::vector<Eigen::Index> cols;
    cols.reserve(static_cast<std::size_t>(n_passive));
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) {
        ap.col(static_cast<Eigen::Index>(cols.size())) = a.col(j);
        cols.push_back(j);
      }
    const Eigen::VectorXd sp = ap.colPivHouseholderQr().solve(y);
    s.setZero();
    for (std::size_t k = 0; k < cols.size(); ++k)
      s[cols[k]] = sp[static_cast<Eigen::Index>(k)];
  };

  const long max_outer = 3 * static_cast<long>(n) + 10;
  for (long outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd grad = a.transpose() * (y - a * v);
    Eigen::Index best = -1;
    double best_grad = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && grad[j] > best_grad) {
        best_grad = grad[j];
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    ++n_passive;

    Eigen::VectorXd s(n);
    solve_passive(s);
    long inner_guard = 3 * static_cast<long>(n) + 10;
    while (inner_guard-- > 0) {
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          feasible = false;
          break;
        }
      if (feasible) break;
      // Step toward s until the first passive coordinate hits zero.
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0)
          alpha = std::min(alpha, v[j] / (v[j] - s[j]));
      v += alpha * (s - v);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && v[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          --n_passive;
          v[j] = 0.0;
        }
      if (n_passive == 0) break;
      solve_passive(s);
    }
    if (n_passive > 0) v = s.cwiseMax(0.0);
    if (n_passive == static_cast<Eigen::Index>(n)) {
      // All coordinates passive and feasible: unconstrained optimum reached.
      const Eigen::VectorXd g2 = a.transpose() * (y - a * v);
      if (g2.cwiseAbs().maxCoeff() <= tol) break;
    }
  }
  return v;
}

}  // namespace coreset
