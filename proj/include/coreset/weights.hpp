#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "coreset/error.hpp"

namespace coreset {

// Nonnegative sparse weight vector with its ordered support. `active` always
// equals {n : values[n] > 0} for objects built through the factories here;
// construction algorithms maintain their own selection sets internally and
// normalize on return.
struct Weights {
  Eigen::VectorXd values;
  std::vector<Eigen::Index> active;

  static Weights zeros(Eigen::Index n) {
    return Weights{Eigen::VectorXd::Zero(n), {}};
  }

  static Weights from_values(Eigen::VectorXd v) {
    if (!v.allFinite()) throw InputError("Weights: non-finite values");
    if ((v.array() < 0.0).any()) throw InputError("Weights: negative weight");
    Weights w;
    w.values = std::move(v);
    w.rebuild_active();
    return w;
  }

  void rebuild_active() {
    active.clear();
    for (Eigen::Index n = 0; n < values.size(); ++n)
      if (values[n] > 0.0) active.push_back(n);
  }

  Eigen::Index size() const { return values.size(); }
  Eigen::Index nnz() const { return static_cast<Eigen::Index>(active.size()); }

  double operator[](Eigen::Index n) const { return values[n]; }
};

}  // namespace coreset
