#pragma once

// Umbrella header for the coreset construction library.

#include "coreset/baselines.hpp"
#include "coreset/error.hpp"
#include "coreset/gaussian.hpp"
#include "coreset/geometry.hpp"
#include "coreset/harness/dataset.hpp"
#include "coreset/harness/diagnostics.hpp"
#include "coreset/harness/experiment.hpp"
#include "coreset/model.hpp"
#include "coreset/models/gaussian_mean.hpp"
#include "coreset/models/glm.hpp"
#include "coreset/models/rbf_regression.hpp"
#include "coreset/nnls.hpp"
#include "coreset/posterior.hpp"
#include "coreset/quadrature.hpp"
#include "coreset/rng.hpp"
#include "coreset/sparse_vi.hpp"
#include "coreset/weights.hpp"
