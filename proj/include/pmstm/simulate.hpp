#pragma once

#include <cstdint>
#include <vector>

#include "pmstm/data.hpp"
#include "pmstm/gibbs.hpp"
#include "pmstm/mi_structures.hpp"
#include "pmstm/model.hpp"

namespace pmstm {

// Log-linear Poisson truth over a grid graph with a smooth spatial field and
// a fine-scale log-gamma term; stands in for the count-valued indicators the
// model targets in production.
struct SyntheticOptions {
  int grid_w = 10;
  int grid_h = 5;
  int variables = 2;
  int times = 4;
  std::uint64_t seed = 1;
  double intercept = 3.0;
  double fine_scale_sd = 0.1;
};

struct SyntheticTruth {
  CountDataset truth;  // fully observed: D_O = D_P = all cells
  AdjacencyStructure adjacency;
  CovariateTable covariates;
};

SyntheticTruth make_synthetic_truth(const SyntheticOptions& options);

// Pseudo-data: R ~ Poisson(Z + 1) per cell, then an independent per-(l,t)
// subsample of cells is kept observed. observed_fraction = 1 keeps every
// cell, so D_O = D_P. D_P always equals the truth's cell set.
CountDataset simulate_pseudo_data(const CountDataset& truth,
                                  double observed_fraction, std::uint64_t seed,
                                  bool mask_per_variable_time = true);

// Mean over prediction cells of |Z - E[Z|R]|; cell sets must align exactly.
double average_absolute_error(const CountDataset& truth,
                              const std::vector<CellPrediction>& predictions);

// Exact two-sided binomial sign test on paired differences; ties dropped.
double sign_test(const std::vector<double>& errors_a,
                 const std::vector<double>& errors_b);

}  // namespace pmstm
