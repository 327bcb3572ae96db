#pragma once

#include <string>
#include <vector>

namespace pmstm {

// One observed count, keyed by (variable, region, time). Variables and times
// are 1-based; regions are 0-based to match the adjacency file.
struct ObservedCell {
  int variable = 0;
  int region = 0;
  long long count = 0;
};

struct PredCell {
  int variable = 0;
  int region = 0;
};

// Observations plus the observed/prediction region bookkeeping. Cells within
// a time point are kept sorted by (variable, region); that order defines the
// rows of the design and basis matrices.
struct CountDataset {
  int L = 0;  // number of variables
  int T = 0;  // number of time points

  // index 0..T-1
  std::vector<std::vector<ObservedCell>> observed;
  std::vector<std::vector<PredCell>> prediction;
  // row of each observed cell inside the prediction-cell ordering of its t
  std::vector<std::vector<int>> obs_to_pred_row;

  int n_t(int t) const { return static_cast<int>(observed[t - 1].size()); }
  int N_t(int t) const { return static_cast<int>(prediction[t - 1].size()); }
  long long n() const;
  int max_region() const;
  bool has_zero_count() const;
};

// Rebuilds obs_to_pred_row and validates D_O subset of D_P; call after
// assembling a dataset by hand.
void finalize_dataset(CountDataset& data);

// Delimited text with header "variable,region,time,count". An optional
// companion file lists all prediction cells as "variable,region,time" rows;
// without it, D_P = D_O.
CountDataset load_counts(const std::string& path,
                         const std::string& prediction_path = "");

}  // namespace pmstm
