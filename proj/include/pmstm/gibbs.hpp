#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmstm/model.hpp"

namespace pmstm {

struct SamplerConfig {
  int iterations = 10000;
  int burn_in = 2000;
  int thin = 1;
  int chains = 1;
  std::uint64_t seed = 1;
  bool record_trace = false;
};

struct ChainDraws {
  int chain_id = 0;
  std::vector<Draw> draws;
  std::vector<std::string> trace;  // block order of the first sweep
  bool unstable = false;           // a stored predictor exceeded the exp guard
};

// One systematic Gibbs sweep per iteration: beta, eta_1..eta_{T-1}, eta_T,
// xi_1..xi_T, sigma_K, sigma_xi. Every block draws from a stream keyed by
// (seed, chain, sweep, block), so a run is fully determined by (seed, chain).
ChainDraws run_chain(const ModelSpec& spec, const CountDataset& data,
                     const SamplerConfig& cfg, int chain_id);

// Runs cfg.chains chains concurrently with independent keyed streams.
std::vector<ChainDraws> run_chains(const ModelSpec& spec,
                                   const CountDataset& data,
                                   const SamplerConfig& cfg);

// Potential scale reduction over >= 2 equal-length chains of a scalar;
// exactly 1 for identical chains, error on zero within-chain variance.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

// Monte Carlo standard error of the mean from non-overlapping batch means.
double batch_means_mcse(const std::vector<double>& draws, int batch_size = 50);

struct CellPrediction {
  int variable = 0;
  int region = 0;
  int time = 0;
  double mean = 0, sd = 0, q025 = 0, q975 = 0;
};

struct ParameterSummary {
  std::string name;
  double mean = 0, sd = 0, q025 = 0, q50 = 0, q975 = 0;
};

struct ScalarDiagnostic {
  std::string name;
  double rhat = 0;  // NaN with a single chain
  double mcse = 0;
};

struct PosteriorSummary {
  std::vector<CellPrediction> predictions;  // exp(Y) over every prediction cell
  std::vector<ParameterSummary> parameters;
  std::vector<ScalarDiagnostic> diagnostics;
  double dic = 0.0;
  bool unstable = false;
  long long total_draws = 0;
};

// Posterior mean/sd/quantiles of exp(Y) over the prediction cells, parameter
// summaries, convergence diagnostics for the monitored scalars, and DIC.
// Unobserved cells get a fresh fine-scale prior draw per stored sweep, keyed
// deterministically by (seed, chain, draw, cell).
PosteriorSummary summarize(const std::vector<ChainDraws>& chains,
                           const CountDataset& data, const ModelSpec& spec,
                           std::uint64_t seed, int batch_size = 50);

// Draw log helpers shared by summarize and the diagnose subcommand.
std::vector<double> extract_scalar(const std::vector<Draw>& draws,
                                   const std::string& name, const ModelSpec& spec);
std::vector<std::string> monitored_scalars(const ModelSpec& spec,
                                           std::uint64_t seed);

}  // namespace pmstm
