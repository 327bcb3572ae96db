#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmstm/gibbs.hpp"
#include "pmstm/model.hpp"

namespace pmstm {

// Flat key=value run configuration; '#' starts a comment. Grids accept
// "start:step:end" or comma lists. Unknown keys are rejected.
struct RunConfig {
  SamplerConfig sampler;
  ModelOptions model;
  std::string covariates_path;
  std::string prediction_cells_path;
};

RunConfig parse_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& text);

// Stable hash of everything that determines a fit: config content plus the
// dataset and adjacency dimensions.
std::uint64_t spec_hash(const RunConfig& config, const CountDataset& data,
                        int n_regions);

// predictions.csv, parameters.csv, diagnostics.csv, and manifest.txt. All
// floating-point fields use 17 significant digits so files reparse exactly.
void write_outputs(const PosteriorSummary& summary, const std::string& dir,
                   std::uint64_t spec_hash_value, std::uint64_t seed);

// Versioned per-chain draw log: header records spec hash, seed, chain, and
// dimensions; one tab-separated row per stored draw.
void write_chain_log(const ChainDraws& chain, const ModelSpec& spec,
                     const std::string& dir, std::uint64_t spec_hash_value,
                     std::uint64_t seed);

struct ChainLog {
  int chain_id = 0;
  std::uint64_t spec_hash_value = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

ChainLog read_chain_log(const std::string& path);

std::vector<CellPrediction> read_predictions_csv(const std::string& path);

// Full fit pipeline: load inputs, build the model, run the chains, summarize,
// and write every output file into out_dir.
struct FitResult {
  PosteriorSummary summary;
  std::vector<ChainDraws> chains;
  ModelSpec spec;
};

FitResult run_fit(const std::string& data_path, const std::string& adjacency_path,
                  const RunConfig& config, const std::string& out_dir);

// diagnose subcommand: R-hat / MCSE table over chain logs found in a directory.
std::string diagnose_report(const std::string& chains_dir, int batch_size = 50);

}  // namespace pmstm
