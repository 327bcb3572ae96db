#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pmstm/errors.hpp"
#include "pmstm/io.hpp"
#include "pmstm/simulate.hpp"

namespace {

constexpr int kExitParseError = 2;
constexpr int kExitNumericalError = 3;

void write_counts_csv(const pmstm::CountDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pmstm::ParseError("cannot write '" + path + "'");
  out << "variable,region,time,count\n";
  for (int t = 1; t <= data.T; ++t)
    for (const auto& cell : data.observed[t - 1])
      out << cell.variable << ',' << cell.region << ',' << t << ','
          << cell.count << '\n';
}

void write_prediction_cells_csv(const pmstm::CountDataset& data,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pmstm::ParseError("cannot write '" + path + "'");
  out << "variable,region,time\n";
  for (int t = 1; t <= data.T; ++t)
    for (const auto& cell : data.prediction[t - 1])
      out << cell.variable << ',' << cell.region << ',' << t << '\n';
}

void write_adjacency_file(const pmstm::AdjacencyStructure& adjacency,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pmstm::ParseError("cannot write '" + path + "'");
  out << "n " << adjacency.n_regions << '\n';
  for (const auto& [i, j] : adjacency.edges) out << i << ' ' << j << '\n';
}

void write_covariates_csv(const pmstm::CovariateTable& table,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pmstm::ParseError("cannot write '" + path + "'");
  out << "variable,region,time";
  for (const auto& name : table.names) out << ',' << name;
  out << '\n';
  for (const auto& [key, values] : table.values) {
    out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key);
    char buf[64];
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisson multivariate spatio-temporal mixed effects model"};
  app.require_subcommand(1);

  std::string data_path, adjacency_path, config_path, out_dir;
  auto* fit = app.add_subcommand("fit", "fit the model and write predictions");
  fit->add_option("--data", data_path, "counts CSV")->required();
  fit->add_option("--adjacency", adjacency_path, "region edge list")->required();
  fit->add_option("--config", config_path, "key=value run configuration")->required();
  fit->add_option("--out", out_dir, "output directory")->required();

  std::string truth_path, sim_out;
  std::uint64_t sim_seed = 1;
  double mask_fraction = 0.35;
  bool synthetic = false;
  int grid_w = 10, grid_h = 5, sim_vars = 2, sim_times = 4;
  auto* simulate = app.add_subcommand(
      "simulate", "draw pseudo-data from a truth table (optionally synthetic)");
  simulate->add_option("--truth", truth_path, "truth counts CSV");
  simulate->add_flag("--synthetic", synthetic,
                     "generate a synthetic grid-graph truth first");
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("--mask", mask_fraction,
                       "fraction of cells masked as unobserved (default 0.35)");
  simulate->add_option("--grid-w", grid_w, "synthetic grid width");
  simulate->add_option("--grid-h", grid_h, "synthetic grid height");
  simulate->add_option("--vars", sim_vars, "synthetic variable count");
  simulate->add_option("--times", sim_times, "synthetic time points");
  simulate->add_option("--out", sim_out, "output directory")->required();

  std::string chains_dir;
  auto* diagnose =
      app.add_subcommand("diagnose", "convergence report over chain logs");
  diagnose->add_option("--chains", chains_dir, "directory with chain_*.log")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(fit)) {
      const pmstm::RunConfig config = pmstm::parse_config(config_path);
      const pmstm::FitResult result =
          pmstm::run_fit(data_path, adjacency_path, config, out_dir);
      std::cout << "fit complete: " << result.summary.predictions.size()
                << " prediction cells, " << result.summary.total_draws
                << " stored draws, DIC " << result.summary.dic << "\n";
      if (result.summary.unstable)
        std::cout << "warning: chain marked unstable (overflow guard)\n";
    } else if (app.got_subcommand(simulate)) {
      if (synthetic == truth_path.empty() && !synthetic)
        throw pmstm::ParseError("simulate: provide --truth or --synthetic");
      std::filesystem::create_directories(sim_out);
      pmstm::CountDataset truth;
      if (synthetic) {
        pmstm::SyntheticOptions options;
        options.grid_w = grid_w;
        options.grid_h = grid_h;
        options.variables = sim_vars;
        options.times = sim_times;
        options.seed = sim_seed;
        const pmstm::SyntheticTruth generated =
            pmstm::make_synthetic_truth(options);
        truth = generated.truth;
        write_counts_csv(truth, sim_out + "/truth.csv");
        write_adjacency_file(generated.adjacency, sim_out + "/adjacency.txt");
        write_covariates_csv(generated.covariates, sim_out + "/covariates.csv");
      } else {
        truth = pmstm::load_counts(truth_path);
      }
      if (!(mask_fraction >= 0.0) || mask_fraction >= 1.0)
        throw pmstm::ParseError("simulate: --mask must lie in [0, 1)");
      const pmstm::CountDataset pseudo =
          pmstm::simulate_pseudo_data(truth, 1.0 - mask_fraction, sim_seed);
      write_counts_csv(pseudo, sim_out + "/pseudo.csv");
      write_prediction_cells_csv(pseudo, sim_out + "/prediction_cells.csv");
      std::cout << "simulate complete: " << pseudo.n() << " observed cells over "
                << pseudo.T << " time points\n";
    } else if (app.got_subcommand(diagnose)) {
      std::cout << pmstm::diagnose_report(chains_dir);
    }
  } catch (const pmstm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParseError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParseError;
  } catch (const pmstm::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
