#include "pmstm/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pmstm/errors.hpp"

namespace pmstm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: bad numeric value for '" + key + "': '" + s + "'");
  }
}

long long parse_integer(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: bad integer value for '" + key + "': '" + s + "'");
  }
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ParseError("config: bad boolean value for '" + key + "': '" + s + "'");
}

Eigen::VectorXd parse_grid(const std::string& s, const std::string& key) {
  std::vector<double> values;
  if (s.find(':') != std::string::npos) {
    std::istringstream ss(s);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') ||
        !std::getline(ss, c))
      throw ParseError("config: grid '" + key + "' must be start:step:end");
    const double start = parse_double(trim(a), key);
    const double step = parse_double(trim(b), key);
    const double end = parse_double(trim(c), key);
    if (!(step > 0.0) || !(end >= start))
      throw ParseError("config: bad grid range for '" + key + "'");
    for (double v = start; v <= end + 1e-12; v += step) values.push_back(v);
  } else {
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      values.push_back(parse_double(trim(item), key));
  }
  if (values.empty())
    throw ParseError("config: empty grid for '" + key + "'");
  Eigen::VectorXd grid(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) grid[i] = values[i];
  return grid;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path + "'");
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected key=value at line " +
                       std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "iterations")
      config.sampler.iterations = static_cast<int>(parse_integer(value, key));
    else if (key == "burn_in")
      config.sampler.burn_in = static_cast<int>(parse_integer(value, key));
    else if (key == "thin")
      config.sampler.thin = static_cast<int>(parse_integer(value, key));
    else if (key == "chains")
      config.sampler.chains = static_cast<int>(parse_integer(value, key));
    else if (key == "seed")
      config.sampler.seed = static_cast<std::uint64_t>(parse_integer(value, key));
    else if (key == "record_trace")
      config.sampler.record_trace = parse_bool(value, key);
    else if (key == "k_flag") {
      if (value == "smlg")
        config.model.flavor = MlgFlavor::smlg;
      else if (value == "nmlg")
        config.model.flavor = MlgFlavor::nmlg;
      else
        throw ParseError("config: k_flag must be 'smlg' or 'nmlg', got '" +
                         value + "'");
    } else if (key == "alpha_g")
      config.model.alpha_g = parse_double(value, key);
    else if (key == "sigma_beta")
      config.model.sigma_beta = parse_double(value, key);
    else if (key == "sigma_k_grid")
      config.model.sigma_k_grid = parse_grid(value, key);
    else if (key == "sigma_xi_grid")
      config.model.sigma_xi_grid = parse_grid(value, key);
    else if (key == "rank") {
      if (value == "auto")
        config.model.rank = -1;
      else
        config.model.rank = static_cast<int>(parse_integer(value, key));
    } else if (key == "include_fine_scale")
      config.model.include_fine_scale = parse_bool(value, key);
    else if (key == "cross_variable_adjacency")
      config.model.cross_variable_adjacency = parse_bool(value, key);
    else if (key == "q_form") {
      if (value == "identity_minus_a")
        config.model.icar_degree_target = false;
      else if (value == "degree_minus_a")
        config.model.icar_degree_target = true;
      else
        throw ParseError(
            "config: q_form must be 'identity_minus_a' or 'degree_minus_a'");
    } else if (key == "covariates")
      config.covariates_path = value;
    else if (key == "prediction_cells")
      config.prediction_cells_path = value;
    else
      throw ParseError("config: unknown key '" + key + "' at line " +
                       std::to_string(line_no));
  }
  return config;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t spec_hash(const RunConfig& config, const CountDataset& data,
                        int n_regions) {
  std::ostringstream ss;
  ss << "iterations=" << config.sampler.iterations
     << ";burn_in=" << config.sampler.burn_in << ";thin=" << config.sampler.thin
     << ";chains=" << config.sampler.chains << ";seed=" << config.sampler.seed
     << ";k=" << (config.model.flavor == MlgFlavor::nmlg ? 1 : 0)
     << ";alpha_g=" << format_double(config.model.alpha_g)
     << ";sigma_beta=" << format_double(config.model.sigma_beta)
     << ";rank=" << config.model.rank
     << ";fine=" << config.model.include_fine_scale
     << ";cross=" << config.model.cross_variable_adjacency
     << ";qform=" << config.model.icar_degree_target << ";kgrid=";
  for (Eigen::Index i = 0; i < config.model.sigma_k_grid.size(); ++i)
    ss << format_double(config.model.sigma_k_grid[i]) << ",";
  ss << ";xigrid=";
  for (Eigen::Index i = 0; i < config.model.sigma_xi_grid.size(); ++i)
    ss << format_double(config.model.sigma_xi_grid[i]) << ",";
  ss << ";L=" << data.L << ";T=" << data.T << ";n=" << data.n()
     << ";regions=" << n_regions;
  return fnv1a64(ss.str());
}

void write_outputs(const PosteriorSummary& summary, const std::string& dir,
                   std::uint64_t spec_hash_value, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  auto open = [&](const std::string& name) {
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw ParseError("outputs: cannot write '" + dir + "/" + name + "'");
    return out;
  };

  {
    std::ofstream out = open("predictions.csv");
    out << "variable,region,time,mean,sd,q2.5,q97.5\n";
    for (const auto& p : summary.predictions)
      out << p.variable << ',' << p.region << ',' << p.time << ','
          << format_double(p.mean) << ',' << format_double(p.sd) << ','
          << format_double(p.q025) << ',' << format_double(p.q975) << '\n';
  }
  {
    std::ofstream out = open("parameters.csv");
    out << "parameter,mean,sd,q2.5,q50,q97.5\n";
    for (const auto& p : summary.parameters)
      out << p.name << ',' << format_double(p.mean) << ','
          << format_double(p.sd) << ',' << format_double(p.q025) << ','
          << format_double(p.q50) << ',' << format_double(p.q975) << '\n';
  }
  {
    std::ofstream out = open("diagnostics.csv");
    out << "name,statistic,value\n";
    for (const auto& d : summary.diagnostics) {
      out << d.name << ",rhat," << format_double(d.rhat) << '\n';
      out << d.name << ",mcse," << format_double(d.mcse) << '\n';
    }
    out << "model,dic," << format_double(summary.dic) << '\n';
    out << "model,unstable," << (summary.unstable ? 1 : 0) << '\n';
  }
  {
    std::ofstream out = open("manifest.txt");
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016" PRIx64, spec_hash_value);
    out << "format pmstm-run v1\n";
    out << "spec_hash " << hash_buf << "\n";
    out << "seed " << seed << "\n";
    out << "draws " << summary.total_draws << "\n";
    out << "cells " << summary.predictions.size() << "\n";
  }
}

void write_chain_log(const ChainDraws& chain, const ModelSpec& spec,
                     const std::string& dir, std::uint64_t spec_hash_value,
                     std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::string path =
      dir + "/chain_" + std::to_string(chain.chain_id) + ".log";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("chain log: cannot write '" + path + "'");

  std::vector<std::string> columns;
  for (int j = 0; j < spec.p; ++j) columns.push_back("beta[" + std::to_string(j) + "]");
  for (int t = 1; t <= spec.T; ++t)
    for (int i = 0; i < spec.rank(); ++i)
      columns.push_back("eta[" + std::to_string(t) + "][" + std::to_string(i) + "]");
  columns.emplace_back("sigma_K");
  columns.emplace_back("sigma_xi");

  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016" PRIx64, spec_hash_value);
  out << "# pmstm-chain v1\n";
  out << "# spec_hash " << hash_buf << "\n";
  out << "# seed " << seed << "\n";
  out << "# chain " << chain.chain_id << "\n";
  out << "# columns";
  for (const auto& c : columns) out << ' ' << c;
  out << "\n";
  for (const auto& d : chain.draws) {
    bool first = true;
    auto emit = [&](double v) {
      if (!first) out << '\t';
      out << format_double(v);
      first = false;
    };
    for (int j = 0; j < spec.p; ++j) emit(d.beta[j]);
    for (int t = 0; t < spec.T; ++t)
      for (int i = 0; i < spec.rank(); ++i) emit(d.eta[t][i]);
    emit(d.sigma_k);
    emit(d.sigma_xi);
    out << '\n';
  }
}

ChainLog read_chain_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("chain log: cannot open '" + path + "'");
  ChainLog log;
  std::string line;
  if (!std::getline(in, line) || line != "# pmstm-chain v1")
    throw ParseError("chain log: bad or missing version line in '" + path + "'");
  while (in.peek() == '#' && std::getline(in, line)) {
    std::istringstream ss(line);
    std::string hash_tag, key;
    ss >> hash_tag >> key;
    if (key == "spec_hash") {
      std::string value;
      ss >> value;
      log.spec_hash_value = std::stoull(value, nullptr, 16);
    } else if (key == "seed") {
      ss >> log.seed;
    } else if (key == "chain") {
      ss >> log.chain_id;
    } else if (key == "columns") {
      std::string c;
      while (ss >> c) log.columns.push_back(c);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (row.size() != log.columns.size())
      throw ParseError("chain log: row width mismatch in '" + path + "'");
    log.rows.push_back(std::move(row));
  }
  return log;
}

std::vector<CellPrediction> read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("predictions: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "variable,region,time,mean,sd,q2.5,q97.5")
    throw ParseError("predictions: bad header in '" + path + "'");
  std::vector<CellPrediction> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 7)
      throw ParseError("predictions: expected 7 fields in '" + path + "'");
    CellPrediction p;
    p.variable = std::stoi(fields[0]);
    p.region = std::stoi(fields[1]);
    p.time = std::stoi(fields[2]);
    p.mean = std::stod(fields[3]);
    p.sd = std::stod(fields[4]);
    p.q025 = std::stod(fields[5]);
    p.q975 = std::stod(fields[6]);
    rows.push_back(p);
  }
  return rows;
}

FitResult run_fit(const std::string& data_path, const std::string& adjacency_path,
                  const RunConfig& config, const std::string& out_dir) {
  const CountDataset data =
      load_counts(data_path, config.prediction_cells_path);
  const AdjacencyStructure adjacency = load_adjacency(adjacency_path);

  CovariateTable covariates;
  const CovariateTable* covariates_ptr = nullptr;
  if (!config.covariates_path.empty()) {
    covariates = load_covariates(config.covariates_path);
    covariates_ptr = &covariates;
  }

  FitResult result;
  result.spec = build_model_spec(data, adjacency, covariates_ptr, config.model);
  result.chains = run_chains(result.spec, data, config.sampler);
  result.summary =
      summarize(result.chains, data, result.spec, config.sampler.seed);

  const std::uint64_t hash = spec_hash(config, data, adjacency.n_regions);
  write_outputs(result.summary, out_dir, hash, config.sampler.seed);
  for (const auto& chain : result.chains)
    write_chain_log(chain, result.spec, out_dir, hash, config.sampler.seed);
  return result;
}

std::string diagnose_report(const std::string& chains_dir, int batch_size) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(chains_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("chain_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".log")
      paths.push_back(entry.path().string());
  }
  if (paths.empty())
    throw ParseError("diagnose: no chain_*.log files in '" + chains_dir + "'");
  std::sort(paths.begin(), paths.end());

  std::vector<ChainLog> logs;
  for (const auto& p : paths) logs.push_back(read_chain_log(p));
  for (const auto& log : logs) {
    if (log.columns != logs.front().columns)
      throw ParseError("diagnose: chain logs have different columns");
    if (log.spec_hash_value != logs.front().spec_hash_value)
      throw ParseError("diagnose: chain logs come from different runs");
  }

  std::ostringstream out;
  out << "chains: " << logs.size() << "  draws per chain:";
  for (const auto& log : logs) out << ' ' << log.rows.size();
  out << "\n";
  out << "scalar\trhat\tmcse\n";
  const auto& columns = logs.front().columns;
  const bool equal_lengths = std::all_of(
      logs.begin(), logs.end(),
      [&](const ChainLog& l) { return l.rows.size() == logs.front().rows.size(); });
  for (std::size_t j = 0; j < columns.size(); ++j) {
    std::vector<std::vector<double>> per_chain;
    std::vector<double> pooled;
    for (const auto& log : logs) {
      std::vector<double> series;
      series.reserve(log.rows.size());
      for (const auto& row : log.rows) series.push_back(row[j]);
      pooled.insert(pooled.end(), series.begin(), series.end());
      per_chain.push_back(std::move(series));
    }
    std::string rhat = "nan";
    if (logs.size() >= 2 && equal_lengths && per_chain.front().size() >= 10) {
      try {
        rhat = format_double(gelman_rubin(per_chain));
      } catch (const NumericalError&) {
        rhat = "nan";  // constant scalar
      }
    }
    std::string mcse = "nan";
    if (pooled.size() >= 2 * static_cast<std::size_t>(batch_size))
      mcse = format_double(batch_means_mcse(pooled, batch_size));
    out << columns[j] << '\t' << rhat << '\t' << mcse << '\n';
  }
  return out.str();
}

}  // namespace pmstm
