#include "pmstm/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "pmstm/errors.hpp"
#include "pmstm/rng.hpp"

namespace pmstm {

namespace {

constexpr std::uint64_t kBlockBeta = 1;
constexpr std::uint64_t kBlockEta = 2;
constexpr std::uint64_t kBlockXi = 3;
constexpr std::uint64_t kBlockSigmaK = 4;
constexpr std::uint64_t kBlockSigmaXi = 5;
constexpr std::uint64_t kBlockPredict = 6;
constexpr std::uint64_t kBlockMonitor = 7;

std::uint64_t block_key(std::uint64_t block, std::uint64_t sub = 0) {
  return block * 0x100000000ull + sub;
}

int draw_categorical(const Eigen::VectorXd& pmf, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (u <= acc) return i;
  }
  return static_cast<int>(pmf.size()) - 1;
}

void require_finite(const Eigen::VectorXd& v, int sweep, const char* block) {
  if (!v.allFinite())
    throw NumericalError("gibbs: non-finite draw in block '" +
                         std::string(block) + "' at sweep " +
                         std::to_string(sweep));
}

double quantile(std::vector<double> sorted, double p) {
  const auto n = sorted.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

constexpr double kExpGuard = 700.0;

}  // namespace

ChainDraws run_chain(const ModelSpec& spec, const CountDataset& data,
                     const SamplerConfig& cfg, int chain_id) {
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations)
    throw std::invalid_argument("sampler: need 0 <= burn_in < iterations");
  if (cfg.thin < 1) throw std::invalid_argument("sampler: thin must be >= 1");
  if (cfg.chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");

  ChainDraws out;
  out.chain_id = chain_id;
  ChainState state = initial_state(data, spec);
  const auto chain = static_cast<std::uint64_t>(chain_id);
  int guard_trips = 0;

  for (int sweep = 1; sweep <= cfg.iterations; ++sweep) {
    const auto b = static_cast<std::uint64_t>(sweep);
    const bool record = cfg.record_trace && sweep == 1;

    {
      Rng rng(cfg.seed, chain, b, block_key(kBlockBeta));
      state.beta = sample_mmlg(fc_beta(state, data, spec), rng);
      require_finite(state.beta, sweep, "beta");
      if (record) out.trace.push_back("beta");
    }
    if (spec.rank() > 0) {
      for (int t = 1; t < spec.T; ++t) {
        Rng rng(cfg.seed, chain, b, block_key(kBlockEta, t));
        state.eta[t - 1] = sample_mmlg(fc_eta(state, data, spec, t), rng);
        require_finite(state.eta[t - 1], sweep, "eta");
        if (record) out.trace.push_back("eta_" + std::to_string(t));
      }
      {
        Rng rng(cfg.seed, chain, b, block_key(kBlockEta, spec.T));
        state.eta[spec.T - 1] =
            sample_mmlg(fc_eta(state, data, spec, spec.T), rng);
        require_finite(state.eta[spec.T - 1], sweep, "eta");
        if (record) out.trace.push_back("eta_" + std::to_string(spec.T));
      }
    }
    if (spec.include_fine_scale) {
      for (int t = 1; t <= spec.T; ++t) {
        Rng rng(cfg.seed, chain, b, block_key(kBlockXi, t));
        state.xi[t - 1] = sample_mmlg(fc_xi(state, data, spec, t), rng);
        require_finite(state.xi[t - 1], sweep, "xi");
        if (record) out.trace.push_back("xi_" + std::to_string(t));
      }
    }
    {
      Rng rng(cfg.seed, chain, b, block_key(kBlockSigmaK));
      state.sigma_k = spec.sigma_k_grid[draw_categorical(fc_sigma_k(state, spec), rng)];
      if (record) out.trace.push_back("sigma_K");
    }
    {
      Rng rng(cfg.seed, chain, b, block_key(kBlockSigmaXi));
      state.sigma_xi =
          spec.sigma_xi_grid[draw_categorical(fc_sigma_xi(state, spec), rng)];
      if (record) out.trace.push_back("sigma_xi");
    }

    if (sweep > cfg.burn_in && (sweep - cfg.burn_in - 1) % cfg.thin == 0) {
      Draw d;
      d.beta = state.beta;
      d.eta = state.eta;
      d.xi = state.xi;
      d.sigma_k = state.sigma_k;
      d.sigma_xi = state.sigma_xi;
      for (int t = 1; t <= spec.T; ++t) {
        if (linear_predictor_obs(state, data, spec, t).maxCoeff() > kExpGuard) {
          out.unstable = true;
          ++guard_trips;
          break;
        }
      }
      if (guard_trips > 50)
        throw NumericalError(
            "gibbs: chain " + std::to_string(chain_id) +
            " exceeded the exp overflow guard on more than 50 stored sweeps");
      out.draws.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<ChainDraws> run_chains(const ModelSpec& spec,
                                   const CountDataset& data,
                                   const SamplerConfig& cfg) {
  std::vector<ChainDraws> result(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  std::vector<std::thread> workers;
  workers.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    workers.emplace_back([&, c] {
      try {
        result[c] = run_chain(spec, data, cfg, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const auto m = chains.size();
  if (m < 2) throw std::invalid_argument("gelman_rubin: need at least 2 chains");
  const auto n = chains.front().size();
  if (n < 10) throw std::invalid_argument("gelman_rubin: chains too short");
  for (const auto& c : chains)
    if (c.size() != n)
      throw std::invalid_argument("gelman_rubin: chains must have equal length");

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mu = 0.0;
    for (double x : chains[j]) mu += x;
    mu /= static_cast<double>(n);
    double s2 = 0.0;
    for (double x : chains[j]) s2 += (x - mu) * (x - mu);
    s2 /= static_cast<double>(n - 1);
    means[j] = mu;
    vars[j] = s2;
  }
  double w = 0.0;
  for (double v : vars) w += v;
  w /= static_cast<double>(m);
  if (w <= 0.0)
    throw NumericalError("gelman_rubin: zero within-chain variance");
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= static_cast<double>(m);
  double b_over_n = 0.0;
  for (double mu : means) b_over_n += (mu - grand) * (mu - grand);
  b_over_n /= static_cast<double>(m - 1);

  const double nn = static_cast<double>(n);
  const double v_hat =
      (nn - 1.0) / nn * w + (1.0 + 1.0 / static_cast<double>(m)) * b_over_n;
  return std::sqrt(std::max(1.0, v_hat / w));
}

double batch_means_mcse(const std::vector<double>& draws, int batch_size) {
  if (batch_size < 1)
    throw std::invalid_argument("batch_means_mcse: batch_size must be >= 1");
  const auto n = draws.size();
  if (n < 2 * static_cast<std::size_t>(batch_size))
    throw std::invalid_argument(
        "batch_means_mcse: need at least 2*batch_size draws");
  const std::size_t nb = n / static_cast<std::size_t>(batch_size);
  std::vector<double> batch_means(nb, 0.0);
  for (std::size_t j = 0; j < nb; ++j) {
    for (int i = 0; i < batch_size; ++i)
      batch_means[j] += draws[j * batch_size + i];
    batch_means[j] /= batch_size;
  }
  double mu = 0.0;
  for (double x : batch_means) mu += x;
  mu /= static_cast<double>(nb);
  double s2 = 0.0;
  for (double x : batch_means) s2 += (x - mu) * (x - mu);
  s2 /= static_cast<double>(nb - 1);
  return std::sqrt(s2 / static_cast<double>(nb));
}

std::vector<std::string> monitored_scalars(const ModelSpec& spec,
                                           std::uint64_t seed) {
  std::vector<std::string> names;
  for (int j = 0; j < spec.p; ++j) names.push_back("beta[" + std::to_string(j) + "]");
  names.emplace_back("sigma_K");
  names.emplace_back("sigma_xi");
  // up to 10 randomly keyed latent coordinates
  const int r = spec.rank();
  if (r > 0) {
    Rng rng(seed, 0, 0, block_key(kBlockMonitor));
    std::set<std::pair<int, int>> picked;
    const long long total = static_cast<long long>(spec.T) * r;
    const int want = static_cast<int>(std::min<long long>(10, total));
    while (static_cast<int>(picked.size()) < want) {
      const int t = 1 + static_cast<int>(rng.next_u64() % spec.T);
      const int i = static_cast<int>(rng.next_u64() % r);
      picked.insert({t, i});
    }
    for (const auto& [t, i] : picked)
      names.push_back("eta[" + std::to_string(t) + "][" + std::to_string(i) + "]");
  }
  return names;
}

std::vector<double> extract_scalar(const std::vector<Draw>& draws,
                                   const std::string& name,
                                   const ModelSpec& spec) {
  std::vector<double> out;
  out.reserve(draws.size());
  auto bracket = [](const std::string& s, std::size_t from) {
    const auto lo = s.find('[', from);
    const auto hi = s.find(']', lo);
    return std::stoi(s.substr(lo + 1, hi - lo - 1));
  };
  if (name.rfind("beta[", 0) == 0) {
    const int j = bracket(name, 0);
    if (j < 0 || j >= spec.p)
      throw std::invalid_argument("extract_scalar: bad coordinate " + name);
    for (const auto& d : draws) out.push_back(d.beta[j]);
  } else if (name == "sigma_K") {
    for (const auto& d : draws) out.push_back(d.sigma_k);
  } else if (name == "sigma_xi") {
    for (const auto& d : draws) out.push_back(d.sigma_xi);
  } else if (name.rfind("eta[", 0) == 0) {
    const int t = bracket(name, 0);
    const int i = bracket(name, name.find(']'));
    if (t < 1 || t > spec.T || i < 0 || i >= spec.rank())
      throw std::invalid_argument("extract_scalar: bad coordinate " + name);
    for (const auto& d : draws) out.push_back(d.eta[t - 1][i]);
  } else {
    throw std::invalid_argument("extract_scalar: unknown scalar " + name);
  }
  return out;
}

PosteriorSummary summarize(const std::vector<ChainDraws>& chains,
                           const CountDataset& data, const ModelSpec& spec,
                           std::uint64_t seed, int batch_size) {
  if (chains.empty()) throw std::invalid_argument("summarize: no chains");
  long long total_draws = 0;
  for (const auto& c : chains) total_draws += static_cast<long long>(c.draws.size());
  if (total_draws == 0) throw std::invalid_argument("summarize: empty chains");

  PosteriorSummary summary;
  summary.total_draws = total_draws;
  for (const auto& c : chains) summary.unstable |= c.unstable;

  const double alpha_k = spec.alpha_k();
  const double log_kappa_k = std::log(spec.kappa_k());
  const double root_alpha = std::sqrt(alpha_k);

  // reverse map: prediction row -> observed row (-1 when unobserved)
  std::vector<std::vector<int>> pred_to_obs(spec.T);
  for (int t = 1; t <= spec.T; ++t) {
    pred_to_obs[t - 1].assign(data.N_t(t), -1);
    const auto& fwd = data.obs_to_pred_row[t - 1];
    for (int i = 0; i < static_cast<int>(fwd.size()); ++i)
      pred_to_obs[t - 1][fwd[i]] = i;
  }

  std::vector<double> samples;
  samples.reserve(total_draws);
  long long cell_index = 0;
  for (int t = 1; t <= spec.T; ++t) {
    const auto& pred = data.prediction[t - 1];
    for (int i = 0; i < static_cast<int>(pred.size()); ++i, ++cell_index) {
      samples.clear();
      for (const auto& chain : chains) {
        const auto chain_id = static_cast<std::uint64_t>(chain.chain_id);
        for (std::size_t dix = 0; dix < chain.draws.size(); ++dix) {
          const Draw& d = chain.draws[dix];
          double y = spec.X_pred[t - 1].row(i).dot(d.beta);
          if (spec.rank() > 0)
            y += spec.basis.psi_pred[t - 1].row(i).dot(d.eta[t - 1]);
          if (spec.include_fine_scale) {
            const int obs_row = pred_to_obs[t - 1][i];
            if (obs_row >= 0) {
              y += d.xi[t - 1][obs_row];
            } else {
              Rng rng(seed, chain_id, static_cast<std::uint64_t>(dix),
                      block_key(kBlockPredict, static_cast<std::uint64_t>(cell_index)));
              const double w = rng.log_gamma(alpha_k) + log_kappa_k;
              y += root_alpha * d.sigma_xi * w;
            }
          }
          if (y > kExpGuard) {
            summary.unstable = true;
            y = kExpGuard;
          }
          samples.push_back(std::exp(y));
        }
      }
      std::sort(samples.begin(), samples.end());
      double mean = 0.0;
      for (double s : samples) mean += s;
      mean /= static_cast<double>(samples.size());
      double sd = 0.0;
      if (samples.size() > 1) {
        for (double s : samples) sd += (s - mean) * (s - mean);
        sd = std::sqrt(sd / static_cast<double>(samples.size() - 1));
      }
      CellPrediction cp;
      cp.variable = pred[i].variable;
      cp.region = pred[i].region;
      cp.time = t;
      cp.mean = mean;
      cp.sd = sd;
      cp.q025 = quantile(samples, 0.025);
      cp.q975 = quantile(samples, 0.975);
      summary.predictions.push_back(cp);
    }
  }
  std::sort(summary.predictions.begin(), summary.predictions.end(),
            [](const CellPrediction& a, const CellPrediction& b) {
              return std::tie(a.variable, a.region, a.time) <
                     std::tie(b.variable, b.region, b.time);
            });

  std::vector<Draw> pooled;
  pooled.reserve(total_draws);
  for (const auto& c : chains)
    pooled.insert(pooled.end(), c.draws.begin(), c.draws.end());

  auto param_names = [&] {
    std::vector<std::string> names;
    for (int j = 0; j < spec.p; ++j)
      names.push_back("beta[" + std::to_string(j) + "]");
    names.emplace_back("sigma_K");
    names.emplace_back("sigma_xi");
    return names;
  }();
  for (const auto& name : param_names) {
    const std::vector<double> series = extract_scalar(pooled, name, spec);
    std::vector<double> sorted = series;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(series.size());
    double sd = 0.0;
    if (series.size() > 1) {
      for (double x : series) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(series.size() - 1));
    }
    ParameterSummary ps;
    ps.name = name;
    ps.mean = mean;
    ps.sd = sd;
    ps.q025 = quantile(sorted, 0.025);
    ps.q50 = quantile(sorted, 0.5);
    ps.q975 = quantile(sorted, 0.975);
    summary.parameters.push_back(ps);
  }

  const bool equal_lengths = [&] {
    for (const auto& c : chains)
      if (c.draws.size() != chains.front().draws.size()) return false;
    return true;
  }();
  for (const auto& name : monitored_scalars(spec, seed)) {
    ScalarDiagnostic sdg;
    sdg.name = name;
    sdg.rhat = std::numeric_limits<double>::quiet_NaN();
    sdg.mcse = std::numeric_limits<double>::quiet_NaN();
    if (chains.size() >= 2 && equal_lengths &&
        chains.front().draws.size() >= 10) {
      std::vector<std::vector<double>> per_chain;
      per_chain.reserve(chains.size());
      for (const auto& c : chains)
        per_chain.push_back(extract_scalar(c.draws, name, spec));
      try {
        sdg.rhat = gelman_rubin(per_chain);
      } catch (const NumericalError&) {
        // constant scalar (e.g. a sigma stuck on one grid point)
      }
    }
    const std::vector<double> series = extract_scalar(pooled, name, spec);
    if (series.size() >= 2 * static_cast<std::size_t>(batch_size))
      sdg.mcse = batch_means_mcse(series, batch_size);
    summary.diagnostics.push_back(sdg);
  }

  summary.dic = compute_dic(pooled, data, spec);
  return summary;
}

}  // namespace pmstm
