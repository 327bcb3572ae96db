#include "pmstm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "pmstm/errors.hpp"
#include "pmstm/rng.hpp"
#include "pmstm/special_functions.hpp"

namespace pmstm {

SyntheticTruth make_synthetic_truth(const SyntheticOptions& options) {
  if (options.grid_w < 2 || options.grid_h < 1)
    throw std::invalid_argument("synthetic: grid must be at least 2x1");
  if (options.variables < 1 || options.times < 1)
    throw std::invalid_argument("synthetic: need variables >= 1 and times >= 1");

  const int W = options.grid_w, Hh = options.grid_h;
  const int N = W * Hh;
  SyntheticTruth out;
  out.adjacency.n_regions = N;
  for (int y = 0; y < Hh; ++y) {
    for (int x = 0; x < W; ++x) {
      const int id = y * W + x;
      if (x + 1 < W) out.adjacency.edges.emplace_back(id, id + 1);
      if (y + 1 < Hh) out.adjacency.edges.emplace_back(id, id + W);
    }
  }

  out.covariates.names = {"xcoord", "ycoord", "primary_variable"};
  const double a_star = alpha_star();
  const double log_kappa = -digamma(a_star);
  Rng noise(options.seed, 0, 0, 77);

  out.truth.L = options.variables;
  out.truth.T = options.times;
  out.truth.observed.resize(options.times);
  out.truth.prediction.resize(options.times);

  for (int t = 1; t <= options.times; ++t) {
    for (int l = 1; l <= options.variables; ++l) {
      for (int region = 0; region < N; ++region) {
        const double cx = (region % W) / std::max(1.0, W - 1.0);
        const double cy = (region / W) / std::max(1.0, Hh - 1.0);
        Eigen::VectorXd cov(3);
        cov << cx, cy, (l == 1 ? 1.0 : 0.0);
        out.covariates.values[{l, region, t}] = cov;

        // smooth field: covariate trend + low-frequency surface drifting in t
        const double phase = 0.35 * (t - 1) + 0.8 * (l - 1);
        double y = options.intercept + 0.8 * cx - 0.5 * cy + 0.4 * (l == 1) +
                   0.9 * std::sin(2.0 * M_PI * cx + phase) *
                       std::cos(1.5 * M_PI * cy - 0.3 * phase);
        y += options.fine_scale_sd * (noise.log_gamma(a_star) + log_kappa);
        const long long z = noise.poisson(std::exp(y));
        out.truth.observed[t - 1].push_back({l, region, z});
        out.truth.prediction[t - 1].push_back({l, region});
      }
    }
  }
  finalize_dataset(out.truth);
  return out;
}

CountDataset simulate_pseudo_data(const CountDataset& truth,
                                  double observed_fraction, std::uint64_t seed,
                                  bool mask_per_variable_time) {
  if (!(observed_fraction > 0.0) || observed_fraction > 1.0)
    throw std::invalid_argument(
        "simulate_pseudo_data: observed fraction must lie in (0, 1]");

  if (truth.obs_to_pred_row.empty())
    throw std::invalid_argument("simulate_pseudo_data: truth not finalized");
  CountDataset pseudo;
  pseudo.L = truth.L;
  pseudo.T = truth.T;
  pseudo.observed.resize(truth.T);
  pseudo.prediction = truth.prediction;

  Rng draw_rng(seed, 1, 0, 0);
  for (int t = 1; t <= truth.T; ++t) {
    // group observed truth cells by variable for per-(l,t) masking
    std::map<int, std::vector<const ObservedCell*>> by_variable;
    for (const auto& cell : truth.observed[t - 1])
      by_variable[cell.variable].push_back(&cell);
    for (auto& [variable, cells] : by_variable) {
      const std::uint64_t mask_key =
          mask_per_variable_time
              ? static_cast<std::uint64_t>(variable) * 0x10000ull + t
              : 0ull;
      Rng mask_rng(seed, 2, mask_key, 0);
      // keep ceil(fraction * cells) cells, chosen by a seeded shuffle
      std::vector<int> order(cells.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[mask_rng.next_u64() % i]);
      const auto keep = static_cast<std::size_t>(
          std::ceil(observed_fraction * static_cast<double>(cells.size())));
      std::vector<int> kept(order.begin(),
                            order.begin() + std::min(keep, order.size()));
      std::sort(kept.begin(), kept.end());
      for (int idx : kept) {
        const auto& cell = *cells[idx];
        const long long r =
            draw_rng.poisson(static_cast<double>(cell.count) + 1.0);
        pseudo.observed[t - 1].push_back({cell.variable, cell.region, r});
      }
    }
  }
  finalize_dataset(pseudo);
  return pseudo;
}

double average_absolute_error(const CountDataset& truth,
                              const std::vector<CellPrediction>& predictions) {
  std::map<std::tuple<int, int, int>, double> truth_by_cell;
  for (int t = 1; t <= truth.T; ++t)
    for (const auto& cell : truth.observed[t - 1])
      truth_by_cell[{cell.variable, cell.region, t}] =
          static_cast<double>(cell.count);
  if (predictions.size() != truth_by_cell.size())
    throw std::invalid_argument(
        "average_absolute_error: prediction and truth cell sets differ");
  double total = 0.0;
  for (const auto& p : predictions) {
    auto it = truth_by_cell.find({p.variable, p.region, p.time});
    if (it == truth_by_cell.end())
      throw std::invalid_argument(
          "average_absolute_error: prediction cell missing from truth");
    total += std::fabs(it->second - p.mean);
  }
  return total / static_cast<double>(predictions.size());
}

double sign_test(const std::vector<double>& errors_a,
                 const std::vector<double>& errors_b) {
  if (errors_a.size() != errors_b.size())
    throw std::invalid_argument("sign_test: paired samples must align");
  if (errors_a.size() < 6)
    throw std::invalid_argument("sign_test: need at least 6 pairs");
  long long n = 0, positive = 0;
  for (std::size_t i = 0; i < errors_a.size(); ++i) {
    const double diff = errors_a[i] - errors_b[i];
    if (diff == 0.0) continue;  // ties dropped
    ++n;
    if (diff > 0.0) ++positive;
  }
  if (n == 0) throw NumericalError("sign_test: all pairs are tied");

  const long long k = std::min(positive, n - positive);
  // two-sided exact binomial tail, accumulated in the log domain
  double tail = 0.0;
  for (long long i = 0; i <= k; ++i) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1.0) -
                            std::lgamma(static_cast<double>(i) + 1.0) -
                            std::lgamma(static_cast<double>(n - i) + 1.0) -
                            static_cast<double>(n) * std::log(2.0);
    tail += std::exp(log_term);
  }
  return std::min(1.0, 2.0 * tail);
}

}  // namespace pmstm
