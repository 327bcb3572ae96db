#include "pmstm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pmstm/errors.hpp"
#include "pmstm/special_functions.hpp"

namespace pmstm {

namespace {
constexpr double kExpGuard = 700.0;
constexpr double kEigFloor = 1e-10;
}  // namespace

CovariateTable load_covariates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("covariates: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("covariates: empty file");
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  if (header.size() < 4 || header[0] != "variable" || header[1] != "region" ||
      header[2] != "time")
    throw ParseError(
        "covariates: expected header 'variable,region,time,<name>...'");
  CovariateTable table;
  table.names.assign(header.begin() + 3, header.end());
  const int k = static_cast<int>(table.names.size());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (static_cast<int>(fields.size()) != k + 3)
      throw ParseError("covariates: wrong field count at line " +
                       std::to_string(line_no));
    try {
      const int variable = std::stoi(fields[0]);
      const int region = std::stoi(fields[1]);
      const int time = std::stoi(fields[2]);
      Eigen::VectorXd v(k);
      for (int j = 0; j < k; ++j) v[j] = std::stod(fields[3 + j]);
      if (!table.values.emplace(std::make_tuple(variable, region, time), v).second)
        throw ParseError("covariates: duplicate key at line " +
                         std::to_string(line_no));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("covariates: malformed row at line " +
                       std::to_string(line_no));
    }
  }
  return table;
}

Eigen::VectorXd default_sigma_grid() {
  Eigen::VectorXd grid(200);
  for (int i = 0; i < 200; ++i) grid[i] = 0.01 * (i + 1);
  return grid;
}

double ModelSpec::alpha_k() const {
  return flavor == MlgFlavor::nmlg ? alpha_g : alpha_star();
}

double ModelSpec::kappa_k() const {
  return flavor == MlgFlavor::nmlg ? 1.0 / alpha_g
                                   : std::exp(-digamma(alpha_star()));
}

double ModelSpec::w_scale(double sigma_k) const {
  return (flavor == MlgFlavor::nmlg ? std::sqrt(alpha_g) : 1.0) * sigma_k;
}

namespace {

void validate_grid(const Eigen::VectorXd& grid, const char* name) {
  if (grid.size() < 1)
    throw std::invalid_argument(std::string(name) + ": grid must be non-empty");
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0))
      throw std::invalid_argument(std::string(name) + ": grid must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw std::invalid_argument(std::string(name) +
                                  ": grid must be strictly increasing");
  }
}

// Adjacency over the stacked (variable, region) cells of one time point:
// spatial edges within each variable block, plus same-region links across
// variables when requested.
Eigen::MatrixXd cell_adjacency(const std::vector<PredCell>& cells,
                               const Eigen::MatrixXd& region_adj,
                               bool cross_variable) {
  const int N = static_cast<int>(cells.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const auto& a = cells[i];
      const auto& b = cells[j];
      bool adjacent = false;
      if (a.variable == b.variable)
        adjacent = region_adj(a.region, b.region) != 0.0;
      else if (cross_variable)
        adjacent = a.region == b.region;
      if (adjacent) {
        A(i, j) = 1.0;
        A(j, i) = 1.0;
      }
    }
  }
  return A;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> symmetric_roots(
    const Eigen::MatrixXd& K) {
  const SortedEigen eig = sorted_symmetric_eigen(K);
  const auto r = K.rows();
  Eigen::VectorXd sqrt_vals(r), inv_sqrt_vals(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double lambda = std::max(eig.values[i], kEigFloor);
    sqrt_vals[i] = std::sqrt(lambda);
    inv_sqrt_vals[i] = 1.0 / sqrt_vals[i];
  }
  Eigen::MatrixXd root =
      eig.vectors * sqrt_vals.asDiagonal() * eig.vectors.transpose();
  Eigen::MatrixXd inv_root =
      eig.vectors * inv_sqrt_vals.asDiagonal() * eig.vectors.transpose();
  return {0.5 * (root + root.transpose()), 0.5 * (inv_root + inv_root.transpose())};
}

}  // namespace

ModelSpec build_model_spec(const CountDataset& data,
                           const AdjacencyStructure& adjacency,
                           const CovariateTable* covariates,
                           const ModelOptions& options) {
  if (data.T < 1) throw std::invalid_argument("model: dataset has no time points");
  if (data.max_region() >= adjacency.n_regions)
    throw ParseError("model: dataset references region " +
                     std::to_string(data.max_region()) +
                     " but the adjacency declares only " +
                     std::to_string(adjacency.n_regions) + " regions");

  ModelSpec spec;
  spec.flavor = options.flavor;
  spec.alpha_g = options.alpha_g;
  spec.sigma_beta = options.sigma_beta;
  spec.sigma_k_grid =
      options.sigma_k_grid.size() ? options.sigma_k_grid : default_sigma_grid();
  spec.sigma_xi_grid =
      options.sigma_xi_grid.size() ? options.sigma_xi_grid : default_sigma_grid();
  validate_grid(spec.sigma_k_grid, "sigma_k_grid");
  validate_grid(spec.sigma_xi_grid, "sigma_xi_grid");
  spec.include_fine_scale = options.include_fine_scale;
  spec.T = data.T;
  if (!(options.alpha_g > 0.0))
    throw std::invalid_argument("model: alpha_g must be positive");
  if (!(options.sigma_beta > 0.0))
    throw std::invalid_argument("model: sigma_beta must be positive");

  spec.p = 1 + (covariates ? static_cast<int>(covariates->names.size()) : 0);
  auto design_row = [&](int variable, int region, int time) {
    Eigen::VectorXd row(spec.p);
    row[0] = 1.0;
    if (covariates) {
      auto it = covariates->values.find({variable, region, time});
      if (it == covariates->values.end())
        throw ParseError("covariates: missing entry for (variable=" +
                         std::to_string(variable) + ", region=" +
                         std::to_string(region) + ", time=" +
                         std::to_string(time) + ")");
      row.tail(spec.p - 1) = it->second;
    }
    return row;
  };

  spec.X_obs.resize(data.T);
  spec.X_pred.resize(data.T);
  for (int t = 1; t <= data.T; ++t) {
    const auto& obs = data.observed[t - 1];
    const auto& pred = data.prediction[t - 1];
    spec.X_obs[t - 1].resize(obs.size(), spec.p);
    for (int i = 0; i < static_cast<int>(obs.size()); ++i)
      spec.X_obs[t - 1].row(i) = design_row(obs[i].variable, obs[i].region, t);
    spec.X_pred[t - 1].resize(pred.size(), spec.p);
    for (int i = 0; i < static_cast<int>(pred.size()); ++i)
      spec.X_pred[t - 1].row(i) = design_row(pred[i].variable, pred[i].region, t);
  }

  // Basis rank: common across time points, Hughes default when unset.
  const Eigen::MatrixXd region_adj = adjacency.dense();
  std::vector<Eigen::MatrixXd> cell_adj(data.T);
  int rank = options.rank;
  {
    int min_positive = std::numeric_limits<int>::max();
    for (int t = 1; t <= data.T; ++t) {
      cell_adj[t - 1] = cell_adjacency(data.prediction[t - 1], region_adj,
                                       options.cross_variable_adjacency);
      const SortedEigen eig = sorted_symmetric_eigen(
          mi_operator(spec.X_pred[t - 1], cell_adj[t - 1]));
      min_positive = std::min(min_positive, positive_eigenvalue_count(eig.values));
    }
    if (rank < 0) rank = static_cast<int>(std::ceil(0.10 * min_positive));
    if (rank > min_positive)
      throw std::invalid_argument(
          "model: rank " + std::to_string(rank) + " exceeds the " +
          std::to_string(min_positive) + " positive eigenvalues available");
  }

  spec.basis.r = rank;
  if (rank > 0) {
    spec.basis.psi_pred.resize(data.T);
    spec.basis.psi_obs.resize(data.T);
    spec.basis.propagator.resize(data.T);
    spec.basis.kstar.resize(data.T);
    spec.basis.kstar_sqrt.resize(data.T);
    spec.basis.kstar_inv_sqrt.resize(data.T);
    for (int t = 1; t <= data.T; ++t) {
      const auto& Xp = spec.X_pred[t - 1];
      const auto& A = cell_adj[t - 1];
      Eigen::MatrixXd psi = mi_basis(Xp, A, rank);
      // non-confounding: [X^P Psi^P] must keep full column rank
      Eigen::MatrixXd stacked(Xp.rows(), spec.p + rank);
      stacked << Xp, psi;
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
      qr.setThreshold(1e-10);
      if (qr.rank() < spec.p + rank)
        throw NumericalError("model: covariates and basis are confounded at t=" +
                             std::to_string(t));
      spec.basis.psi_pred[t - 1] = psi;
      const auto& rows = data.obs_to_pred_row[t - 1];
      spec.basis.psi_obs[t - 1].resize(rows.size(), rank);
      for (int i = 0; i < static_cast<int>(rows.size()); ++i)
        spec.basis.psi_obs[t - 1].row(i) = psi.row(rows[i]);

      const Eigen::MatrixXd Q =
          options.icar_degree_target
              ? Eigen::MatrixXd(A.rowwise().sum().asDiagonal().toDenseMatrix() - A)
              : Eigen::MatrixXd(Eigen::MatrixXd::Identity(A.rows(), A.cols()) - A);
      spec.basis.kstar[t - 1] = k_star(psi, Q);
      auto roots = symmetric_roots(spec.basis.kstar[t - 1]);
      spec.basis.kstar_sqrt[t - 1] = std::move(roots.first);
      spec.basis.kstar_inv_sqrt[t - 1] = std::move(roots.second);

      if (t >= 2) {
        Eigen::MatrixXd M = mi_propagator(psi, Xp);
        const double ortho_err =
            (M.transpose() * M - Eigen::MatrixXd::Identity(rank, rank))
                .cwiseAbs()
                .maxCoeff();
        if (ortho_err > 1e-8)
          throw NumericalError("model: propagator is not orthogonal at t=" +
                               std::to_string(t));
        spec.basis.propagator[t - 1] = std::move(M);
      }
    }
  }
  return spec;
}

ChainState initial_state(const CountDataset& data, const ModelSpec& spec) {
  ChainState state;
  // ridge-regularized log-linear fit of log(Z + 1)
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(spec.p, spec.p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(spec.p);
  for (int t = 1; t <= spec.T; ++t) {
    const auto& X = spec.X_obs[t - 1];
    const auto& obs = data.observed[t - 1];
    Eigen::VectorXd y(obs.size());
    for (int i = 0; i < static_cast<int>(obs.size()); ++i)
      y[i] = std::log(static_cast<double>(obs[i].count) + 1.0);
    xtx += X.transpose() * X;
    xty += X.transpose() * y;
  }
  xtx.diagonal().array() += 1e-6 * std::max(1.0, xtx.trace() / spec.p);
  state.beta = xtx.ldlt().solve(xty);

  state.eta.assign(spec.T, Eigen::VectorXd::Zero(spec.rank()));
  state.xi.resize(spec.T);
  for (int t = 1; t <= spec.T; ++t)
    state.xi[t - 1] = Eigen::VectorXd::Zero(data.n_t(t));
  state.sigma_k = spec.sigma_k_grid[spec.sigma_k_grid.size() / 2];
  state.sigma_xi = spec.sigma_xi_grid[spec.sigma_xi_grid.size() / 2];
  return state;
}

namespace {

Eigen::VectorXd counts_vector(const CountDataset& data, int t) {
  const auto& obs = data.observed[t - 1];
  Eigen::VectorXd z(obs.size());
  for (int i = 0; i < static_cast<int>(obs.size()); ++i)
    z[i] = static_cast<double>(obs[i].count);
  return z;
}

}  // namespace

Eigen::VectorXd linear_predictor_obs(const ChainState& state,
                                     const CountDataset& data,
                                     const ModelSpec& spec, int t) {
  Eigen::VectorXd y = spec.X_obs[t - 1] * state.beta;
  if (spec.rank() > 0) y += spec.basis.psi_obs[t - 1] * state.eta[t - 1];
  if (spec.include_fine_scale) y += state.xi[t - 1];
  (void)data;
  return y;
}

CMLGParams fc_beta(const ChainState& state, const CountDataset& data,
                   const ModelSpec& spec) {
  const double alpha_k = spec.alpha_k();
  const double kappa_k = spec.kappa_k();
  const double prior_scale = std::sqrt(alpha_k) * spec.sigma_beta;

  long long n = 0;
  for (int t = 1; t <= spec.T; ++t) n += data.n_t(t);
  const int m = static_cast<int>(n) + spec.p;

  Eigen::MatrixXd H(m, spec.p);
  Eigen::VectorXd alpha(m), log_kappa_inv(m);
  Eigen::VectorXd col_sums = Eigen::VectorXd::Zero(spec.p);

  int row = 0;
  for (int t = 1; t <= spec.T; ++t) {
    const auto& X = spec.X_obs[t - 1];
    const int nt = data.n_t(t);
    H.middleRows(row, nt) = X;
    // offset excludes the X beta part
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(nt);
    if (spec.rank() > 0) offset += spec.basis.psi_obs[t - 1] * state.eta[t - 1];
    if (spec.include_fine_scale) offset += state.xi[t - 1];
    log_kappa_inv.segment(row, nt) = offset;
    alpha.segment(row, nt) = counts_vector(data, t);
    col_sums += X.colwise().sum().transpose();
    row += nt;
  }
  H.bottomRows(spec.p) =
      (1.0 / prior_scale) * Eigen::MatrixXd::Identity(spec.p, spec.p);
  log_kappa_inv.tail(spec.p).setConstant(-std::log(kappa_k));

  const double d = zero_count_shift(alpha_k, prior_scale * col_sums,
                                    data.has_zero_count());
  alpha.head(static_cast<int>(n)).array() += d;
  alpha.tail(spec.p) =
      Eigen::VectorXd::Constant(spec.p, alpha_k) - d * prior_scale * col_sums;
  return CMLGParams(std::move(H), std::move(alpha), std::move(log_kappa_inv));
}

CMLGParams fc_eta(const ChainState& state, const CountDataset& data,
                  const ModelSpec& spec, int t) {
  if (t < 1 || t > spec.T) throw std::invalid_argument("fc_eta: t out of range");
  const int r = spec.rank();
  if (r == 0) throw std::invalid_argument("fc_eta: model has no basis term");
  const double alpha_k = spec.alpha_k();
  const double kappa_k = spec.kappa_k();
  const double ws = spec.w_scale(state.sigma_k);
  const bool interior = t < spec.T;
  const int nt = data.n_t(t);
  const int m = nt + (interior ? 2 * r : r);

  const auto& psi = spec.basis.psi_obs[t - 1];
  const Eigen::MatrixXd w_inv_sqrt_t = spec.basis.kstar_inv_sqrt[t - 1] / ws;
  const Eigen::MatrixXd w_sqrt_t = spec.basis.kstar_sqrt[t - 1] * ws;
  const Eigen::VectorXd psi_col_sums = psi.colwise().sum().transpose();

  Eigen::MatrixXd H(m, r);
  Eigen::VectorXd alpha(m), log_kappa_inv(m);

  H.topRows(nt) = psi;
  alpha.head(nt) = counts_vector(data, t);
  Eigen::VectorXd offset = spec.X_obs[t - 1] * state.beta;
  if (spec.include_fine_scale) offset += state.xi[t - 1];
  log_kappa_inv.head(nt) = offset;

  H.middleRows(nt, r) = w_inv_sqrt_t;
  log_kappa_inv.segment(nt, r).setConstant(-std::log(kappa_k));
  if (t >= 2)
    log_kappa_inv.segment(nt, r) -=
        w_inv_sqrt_t * (spec.basis.propagator[t - 1] * state.eta[t - 2]);

  // penalty-block row sums entering the d-shift denominator
  Eigen::VectorXd back_sums = w_sqrt_t * psi_col_sums;
  double max_abs = back_sums.cwiseAbs().maxCoeff();

  Eigen::VectorXd fwd_sums;
  if (interior) {
    const Eigen::MatrixXd& M_next = spec.basis.propagator[t];
    const Eigen::MatrixXd w_inv_sqrt_next = spec.basis.kstar_inv_sqrt[t] / ws;
    const Eigen::MatrixXd w_sqrt_next = spec.basis.kstar_sqrt[t] * ws;
    H.bottomRows(r) = -(w_inv_sqrt_next * M_next);
    log_kappa_inv.tail(r) =
        (-std::log(kappa_k)) + (w_inv_sqrt_next * state.eta[t]).array();
    fwd_sums = w_sqrt_next * (M_next * psi_col_sums);
    max_abs = std::max(max_abs, fwd_sums.cwiseAbs().maxCoeff());
  }

  const double d = data.has_zero_count() ? alpha_k / (1.0 + max_abs) : 0.0;
  alpha.head(nt).array() += d;
  if (interior) {
    alpha.segment(nt, r) =
        Eigen::VectorXd::Constant(r, alpha_k) - 0.5 * d * back_sums;
    alpha.tail(r) = Eigen::VectorXd::Constant(r, alpha_k) + 0.5 * d * fwd_sums;
  } else {
    alpha.tail(r) = Eigen::VectorXd::Constant(r, alpha_k) - d * back_sums;
  }
  return CMLGParams(std::move(H), std::move(alpha), std::move(log_kappa_inv));
}

CMLGParams fc_xi(const ChainState& state, const CountDataset& data,
                 const ModelSpec& spec, int t) {
  if (t < 1 || t > spec.T) throw std::invalid_argument("fc_xi: t out of range");
  const double alpha_k = spec.alpha_k();
  const double kappa_k = spec.kappa_k();
  const double prior_scale = std::sqrt(alpha_k) * state.sigma_xi;
  const int nt = data.n_t(t);

  Eigen::MatrixXd H(2 * nt, nt);
  H.topRows(nt) = Eigen::MatrixXd::Identity(nt, nt);
  H.bottomRows(nt) =
      (1.0 / prior_scale) * Eigen::MatrixXd::Identity(nt, nt);

  Eigen::VectorXd offset = spec.X_obs[t - 1] * state.beta;
  if (spec.rank() > 0) offset += spec.basis.psi_obs[t - 1] * state.eta[t - 1];

  const double d = data.has_zero_count()
                       ? alpha_k / (1.0 + prior_scale)
                       : 0.0;
  Eigen::VectorXd alpha(2 * nt), log_kappa_inv(2 * nt);
  alpha.head(nt) = counts_vector(data, t).array() + d;
  alpha.tail(nt).setConstant(alpha_k - d * prior_scale);
  log_kappa_inv.head(nt) = offset;
  log_kappa_inv.tail(nt).setConstant(-std::log(kappa_k));

  CMLGParams params(std::move(H), std::move(alpha), std::move(log_kappa_inv));
  params.pair_scale = 1.0 / prior_scale;
  params.has_pair_structure = true;
  return params;
}

namespace {

Eigen::VectorXd normalize_log_weights(Eigen::VectorXd log_w, const char* what) {
  const double max_lw = log_w.maxCoeff();
  if (!std::isfinite(max_lw))
    throw NumericalError(std::string(what) +
                         ": all grid log-weights are -inf (numerical blow-up)");
  Eigen::VectorXd w = (log_w.array() - max_lw).exp();
  return w / w.sum();
}

}  // namespace

Eigen::VectorXd fc_sigma_k(const ChainState& state, const ModelSpec& spec) {
  const auto& grid = spec.sigma_k_grid;
  const int U = static_cast<int>(grid.size());
  const int r = spec.rank();
  if (r == 0)
    return Eigen::VectorXd::Constant(U, 1.0 / U);

  const double alpha_k = spec.alpha_k();
  const double kappa_k = spec.kappa_k();
  const double aw = spec.w_scale(1.0);  // alpha_G^{k/2}

  // sigma-free residuals u_t = Kstar^{-1/2} (eta_t - M_t eta_{t-1})
  std::vector<Eigen::VectorXd> u(spec.T);
  for (int t = 1; t <= spec.T; ++t) {
    Eigen::VectorXd resid = state.eta[t - 1];
    if (t >= 2) resid -= spec.basis.propagator[t - 1] * state.eta[t - 2];
    u[t - 1] = spec.basis.kstar_inv_sqrt[t - 1] * resid;
  }

  Eigen::VectorXd log_w(U);
  for (int j = 0; j < U; ++j) {
    const double sigma = grid[j];
    double lw = 0.0;
    for (int t = 1; t <= spec.T; ++t) {
      const Eigen::ArrayXd scaled = u[t - 1].array() / (aw * sigma);
      lw += -r * std::log(sigma) + alpha_k * scaled.sum() -
            scaled.exp().sum() / kappa_k;
    }
    log_w[j] = lw;
  }
  return normalize_log_weights(std::move(log_w), "fc_sigma_k");
}

Eigen::VectorXd fc_sigma_xi(const ChainState& state, const ModelSpec& spec) {
  const auto& grid = spec.sigma_xi_grid;
  const int U = static_cast<int>(grid.size());
  if (!spec.include_fine_scale)
    return Eigen::VectorXd::Constant(U, 1.0 / U);

  const double alpha_k = spec.alpha_k();
  const double kappa_k = spec.kappa_k();
  const double root_alpha = std::sqrt(alpha_k);

  Eigen::VectorXd log_w(U);
  for (int j = 0; j < U; ++j) {
    const double sigma = grid[j];
    double lw = 0.0;
    for (int t = 1; t <= spec.T; ++t) {
      const Eigen::ArrayXd scaled = state.xi[t - 1].array() / (root_alpha * sigma);
      lw += -static_cast<double>(state.xi[t - 1].size()) * std::log(sigma) +
            alpha_k * scaled.sum() - scaled.exp().sum() / kappa_k;
    }
    log_w[j] = lw;
  }
  return normalize_log_weights(std::move(log_w), "fc_sigma_xi");
}

double log_likelihood(const ChainState& state, const CountDataset& data,
                      const ModelSpec& spec) {
  double total = 0.0;
  for (int t = 1; t <= spec.T; ++t) {
    const Eigen::VectorXd y = linear_predictor_obs(state, data, spec, t);
    const auto& obs = data.observed[t - 1];
    for (int i = 0; i < static_cast<int>(obs.size()); ++i) {
      if (y[i] > kExpGuard) return -std::numeric_limits<double>::infinity();
      const double z = static_cast<double>(obs[i].count);
      total += z * y[i] - std::exp(y[i]) - std::lgamma(z + 1.0);
    }
  }
  return total;
}

double compute_dic(const std::vector<Draw>& draws, const CountDataset& data,
                   const ModelSpec& spec) {
  if (draws.empty()) throw std::invalid_argument("compute_dic: empty chain");
  ChainState mean_state;
  mean_state.beta = Eigen::VectorXd::Zero(spec.p);
  mean_state.eta.assign(spec.T, Eigen::VectorXd::Zero(spec.rank()));
  mean_state.xi.resize(spec.T);
  for (int t = 1; t <= spec.T; ++t)
    mean_state.xi[t - 1] = Eigen::VectorXd::Zero(data.n_t(t));
  mean_state.sigma_k = draws.front().sigma_k;
  mean_state.sigma_xi = draws.front().sigma_xi;

  double mean_deviance = 0.0;
  ChainState s = mean_state;
  for (const Draw& d : draws) {
    s.beta = d.beta;
    s.eta = d.eta;
    s.xi = d.xi;
    mean_deviance += -2.0 * log_likelihood(s, data, spec);
    mean_state.beta += d.beta;
    for (int t = 0; t < spec.T; ++t) {
      if (spec.rank() > 0) mean_state.eta[t] += d.eta[t];
      if (spec.include_fine_scale) mean_state.xi[t] += d.xi[t];
    }
  }
  const double n = static_cast<double>(draws.size());
  mean_deviance /= n;
  mean_state.beta /= n;
  for (int t = 0; t < spec.T; ++t) {
    if (spec.rank() > 0) mean_state.eta[t] /= n;
    if (spec.include_fine_scale) mean_state.xi[t] /= n;
  }
  const double deviance_at_mean = -2.0 * log_likelihood(mean_state, data, spec);
  return 2.0 * mean_deviance - deviance_at_mean;
}

}  // namespace pmstm
