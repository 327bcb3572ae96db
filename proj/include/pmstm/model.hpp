#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "pmstm/data.hpp"
#include "pmstm/mi_structures.hpp"
#include "pmstm/mlg.hpp"
#include "pmstm/mlg_conditional.hpp"

namespace pmstm {

// Covariates keyed by (variable, region, time); an intercept column is always
// prepended when design matrices are assembled.
struct CovariateTable {
  std::vector<std::string> names;
  std::map<std::tuple<int, int, int>, Eigen::VectorXd> values;
};

CovariateTable load_covariates(const std::string& path);

// Basis functions, propagators, and the calibrated precision targets, one set
// per time point. Propagators are orthogonal by construction.
struct BasisSet {
  int r = 0;
  std::vector<Eigen::MatrixXd> psi_pred;        // N_t x r
  std::vector<Eigen::MatrixXd> psi_obs;         // n_t x r
  std::vector<Eigen::MatrixXd> propagator;      // M_t, valid for t >= 2
  std::vector<Eigen::MatrixXd> kstar;           // r x r
  std::vector<Eigen::MatrixXd> kstar_sqrt;      // symmetric psd root
  std::vector<Eigen::MatrixXd> kstar_inv_sqrt;  // floor 1e-10 on eigenvalues
};

struct ModelOptions {
  MlgFlavor flavor = MlgFlavor::smlg;
  double alpha_g = 1000.0;
  double sigma_beta = 10.0;
  Eigen::VectorXd sigma_k_grid;   // default 0.01, 0.02, ..., 2.00
  Eigen::VectorXd sigma_xi_grid;  // default 0.01, 0.02, ..., 2.00
  int rank = -1;                  // -1: ceil(0.10 * positive eigenvalues)
  bool include_fine_scale = true;
  bool cross_variable_adjacency = true;
  bool icar_degree_target = false;  // target D - A instead of I - A
};

Eigen::VectorXd default_sigma_grid();

struct ModelSpec {
  MlgFlavor flavor = MlgFlavor::smlg;
  double alpha_g = 1000.0;
  double sigma_beta = 10.0;
  Eigen::VectorXd sigma_k_grid;
  Eigen::VectorXd sigma_xi_grid;
  bool include_fine_scale = true;

  int p = 0;
  int T = 0;
  std::vector<Eigen::MatrixXd> X_obs;   // n_t x p
  std::vector<Eigen::MatrixXd> X_pred;  // N_t x p
  BasisSet basis;

  int rank() const { return basis.r; }
  double alpha_k() const;
  double kappa_k() const;
  // scalar s with W_{t}^{1/2} = s * Kstar_sqrt_t; s = alpha_G^{k/2} sigma_K
  double w_scale(double sigma_k) const;
};

// Expands the region graph to the stacked (variable, region) cells of each
// time point and assembles bases, propagators, and precision targets.
ModelSpec build_model_spec(const CountDataset& data,
                           const AdjacencyStructure& adjacency,
                           const CovariateTable* covariates,
                           const ModelOptions& options);

struct ChainState {
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> eta;  // per t, length r
  std::vector<Eigen::VectorXd> xi;   // per t, length n_t
  double sigma_k = 1.0;
  double sigma_xi = 1.0;
};

ChainState initial_state(const CountDataset& data, const ModelSpec& spec);

// Full conditionals of Proposition 3 / Table 1. Every returned shape vector
// is strictly positive, including when zero counts are present.
CMLGParams fc_beta(const ChainState& state, const CountDataset& data,
                   const ModelSpec& spec);
CMLGParams fc_eta(const ChainState& state, const CountDataset& data,
                  const ModelSpec& spec, int t);
CMLGParams fc_xi(const ChainState& state, const CountDataset& data,
                 const ModelSpec& spec, int t);

// Discrete full conditionals over the sigma grids, normalized by
// log-sum-exp. Throws NumericalError when every grid point underflows.
Eigen::VectorXd fc_sigma_k(const ChainState& state, const ModelSpec& spec);
Eigen::VectorXd fc_sigma_xi(const ChainState& state, const ModelSpec& spec);

// Linear predictor over the observed cells of time t.
Eigen::VectorXd linear_predictor_obs(const ChainState& state,
                                     const CountDataset& data,
                                     const ModelSpec& spec, int t);

// Poisson log likelihood over observed cells; -inf if a predictor exceeds
// the exp overflow guard (700).
double log_likelihood(const ChainState& state, const CountDataset& data,
                      const ModelSpec& spec);

struct Draw {
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> eta;
  std::vector<Eigen::VectorXd> xi;
  double sigma_k = 0.0;
  double sigma_xi = 0.0;
};

// DIC = 2 mean(D) - D(posterior mean), D = -2 log likelihood.
double compute_dic(const std::vector<Draw>& draws, const CountDataset& data,
                   const ModelSpec& spec);

}  // namespace pmstm
