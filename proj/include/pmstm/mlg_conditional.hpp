#pragma once

#include <Eigen/Dense>

#include "pmstm/mlg.hpp"
#include "pmstm/rng.hpp"

namespace pmstm {

// Parameters of the cMLG/mMLG family: a non-square "precision parameter
// matrix" H (m x g, m >= g, full column rank), shapes, and 1/kappa stored in
// the log domain so that large linear offsets never overflow.
struct CMLGParams {
  Eigen::MatrixXd H;
  Eigen::VectorXd alpha;
  Eigen::VectorXd log_kappa_inv;

  // When H = [I_g; pair_scale * I_g] stacked, the least-squares projection
  // collapses to an elementwise average; fc_xi uses this.
  double pair_scale = 0.0;
  bool has_pair_structure = false;

  CMLGParams(Eigen::MatrixXd H_, Eigen::VectorXd alpha_,
             Eigen::VectorXd log_kappa_inv_);

  int rows() const { return static_cast<int>(H.rows()); }
  int cols() const { return static_cast<int>(H.cols()); }
};

// Conditional parameters of q1 | q2 for a joint MLG split after coordinate g:
// V^{-1} = [H B], log kappa_{1.2}^{(-1)} = B q2 - V^{-1} c + log kappa^{(-1)}.
CMLGParams conditional_params(const MLGParams& joint, int partition_g,
                              const Eigen::VectorXd& q2);

// Least-squares projection (H'H)^{-1} H' w computed through a column-pivoted
// QR of H; columns with |R_ii| < 1e-10 max|R_jj| are treated as dependent.
Eigen::VectorXd project_least_squares(const Eigen::MatrixXd& H,
                                      const Eigen::VectorXd& w);

// Draw w ~ MLG(0, I_m, alpha, kappa) and return the projection of w onto H.
Eigen::VectorXd sample_mmlg(const CMLGParams& params, Rng& rng);

// alpha' H q1 - sum_i exp{log kappa_inv_i + (H q1)_i}; the normalizing
// constant of the family involves an unevaluated integral and is never needed
// for sampling or Gibbs ratios.
double cmlg_log_density_unnormalized(const CMLGParams& params,
                                     const Eigen::VectorXd& q1);

// Posterior parameters for Z_i | q_i ~ Pois(exp(q_i)) with a conjugate MLG
// prior built by make_smlg / make_nmlg (prior.V plays the role of the mixing
// matrix W). The d-shift keeps every shape entry strictly positive when Z
// contains zeros; d = 0 when all counts are positive.
CMLGParams poisson_conjugate_params(const Eigen::VectorXi& Z,
                                    const MLGParams& prior, MlgFlavor flavor);

// Shared d-shift rule: alpha_k / (1 + max abs(row_sums)) when a zero count is
// present, 0 otherwise.
double zero_count_shift(double alpha_k, const Eigen::VectorXd& row_sums,
                        bool any_zero_count);

}  // namespace pmstm
