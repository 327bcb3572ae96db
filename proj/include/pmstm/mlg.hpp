#pragma once

#include <Eigen/Dense>
#include <utility>

#include "pmstm/rng.hpp"

namespace pmstm {

// Either the standardized (k = 0) or the normal-approximation (k = 1)
// parameterization of the latent log-gamma building blocks.
enum class MlgFlavor { smlg = 0, nmlg = 1 };

struct LGParams {
  double alpha;  // shape
  double kappa;  // scale
  LGParams(double alpha_, double kappa_);
};

// q = c + V w with w_i independent LG(alpha_i, kappa_i). V must be invertible;
// the constructor rejects V with reciprocal condition estimate below 1e-12.
struct MLGParams {
  Eigen::VectorXd c;
  Eigen::MatrixXd V;
  Eigen::VectorXd alpha;
  Eigen::VectorXd kappa;

  MLGParams(Eigen::VectorXd c_, Eigen::MatrixXd V_, Eigen::VectorXd alpha_,
            Eigen::VectorXd kappa_);

  int dim() const { return static_cast<int>(c.size()); }
};

// log of a gamma(alpha, kappa) draw.
double sample_lg(const LGParams& params, Rng& rng);

Eigen::VectorXd mlg_sample(const MLGParams& params, Rng& rng);

// Deterministic affine map c + V w for a fixed w.
Eigen::VectorXd mlg_apply(const MLGParams& params, const Eigen::VectorXd& w);

// Joint log density. The determinant and the inner solve both come from one
// LU factorization of V; no explicit inverse is formed.
double mlg_logpdf(const MLGParams& params, const Eigen::VectorXd& q);

// mean = c + V {omega_0(alpha) + log kappa};  cov = V diag{omega_1(alpha)} V'.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> mlg_mean_cov(const MLGParams& params);

// Standardized MLG: mean c, covariance VV'.
MLGParams make_smlg(const Eigen::VectorXd& c, const Eigen::MatrixXd& V);

// Normal-approximation MLG: converges in distribution to N(c, VV') as
// alpha_g grows.
MLGParams make_nmlg(const Eigen::VectorXd& c, const Eigen::MatrixXd& V,
                    double alpha_g = 1000.0);

}  // namespace pmstm
