#include "pmstm/mlg.hpp"

#include <cmath>
#include <stdexcept>

#include "pmstm/errors.hpp"
#include "pmstm/special_functions.hpp"

namespace pmstm {

LGParams::LGParams(double alpha_, double kappa_) : alpha(alpha_), kappa(kappa_) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("LGParams: shape must be positive");
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("LGParams: scale must be positive");
}

MLGParams::MLGParams(Eigen::VectorXd c_, Eigen::MatrixXd V_,
                     Eigen::VectorXd alpha_, Eigen::VectorXd kappa_)
    : c(std::move(c_)), V(std::move(V_)), alpha(std::move(alpha_)),
      kappa(std::move(kappa_)) {
  const auto m = c.size();
  if (V.rows() != m || V.cols() != m || alpha.size() != m || kappa.size() != m)
    throw std::invalid_argument("MLGParams: inconsistent dimensions");
  if (!((alpha.array() > 0.0).all() && alpha.allFinite()))
    throw std::invalid_argument("MLGParams: shape entries must be positive");
  if (!((kappa.array() > 0.0).all() && kappa.allFinite()))
    throw std::invalid_argument("MLGParams: scale entries must be positive");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(V);
  if (!(lu.rcond() > 1e-12))
    throw NumericalError("MLGParams: mixing matrix V is numerically singular "
                         "(rcond <= 1e-12)");
}

double sample_lg(const LGParams& params, Rng& rng) {
  return rng.log_gamma(params.alpha) + std::log(params.kappa);
}

Eigen::VectorXd mlg_sample(const MLGParams& params, Rng& rng) {
  const int m = params.dim();
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i)
    w[i] = rng.log_gamma(params.alpha[i]) + std::log(params.kappa[i]);
  return params.c + params.V * w;
}

Eigen::VectorXd mlg_apply(const MLGParams& params, const Eigen::VectorXd& w) {
  if (w.size() != params.dim())
    throw std::invalid_argument("mlg_apply: w has wrong length");
  return params.c + params.V * w;
}

double mlg_logpdf(const MLGParams& params, const Eigen::VectorXd& q) {
  const int m = params.dim();
  if (q.size() != m) throw std::invalid_argument("mlg_logpdf: q has wrong length");
  if (!q.allFinite()) throw std::invalid_argument("mlg_logpdf: q must be finite");

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(params.V);
  if (!(lu.rcond() > 1e-12))
    throw NumericalError("mlg_logpdf: V is numerically singular");
  // log det(VV')^{1/2} = sum log |U_ii| from the LU factors
  double log_abs_det = 0.0;
  for (int i = 0; i < m; ++i)
    log_abs_det += std::log(std::fabs(lu.matrixLU()(i, i)));

  const Eigen::VectorXd w = lu.solve(q - params.c);
  double value = -log_abs_det;
  for (int i = 0; i < m; ++i) {
    value -= std::lgamma(params.alpha[i]) +
             params.alpha[i] * std::log(params.kappa[i]);
    value += params.alpha[i] * w[i] - std::exp(w[i]) / params.kappa[i];
  }
  return value;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> mlg_mean_cov(const MLGParams& params) {
  const int m = params.dim();
  Eigen::VectorXd w_mean(m), w_var(m);
  for (int i = 0; i < m; ++i) {
    w_mean[i] = digamma(params.alpha[i]) + std::log(params.kappa[i]);
    w_var[i] = trigamma(params.alpha[i]);
  }
  Eigen::VectorXd mean = params.c + params.V * w_mean;
  Eigen::MatrixXd cov = params.V * w_var.asDiagonal() * params.V.transpose();
  return {std::move(mean), std::move(cov)};
}

MLGParams make_smlg(const Eigen::VectorXd& c, const Eigen::MatrixXd& V) {
  const auto m = c.size();
  const double a = alpha_star();
  const double kappa = std::exp(-digamma(a));
  return MLGParams(c, V, Eigen::VectorXd::Constant(m, a),
                   Eigen::VectorXd::Constant(m, kappa));
}

MLGParams make_nmlg(const Eigen::VectorXd& c, const Eigen::MatrixXd& V,
                    double alpha_g) {
  if (!(alpha_g > 0.0))
    throw std::invalid_argument("make_nmlg: alpha_g must be positive");
  const auto m = c.size();
  return MLGParams(c, std::sqrt(alpha_g) * V,
                   Eigen::VectorXd::Constant(m, alpha_g),
                   Eigen::VectorXd::Constant(m, 1.0 / alpha_g));
}

}  // namespace pmstm
