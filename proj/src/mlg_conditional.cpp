#include "pmstm/mlg_conditional.hpp"

#include <cmath>
#include <stdexcept>

#include "pmstm/errors.hpp"

namespace pmstm {

CMLGParams::CMLGParams(Eigen::MatrixXd H_, Eigen::VectorXd alpha_,
                       Eigen::VectorXd log_kappa_inv_)
    : H(std::move(H_)), alpha(std::move(alpha_)),
      log_kappa_inv(std::move(log_kappa_inv_)) {
  if (H.rows() < H.cols() || H.cols() < 1)
    throw std::invalid_argument("CMLGParams: H must be m x g with m >= g >= 1");
  if (alpha.size() != H.rows() || log_kappa_inv.size() != H.rows())
    throw std::invalid_argument("CMLGParams: vector lengths must match rows(H)");
  if (!((alpha.array() > 0.0).all() && alpha.allFinite()))
    throw std::invalid_argument("CMLGParams: shape entries must be positive");
  if (!log_kappa_inv.allFinite())
    throw std::invalid_argument("CMLGParams: log kappa_inv must be finite");
}

CMLGParams conditional_params(const MLGParams& joint, int partition_g,
                              const Eigen::VectorXd& q2) {
  const int m = joint.dim();
  if (partition_g <= 0 || partition_g >= m)
    throw std::invalid_argument("conditional_params: need 0 < g < m");
  if (q2.size() != m - partition_g)
    throw std::invalid_argument("conditional_params: q2 has wrong length");

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(joint.V);
  if (!(lu.rcond() > 1e-12))
    throw NumericalError("conditional_params: V is numerically singular");
  const Eigen::MatrixXd Vinv = lu.solve(Eigen::MatrixXd::Identity(m, m));

  const Eigen::MatrixXd H = Vinv.leftCols(partition_g);
  const Eigen::MatrixXd B = Vinv.rightCols(m - partition_g);
  Eigen::VectorXd log_kappa_inv =
      B * q2 - Vinv * joint.c - joint.kappa.array().log().matrix();
  return CMLGParams(H, joint.alpha, std::move(log_kappa_inv));
}

Eigen::VectorXd project_least_squares(const Eigen::MatrixXd& H,
                                      const Eigen::VectorXd& w) {
  if (w.size() != H.rows())
    throw std::invalid_argument("project_least_squares: w has wrong length");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(H);
  qr.setThreshold(1e-10);
  if (qr.rank() < H.cols())
    throw NumericalError("project_least_squares: H is rank deficient");
  return qr.solve(w);
}

Eigen::VectorXd sample_mmlg(const CMLGParams& params, Rng& rng) {
  const int m = params.rows();
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i)
    w[i] = rng.log_gamma(params.alpha[i]) - params.log_kappa_inv[i];
  if (params.has_pair_structure) {
    const int g = params.cols();
    const double s = params.pair_scale;
    return (w.head(g) + s * w.tail(g)) / (1.0 + s * s);
  }
  return project_least_squares(params.H, w);
}

double cmlg_log_density_unnormalized(const CMLGParams& params,
                                     const Eigen::VectorXd& q1) {
  if (q1.size() != params.cols())
    throw std::invalid_argument("cmlg_log_density_unnormalized: bad q1 length");
  const Eigen::VectorXd hq = params.H * q1;
  double value = params.alpha.dot(hq);
  for (int i = 0; i < params.rows(); ++i)
    value -= std::exp(params.log_kappa_inv[i] + hq[i]);
  return value;
}

double zero_count_shift(double alpha_k, const Eigen::VectorXd& row_sums,
                        bool any_zero_count) {
  if (!any_zero_count) return 0.0;
  return alpha_k / (1.0 + row_sums.array().abs().maxCoeff());
}

CMLGParams poisson_conjugate_params(const Eigen::VectorXi& Z,
                                    const MLGParams& prior, MlgFlavor flavor) {
  const int m = prior.dim();
  if (Z.size() != m)
    throw std::invalid_argument("poisson_conjugate_params: Z has wrong length");
  if ((Z.array() < 0).any())
    throw std::invalid_argument("poisson_conjugate_params: negative counts");
  const double alpha_k = prior.alpha[0];
  const double kappa_k = prior.kappa[0];
  if ((prior.alpha.array() != alpha_k).any() ||
      (prior.kappa.array() != kappa_k).any())
    throw std::invalid_argument(
        "poisson_conjugate_params: prior must have constant shape and scale");
  (void)flavor;  // recorded by the caller; the formulas read alpha_k, kappa_k

  const Eigen::MatrixXd& W = prior.V;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(W);
  if (!(lu.rcond() > 1e-12))
    throw NumericalError("poisson_conjugate_params: W is numerically singular");
  const Eigen::MatrixXd Winv = lu.solve(Eigen::MatrixXd::Identity(m, m));

  Eigen::MatrixXd H(2 * m, m);
  H.topRows(m) = Eigen::MatrixXd::Identity(m, m);
  H.bottomRows(m) = Winv;

  const Eigen::VectorXd col_sums = W.colwise().sum().transpose();
  const double d =
      zero_count_shift(alpha_k, col_sums, (Z.array() == 0).any());

  Eigen::VectorXd alpha(2 * m);
  alpha.head(m) = Z.cast<double>().array() + d;
  alpha.tail(m) =
      Eigen::VectorXd::Constant(m, alpha_k) - d * col_sums;

  Eigen::VectorXd log_kappa_inv(2 * m);
  log_kappa_inv.head(m).setZero();
  log_kappa_inv.tail(m) = (-std::log(kappa_k)) +
                          (-(Winv * prior.c)).array();
  return CMLGParams(std::move(H), std::move(alpha), std::move(log_kappa_inv));
}

}  // namespace pmstm
