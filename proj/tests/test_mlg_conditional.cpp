#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pmstm/errors.hpp"
#include "pmstm/mlg.hpp"
#include "pmstm/mlg_conditional.hpp"
#include "pmstm/rng.hpp"
#include "pmstm/special_functions.hpp"

using namespace pmstm;

namespace {

Eigen::MatrixXd random_invertible(int m, Rng& rng) {
  Eigen::MatrixXd V(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) V(i, j) = rng.normal();
  V += 0.5 * static_cast<double>(m) * Eigen::MatrixXd::Identity(m, m);
  return V;
}

}  // namespace

TEST_CASE("conditional_params with q2 = 0, c = 0 leaves kappa unchanged") {
  Rng setup(201);
  const Eigen::MatrixXd V = random_invertible(3, setup);
  Eigen::VectorXd alpha(3), kappa(3);
  alpha << 1.0, 2.0, 0.5;
  kappa << 0.4, 1.0, 2.5;
  const MLGParams joint(Eigen::VectorXd::Zero(3), V, alpha, kappa);
  const CMLGParams cond =
      conditional_params(joint, 2, Eigen::VectorXd::Zero(1));
  for (int i = 0; i < 3; ++i)
    CHECK(cond.log_kappa_inv[i] ==
          doctest::Approx(-std::log(kappa[i])).epsilon(1e-12));
  CHECK((cond.alpha - alpha).cwiseAbs().maxCoeff() == 0.0);
  CHECK(cond.cols() == 2);
  CHECK(cond.rows() == 3);
}

TEST_CASE("shifting q2 by delta adds B delta to the log kappa inverse") {
  Rng setup(202);
  const Eigen::MatrixXd V = random_invertible(4, setup);
  Eigen::VectorXd c(4);
  c << 0.5, -1.0, 0.0, 2.0;
  const MLGParams joint = make_smlg(c, V);
  Eigen::VectorXd q2(2), delta(2);
  q2 << 0.3, -0.7;
  delta << 1.1, 0.4;
  const CMLGParams base = conditional_params(joint, 2, q2);
  const CMLGParams shifted = conditional_params(joint, 2, q2 + delta);
  const Eigen::MatrixXd Vinv = V.inverse();
  const Eigen::VectorXd expected = Vinv.rightCols(2) * delta;
  CHECK((shifted.log_kappa_inv - base.log_kappa_inv - expected)
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("conditional density equals the joint ratio on a grid (m=2, g=1)") {
  Rng setup(203);
  const Eigen::MatrixXd V = random_invertible(2, setup);
  Eigen::VectorXd c(2), alpha(2), kappa(2);
  c << 0.2, -0.4;
  alpha << 1.3, 2.2;
  kappa << 0.8, 1.1;
  const MLGParams joint(c, V, alpha, kappa);
  const double d_value = 0.35;
  Eigen::VectorXd q2(1);
  q2 << d_value;
  const CMLGParams cond = conditional_params(joint, 1, q2);

  auto joint_at = [&](double q1) {
    Eigen::VectorXd q(2);
    q << q1, d_value;
    return std::exp(mlg_logpdf(joint, q));
  };
  auto cond_unnorm = [&](double q1) {
    Eigen::VectorXd v(1);
    v << q1;
    return std::exp(cmlg_log_density_unnormalized(cond, v));
  };
  const double z_joint = oracles::integrate(joint_at, -60.0, 25.0, 1e-12);
  const double z_cond = oracles::integrate(cond_unnorm, -60.0, 25.0, 1e-12);
  for (double q1 = -6.0; q1 <= 6.0; q1 += 0.5) {
    const double lhs = cond_unnorm(q1) / z_cond;
    const double rhs = joint_at(q1) / z_joint;
    CHECK(std::fabs(lhs - rhs) < 1e-8);
  }
}

TEST_CASE("least-squares projection is exact for stacked identities") {
  Rng rng(204);
  const int g = 5;
  Eigen::MatrixXd H(2 * g, g);
  H.topRows(g) = Eigen::MatrixXd::Identity(g, g);
  H.bottomRows(g) = Eigen::MatrixXd::Identity(g, g);
  Eigen::VectorXd w(2 * g);
  for (int i = 0; i < 2 * g; ++i) w[i] = rng.normal();
  const Eigen::VectorXd q = project_least_squares(H, w);
  const Eigen::VectorXd expected = 0.5 * (w.head(g) + w.tail(g));
  CHECK((q - expected).cwiseAbs().maxCoeff() < 1e-12);
  // normal equations residual
  CHECK((H.transpose() * (H * q - w)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projection with fixed w is deterministic and idempotent") {
  Rng rng(205);
  Eigen::MatrixXd H(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) H(i, j) = rng.normal();
  Eigen::VectorXd w(6);
  for (int i = 0; i < 6; ++i) w[i] = rng.normal();
  const Eigen::VectorXd q1 = project_least_squares(H, w);
  const Eigen::VectorXd q2 = project_least_squares(H, w);
  CHECK((q1 - q2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((H.transpose() * (H * q1 - w)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rank-deficient H is rejected") {
  Eigen::MatrixXd H(4, 2);
  H << 1.0, 2.0, 2.0, 4.0, -1.0, -2.0, 0.5, 1.0;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(project_least_squares(H, w), NumericalError);
}

TEST_CASE("square H: mMLG sampler equals direct MLG sampling (KS, 1e5)") {
  Rng setup(206);
  const int m = 2;
  const Eigen::MatrixXd H = random_invertible(m, setup);
  const Eigen::MatrixXd V = H.inverse();
  Eigen::VectorXd alpha(m), kappa(m);
  alpha << alpha_star(), alpha_star();
  const double kap = std::exp(-digamma(alpha_star()));
  kappa << kap, kap;
  const CMLGParams params(H, alpha, (-kappa.array().log()).matrix());
  const MLGParams direct(Eigen::VectorXd::Zero(m), V, alpha, kappa);

  const int n = 100000;
  Rng rng_a(207), rng_b(208);
  std::vector<std::vector<double>> a(m), b(m);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd qa = sample_mmlg(params, rng_a);
    const Eigen::VectorXd qb = mlg_sample(direct, rng_b);
    for (int j = 0; j < m; ++j) {
      a[j].push_back(qa[j]);
      b[j].push_back(qb[j]);
    }
  }
  for (int j = 0; j < m; ++j)
    CHECK(oracles::ks_two_sample_pvalue(a[j], b[j]) > 0.01);
}

TEST_CASE("m=2, g=1 mMLG draws match the quadrature density") {
  Eigen::MatrixXd H(2, 1);
  H << 1.0, 0.8;
  Eigen::VectorXd alpha(2);
  alpha << alpha_star(), alpha_star();
  Eigen::VectorXd log_kappa_inv(2);
  log_kappa_inv << digamma(alpha_star()), digamma(alpha_star());
  const CMLGParams params(H, alpha, log_kappa_inv);

  auto unnorm = [&](double q) {
    Eigen::VectorXd v(1);
    v << q;
    return std::exp(cmlg_log_density_unnormalized(params, v));
  };
  const oracles::CdfTable cdf(unnorm, -40.0, 20.0);

  const int n = 4000000;
  Rng rng(209);
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_mmlg(params, rng)[0];
  const double dks =
      oracles::ks_statistic(draws, [&](double x) { return cdf(x); });
  CHECK(dks < 1e-3);
}

TEST_CASE("sample_mmlg matches conditional_params densities (mMLG = cMLG)") {
  Rng setup(210);
  Eigen::MatrixXd V = random_invertible(2, setup);
  Eigen::VectorXd c(2);
  c << 0.1, 0.6;
  const MLGParams joint = make_smlg(c, V);
  Eigen::VectorXd q2(1);
  q2 << -0.25;
  const CMLGParams cond = conditional_params(joint, 1, q2);

  auto unnorm = [&](double q) {
    Eigen::VectorXd v(1);
    v << q;
    return std::exp(cmlg_log_density_unnormalized(cond, v));
  };
  const oracles::CdfTable cdf(unnorm, -60.0, 25.0);

  const int n = 100000;
  Rng rng(211);
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_mmlg(cond, rng)[0];
  const double dks =
      oracles::ks_statistic(draws, [&](double x) { return cdf(x); });
  CHECK(dks < 0.01);
}

TEST_CASE("poisson_conjugate_params: positive counts give d = 0") {
  Rng setup(212);
  const int m = 3;
  const Eigen::MatrixXd W = random_invertible(m, setup);
  const MLGParams prior = make_smlg(Eigen::VectorXd::Zero(m), W);
  Eigen::VectorXi Z(m);
  Z << 3, 1, 7;
  const CMLGParams post = poisson_conjugate_params(Z, prior, MlgFlavor::smlg);
  for (int i = 0; i < m; ++i) {
    CHECK(post.alpha[i] == doctest::Approx(static_cast<double>(Z[i])));
    CHECK(post.alpha[m + i] == doctest::Approx(alpha_star()).epsilon(1e-12));
  }
  // top block of H is the identity, bottom is W^{-1}
  CHECK((post.H.topRows(m) - Eigen::MatrixXd::Identity(m, m))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((post.H.bottomRows(m) * W - Eigen::MatrixXd::Identity(m, m))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("univariate conjugacy: posterior is LG(Z + alpha, (1 + 1/kappa)^-1)") {
  const double a_star = alpha_star();
  const double kappa_star = std::exp(-digamma(a_star));
  const MLGParams prior = make_smlg(Eigen::VectorXd::Zero(1),
                                    Eigen::MatrixXd::Identity(1, 1));
  Eigen::VectorXi Z(1);
  Z << 3;
  const CMLGParams post = poisson_conjugate_params(Z, prior, MlgFlavor::smlg);

  // unnormalized density must match the closed-form LG up to a constant
  const double post_shape = 3.0 + a_star;
  const double post_scale = 1.0 / (1.0 + 1.0 / kappa_star);
  double shift = 0.0;
  bool first = true;
  for (double q = -3.0; q <= 4.0; q += 0.25) {
    Eigen::VectorXd v(1);
    v << q;
    const double lhs = cmlg_log_density_unnormalized(post, v);
    const double rhs = post_shape * q - std::exp(q) / post_scale;
    if (first) {
      shift = lhs - rhs;
      first = false;
    }
    CHECK(lhs - rhs == doctest::Approx(shift).epsilon(1e-10));
  }

  // and sampling from it matches direct LG draws
  const int n = 100000;
  Rng rng_a(213), rng_b(214);
  std::vector<double> a(n), b(n);
  const LGParams direct(post_shape, post_scale);
  for (int i = 0; i < n; ++i) {
    a[i] = sample_mmlg(post, rng_a)[0];
    b[i] = sample_lg(direct, rng_b);
  }
  CHECK(oracles::ks_two_sample_pvalue(a, b) > 0.01);
}

TEST_CASE("zero counts still produce strictly positive shapes") {
  Rng setup(215);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(setup.next_u64() % 5);
    const Eigen::MatrixXd W = random_invertible(m, setup);
    Eigen::VectorXi Z(m);
    for (int i = 0; i < m; ++i)
      Z[i] = static_cast<int>(setup.next_u64() % 4);
    Z[static_cast<int>(setup.next_u64() % m)] = 0;  // force at least one zero
    const bool nmlg = (setup.next_u64() & 1) != 0;
    const MLGParams prior =
        nmlg ? make_nmlg(Eigen::VectorXd::Zero(m), W)
             : make_smlg(Eigen::VectorXd::Zero(m), W);
    const CMLGParams post = poisson_conjugate_params(
        Z, prior, nmlg ? MlgFlavor::nmlg : MlgFlavor::smlg);
    CHECK(post.alpha.minCoeff() > 0.0);
  }
}

TEST_CASE("negative counts are rejected") {
  const MLGParams prior = make_smlg(Eigen::VectorXd::Zero(2),
                                    Eigen::MatrixXd::Identity(2, 2));
  Eigen::VectorXi Z(2);
  Z << 1, -2;
  CHECK_THROWS_AS(poisson_conjugate_params(Z, prior, MlgFlavor::smlg),
                  std::invalid_argument);
}

TEST_CASE("posterior concentrates at log Z under a diffuse prior") {
  // diffuse mixing (W = 50) keeps the prior contribution O(1/W), so the
  // posterior mean approaches log Z as Z grows
  const MLGParams prior = make_smlg(
      Eigen::VectorXd::Zero(1), 50.0 * Eigen::MatrixXd::Identity(1, 1));
  for (double z : {1000.0, 1000000.0}) {
    Eigen::VectorXi Z(1);
    Z << static_cast<int>(z);
    const CMLGParams post = poisson_conjugate_params(Z, prior, MlgFlavor::smlg);
    auto unnorm = [&](double q) {
      Eigen::VectorXd v(1);
      v << q;
      return std::exp(cmlg_log_density_unnormalized(post, v) -
                      (z * std::log(z) - z));  // rescale to avoid overflow
    };
    const double center = std::log(z);
    const double lo = center - 40.0 / std::sqrt(z);
    const double hi = center + 40.0 / std::sqrt(z);
    const double norm = oracles::integrate(unnorm, lo, hi, 1e-14);
    const double first_moment = oracles::integrate(
        [&](double q) { return q * unnorm(q); }, lo, hi, 1e-14);
    CHECK(std::fabs(first_moment / norm - std::log(z)) < 0.01);
  }
}
