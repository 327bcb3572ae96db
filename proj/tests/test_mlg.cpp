#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pmstm/errors.hpp"
#include "pmstm/mlg.hpp"
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

TEST_CASE("sample_lg mean at alpha=1, kappa=1 matches digamma(1)") {
  Rng rng(101);
  const LGParams params(1.0, 1.0);
  const int n = 1000000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += sample_lg(params, rng);
  CHECK(std::fabs(total / n - (-oracles::kEulerGamma)) < 0.005);
}

TEST_CASE("standardized log-gamma has mean 0, variance 1") {
  const double a = alpha_star();
  const LGParams params(a, std::exp(-digamma(a)));
  Rng rng(102);
  std::vector<double> draws(1000000);
  for (auto& d : draws) d = sample_lg(params, rng);
  CHECK(std::fabs(oracles::sample_mean(draws)) < 0.01);
  CHECK(std::fabs(oracles::sample_variance(draws) - 1.0) < 0.01);
}

TEST_CASE("doubling kappa shifts every draw by log 2") {
  const LGParams base(2.5, 0.7), doubled(2.5, 1.4);
  for (int i = 0; i < 200; ++i) {
    Rng rng_a(103, i), rng_b(103, i);
    const double w1 = sample_lg(base, rng_a);
    const double w2 = sample_lg(doubled, rng_b);
    CHECK(w2 - w1 == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("small shapes produce finite log-gamma draws") {
  Rng rng(104);
  for (double shape : {1e-6, 1e-3, 0.19, 0.5}) {
    for (int i = 0; i < 2000; ++i) {
      const double w = sample_lg(LGParams(shape, 1.0), rng);
      CHECK(std::isfinite(w));
    }
  }
}

TEST_CASE("log-gamma draws follow the gamma law (small shape)") {
  const double shape = 0.05;
  Rng rng(105);
  std::vector<double> draws(200000);
  for (auto& d : draws) d = rng.log_gamma(shape);
  const double dks = oracles::ks_statistic(draws, [&](double q) {
    return oracles::gamma_cdf_regularized(shape, std::exp(q));
  });
  CHECK(dks < 0.005);
}

TEST_CASE("mlg_sample with identity mixing gives independent LG coordinates") {
  Eigen::VectorXd alpha(2), kappa(2);
  alpha << 1.0, 3.0;
  kappa << 1.0, 0.5;
  const MLGParams params(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2),
                         alpha, kappa);
  Rng rng(106);
  std::vector<double> first(200000), second(200000);
  for (std::size_t i = 0; i < first.size(); ++i) {
    const Eigen::VectorXd q = mlg_sample(params, rng);
    first[i] = q[0];
    second[i] = q[1];
  }
  const double d0 = oracles::ks_statistic(first, [&](double q) {
    return oracles::gamma_cdf_regularized(1.0, std::exp(q));
  });
  const double d1 = oracles::ks_statistic(second, [&](double q) {
    return oracles::gamma_cdf_regularized(3.0, std::exp(q) / 0.5);
  });
  CHECK(d0 < 0.005);
  CHECK(d1 < 0.005);
  // sample correlation of independent coordinates
  const double mu0 = oracles::sample_mean(first);
  const double mu1 = oracles::sample_mean(second);
  double cov = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i)
    cov += (first[i] - mu0) * (second[i] - mu1);
  cov /= static_cast<double>(first.size() - 1);
  const double rho = cov / std::sqrt(oracles::sample_variance(first) *
                                     oracles::sample_variance(second));
  CHECK(std::fabs(rho) < 0.01);
}

TEST_CASE("sMLG empirical moments converge to (c, VV')") {
  Rng setup(107);
  const int m = 3;
  Eigen::VectorXd c(m);
  c << 0.4, -1.2, 2.0;
  const Eigen::MatrixXd V = random_invertible(m, setup);
  const MLGParams params = make_smlg(c, V);
  const Eigen::MatrixXd target_cov = V * V.transpose();

  const int n = 1000000;
  Rng rng(108);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd fourth = Eigen::MatrixXd::Zero(m, m);  // for se of cov
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) {
    draws.push_back(mlg_sample(params, rng));
    mean += draws.back();
  }
  mean /= n;
  for (const auto& q : draws) {
    const Eigen::VectorXd d = q - mean;
    second += d * d.transpose();
    fourth += (d * d.transpose()).array().square().matrix();
  }
  const Eigen::MatrixXd cov = second / (n - 1);
  for (int i = 0; i < m; ++i) {
    const double se_mean = std::sqrt(cov(i, i) / n);
    CHECK(std::fabs(mean[i] - c[i]) < 5.0 * se_mean);
    for (int j = 0; j < m; ++j) {
      const double var_prod =
          fourth(i, j) / n - (second(i, j) / n) * (second(i, j) / n);
      const double se_cov = std::sqrt(var_prod / n);
      CHECK(std::fabs(cov(i, j) - target_cov(i, j)) < 5.0 * se_cov);
    }
  }
}

TEST_CASE("mlg_apply is a deterministic affine map") {
  Rng setup(109);
  const Eigen::MatrixXd V = random_invertible(3, setup);
  Eigen::VectorXd c(3), w(3);
  c << 1.0, 2.0, 3.0;
  w << -0.3, 0.9, 0.1;
  const MLGParams params = make_smlg(c, V);
  const Eigen::VectorXd expected = c + V * w;
  CHECK((mlg_apply(params, w) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlg_logpdf reduces to the univariate log-gamma density") {
  Eigen::VectorXd alpha(1), kappa(1);
  alpha << 1.7;
  kappa << 0.8;
  const MLGParams params(Eigen::VectorXd::Zero(1),
                         Eigen::MatrixXd::Identity(1, 1), alpha, kappa);
  for (double q : {-2.0, -0.5, 0.0, 0.4, 1.3}) {
    const double expected = -std::lgamma(1.7) - 1.7 * std::log(0.8) + 1.7 * q -
                            std::exp(q) / 0.8;
    Eigen::VectorXd qv(1);
    qv << q;
    CHECK(mlg_logpdf(params, qv) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("exp(mlg_logpdf) integrates to one (m = 1)") {
  Eigen::VectorXd alpha(1), kappa(1);
  alpha << 2.0;
  kappa << 1.0;
  const MLGParams params(Eigen::VectorXd::Zero(1),
                         Eigen::MatrixXd::Identity(1, 1), alpha, kappa);
  const double total = oracles::integrate(
      [&](double q) {
        Eigen::VectorXd qv(1);
        qv << q;
        return std::exp(mlg_logpdf(params, qv));
      },
      -40.0, 12.0, 1e-10);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("exp(mlg_logpdf) integrates to one (m = 2)") {
  Rng setup(110);
  Eigen::MatrixXd V = random_invertible(2, setup);
  Eigen::VectorXd c(2);
  c << 0.3, -0.6;
  const MLGParams params = make_smlg(c, V);
  // integrate the q-space density over the image of a w-box whose tails are
  // controlled analytically: P(w_i < -45 or w_i > 14) < 1e-27
  const double log_abs_det = std::log(std::fabs(V.determinant()));
  const double total = oracles::integrate(
      [&](double w0) {
        return oracles::integrate(
            [&](double w1) {
              Eigen::VectorXd w(2);
              w << w0, w1;
              const Eigen::VectorXd q = params.c + params.V * w;
              const double lp = mlg_logpdf(params, q) + log_abs_det;
              return lp > -745.0 ? std::exp(lp) : 0.0;
            },
            -45.0, 14.0, 1e-11);
      },
      -45.0, 14.0, 1e-9);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mlg_logpdf is invariant under column permutation of V") {
  // constant alpha and kappa make the mixing coordinates exchangeable
  Rng setup(111);
  const int m = 3;
  const Eigen::MatrixXd V = random_invertible(m, setup);
  const Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Constant(m, 1.3);
  const Eigen::VectorXd kappa = Eigen::VectorXd::Constant(m, 0.9);
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                           {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  const MLGParams base(c, V, alpha, kappa);
  Rng point_rng(112);
  for (const auto& perm : perms) {
    Eigen::MatrixXd VP(m, m);
    for (int j = 0; j < m; ++j) VP.col(j) = V.col(perm[j]);
    const MLGParams permuted(c, VP, alpha, kappa);
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd q(m);
      for (int i = 0; i < m; ++i) q[i] = point_rng.normal();
      CHECK(mlg_logpdf(base, q) ==
            doctest::Approx(mlg_logpdf(permuted, q)).epsilon(1e-10));
    }
  }
}

TEST_CASE("mlg_mean_cov matches the defining formulas") {
  Rng setup(113);
  const int m = 3;
  const Eigen::MatrixXd V = random_invertible(m, setup);
  Eigen::VectorXd c(m), alpha(m), kappa(m);
  c << 1.0, 0.0, -2.0;
  alpha << 0.7, 1.0, 4.2;
  kappa << 0.5, 1.0, 2.0;
  const MLGParams params(c, V, alpha, kappa);
  const auto [mean, cov] = mlg_mean_cov(params);

  Eigen::VectorXd w_mean(m), w_var(m);
  for (int i = 0; i < m; ++i) {
    w_mean[i] = digamma(alpha[i]) + std::log(kappa[i]);
    w_var[i] = trigamma(alpha[i]);
  }
  const Eigen::MatrixXd expected_cov =
      V * w_var.asDiagonal() * V.transpose();
  CHECK((mean - (c + V * w_mean)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((cov - expected_cov).cwiseAbs().maxCoeff() < 1e-15);

  // symmetric positive definite
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("identity-mixing mean and variance equal digamma / trigamma") {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
  const MLGParams params(Eigen::VectorXd::Zero(2),
                         Eigen::MatrixXd::Identity(2, 2), ones, ones);
  const auto [mean, cov] = mlg_mean_cov(params);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < 2; ++i) {
    CHECK(mean[i] == doctest::Approx(-oracles::kEulerGamma).epsilon(1e-12));
    CHECK(cov(i, i) == doctest::Approx(pi * pi / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("make_smlg yields mean c and covariance VV' analytically") {
  Rng setup(114);
  const Eigen::MatrixXd V = random_invertible(4, setup);
  Eigen::VectorXd c(4);
  c << 0.0, 5.0, -3.0, 0.25;
  const MLGParams params = make_smlg(c, V);
  CHECK((params.alpha.array() == alpha_star()).all());
  const auto [mean, cov] = mlg_mean_cov(params);
  CHECK((mean - c).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((cov - V * V.transpose()).cwiseAbs().maxCoeff() <
        1e-12 * (V * V.transpose()).cwiseAbs().maxCoeff());
}

TEST_CASE("affine closure: a + Bq has the MLG(a + Bc, BV) density") {
  Rng setup(115);
  const int m = 3;
  const Eigen::MatrixXd V = random_invertible(m, setup);
  const Eigen::MatrixXd B = random_invertible(m, setup);
  Eigen::VectorXd c(m), a(m);
  c << 0.1, -0.4, 0.9;
  a << 2.0, 0.0, -1.0;
  Eigen::VectorXd alpha(m), kappa(m);
  alpha << 0.8, 1.5, 3.0;
  kappa << 1.0, 0.3, 2.2;
  const MLGParams q_params(c, V, alpha, kappa);
  const MLGParams mapped(a + B * c, B * V, alpha, kappa);

  const double log_det_b = std::log(std::fabs(B.determinant()));
  Rng point_rng(116);
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd x(m);
    for (int i = 0; i < m; ++i) x[i] = point_rng.normal();
    // change of variables: f_{a+Bq}(x) = f_q(B^{-1}(x - a)) / |det B|
    const Eigen::VectorXd pullback = B.lu().solve(x - a);
    CHECK(mlg_logpdf(mapped, x) ==
          doctest::Approx(mlg_logpdf(q_params, pullback) - log_det_b)
              .epsilon(1e-10));
  }
}

TEST_CASE("nMLG at alpha_g = 1000 is close to normal, monotone in alpha_g") {
  Eigen::VectorXd c1 = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd V1 = Eigen::MatrixXd::Identity(1, 1);
  double previous_ks = 1.0;
  for (double alpha_g : {10.0, 100.0, 1000.0}) {
    const MLGParams params = make_nmlg(c1, V1, alpha_g);
    const auto [mean, cov] = mlg_mean_cov(params);
    const double sd = std::sqrt(cov(0, 0));
    Rng rng(117);  // common random numbers across alpha_g
    std::vector<double> draws(200000);
    for (auto& d : draws) d = (mlg_sample(params, rng)[0] - mean[0]) / sd;
    const double dks = oracles::ks_statistic(draws, oracles::normal_cdf);
    CHECK(dks < previous_ks);
    previous_ks = dks;
    if (alpha_g == 1000.0) CHECK(dks < 0.004);
  }
}

TEST_CASE("nMLG moments approach (c, VV')") {
  Rng setup(118);
  const Eigen::MatrixXd V = random_invertible(2, setup);
  Eigen::VectorXd c(2);
  c << 1.5, -0.5;
  const double alpha_g = 1000.0;
  const MLGParams params = make_nmlg(c, V, alpha_g);
  const auto [mean, cov] = mlg_mean_cov(params);
  // mean bias is sqrt(alpha_g) (digamma(alpha_g) - log alpha_g) ~ -1/(2 sqrt(alpha_g))
  CHECK((mean - c).cwiseAbs().maxCoeff() <
        0.02 * V.cwiseAbs().maxCoeff() * 2.0);
  // covariance inflates by alpha_g * trigamma(alpha_g) = 1 + O(1/alpha_g)
  const Eigen::MatrixXd target = V * V.transpose();
  CHECK(((cov - target).cwiseAbs().maxCoeff()) <
        2e-3 * target.cwiseAbs().maxCoeff());
}

TEST_CASE("singular V is rejected") {
  Eigen::MatrixXd V(2, 2);
  V << 1.0, 2.0, 0.5, 1.0;  // rank 1
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
  CHECK_THROWS_AS(MLGParams(Eigen::VectorXd::Zero(2), V, ones, ones),
                  NumericalError);
  CHECK_THROWS_AS(make_smlg(Eigen::VectorXd::Zero(2), V), NumericalError);
}

TEST_CASE("parameter validation") {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
  Eigen::VectorXd bad(2);
  bad << 1.0, -0.5;
  CHECK_THROWS_AS(LGParams(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LGParams(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(MLGParams(Eigen::VectorXd::Zero(2),
                            Eigen::MatrixXd::Identity(2, 2), bad, ones),
                  std::invalid_argument);
  CHECK_THROWS_AS(MLGParams(Eigen::VectorXd::Zero(2),
                            Eigen::MatrixXd::Identity(2, 2), ones, bad),
                  std::invalid_argument);
}
