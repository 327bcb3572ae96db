#pragma once

// Test-only oracles, kept independent of the library implementation paths
// they are used to check.

#include <functional>
#include <vector>

namespace oracles {

// Adaptive Simpson quadrature.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10, int max_depth = 60);

// Regularized lower incomplete gamma P(a, x) by series / continued fraction.
double gamma_cdf_regularized(double a, double x);

double normal_cdf(double x);

// sup_x |F_n(x) - F(x)| for a sample against a reference cdf.
double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf);

// Cumulative integral of a density tabulated on a fine uniform grid; cheap
// interpolated cdf evaluations for KS checks against quadrature densities.
class CdfTable {
 public:
  CdfTable(const std::function<double(double)>& density, double lo, double hi,
           int panels = 1 << 20);
  double operator()(double x) const;

 private:
  double lo_, hi_, step_;
  std::vector<double> cumulative_;
};

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b);
double ks_two_sample_pvalue(const std::vector<double>& a,
                            const std::vector<double>& b);

// Central differences of lgamma, independent of the polygamma series code.
double digamma_by_differentiation(double x);
double trigamma_by_differentiation(double x);

constexpr double kEulerGamma = 0.57721566490153286;

double sample_mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);

}  // namespace oracles
