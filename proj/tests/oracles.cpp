#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracles {

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa,
                double b, double fb, double m, double fm, double whole,
                double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  return adaptive(f, a, fa, b, fb, m, fm, simpson(a, fa, b, fb, fm), tol,
                  max_depth);
}

double gamma_cdf_regularized(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (!(a > 0.0)) throw std::invalid_argument("gamma_cdf: a must be > 0");
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    // series for P(a, x)
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 10000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return std::exp(log_prefix) * sum / 1.0;
  }
  // Lentz continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b0 = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b0;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b0 += 2.0;
    d = an * d + b0;
    if (std::fabs(d) < tiny) d = tiny;
    c = b0 + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(log_prefix) * h;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> sample,
                    const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const auto n = sample.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = cdf(sample[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d = std::max(d, std::max(hi - F, F - lo));
  }
  return d;
}

CdfTable::CdfTable(const std::function<double(double)>& density, double lo,
                   double hi, int panels)
    : lo_(lo), hi_(hi), step_((hi - lo) / panels) {
  cumulative_.resize(panels + 1);
  cumulative_[0] = 0.0;
  double prev = density(lo);
  for (int i = 1; i <= panels; ++i) {
    const double x = lo + step_ * i;
    const double cur = density(x);
    cumulative_[i] = cumulative_[i - 1] + 0.5 * step_ * (prev + cur);
    prev = cur;
  }
  const double total = cumulative_.back();
  if (total > 0.0)
    for (auto& c : cumulative_) c /= total;
}

double CdfTable::operator()(double x) const {
  if (x <= lo_) return 0.0;
  if (x >= hi_) return 1.0;
  const double pos = (x - lo_) / step_;
  const auto idx = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(idx);
  return cumulative_[idx] +
         frac * (cumulative_[idx + 1] - cumulative_[idx]);
}

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = a.size(), nb = b.size();
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < na && ib < nb) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < na && a[ia] <= x) ++ia;
    while (ib < nb && b[ib] <= x) ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na -
                              static_cast<double>(ib) / nb));
  }
  return d;
}

double ks_two_sample_pvalue(const std::vector<double>& a,
                            const std::vector<double>& b) {
  const double d = ks_two_sample_statistic(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term =
        2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, p));
}

double digamma_by_differentiation(double x) {
  const double h = std::max(x, 1.0) * 1e-3;
  return (-std::lgamma(x + 2.0 * h) + 8.0 * std::lgamma(x + h) -
          8.0 * std::lgamma(x - h) + std::lgamma(x - 2.0 * h)) /
         (12.0 * h);
}

double trigamma_by_differentiation(double x) {
  const double h = std::max(x, 1.0) * 1e-3;
  return (-digamma_by_differentiation(x + 2.0 * h) +
          8.0 * digamma_by_differentiation(x + h) -
          8.0 * digamma_by_differentiation(x - h) +
          digamma_by_differentiation(x - 2.0 * h)) /
         (12.0 * h);
}

double sample_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
  const double mu = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace oracles
