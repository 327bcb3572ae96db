#include "pmstm/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace pmstm {

namespace {
constexpr double kShift = 12.0;  // recurrence boundary for the asymptotic tails
}

double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: x must be > 0");
  double acc = 0.0;
  while (x < kShift) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // ln x - 1/(2x) - sum B_{2n}/(2n x^{2n})
  double series = -1.0 / 12.0;
  double p = inv2;
  series *= p;
  double tail = series;
  p *= inv2;
  tail += (1.0 / 120.0) * p;
  p *= inv2;
  tail += (-1.0 / 252.0) * p;
  p *= inv2;
  tail += (1.0 / 240.0) * p;
  p *= inv2;
  tail += (-1.0 / 132.0) * p;
  p *= inv2;
  tail += (691.0 / 32760.0) * p;
  p *= inv2;
  tail += (-1.0 / 12.0) * p;
  return acc + std::log(x) - 0.5 * inv + tail;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("trigamma: x must be > 0");
  double acc = 0.0;
  while (x < kShift) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum B_{2n}/x^{2n+1}
  double tail = 0.0;
  double p = inv2 * inv;
  tail += (1.0 / 6.0) * p;
  p *= inv2;
  tail += (-1.0 / 30.0) * p;
  p *= inv2;
  tail += (1.0 / 42.0) * p;
  p *= inv2;
  tail += (-1.0 / 30.0) * p;
  p *= inv2;
  tail += (5.0 / 66.0) * p;
  p *= inv2;
  tail += (-691.0 / 2730.0) * p;
  p *= inv2;
  tail += (7.0 / 6.0) * p;
  return acc + inv + 0.5 * inv2 + tail;
}

double tetragamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("tetragamma: x must be > 0");
  double acc = 0.0;
  while (x < kShift) {
    acc -= 2.0 / (x * x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // derivative of the trigamma tail
  double tail = 0.0;
  double p = inv2 * inv2;
  tail += (-1.0 / 2.0) * p;
  p *= inv2;
  tail += (1.0 / 6.0) * p;
  p *= inv2;
  tail += (-1.0 / 6.0) * p;
  p *= inv2;
  tail += (3.0 / 10.0) * p;
  p *= inv2;
  tail += (-5.0 / 6.0) * p;
  return acc - inv2 - inv2 * inv + tail;
}

double alpha_star() {
  static const double cached = [] {
    // trigamma is strictly decreasing: trigamma(1) = pi^2/6 > 1 > trigamma(2),
    // so the root is bracketed in [1, 2].
    double lo = 1.0, hi = 2.0;
    double a = 1.5;
    for (int it = 0; it < 100; ++it) {
      const double f = trigamma(a) - 1.0;
      if (std::fabs(f) < 1e-14) break;
      if (f > 0.0)
        lo = a;
      else
        hi = a;
      double step = f / tetragamma(a);
      double next = a - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      a = next;
    }
    return a;
  }();
  return cached;
}

}  // namespace pmstm
