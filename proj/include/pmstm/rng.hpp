#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pmstm {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256++ keyed by (seed, chain, sweep, block). Every Gibbs block gets a
// fresh stream, so draws stay reproducible no matter how many variates a
// rejection sampler consumes elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
               std::uint64_t c = 0) {
    std::uint64_t x = seed;
    x = (x ^ (a + 0x9e3779b97f4a7c15ull)) * 0x2545f4914f6cdd1dull + 1;
    x = (x ^ (b + 0x9e3779b97f4a7c15ull)) * 0x2545f4914f6cdd1dull + 1;
    x = (x ^ (c + 0x9e3779b97f4a7c15ull)) * 0x2545f4914f6cdd1dull + 1;
    for (auto& w : s_) w = splitmix64(x);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x1ull;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1); never returns 0 or 1, so log(u) is safe.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Marsaglia polar method; avoids stdlib distribution objects so streams are
  // identical across standard library implementations.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // log of a gamma(shape, scale = 1) draw, valid for any shape > 0.
  // Marsaglia-Tsang in the log domain; shape < 1 is boosted through
  // log gamma_a = log gamma_{a+1} + log(U)/a, which never underflows.
  double log_gamma(double shape) {
    double boost = 0.0;
    while (shape < 1.0) {
      boost += std::log(uniform()) / shape;
      shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      const double v3 = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x)
        return std::log(d) + 3.0 * std::log(v) + boost;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v3 + std::log(v3)))
        return std::log(d) + 3.0 * std::log(v) + boost;
    }
  }

  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
      // Knuth product-of-uniforms in the log domain.
      long long k = 0;
      double s = 0.0;
      for (;;) {
        s += -std::log(uniform());
        if (s >= mean) return k;
        ++k;
      }
    }
    // Hormann's PTRS transformed rejection for large means.
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
      if (lhs <= kf * log_mean - mean - std::lgamma(kf + 1.0))
        return static_cast<long long>(kf);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pmstm
