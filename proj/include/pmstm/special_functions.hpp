#pragma once

namespace pmstm {

// omega_0: first derivative of log Gamma. Accurate to ~1e-13 for x >= 1e-6.
double digamma(double x);

// omega_1: second derivative of log Gamma; strictly positive and decreasing
// on (0, inf).
double trigamma(double x);

// omega_2: third derivative of log Gamma (Newton steps for alpha_star).
double tetragamma(double x);

// Root of trigamma(a) = 1, approx 1.4263; solved once by Newton-Raphson
// with a bisection fallback and cached.
double alpha_star();

}  // namespace pmstm
