#pragma once

namespace bellqma {

/// P[X = k] for X ~ Bin(trials, p).
double binomial_pmf(int trials, double p, int k);

/// P[X >= k]. Terms are evaluated in log space in long double and summed with
/// Neumaier compensation, so tails far below 1e-16 keep full relative precision.
double binomial_upper_tail(int trials, double p, int k);

/// P[X < k].
double binomial_lower_tail(int trials, double p, int k);

}  // namespace bellqma
