#include "bellqma/binomial.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bellqma {

namespace {

long double log_pmf(int trials, long double p, int k) {
    const long double log_choose =
        std::lgamma(static_cast<long double>(trials) + 1) - std::lgamma(static_cast<long double>(k) + 1) -
        std::lgamma(static_cast<long double>(trials - k) + 1);
    return log_choose + k * std::log(p) + (trials - k) * std::log1p(-p);
}

// Sum of P[X = k] for k in [lo, hi].
double range_sum(int trials, double p, int lo, int hi) {
    lo = std::max(lo, 0);
    hi = std::min(hi, trials);
    if (lo > hi) return 0.0;
    if (p <= 0.0) return lo == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return hi == trials ? 1.0 : 0.0;
    long double sum = 0.0L;
    long double compensation = 0.0L;
    for (int k = lo; k <= hi; ++k) {
        const long double term = std::exp(log_pmf(trials, p, k));
        const long double t = sum + term;
        compensation += std::fabs(sum) >= std::fabs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return static_cast<double>(std::min(1.0L, sum + compensation));
}

void check(int trials, double p) {
    if (trials < 0) throw std::invalid_argument("binomial needs a non-negative trial count");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial probability must lie in [0, 1]");
}

}  // namespace

double binomial_pmf(int trials, double p, int k) {
    check(trials, p);
    return range_sum(trials, p, k, k);
}

double binomial_upper_tail(int trials, double p, int k) {
    check(trials, p);
    return range_sum(trials, p, k, trials);
}

double binomial_lower_tail(int trials, double p, int k) {
    check(trials, p);
    return range_sum(trials, p, 0, k - 1);
}

}  // namespace bellqma
