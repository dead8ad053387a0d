#include "bellqma/protocol_params.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bellqma {

int robust_ceil(double x) {
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<int>(nearest);
    return static_cast<int>(std::ceil(x));
}

ProtocolParams ProtocolParams::make(double C, int n, int K) {
    if (!(C > 0.0)) throw std::invalid_argument("C must be positive");
    if (n < 1 || K < 1) throw std::invalid_argument("n and K must be positive");
    ProtocolParams p;
    p.C = C;
    p.n = n;
    p.K = K;
    const double provers = C * std::sqrt(static_cast<double>(n));
    p.num_provers = robust_ceil(provers);
    p.mu = provers / K;
    p.z_threshold = robust_ceil(99.0 * p.mu / 100.0);
    if (p.num_provers < 2) {
        throw std::invalid_argument("C*sqrt(n) gives " + std::to_string(p.num_provers) + " provers; need at least 2");
    }
    if (p.z_threshold > p.num_provers) throw std::invalid_argument("z_threshold exceeds num_provers");
    return p;
}

}  // namespace bellqma
