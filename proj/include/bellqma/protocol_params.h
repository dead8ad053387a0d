#pragma once

namespace bellqma {

/// ceil(x), robust to x landing a few ulps above an integer.
int robust_ceil(double x);

/// Protocol sizing for a given prover-count constant C.
///   num_provers = ceil(C sqrt(n)),  mu = C sqrt(n) / K,  z_threshold = ceil(99 mu / 100).
struct ProtocolParams {
    double C = 0.0;
    int n = 0;
    int K = 0;
    int num_provers = 0;
    double mu = 0.0;
    int z_threshold = 0;

    /// Throws std::invalid_argument unless num_provers >= 2 and z_threshold <= num_provers.
    static ProtocolParams make(double C, int n, int K);
};

}  // namespace bellqma
