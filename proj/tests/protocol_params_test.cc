#include <gtest/gtest.h>

#include <cmath>

#include "bellqma/binomial.h"
#include "bellqma/protocol_params.h"
#include "test_support.h"

namespace bellqma {
namespace {

TEST(RobustCeil, AbsorbsRoundoffAboveIntegers) {
    EXPECT_EQ(robust_ceil(3.0), 3);
    EXPECT_EQ(robust_ceil(3.0000000000001), 3);
    EXPECT_EQ(robust_ceil(3.001), 4);
    EXPECT_EQ(robust_ceil(0.99 * 100), 99);
    EXPECT_EQ(robust_ceil(-0.5), 0);
}

TEST(ProtocolParams, Sizing) {
    const auto p = ProtocolParams::make(16, 100, 3);
    EXPECT_EQ(p.num_provers, 160);
    EXPECT_DOUBLE_EQ(p.mu, 160.0 / 3);
    EXPECT_EQ(p.z_threshold, 53);  // ceil(52.8)
    const auto q = ProtocolParams::make(8, 25, 2);
    EXPECT_EQ(q.num_provers, 40);
    EXPECT_EQ(q.z_threshold, 20);  // 99 * 20 / 100 = 19.8
}

TEST(ProtocolParams, InvariantsAcrossGrid) {
    for (int n : {1, 4, 25, 100, 400, 1000}) {
        for (int K : {1, 2, 3, 4, 8}) {
            for (double C : {2.0, 8.0, 16.0, 32.0, 7.3}) {
                const auto p = ProtocolParams::make(C, n, K);
                const double exact = C * std::sqrt(static_cast<double>(n));
                EXPECT_GE(p.num_provers, 2);
                EXPECT_GE(p.num_provers, exact - 1e-9);
                EXPECT_LT(p.num_provers, exact + 1);
                EXPECT_DOUBLE_EQ(p.mu, exact / K);
                EXPECT_GE(p.z_threshold, 0.99 * p.mu - 1e-9);
                EXPECT_LT(p.z_threshold, 0.99 * p.mu + 1);
                EXPECT_LE(p.z_threshold, p.num_provers);
            }
        }
    }
}

TEST(ProtocolParams, RejectsSingleProver) { EXPECT_THROW(ProtocolParams::make(1, 1, 2), std::invalid_argument); }

TEST(Binomial, MatchesBoostOnGrid) {
    for (int N : {1, 5, 40, 160, 640}) {
        for (double p : {0.0, 1.0 / 16, 0.125, 1.0 / 3, 0.5, 1.0}) {
            for (int k = -1; k <= N + 1; k += std::max(1, N / 37)) {
                const double upper = binomial_upper_tail(N, p, k);
                const double oracle = testing::oracle_upper_tail(N, p, k);
                EXPECT_NEAR(upper, oracle, 1e-13 + 1e-10 * oracle) << N << " " << p << " " << k;
                EXPECT_NEAR(binomial_lower_tail(N, p, k), 1 - oracle, 1e-12) << N << " " << p << " " << k;
            }
        }
    }
}

TEST(Binomial, TinyTailsKeepRelativePrecision) {
    // P[Bin(640, 1/12) >= 105] = 2.6445e-11.
    const double tail = binomial_upper_tail(640, 1.0 / 12, 105);
    const double oracle = testing::oracle_upper_tail(640, 1.0 / 12, 105);
    EXPECT_NEAR(tail / oracle, 1.0, 1e-10);
    EXPECT_NEAR(tail, 2.6445e-11, 1e-15);
}

TEST(Binomial, PmfSumsToOne) {
    for (int N : {0, 1, 7, 100}) {
        double total = 0;
        for (int k = 0; k <= N; ++k) total += binomial_pmf(N, 0.3, k);
        EXPECT_NEAR(total, 1.0, 1e-13);
    }
    EXPECT_EQ(binomial_pmf(4, 0.5, 5), 0.0);
    EXPECT_EQ(binomial_pmf(4, 0.5, -1), 0.0);
}

}  // namespace
}  // namespace bellqma
