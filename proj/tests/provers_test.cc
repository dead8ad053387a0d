#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bellqma/provers.h"
#include "bellqma/verifier.h"
#include "test_support.h"

namespace bellqma {
namespace {

using testing::cycle_neq;
using testing::four_sigma;

TEST(Materialize, EveryStrategyEmitsValidStates) {
    const auto g = generate({GeneratorKind::planted_satisfiable, 9, 3, 2, 0.5, 1});
    const auto params = ProtocolParams::make(2, 9, 3);
    const Coloring& tau = *g.planted;
    std::vector<std::pair<int, int>> basis;
    for (int i = 0; i < params.num_provers; ++i) basis.emplace_back(i % 9, i % 3);
    const std::vector<ProverStrategy> zoo = {
        honest(tau), skewed({0, 2, 4}, tau), phase_adversary(1), phase_adversary(2),
        inconsistent({tau, Coloring(9, 0)}, block_assignment(params.num_provers, 2)), classical_basis(basis)};
    for (const auto& s : zoo) {
        const auto states = materialize(s, g.graph, params);
        ASSERT_EQ(states.size(), static_cast<std::size_t>(params.num_provers)) << kind_name(s);
        for (const auto& st : states) {
            EXPECT_EQ(st.n(), 9);
            EXPECT_EQ(st.K(), 3);
            EXPECT_NEAR(st.norm_squared(), 1.0, 1e-12);
        }
    }
}

TEST(Materialize, RejectsBadParameters) {
    const auto g = cycle_neq(5, 2);
    const auto params = ProtocolParams::make(2, 5, 2);
    EXPECT_THROW(materialize(honest({0, 1}), g, params), std::invalid_argument);
    EXPECT_THROW(skewed({}, {0, 1, 0, 1, 0}), std::invalid_argument);
    EXPECT_THROW(materialize(skewed({7}, {0, 1, 0, 1, 0}), g, params), std::invalid_argument);
    EXPECT_THROW(materialize(phase_adversary(0), g, params), std::invalid_argument);
    EXPECT_THROW(materialize(phase_adversary(2), g, params), std::invalid_argument);
    EXPECT_THROW(materialize(inconsistent({Coloring(5, 0)}, {0, 0}), g, params), std::invalid_argument);
    EXPECT_THROW(materialize(inconsistent({Coloring(5, 0)}, std::vector<int>(5, 1)), g, params), std::invalid_argument);
    EXPECT_THROW(materialize(classical_basis({{0, 0}}), g, params), std::invalid_argument);
    EXPECT_THROW(materialize(classical_basis(std::vector<std::pair<int, int>>(5, {0, 2})), g, params),
                 std::invalid_argument);
    EXPECT_THROW(materialize(honest({0, 1, 0, 1, 0}), g, ProtocolParams::make(2, 6, 2)), std::invalid_argument);
}

TEST(Honest, IdenticalStatesWithFlatP0) {
    for (int K : {2, 3, 4}) {
        const ConstraintGraph gk{7, K, std::nullopt, {{0, 1, Relation::everything(K)}}};
        const auto params = ProtocolParams::make(2, 7, K);
        const auto states = materialize(honest({0, 1, K - 1, 0, 1, 0, 1}), gk, params);
        for (const auto& s : states) {
            EXPECT_EQ(s, states[0]);
            EXPECT_NEAR(prob_color_zero(s), 1.0 / K, 1e-12);
        }
    }
}

TEST(Honest, SatisfiableAcceptsConsistencySurely) {
    const auto g = generate({GeneratorKind::planted_satisfiable, 4, 2, 2, 0.5, 9});
    const auto params = ProtocolParams::make(1, 4, 2);
    EXPECT_EQ(brute_force_consistency_acceptance(materialize(honest(*g.planted), g.graph, params), g.graph).value, 1.0);
}

TEST(Honest, UnsatBestColoringRejectsSometimes) {
    const auto g = cycle_neq(3, 2);
    const auto cert = certify_gap(g);
    const auto params = ProtocolParams::make(2, 3, 2);  // 4 provers
    const auto states = materialize(honest(cert.witness), g, params);
    const double accept = brute_force_consistency_acceptance(states, g).value;
    EXPECT_LT(accept, 1.0);
    EXPECT_GT(accept, 0.0);
}

TEST(Skewed, FullSubsetIsHonestAndHalfSubsetZeroesMarginals) {
    const int n = 10;
    const ConstraintGraph g{n, 3, std::nullopt, {{0, 1, Relation::everything(3)}}};
    const auto params = ProtocolParams::make(2, n, 3);
    Coloring tau(n);
    for (int v = 0; v < n; ++v) tau[v] = v % 3;
    std::vector<int> all(n), half;
    for (int v = 0; v < n; ++v) all[v] = v;
    for (int v = 0; v < n / 2; ++v) half.push_back(2 * v);
    const auto h = materialize(honest(tau), g, params);
    const auto s = materialize(skewed(all, tau), g, params);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(fidelity(h[i], s[i]), 1.0, 1e-12);

    const auto sk = materialize(skewed(half, tau), g, params);
    const auto m = vertex_marginals(sk[0]);
    int zeros = 0;
    for (int v = 0; v < n; ++v) {
        if (v % 2) {
            EXPECT_EQ(m[v], 0.0);
            ++zeros;
        } else {
            EXPECT_NEAR(m[v], 2.0 / n, 1e-12);
        }
    }
    EXPECT_EQ(zeros, n / 2);
}

TEST(Skewed, HalfSubsetRaisesUniformityRejection) {
    const auto g = generate({GeneratorKind::planted_satisfiable, 16, 2, 3, 0.5, 3});
    const auto params = ProtocolParams::make(4, 16, 2);
    std::vector<int> half;
    for (int v = 0; v < 8; ++v) half.push_back(v);
    MonteCarloOptions options{10'000, 1, 0, TestKind::uniformity};
    const auto h = estimate_acceptance(honest(*g.planted), g.graph, params, options);
    const auto s = estimate_acceptance(skewed(half, *g.planted), g.graph, params, options);
    const double gap = h.estimate.value - s.estimate.value;
    EXPECT_GT(gap - 4 * std::hypot(h.estimate.ci_halfwidth, s.estimate.ci_halfwidth) / 1.96, 0.0);
}

TEST(PhaseAdversary, NullP0ForEveryKAndFrequency) {
    for (int K = 2; K <= 7; ++K) {
        const ConstraintGraph g{3, K, std::nullopt, {{0, 1, Relation::everything(K)}}};
        const auto params = ProtocolParams::make(2, 3, K);
        for (int f = 1; f < K; ++f) {
            for (const auto& s : materialize(phase_adversary(f), g, params)) EXPECT_EQ(prob_color_zero(s), 0.0);
        }
    }
}

TEST(PhaseAdversary, KTwoAmplitudes) {
    const auto g = cycle_neq(3, 2);
    const auto s = materialize(phase_adversary(1), g, ProtocolParams::make(2, 3, 2))[0];
    for (int v = 0; v < 3; ++v) {
        EXPECT_NEAR(std::abs(s.amplitude(v, 0) - 1 / std::sqrt(6.0)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(s.amplitude(v, 1) + 1 / std::sqrt(6.0)), 0.0, 1e-12);
    }
}

TEST(PhaseAdversary, UniformColorsInConsistencyTest) {
    const auto g = cycle_neq(3, 3);
    const auto params = ProtocolParams::make(1.2, 3, 3);  // 3 provers
    ASSERT_EQ(params.num_provers, 3);
    const auto states = materialize(phase_adversary(1), g, params);
    for (double c : color_marginals(states[0])) EXPECT_NEAR(c, 1.0 / 3, 1e-12);
    const double exact = brute_force_consistency_acceptance(states, g).value;
    const auto mc = estimate_acceptance(phase_adversary(1), g, params, {40'000, 5, 2, TestKind::consistency});
    EXPECT_NEAR(mc.estimate.value, exact, four_sigma(exact, 40'000));
}

TEST(Inconsistent, OneDifferingVertexMatchesOracle) {
    const int n = 4;
    const ConstraintGraph g{n, 2, std::nullopt, {{0, 1, Relation::everything(2)}}};
    const auto params = ProtocolParams::make(1, n, 2);  // 2 provers
    const Coloring a = {0, 0, 0, 0}, b = {0, 0, 1, 0};
    const auto strategy = inconsistent({a, b}, block_assignment(2, 2));
    const auto states = materialize(strategy, g, params);
    const double exact = brute_force_consistency_acceptance(states, g).value;
    EXPECT_NEAR(exact, 1.0 - 1.0 / (n * n), 1e-15);
    const auto mc = estimate_acceptance(strategy, g, params, {100'000, 2, 4, TestKind::consistency});
    EXPECT_NEAR(static_cast<double>(mc.count(RejectReason::vertex_color_mismatch)) / 100'000, 1.0 / (n * n),
                four_sigma(1.0 / (n * n), 100'000));
}

TEST(Inconsistent, SingleColoringIsHonest) {
    const auto g = cycle_neq(5, 3);
    const auto params = ProtocolParams::make(2, 5, 3);
    const Coloring tau = {0, 1, 2, 0, 1};
    const auto h = materialize(honest(tau), g, params);
    const auto i = materialize(inconsistent({tau}, std::vector<int>(params.num_provers, 0)), g, params);
    for (std::size_t k = 0; k < h.size(); ++k) EXPECT_NEAR(fidelity(h[k], i[k]), 1.0, 1e-12);
}

TEST(Inconsistent, BlockAssignment) {
    EXPECT_EQ(block_assignment(5, 2), (std::vector<int>{0, 0, 0, 1, 1}));
    EXPECT_EQ(block_assignment(4, 4), (std::vector<int>{0, 1, 2, 3}));
    EXPECT_EQ(block_assignment(3, 1), (std::vector<int>{0, 0, 0}));
}

TEST(Inconsistent, EverywhereDifferentRejectsOften) {
    const auto g = generate({GeneratorKind::planted_satisfiable, 25, 3, 3, 0.5, 11});
    const auto params = ProtocolParams::make(2, 25, 3);  // 10 = 2 sqrt(n) provers
    Coloring shifted = *g.planted;
    for (int& c : shifted) c = (c + 1) % 3;
    const auto r = estimate_acceptance(inconsistent({*g.planted, shifted}, block_assignment(params.num_provers, 2)),
                                       g.graph, params, {10'000, 6, 0, TestKind::consistency});
    const double reject = 1 - r.estimate.value;
    EXPECT_GE(reject + four_sigma(reject, 10'000), 0.5);
}

TEST(ClassicalBasis, Examples) {
    const auto g = cycle_neq(3, 2);
    const auto params = ProtocolParams::make(1.2, 3, 2);  // 3 provers
    const auto violated = materialize(classical_basis({{0, 1}, {1, 1}, {2, 0}}), g, params);
    EXPECT_EQ(brute_force_consistency_acceptance(violated, g).value, 0.0);
    const auto same = materialize(classical_basis({{2, 1}, {2, 1}, {2, 1}}), g, params);
    EXPECT_EQ(brute_force_consistency_acceptance(same, g).value, 1.0);
    for (const auto& s : same) EXPECT_NEAR(prob_color_zero(s), 0.5, 1e-12);
}

TEST(KindName, Names) {
    EXPECT_EQ(kind_name(honest({0})), "honest");
    EXPECT_EQ(kind_name(phase_adversary(1)), "phase_adversary");
    EXPECT_EQ(kind_name(classical_basis({})), "classical_basis");
}

}  // namespace
}  // namespace bellqma
