// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <fmt/format.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <sys/wait.h>

#include "bellqma/analysis.h"
#include "bellqma/binomial.h"
#include "bellqma/graph_io.h"
#include "bellqma/verifier.h"
#include "test_support.h"

namespace {

using namespace bellqma;
using bellqma::testing::four_sigma;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string title;
    double budget_seconds;
    std::function<Outcome()> run;
};

ConstraintGraph planted(int n, int K, std::uint64_t seed, Coloring* coloring = nullptr) {
    auto inst = generate(GeneratorParams{GeneratorKind::planted_satisfiable, n, K, 4, 0.5, seed});
    if (coloring) *coloring = *inst.planted;
    return inst.graph;
}

Coloring shifted(Coloring c, int K) {
    for (auto& x : c) x = (x + 1) % K;
    return c;
}

Coloring random_coloring(int n, int K, RandomStream& rng) {
    Coloring c(static_cast<std::size_t>(n));
    for (auto& x : c) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    return c;
}

/// Honest state for `coloring` plus Gaussian noise of relative size `noise`.
ProofState perturbed_honest(const ConstraintGraph& g, const Coloring& coloring, double noise, RandomStream& rng) {
    const auto base = honest_state(g, coloring);
    const auto kick = bellqma::testing::random_state(g.n, g.K, rng);
    std::vector<Amplitude> amps(base.amplitudes().begin(), base.amplitudes().end());
    for (std::size_t i = 0; i < amps.size(); ++i) amps[i] += noise * kick.amplitudes()[i];
    return ProofState::normalized(g.n, g.K, std::move(amps));
}

/// Phase-adversary state plus noise: p0 ranges from 0 up past 1/(4K).
ProofState low_p0_state(int n, int K, double noise, RandomStream& rng) {
    const auto kick = bellqma::testing::random_state(n, K, rng);
    std::vector<Amplitude> amps(static_cast<std::size_t>(n * K));
    for (int v = 0; v < n; ++v) {
        for (int c = 0; c < K; ++c) {
            const auto i = static_cast<std::size_t>(v * K + c);
            amps[i] = std::polar(1.0, 2 * std::numbers::pi * c / K) + noise * std::sqrt(n * K) * kick.amplitudes()[i];
        }
    }
    return ProofState::normalized(n, K, std::move(amps));
}

// 1 ------------------------------------------------------------------------

Outcome honest_p0_exactness() {
    RandomStream rng(101);
    std::vector<ConstraintGraph> graphs = {bellqma::testing::cycle_neq(5), bellqma::testing::triangle_neq(),
                                           bellqma::testing::path_graph(7, 5, std::nullopt)};
    graphs.push_back(generate({GeneratorKind::clique_neq, 4, 3, 0, 0.5, 0}).graph);
    graphs.push_back(generate({GeneratorKind::random_regular, 30, 6, 3, 0.5, 4}).graph);
    for (int K : {2, 3, 4, 7}) graphs.push_back(planted(100, K, 11));
    double worst = 0;
    int states = 0;
    for (const auto& g : graphs) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto s = honest_state(g, random_coloring(g.n, g.K, rng));
            worst = std::max(worst, std::abs(prob_color_zero(s) - 1.0 / g.K));
            ++states;
        }
    }
    return {worst <= 1e-12, fmt::format("max |p0 - 1/K| = {:.3g} over {} honest states on {} instances (tol 1e-12)",
                                        worst, states, graphs.size())};
}

// 2 ------------------------------------------------------------------------

Outcome consistency_completeness() {
    Coloring tau;
    const auto g = planted(100, 3, 7, &tau);
    const auto params = ProtocolParams::make(16, g.n, g.K);
    MonteCarloOptions options{10'000, 2, 0, TestKind::consistency};
    const auto mc = estimate_acceptance(honest(tau), g, params, options);
    const auto rejections = mc.count(RejectReason::edge_violation) + mc.count(RejectReason::vertex_color_mismatch);

    // Tiny satisfiable instances with n <= 4 and two provers.
    std::vector<std::pair<ConstraintGraph, Coloring>> tiny = {
        {bellqma::testing::cycle_neq(4), {0, 1, 0, 1}},
        {bellqma::testing::path_graph(3, 2, std::nullopt), {0, 1, 0}},
        {bellqma::testing::triangle_neq(), {0, 1, 2}},
        {bellqma::testing::cycle_neq(4, 3), {0, 1, 2, 1}},
        {bellqma::testing::path_graph(2, 3, std::nullopt), {2, 0}},
    };
    double worst = 0;
    for (const auto& [tg, coloring] : tiny) {
        const std::vector<ProofState> states(2, honest_state(tg, coloring));
        const auto exact = brute_force_consistency_acceptance(states, tg);
        worst = std::max(worst, std::abs(1.0 - exact.value));
    }
    return {rejections == 0 && worst == 0.0,
            fmt::format("{} consistency rejections in {} trials (n=100 K=3 C=16); brute force on {} tiny instances: "
                        "max |1 - acceptance| = {:.3g}",
                        rejections, mc.estimate.trials, tiny.size(), worst)};
}

// 3 ------------------------------------------------------------------------

Outcome uniformity_completeness_grid() {
    const ParameterGrid grid;
    double worst_tail = 0;
    double worst_margin = 1;
    int points = 0;
    std::string failures;
    for (int n : grid.n) {
        for (int K : grid.K) {
            Coloring tau;
            const auto g = planted(n, K, 3, &tau);
            const auto state = honest_state(g, tau);
            for (double C : grid.C) {
                const auto params = ProtocolParams::make(C, n, K);
                const std::vector<ProofState> states(static_cast<std::size_t>(params.num_provers), state);
                const double dp = exact_uniformity_acceptance(states, params).value;
                const double tail = bellqma::testing::oracle_upper_tail(params.num_provers, 1.0 / K, params.z_threshold);
                const double total = 0.5 + 0.5 * tail;
                const double bound = 1 - std::exp(-params.mu / 2e4);
                worst_tail = std::max(worst_tail, std::abs(dp - tail));
                worst_margin = std::min(worst_margin, total - bound);
                if (std::abs(dp - tail) > 1e-10 || total < bound) failures += fmt::format(" ({},{},{})", n, K, C);
                ++points;
            }
        }
    }
    return {failures.empty(),
            fmt::format("{} grid points: max |DP - binomial tail| = {:.3g} (tol 1e-10), min(total - bound) = {:.4f}{}",
                        points, worst_tail, worst_margin, failures.empty() ? "" : "; failing at" + failures)};
}

// 4 ------------------------------------------------------------------------

Outcome oracle_monte_carlo_agreement() {
    RandomStream rng(404);
    constexpr std::uint64_t kTrials = 100'000;
    const std::array<std::tuple<int, int, double>, 4> shapes = {{{4, 2, 2.0}, {3, 3, 1.8}, {5, 2, 1.5}, {4, 3, 2.5}}};
    double worst_uniformity = 0;
    int uniformity_fail = 0;
    for (int input = 0; input < 20; ++input) {
        const auto [n, K, C] = shapes[static_cast<std::size_t>(input) % shapes.size()];
        const auto params = ProtocolParams::make(C, n, K);
        const auto g = bellqma::testing::path_graph(n, K, std::nullopt);
        std::vector<ProofState> states;
        for (int i = 0; i < params.num_provers; ++i) {
            states.push_back(perturbed_honest(g, random_coloring(n, K, rng), 0.15 + 0.1 * (input % 5), rng));
        }
        const ProofEnsemble ensemble(states);
        const double exact = exact_uniformity_acceptance(ensemble, params).value;
        const auto mc = estimate_acceptance(ensemble, EdgeIndex(g), params,
                                            {kTrials, 1000 + static_cast<std::uint64_t>(input), 0, TestKind::uniformity});
        const double z = std::abs(mc.estimate.value - exact) / four_sigma(exact, kTrials) * 4;
        worst_uniformity = std::max(worst_uniformity, z);
        if (z > 4) ++uniformity_fail;
    }

    std::vector<ConstraintGraph> tiny = {bellqma::testing::cycle_neq(4), bellqma::testing::triangle_neq(),
                                         bellqma::testing::path_graph(4, 3, std::nullopt),
                                         generate({GeneratorKind::clique_neq, 4, 3, 0, 0.5, 0}).graph,
                                         bellqma::testing::cycle_neq(3)};
    double worst_consistency = 0;
    int consistency_fail = 0;
    for (std::size_t t = 0; t < tiny.size(); ++t) {
        const auto& g = tiny[t];
        const auto params = ProtocolParams::make(3.0 / std::sqrt(g.n), g.n, g.K);
        std::vector<ProofState> states;
        for (int i = 0; i < 3; ++i) states.push_back(perturbed_honest(g, random_coloring(g.n, g.K, rng), 0.4, rng));
        const double exact = brute_force_consistency_acceptance(states, g).value;
        const auto mc = estimate_acceptance(ProofEnsemble(states), EdgeIndex(g), params,
                                            {kTrials, 2000 + t, 0, TestKind::consistency});
        const double z = std::abs(mc.estimate.value - exact) / four_sigma(exact, kTrials) * 4;
        worst_consistency = std::max(worst_consistency, z);
        if (params.num_provers != 3 || z > 4) ++consistency_fail;
    }
    return {uniformity_fail == 0 && consistency_fail == 0,
            fmt::format("20 product inputs vs exact uniformity DP: max {:.2f} sigma; {} three-prover instances vs brute "
                        "force: max {:.2f} sigma ({} trials each)",
                        worst_uniformity, tiny.size(), worst_consistency, kTrials)};
}

// 5 ------------------------------------------------------------------------

Outcome soundness_case_coverage() {
    Coloring tau;
    const auto g = planted(100, 3, 7, &tau);
    const auto params = ProtocolParams::make(16, g.n, g.K);
    const EdgeIndex edges(g);
    constexpr std::uint64_t kTrials = 10'000;
    const auto uniformity = [&](const ProverStrategy& s, std::uint64_t seed) {
        return estimate_acceptance(s, g, params, {kTrials, seed, 0, TestKind::uniformity});
    };

    const auto phase = phase_adversary(1);
    const auto phase_states = materialize(phase, g, params);
    const auto phase_report = soundness_report(phase_states, g, params, 0.01);
    const auto phase_mc = uniformity(phase, 51);
    const bool phase_ok = phase_mc.count(RejectReason::z_below_threshold) == kTrials && phase_report.z_prime.empty() &&
                          exact_uniformity_acceptance(phase_states, params).value == 0.0;

    std::vector<int> half(static_cast<std::size_t>(g.n / 2));
    std::iota(half.begin(), half.end(), 0);
    const auto honest_mc = uniformity(honest(tau), 52);
    const auto skew_mc = uniformity(skewed(half, tau), 53);
    const double honest_reject = 1 - honest_mc.estimate.value;
    const double skew_reject = 1 - skew_mc.estimate.value;
    const double sigma_diff = std::hypot(four_sigma(honest_reject, kTrials), four_sigma(skew_reject, kTrials));
    const bool skew_ok = skew_reject - honest_reject - sigma_diff >= 0.10;

    const auto incon = inconsistent({tau, shifted(tau, g.K)}, block_assignment(params.num_provers, 2));
    const auto incon_mc = estimate_acceptance(incon, g, params, {kTrials, 54, 0, TestKind::consistency});
    const double incon_reject = 1 - incon_mc.estimate.value;
    const bool incon_ok = params.num_provers == 160 && incon_reject - four_sigma(incon_reject, kTrials) >= 0.5;

    return {phase_ok && skew_ok && incon_ok,
            fmt::format("phase: {}/{} Step 1 rejections, |Z'|={}; skewed |S|=50: rejection {:.4f} vs honest {:.4f} "
                        "(gap - 4 sigma = {:.4f} >= 0.10); inconsistent, {} provers: rejection {:.4f} (>= 0.5 at 4 sigma)",
                        phase_mc.count(RejectReason::z_below_threshold), kTrials, phase_report.z_prime.size(),
                        skew_reject, honest_reject, skew_reject - honest_reject - sigma_diff, params.num_provers,
                        incon_reject)};
}

// 6 ------------------------------------------------------------------------

Outcome fourier_inequality_suite() {
    RandomStream rng(606);
    const std::array<std::pair<int, int>, 4> shapes = {{{5, 2}, {8, 3}, {12, 4}, {6, 5}}};
    int z_prime_states = 0;
    int violations = 0;
    double worst_alpha = -1, worst_bound = -1, worst_distance = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto [n, K] = shapes[static_cast<std::size_t>(i) % shapes.size()];
        const auto g = bellqma::testing::path_graph(n, K, std::nullopt);
        ProofState s = i % 4 == 0   ? bellqma::testing::random_state(n, K, rng)
                       : i % 4 == 1 ? bellqma::testing::random_sparse_state(n, K, rng)
                       : i % 4 == 2 ? perturbed_honest(g, random_coloring(n, K, rng), 0.05 * (i % 20), rng)
                                    : low_p0_state(n, K, 0.02 * (i % 30), rng);
        const auto params = ProtocolParams::make(2, n, K);
        const auto report = soundness_report(std::span(&s, 1), g, params, 0.01);

        // Independent recomputation from a long-double DFT of each color row.
        std::vector<std::complex<long double>> zero_component(static_cast<std::size_t>(n));
        long double p0 = 0;
        for (int v = 0; v < n; ++v) {
            std::vector<std::complex<double>> row(s.amplitudes().begin() + v * K, s.amplitudes().begin() + (v + 1) * K);
            zero_component[static_cast<std::size_t>(v)] = bellqma::testing::oracle_dft(row)[0];
            p0 += std::norm(zero_component[static_cast<std::size_t>(v)]);
        }
        const auto alpha2 = vertex_marginals(s);
        const bool in_z_prime = p0 >= 1.0L / (4 * K);
        for (int v = 0; v < n; ++v) {
            const double joint = static_cast<double>(std::norm(zero_component[static_cast<std::size_t>(v)]));
            const double a2 = alpha2[static_cast<std::size_t>(v)];
            worst_alpha = std::max(worst_alpha, joint - a2);
            if (joint > a2 + kInequalityTolerance) ++violations;
            if (in_z_prime && p0 > 0) {
                const double gamma2 = joint / static_cast<double>(p0);
                worst_bound = std::max(worst_bound, gamma2 - 4.0 * K * a2);
                if (gamma2 > 4.0 * K * a2 + kInequalityTolerance) ++violations;
            }
        }
        if (!report.gamma_alpha_ok[0]) ++violations;
        if (in_z_prime != !report.z_prime.empty()) ++violations;
        if (in_z_prime) {
            ++z_prime_states;
            if (!report.gamma_bound_ok[0]) ++violations;
            const auto d = fourier_distance(s);
            long double direct = 0;
            const long double psi = 1.0L / std::sqrt(static_cast<long double>(n));
            for (const auto& z : zero_component) direct += std::norm(z / std::sqrt(p0) - psi);
            worst_distance = std::max({worst_distance, std::abs(d.via_transform - d.via_direct),
                                       std::abs(d.via_direct - static_cast<double>(direct))});
        }
    }
    if (worst_distance > 1e-10) ++violations;
    return {violations == 0,
            fmt::format("1000 states ({} in Z'): max(p0|g|^2 - |a|^2) = {:.3g}, max(|g|^2 - 4K|a|^2) = {:.3g}, "
                        "fourier_distance path gap {:.3g} (tol 1e-10), {} violations",
                        z_prime_states, worst_alpha, worst_bound, worst_distance, violations)};
}

// 7 ------------------------------------------------------------------------

Outcome lemma3_reproduction() {
    const auto g = bellqma::testing::cycle_neq(5);
    const auto cert = certify_gap(g);
    const bool eta_ok = cert.exhaustive && cert.eta == Fraction{1, 5};
    std::vector<int> all(5);
    std::iota(all.begin(), all.end(), 0);
    CollisionSetup setup{{all}, {ColorRule::deterministic(cert.witness, g.K)}, 10, default_epsilon(cert.eta)};
    const auto pair = lemma3_estimate(g, setup, 10'000, 71);
    const bool pair_ok = std::abs(pair.pair_mean - 2.0 / 25) <= 4 * pair.pair_mean_se;

    const int m_max = static_cast<int>(std::floor(10 * std::sqrt(5.0)));
    int first_hit = -1;
    double best = 1;
    int best_m = 0;
    for (int m = 2; m <= m_max; ++m) {
        setup.m_prime = m;
        const auto e = lemma3_estimate(g, setup, 10'000, 700 + static_cast<std::uint64_t>(m));
        if (e.pr_v_zero_empirical < best) best = e.pr_v_zero_empirical, best_m = m;
        if (first_hit < 0 && e.pr_v_zero_empirical <= 0.01) first_hit = m;
    }
    const double exact_at_max = 2 * std::pow(0.8, m_max) - std::pow(0.6, m_max);
    return {eta_ok && pair_ok && first_hit >= 0,
            fmt::format("eta = {}; E[V_ij] = {:.5f} +- {:.5f} vs 2/25 (m'=10) {}; min Pr[V=0] over m' <= {} is {:.4f} "
                        "at m'={} (exact {:.4f}), target <= 0.01 {}",
                        cert.eta.str(), pair.pair_mean, 4 * pair.pair_mean_se, pair_ok ? "ok" : "off", m_max,
                        best, best_m, exact_at_max, first_hit >= 0 ? fmt::format("reached at m'={}", first_hit) : "not reached")};
}

// 8 ------------------------------------------------------------------------

Outcome chernoff_audits() {
    const auto audits = chernoff_grid_audit(ParameterGrid{});
    std::string failures;
    for (const auto& a : audits) {
        if (!a.holds) {
            failures += fmt::format(" {} N={} threshold={}: tail {:.4g} > bound {:.4g};", to_string(a.side),
                                    a.num_provers, a.threshold, a.exact_tail, a.bound);
        }
    }
    const auto held = std::count_if(audits.begin(), audits.end(), [](const auto& a) { return a.holds; });
    return {failures.empty(), fmt::format("{}/{} grid audits hold{}", held, audits.size(),
                                          failures.empty() ? "" : ";" + failures.substr(0, failures.size() - 1))};
}

// 9 ------------------------------------------------------------------------

struct Captured {
    int status;
    std::string out;
};

Captured capture(const std::string& args) {
    const std::string command = fmt::format("'{}' {} 2>/dev/null", BELLQMA_CLI, args);
    Captured result{-1, {}};
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) return result;
    std::array<char, 4096> buffer;
    while (const auto read = std::fread(buffer.data(), 1, buffer.size(), pipe)) result.out.append(buffer.data(), read);
    result.status = pclose(pipe);
    return result;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const std::string configs = std::string(BELLQMA_EXAMPLES_DIR) + "/configs/";
    const std::vector<std::string> invocations = {
        "validate " + std::string(BELLQMA_EXAMPLES_DIR) + "/five_cycle_neq.json",
        "run -c " + configs + "honest_planted.json --trials 5000",
        "run -c " + configs + "inconsistent.json --trials 5000 --format json",
        "run -c " + configs + "skewed.json --trials 2000 --seed 99",
        "sweep -c " + configs + "honest_planted.json --trials 1000 --grid C=8,16,32",
        "sweep -c " + configs + "five_cycle_lemma3.json --grid m_prime=2,10,22 --format json",
        "audit -c " + configs + "phase_adversary.json",
        "audit -c " + configs + "five_cycle_lemma3.json --format json",
    };
    int mismatches = 0;
    int comparisons = 0;
    for (const auto& args : invocations) {
        const auto reference = capture(args);
        // Exit 1 is a legitimate audit failure; anything else is an error.
        if (!WIFEXITED(reference.status) || WEXITSTATUS(reference.status) > 1 || reference.out.empty()) ++mismatches;
        for (const char* workers : {"", " --workers 1", " --workers 3", " --workers 8"}) {
            if (args.starts_with("validate") && *workers) continue;
            const auto again = capture(args + workers);
            ++comparisons;
            if (again.out != reference.out || again.status != reference.status) ++mismatches;
        }
    }
    const auto dir = std::filesystem::temp_directory_path() / "bellqma_acceptance";
    std::filesystem::create_directories(dir);
    for (const char* name : {"a.csv", "b.csv"}) {
        capture(fmt::format("run -c {}honest_planted.json --trials 3000 --dump-states --out {}", configs,
                            (dir / name).string()));
    }
    ++comparisons;
    if (slurp(dir / "a.csv").empty() || slurp(dir / "a.csv") != slurp(dir / "b.csv") ||
        slurp(dir / "a.csv.states.csv") != slurp(dir / "b.csv.states.csv")) {
        ++mismatches;
    }
    std::filesystem::remove_all(dir);
    return {mismatches == 0, fmt::format("{} comparisons over {} invocations and worker counts {{default, 1, 3, 8}}: "
                                         "{} mismatches",
                                         comparisons, invocations.size() + 1, mismatches)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "honest p0 exactness", 1, honest_p0_exactness},
        {2, "consistency completeness", 10, consistency_completeness},
        {3, "uniformity completeness bound", 10, uniformity_completeness_grid},
        {4, "oracle/Monte Carlo agreement", 120, oracle_monte_carlo_agreement},
        {5, "soundness case coverage", 300, soundness_case_coverage},
        {6, "Fourier inequality suite", 30, fourier_inequality_suite},
        {7, "collision lemma reproduction", 300, lemma3_reproduction},
        {8, "Chernoff audits", 10, chernoff_audits},
        {9, "determinism", 60, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, fmt::format("exception: {}", e.what())};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = seconds < c.budget_seconds;
        const bool pass = outcome.pass && in_budget;
        failed += !pass;
        fmt::print("criterion {} {} {}: {} [{:.2f} s, budget {} s{}]\n", c.number, pass ? "PASS" : "FAIL", c.title,
                   outcome.detail, seconds, c.budget_seconds, in_budget ? "" : ", over budget");
        std::fflush(stdout);
    }
    fmt::print("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
