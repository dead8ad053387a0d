#include "bellqma/verifier.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parallel.h"

namespace bellqma {

std::string_view to_string(TestKind test) {
    return test == TestKind::uniformity ? "uniformity" : "consistency";
}

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::none: return "none";
        case RejectReason::z_below_threshold: return "z_below_threshold";
        case RejectReason::vertex_fourier_nonzero: return "vertex_fourier_nonzero";
        case RejectReason::edge_violation: return "edge_violation";
        case RejectReason::vertex_color_mismatch: return "vertex_color_mismatch";
    }
    return "unknown";
}

std::string_view to_string(EstimateMethod method) {
    switch (method) {
        case EstimateMethod::exact: return "exact";
        case EstimateMethod::monte_carlo: return "monte_carlo";
        case EstimateMethod::brute_force_oracle: return "brute_force_oracle";
    }
    return "unknown";
}

PreparedProof prepare_proof(const ProofState& state) {
    PreparedProof out;
    const int n = state.n();
    const int K = state.K();
    const ProofState phi = fourier_color(state);

    std::vector<double> colors(static_cast<std::size_t>(K), 0.0);
    for (int v = 0; v < n; ++v) {
        for (int k = 0; k < K; ++k) colors[static_cast<std::size_t>(k)] += std::norm(phi.amplitude(v, k));
    }
    colors = flush_negligible(std::move(colors));
    out.p0 = colors[0];
    out.color_after_fourier = DiscreteSampler(colors);

    if (out.p0 > 0.0) {
        std::vector<Amplitude> gamma(static_cast<std::size_t>(n));
        const double scale = 1.0 / std::sqrt(out.p0);
        for (int v = 0; v < n; ++v) gamma[static_cast<std::size_t>(v)] = phi.amplitude(v, 0) * scale;
        dft_in_place(gamma);
        const auto vertex_probs = born_probabilities(gamma);
        out.q0 = vertex_probs[0];
        out.vertex_given_zero = DiscreteSampler(vertex_probs);
    }

    out.joint = born_probabilities(state.amplitudes());
    out.computational = DiscreteSampler(out.joint);
    return out;
}

ProofEnsemble::ProofEnsemble(std::span<const ProofState> states) {
    if (states.empty()) throw std::invalid_argument("no proofs supplied");
    n_ = states.front().n();
    K_ = states.front().K();
    std::vector<const ProofState*> distinct;
    slots_.reserve(states.size());
    for (const ProofState& s : states) {
        if (s.n() != n_ || s.K() != K_) throw std::invalid_argument("proofs have mismatched dimensions");
        std::size_t slot = distinct.size();
        for (std::size_t d = 0; d < distinct.size(); ++d) {
            if (*distinct[d] == s) {
                slot = d;
                break;
            }
        }
        if (slot == distinct.size()) {
            distinct.push_back(&s);
            prepared_.push_back(prepare_proof(s));
        }
        slots_.push_back(slot);
    }
}

namespace {

void check_uniformity_inputs(const ProofEnsemble& proofs, const ProtocolParams& params) {
    if (proofs.size() != params.num_provers) {
        throw std::invalid_argument("expected " + std::to_string(params.num_provers) + " proofs, got " +
                                    std::to_string(proofs.size()));
    }
    if (proofs.n() != params.n || proofs.K() != params.K) throw std::invalid_argument("proof dimensions do not match params");
}

}  // namespace

TrialResult uniformity_test(const ProofEnsemble& proofs, const ProtocolParams& params, const RandomStream& rng) {
    check_uniformity_inputs(proofs, params);
    const auto P = static_cast<std::size_t>(proofs.size());
    TrialResult result;
    result.test = TestKind::uniformity;
    result.records.resize(P);

    std::vector<RandomStream> streams;
    streams.reserve(P);
    std::vector<int> zeros;
    for (std::size_t i = 0; i < P; ++i) {
        streams.push_back(rng.substream(i));
        const auto& proof = proofs[static_cast<int>(i)];
        const int k = static_cast<int>(proof.color_after_fourier.sample(streams[i].uniform()));
        result.records[i].color = k;
        if (k == 0) zeros.push_back(static_cast<int>(i));
    }

    if (static_cast<int>(zeros.size()) < params.z_threshold) {
        result.reject_reason = RejectReason::z_below_threshold;
        return result;
    }

    bool all_zero = true;
    for (int i : zeros) {
        const auto idx = static_cast<std::size_t>(i);
        const int v = static_cast<int>(proofs[i].vertex_given_zero.sample(streams[idx].uniform()));
        result.records[idx].vertex = v;
        all_zero = all_zero && v == 0;
    }
    result.accepted = all_zero;
    result.reject_reason = all_zero ? RejectReason::none : RejectReason::vertex_fourier_nonzero;
    return result;
}

TrialResult uniformity_test(std::span<const ProofState> states, const ProtocolParams& params, const RandomStream& rng) {
    return uniformity_test(ProofEnsemble(states), params, rng);
}

TrialResult consistency_test(const ProofEnsemble& proofs, const EdgeIndex& edges, const RandomStream& rng) {
    if (proofs.n() != edges.vertex_count()) throw std::invalid_argument("proof dimensions do not match the graph");
    const auto P = static_cast<std::size_t>(proofs.size());
    const int K = proofs.K();
    TrialResult result;
    result.test = TestKind::consistency;
    result.records.resize(P);
    for (std::size_t i = 0; i < P; ++i) {
        RandomStream stream = rng.substream(i);
        const auto idx = static_cast<int>(proofs[static_cast<int>(i)].computational.sample(stream.uniform()));
        result.records[i] = {idx / K, idx % K};
    }

    for (std::size_t i = 0; i < P; ++i) {
        const ProverRecord& a = result.records[i];
        for (std::size_t j = i + 1; j < P; ++j) {
            const ProverRecord& b = result.records[j];
            RejectReason reason = RejectReason::none;
            if (edges.violated(a.vertex, a.color, b.vertex, b.color)) {
                reason = RejectReason::edge_violation;
            } else if (a.vertex == b.vertex && a.color != b.color) {
                reason = RejectReason::vertex_color_mismatch;
            }
            if (reason != RejectReason::none) {
                result.reject_reason = reason;
                result.violating_pair = {static_cast<int>(i), static_cast<int>(j)};
                return result;
            }
        }
    }
    result.accepted = true;
    return result;
}

TrialResult consistency_test(std::span<const ProofState> states, const ConstraintGraph& graph, const RandomStream& rng) {
    if (!states.empty() && (states.front().n() != graph.n || states.front().K() != graph.K)) {
        throw std::invalid_argument("proof dimensions do not match the graph");
    }
    return consistency_test(ProofEnsemble(states), EdgeIndex(graph), rng);
}

TrialResult run_trial(const ProofEnsemble& proofs, const EdgeIndex& edges, const ProtocolParams& params, RandomStream rng,
                      std::optional<TestKind> force) {
    const bool heads = rng.coin();
    const TestKind test = force.value_or(heads ? TestKind::uniformity : TestKind::consistency);
    if (test == TestKind::uniformity) return uniformity_test(proofs, params, rng);
    if (proofs.size() != params.num_provers) {
        throw std::invalid_argument("expected " + std::to_string(params.num_provers) + " proofs, got " +
                                    std::to_string(proofs.size()));
    }
    return consistency_test(proofs, edges, rng);
}

TrialResult run_trial(std::span<const ProofState> states, const ConstraintGraph& graph, const ProtocolParams& params,
                      RandomStream rng, std::optional<TestKind> force) {
    return run_trial(ProofEnsemble(states), EdgeIndex(graph), params, rng, force);
}

double normal_ci_halfwidth(double p, std::uint64_t trials) {
    if (trials == 0) return 0.0;
    return 1.96 * std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
}

AcceptanceEstimate exact_uniformity_acceptance(const ProofEnsemble& proofs, const ProtocolParams& params) {
    check_uniformity_inputs(proofs, params);
    const auto P = static_cast<std::size_t>(proofs.size());
    // dp[c]: probability that c provers so far landed in Z and all passed Step 2.
    std::vector<double> dp(P + 1, 0.0);
    dp[0] = 1.0;
    for (std::size_t i = 0; i < P; ++i) {
        const auto& proof = proofs[static_cast<int>(i)];
        const double miss = 1.0 - proof.p0;
        const double pass = proof.p0 * proof.q0;
        for (std::size_t c = i + 1; c > 0; --c) dp[c] = dp[c] * miss + dp[c - 1] * pass;
        dp[0] *= miss;
    }
    AcceptanceEstimate out;
    out.method = EstimateMethod::exact;
    for (std::size_t c = static_cast<std::size_t>(std::max(params.z_threshold, 0)); c <= P; ++c) out.value += dp[c];
    out.value = std::clamp(out.value, 0.0, 1.0);
    return out;
}

AcceptanceEstimate exact_uniformity_acceptance(std::span<const ProofState> states, const ProtocolParams& params) {
    return exact_uniformity_acceptance(ProofEnsemble(states), params);
}

AcceptanceEstimate brute_force_consistency_acceptance(std::span<const ProofState> states, const ConstraintGraph& graph,
                                                      std::uint64_t budget) {
    const EdgeIndex edges(graph);
    if (states.empty()) throw std::invalid_argument("no proofs supplied");
    const auto P = states.size();
    const auto outcomes_per = static_cast<std::uint64_t>(graph.n) * static_cast<std::uint64_t>(graph.K);
    std::uint64_t space = 1;
    for (std::size_t i = 0; i < P; ++i) {
        if (space > budget / outcomes_per) {
            throw std::length_error("joint outcome space (nK)^P exceeds the enumeration budget");
        }
        space *= outcomes_per;
    }

    struct Outcome {
        int vertex;
        int color;
        double probability;
    };
    std::vector<std::vector<Outcome>> support(P);
    for (std::size_t i = 0; i < P; ++i) {
        if (states[i].n() != graph.n || states[i].K() != graph.K) {
            throw std::invalid_argument("proof dimensions do not match the graph");
        }
        const auto probs = born_probabilities(states[i].amplitudes());
        for (std::size_t idx = 0; idx < probs.size(); ++idx) {
            if (probs[idx] > 0.0) {
                support[i].push_back({static_cast<int>(idx) / graph.K, static_cast<int>(idx) % graph.K, probs[idx]});
            }
        }
    }

    std::vector<const Outcome*> chosen(P, nullptr);
    double rejected = 0.0;
    auto descend = [&](auto&& self, std::size_t depth, double prefix) -> void {
        if (depth == P) return;
        for (const Outcome& o : support[depth]) {
            const double mass = prefix * o.probability;
            bool violates = false;
            for (std::size_t prev = 0; prev < depth && !violates; ++prev) {
                const Outcome& a = *chosen[prev];
                violates = edges.violated(a.vertex, a.color, o.vertex, o.color) ||
                           (a.vertex == o.vertex && a.color != o.color);
            }
            if (violates) {
                rejected += mass;
                continue;
            }
            chosen[depth] = &o;
            self(self, depth + 1, mass);
        }
    };
    descend(descend, 0, 1.0);

    AcceptanceEstimate out;
    out.method = EstimateMethod::brute_force_oracle;
    out.value = std::clamp(1.0 - rejected, 0.0, 1.0);
    return out;
}

EstimateResult estimate_acceptance(const ProofEnsemble& proofs, const EdgeIndex& edges, const ProtocolParams& params,
                                   const MonteCarloOptions& options) {
    if (options.trials < 1) throw std::invalid_argument("trials must be at least 1");
    check_uniformity_inputs(proofs, params);
    const RandomStream master(options.seed);

    const auto partial = detail::parallel_chunks<EstimateResult>(
        options.trials, options.workers, [&](std::uint64_t begin, std::uint64_t end, EstimateResult& acc) {
            for (std::uint64_t t = begin; t < end; ++t) {
                const TrialResult r = run_trial(proofs, edges, params, master.substream(t), options.only);
                ++acc.reasons[static_cast<std::size_t>(r.reject_reason)];
                acc.uniformity_trials += r.test == TestKind::uniformity;
                acc.accepted += r.accepted;
            }
        });

    EstimateResult total;
    for (const auto& p : partial) {
        for (std::size_t r = 0; r < total.reasons.size(); ++r) total.reasons[r] += p.reasons[r];
        total.uniformity_trials += p.uniformity_trials;
        total.accepted += p.accepted;
    }
    total.estimate.method = EstimateMethod::monte_carlo;
    total.estimate.trials = options.trials;
    total.estimate.seed = options.seed;
    total.estimate.value = static_cast<double>(total.accepted) / static_cast<double>(options.trials);
    total.estimate.ci_halfwidth = normal_ci_halfwidth(total.estimate.value, options.trials);
    return total;
}

EstimateResult estimate_acceptance(const ProverStrategy& strategy, const ConstraintGraph& graph,
                                   const ProtocolParams& params, const MonteCarloOptions& options) {
    const auto states = materialize(strategy, graph, params);
    return estimate_acceptance(ProofEnsemble(states), EdgeIndex(graph), params, options);
}

}  // namespace bellqma
