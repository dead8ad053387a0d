#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "bellqma/constraint_graph.h"
#include "bellqma/proof_state.h"
#include "bellqma/protocol_params.h"
#include "bellqma/provers.h"
#include "bellqma/random_stream.h"

namespace bellqma {

enum class TestKind { uniformity, consistency };

enum class RejectReason { none, z_below_threshold, vertex_fourier_nonzero, edge_violation, vertex_color_mismatch };

inline constexpr std::array<RejectReason, 5> kRejectReasons = {
    RejectReason::none, RejectReason::z_below_threshold, RejectReason::vertex_fourier_nonzero,
    RejectReason::edge_violation, RejectReason::vertex_color_mismatch};

std::string_view to_string(TestKind test);
std::string_view to_string(RejectReason reason);

/// One prover's measurement transcript.
///   uniformity:  color = Step 1 outcome after F_K; vertex = Step 2 outcome after F_n, or -1 if not measured.
///   consistency: (vertex, color) from the computational-basis measurement.
struct ProverRecord {
    int vertex = -1;
    int color = -1;

    friend bool operator==(const ProverRecord&, const ProverRecord&) = default;
};

struct TrialResult {
    TestKind test = TestKind::uniformity;
    bool accepted = false;
    RejectReason reject_reason = RejectReason::none;
    std::vector<ProverRecord> records;
    std::optional<std::pair<int, int>> violating_pair;
};

/// Born distributions of the measurements the verifier can make on one proof.
/// Both tests sample from these tables with one uniform draw per measurement,
/// the same inverse-CDF rule `measure` uses.
struct PreparedProof {
    DiscreteSampler color_after_fourier;      // K outcomes of Step 1
    DiscreteSampler vertex_given_zero;        // n outcomes of Step 2; empty when p0 = 0
    DiscreteSampler computational;            // n*K outcomes of the Consistency Test
    double p0 = 0.0;                          // P[Step 1 reads 0]
    double q0 = 0.0;                          // P[Step 2 reads 0 | Step 1 read 0]
    std::vector<double> joint;                // computational-basis probabilities
};

/// Precomputed measurement tables for a list of proofs. Identical states share
/// one table.
class ProofEnsemble {
  public:
    explicit ProofEnsemble(std::span<const ProofState> states);

    int size() const { return static_cast<int>(slots_.size()); }
    int n() const { return n_; }
    int K() const { return K_; }
    const PreparedProof& operator[](int prover) const { return prepared_[slots_[static_cast<std::size_t>(prover)]]; }

  private:
    int n_ = 0;
    int K_ = 0;
    std::vector<PreparedProof> prepared_;
    std::vector<std::size_t> slots_;
};

PreparedProof prepare_proof(const ProofState& state);

/// Prover i measures from rng.substream(i); the fair coin comes from rng itself.
TrialResult uniformity_test(const ProofEnsemble& proofs, const ProtocolParams& params, const RandomStream& rng);
TrialResult uniformity_test(std::span<const ProofState> states, const ProtocolParams& params, const RandomStream& rng);

TrialResult consistency_test(const ProofEnsemble& proofs, const EdgeIndex& edges, const RandomStream& rng);
TrialResult consistency_test(std::span<const ProofState> states, const ConstraintGraph& graph, const RandomStream& rng);

/// Draws the coin (heads = uniformity) from rng, then dispatches. `force`
/// overrides the coin's outcome; the draw is still consumed.
TrialResult run_trial(const ProofEnsemble& proofs, const EdgeIndex& edges, const ProtocolParams& params, RandomStream rng,
                      std::optional<TestKind> force = std::nullopt);
TrialResult run_trial(std::span<const ProofState> states, const ConstraintGraph& graph, const ProtocolParams& params,
                      RandomStream rng, std::optional<TestKind> force = std::nullopt);

enum class EstimateMethod { exact, monte_carlo, brute_force_oracle };
std::string_view to_string(EstimateMethod method);

struct AcceptanceEstimate {
    double value = 0.0;
    EstimateMethod method = EstimateMethod::exact;
    std::uint64_t trials = 0;
    double ci_halfwidth = 0.0;
    std::uint64_t seed = 0;
};

/// 1.96 sqrt(p (1 - p) / trials).
double normal_ci_halfwidth(double p, std::uint64_t trials);

/// Exact Uniformity Test acceptance by dynamic programming over provers,
/// tracking how many landed in Z; an in-Z prover whose Step 2 outcome is
/// nonzero absorbs to rejection.
AcceptanceEstimate exact_uniformity_acceptance(const ProofEnsemble& proofs, const ProtocolParams& params);
AcceptanceEstimate exact_uniformity_acceptance(std::span<const ProofState> states, const ProtocolParams& params);

inline constexpr std::uint64_t kDefaultBruteForceBudget = 1ULL << 24;

/// Exact Consistency Test acceptance by enumerating joint outcomes (pruning
/// zero-probability branches and prefixes that already reject). Throws
/// std::length_error when (n*K)^provers exceeds the budget.
AcceptanceEstimate brute_force_consistency_acceptance(std::span<const ProofState> states, const ConstraintGraph& graph,
                                                      std::uint64_t budget = kDefaultBruteForceBudget);

struct MonteCarloOptions {
    std::uint64_t trials = 10'000;
    std::uint64_t seed = 0;
    unsigned workers = 1;  // 0 = hardware concurrency
    std::optional<TestKind> only;  // run a single branch instead of the coin
};

struct EstimateResult {
    AcceptanceEstimate estimate;
    std::array<std::uint64_t, kRejectReasons.size()> reasons{};  // indexed by RejectReason
    std::uint64_t uniformity_trials = 0;
    std::uint64_t accepted = 0;

    std::uint64_t count(RejectReason reason) const { return reasons[static_cast<std::size_t>(reason)]; }
};

/// Trial t runs with RandomStream(seed).substream(t). Deterministic in
/// (proofs, graph, params, options.trials, options.seed) for any worker count.
EstimateResult estimate_acceptance(const ProofEnsemble& proofs, const EdgeIndex& edges, const ProtocolParams& params,
                                   const MonteCarloOptions& options);
EstimateResult estimate_acceptance(const ProverStrategy& strategy, const ConstraintGraph& graph,
                                   const ProtocolParams& params, const MonteCarloOptions& options);

}  // namespace bellqma
