#pragma once

#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bellqma/constraint_graph.h"
#include "bellqma/proof_state.h"
#include "bellqma/protocol_params.h"

namespace bellqma {

/// Every prover sends (1/sqrt(n)) sum_v |v>|tau(v)>.
struct HonestStrategy {
    Coloring coloring;
};

/// Every prover sends (1/sqrt|S|) sum_{v in S} |v>|tau(v)>; vertices outside S
/// carry zero marginal.
struct SkewedStrategy {
    std::vector<int> subset;
    Coloring coloring;
};

/// Every prover sends (1/sqrt(nK)) sum_v |v> sum_j exp(2 pi i j f / K)|j>, whose
/// color-register transform has no weight on 0.
struct PhaseAdversary {
    int frequency = 1;
};

/// Prover i answers honestly for colorings[assignment[i]].
struct InconsistentStrategy {
    std::vector<Coloring> colorings;
    std::vector<int> assignment;
};

/// Prover i sends the basis state |v_i>|c_i>.
struct ClassicalBasisStrategy {
    std::vector<std::pair<int, int>> assignments;
};

using ProverStrategy =
    std::variant<HonestStrategy, SkewedStrategy, PhaseAdversary, InconsistentStrategy, ClassicalBasisStrategy>;

ProverStrategy honest(Coloring coloring);
ProverStrategy skewed(std::vector<int> subset, Coloring coloring);
ProverStrategy phase_adversary(int frequency);
ProverStrategy inconsistent(std::vector<Coloring> colorings, std::vector<int> assignment);
ProverStrategy classical_basis(std::vector<std::pair<int, int>> assignments);

std::string_view kind_name(const ProverStrategy& strategy);

/// Contiguous blocks: the first ceil(P/m) provers get coloring 0, and so on.
std::vector<int> block_assignment(int num_provers, int num_colorings);

/// Exactly params.num_provers normalized states with the graph's (n, K).
/// Each state is built independently of the others. Throws
/// std::invalid_argument when the strategy's parameters do not fit.
std::vector<ProofState> materialize(const ProverStrategy& strategy, const ConstraintGraph& graph,
                                    const ProtocolParams& params);

}  // namespace bellqma
