#include "bellqma/provers.h"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace bellqma {

ProverStrategy honest(Coloring coloring) { return HonestStrategy{std::move(coloring)}; }

ProverStrategy skewed(std::vector<int> subset, Coloring coloring) {
    if (subset.empty()) throw std::invalid_argument("skewed strategy needs a nonempty vertex subset");
    return SkewedStrategy{std::move(subset), std::move(coloring)};
}

ProverStrategy phase_adversary(int frequency) { return PhaseAdversary{frequency}; }

ProverStrategy inconsistent(std::vector<Coloring> colorings, std::vector<int> assignment) {
    return InconsistentStrategy{std::move(colorings), std::move(assignment)};
}

ProverStrategy classical_basis(std::vector<std::pair<int, int>> assignments) {
    return ClassicalBasisStrategy{std::move(assignments)};
}

std::string_view kind_name(const ProverStrategy& strategy) {
    struct Visitor {
        std::string_view operator()(const HonestStrategy&) const { return "honest"; }
        std::string_view operator()(const SkewedStrategy&) const { return "skewed"; }
        std::string_view operator()(const PhaseAdversary&) const { return "phase_adversary"; }
        std::string_view operator()(const InconsistentStrategy&) const { return "inconsistent"; }
        std::string_view operator()(const ClassicalBasisStrategy&) const { return "classical_basis"; }
    };
    return std::visit(Visitor{}, strategy);
}

std::vector<int> block_assignment(int num_provers, int num_colorings) {
    if (num_provers < 1 || num_colorings < 1) throw std::invalid_argument("block_assignment needs positive sizes");
    const int block = (num_provers + num_colorings - 1) / num_colorings;
    std::vector<int> out(static_cast<std::size_t>(num_provers));
    for (int i = 0; i < num_provers; ++i) out[static_cast<std::size_t>(i)] = i / block;
    return out;
}

namespace {

ProofState skewed_state(const ConstraintGraph& graph, const SkewedStrategy& s) {
    require_coloring(graph, s.coloring);
    const std::set<int> members(s.subset.begin(), s.subset.end());
    if (members.empty()) throw std::invalid_argument("skewed strategy needs a nonempty vertex subset");
    if (*members.begin() < 0 || *members.rbegin() >= graph.n) throw std::invalid_argument("skewed subset vertex out of range");
    std::vector<Amplitude> amps(static_cast<std::size_t>(graph.n * graph.K));
    const double weight = 1.0 / std::sqrt(static_cast<double>(members.size()));
    for (int v : members) amps[static_cast<std::size_t>(v * graph.K + s.coloring[static_cast<std::size_t>(v)])] = weight;
    return ProofState(graph.n, graph.K, std::move(amps));
}

ProofState phase_state(const ConstraintGraph& graph, const PhaseAdversary& s) {
    if (graph.K < 2) throw std::invalid_argument("phase adversary needs K >= 2");
    if (s.frequency < 1 || s.frequency >= graph.K) {
        throw std::invalid_argument("phase frequency must lie in [1, " + std::to_string(graph.K) + ")");
    }
    std::vector<Amplitude> amps(static_cast<std::size_t>(graph.n * graph.K));
    const double weight = 1.0 / std::sqrt(static_cast<double>(graph.n) * graph.K);
    for (int v = 0; v < graph.n; ++v) {
        for (int j = 0; j < graph.K; ++j) {
            const int phase = (j * s.frequency) % graph.K;
            amps[static_cast<std::size_t>(v * graph.K + j)] =
                std::polar(weight, 2.0 * std::numbers::pi * phase / graph.K);
        }
    }
    return ProofState(graph.n, graph.K, std::move(amps));
}

}  // namespace

std::vector<ProofState> materialize(const ProverStrategy& strategy, const ConstraintGraph& graph,
                                    const ProtocolParams& params) {
    require_valid(graph);
    if (params.n != graph.n || params.K != graph.K) throw std::invalid_argument("protocol params do not match the graph");
    const auto P = static_cast<std::size_t>(params.num_provers);

    struct Visitor {
        const ConstraintGraph& graph;
        std::size_t P;

        std::vector<ProofState> operator()(const HonestStrategy& s) const {
            return std::vector<ProofState>(P, honest_state(graph, s.coloring));
        }
        std::vector<ProofState> operator()(const SkewedStrategy& s) const {
            return std::vector<ProofState>(P, skewed_state(graph, s));
        }
        std::vector<ProofState> operator()(const PhaseAdversary& s) const {
            return std::vector<ProofState>(P, phase_state(graph, s));
        }
        std::vector<ProofState> operator()(const InconsistentStrategy& s) const {
            if (s.colorings.empty()) throw std::invalid_argument("inconsistent strategy needs at least one coloring");
            if (s.assignment.size() != P) {
                throw std::invalid_argument("assignment covers " + std::to_string(s.assignment.size()) + " provers, need " +
                                            std::to_string(P));
            }
            std::vector<ProofState> per_coloring;
            for (const Coloring& c : s.colorings) per_coloring.push_back(honest_state(graph, c));
            std::vector<ProofState> out;
            out.reserve(P);
            for (int index : s.assignment) {
                if (index < 0 || static_cast<std::size_t>(index) >= per_coloring.size()) {
                    throw std::invalid_argument("assignment index " + std::to_string(index) + " out of range");
                }
                out.push_back(per_coloring[static_cast<std::size_t>(index)]);
            }
            return out;
        }
        std::vector<ProofState> operator()(const ClassicalBasisStrategy& s) const {
            if (s.assignments.size() != P) {
                throw std::invalid_argument("classical_basis lists " + std::to_string(s.assignments.size()) +
                                            " provers, need " + std::to_string(P));
            }
            std::vector<ProofState> out;
            out.reserve(P);
            for (auto [v, c] : s.assignments) out.push_back(ProofState::basis(graph.n, graph.K, v, c));
            return out;
        }
    };
    return std::visit(Visitor{graph, P}, strategy);
}

}  // namespace bellqma
