#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bellqma/fraction.h"

namespace bellqma {

/// Dense K x K boolean constraint table. allows(a, b) is true iff color a on
/// the edge's first endpoint and color b on its second endpoint are compatible.
class Relation {
  public:
    Relation() = default;
    /// Throws std::invalid_argument unless table.size() == colors * colors.
    Relation(int colors, std::vector<std::uint8_t> table);

    static Relation not_equal(int colors);
    static Relation everything(int colors);

    int colors() const { return colors_; }
    bool allows(int a, int b) const { return table_[static_cast<std::size_t>(a * colors_ + b)] != 0; }
    Relation transposed() const;
    const std::vector<std::uint8_t>& table() const { return table_; }

    friend bool operator==(const Relation&, const Relation&) = default;

  private:
    int colors_ = 0;
    std::vector<std::uint8_t> table_;
};

struct Edge {
    int u = 0;
    int v = 0;
    Relation relation;
};

/// A 2-CSP instance: an undirected multigraph with self-loops and a relation
/// on every edge. Plain data; `validate` reports invariant violations.
struct ConstraintGraph {
    int n = 0;
    int K = 0;
    std::optional<int> degree;
    std::vector<Edge> edges;
};

using Coloring = std::vector<int>;

struct Diagnostic {
    std::string invariant;  // "vertex_count", "alphabet", "edge_endpoint", "relation_shape", "regularity", "edges_nonempty"
    std::optional<std::size_t> index;
    std::string message;
};

std::vector<Diagnostic> validate(const ConstraintGraph& graph);

/// Throws std::invalid_argument carrying the first diagnostic.
void require_valid(const ConstraintGraph& graph);
void require_coloring(const ConstraintGraph& graph, const Coloring& coloring);

/// Incidence count per vertex; a self-loop counts once.
std::vector<int> incidence_counts(const ConstraintGraph& graph);

/// Satisfied edges over |edges|, unreduced.
Fraction satisfied_fraction(const ConstraintGraph& graph, const Coloring& coloring);

struct GapCertificate {
    Fraction max_satisfied_fraction;
    Fraction eta;
    Coloring witness;
    bool exhaustive = false;
    std::uint64_t enumerated = 0;
};

inline constexpr std::uint64_t kDefaultGapBudget = 20'000'000;

/// Enumerates colorings in lexicographic order (vertex 0 most significant),
/// up to `budget` of them. Ties keep the lexicographically smallest witness.
GapCertificate certify_gap(const ConstraintGraph& graph, std::uint64_t budget = kDefaultGapBudget);

/// Adjacency lookup answering "does the measured pair (vi, ci), (vj, cj)
/// violate some edge between vi and vj", checking both orientations of every
/// stored edge (the relation for (u, v) and its transpose for (v, u)).
class EdgeIndex {
  public:
    explicit EdgeIndex(const ConstraintGraph& graph);

    bool violated(int vi, int ci, int vj, int cj) const;
    int vertex_count() const { return static_cast<int>(adjacency_.size()); }

  private:
    struct Incidence {
        int neighbor;
        int relation;
        bool transposed;
    };
    std::vector<std::vector<Incidence>> adjacency_;
    std::vector<Relation> relations_;
};

enum class GeneratorKind { planted_satisfiable, odd_cycle_neq, clique_neq, random_regular };

std::string_view to_string(GeneratorKind kind);
std::optional<GeneratorKind> parse_generator_kind(std::string_view name);

struct GeneratorParams {
    GeneratorKind kind = GeneratorKind::planted_satisfiable;
    int n = 0;
    int K = 2;
    int d = 0;
    double density = 0.5;
    std::uint64_t seed = 0;
};

struct GeneratedInstance {
    ConstraintGraph graph;
    std::optional<Coloring> planted;
};

/// Deterministic in params (including the seed). Throws std::invalid_argument
/// on parameters that do not fit the kind.
GeneratedInstance generate(const GeneratorParams& params);

}  // namespace bellqma
