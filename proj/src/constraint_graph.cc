#include "bellqma/constraint_graph.h"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "bellqma/random_stream.h"

namespace bellqma {

Relation::Relation(int colors, std::vector<std::uint8_t> table) : colors_(colors), table_(std::move(table)) {
    if (colors < 1) throw std::invalid_argument("relation needs at least one color");
    if (table_.size() != static_cast<std::size_t>(colors) * static_cast<std::size_t>(colors)) {
        throw std::invalid_argument("relation table must have " + std::to_string(colors * colors) + " entries, got " +
                                    std::to_string(table_.size()));
    }
    for (auto& entry : table_) entry = entry != 0;
}

Relation Relation::not_equal(int colors) {
    std::vector<std::uint8_t> table(static_cast<std::size_t>(colors * colors), 1);
    for (int c = 0; c < colors; ++c) table[static_cast<std::size_t>(c * colors + c)] = 0;
    return Relation(colors, std::move(table));
}

Relation Relation::everything(int colors) {
    return Relation(colors, std::vector<std::uint8_t>(static_cast<std::size_t>(colors * colors), 1));
}

Relation Relation::transposed() const {
    std::vector<std::uint8_t> out(table_.size());
    for (int a = 0; a < colors_; ++a) {
        for (int b = 0; b < colors_; ++b) out[static_cast<std::size_t>(b * colors_ + a)] = allows(a, b);
    }
    return Relation(colors_, std::move(out));
}

std::vector<int> incidence_counts(const ConstraintGraph& graph) {
    std::vector<int> counts(static_cast<std::size_t>(std::max(graph.n, 0)), 0);
    for (const Edge& e : graph.edges) {
        if (e.u >= 0 && e.u < graph.n) ++counts[static_cast<std::size_t>(e.u)];
        if (e.v != e.u && e.v >= 0 && e.v < graph.n) ++counts[static_cast<std::size_t>(e.v)];
    }
    return counts;
}

std::vector<Diagnostic> validate(const ConstraintGraph& graph) {
    std::vector<Diagnostic> out;
    if (graph.n < 1) out.push_back({"vertex_count", std::nullopt, "n must be positive, got " + std::to_string(graph.n)});
    if (graph.K < 1) out.push_back({"alphabet", std::nullopt, "K must be positive, got " + std::to_string(graph.K)});
    if (graph.edges.empty()) out.push_back({"edges_nonempty", std::nullopt, "edge list is empty"});

    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const Edge& e = graph.edges[i];
        if (e.u < 0 || e.u >= graph.n || e.v < 0 || e.v >= graph.n) {
            out.push_back({"edge_endpoint", i,
                           "edge " + std::to_string(i) + " endpoint (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                               ") outside [0, " + std::to_string(graph.n) + ")"});
        }
        if (e.relation.colors() != graph.K) {
            out.push_back({"relation_shape", i,
                           "edge " + std::to_string(i) + " relation is " + std::to_string(e.relation.colors()) + "x" +
                               std::to_string(e.relation.colors()) + ", expected " + std::to_string(graph.K) + "x" +
                               std::to_string(graph.K)});
        }
    }

    if (graph.degree) {
        const auto counts = incidence_counts(graph);
        for (std::size_t v = 0; v < counts.size(); ++v) {
            if (counts[v] != *graph.degree) {
                out.push_back({"regularity", v,
                               "vertex " + std::to_string(v) + " has " + std::to_string(counts[v]) +
                                   " incidences, declared d = " + std::to_string(*graph.degree)});
            }
        }
    }
    return out;
}

void require_valid(const ConstraintGraph& graph) {
    const auto diagnostics = validate(graph);
    if (!diagnostics.empty()) throw std::invalid_argument("invalid constraint graph: " + diagnostics.front().message);
}

void require_coloring(const ConstraintGraph& graph, const Coloring& coloring) {
    if (coloring.size() != static_cast<std::size_t>(graph.n)) {
        throw std::invalid_argument("coloring has length " + std::to_string(coloring.size()) + ", graph has n = " +
                                    std::to_string(graph.n));
    }
    for (std::size_t v = 0; v < coloring.size(); ++v) {
        if (coloring[v] < 0 || coloring[v] >= graph.K) {
            throw std::invalid_argument("coloring assigns " + std::to_string(coloring[v]) + " to vertex " +
                                        std::to_string(v) + ", outside [0, " + std::to_string(graph.K) + ")");
        }
    }
}

namespace {

bool edge_satisfied(const Edge& e, const Coloring& coloring) {
    return e.relation.allows(coloring[static_cast<std::size_t>(e.u)], coloring[static_cast<std::size_t>(e.v)]);
}

}  // namespace

Fraction satisfied_fraction(const ConstraintGraph& graph, const Coloring& coloring) {
    require_valid(graph);
    require_coloring(graph, coloring);
    std::int64_t satisfied = 0;
    for (const Edge& e : graph.edges) satisfied += edge_satisfied(e, coloring);
    return {satisfied, static_cast<std::int64_t>(graph.edges.size())};
}

GapCertificate certify_gap(const ConstraintGraph& graph, std::uint64_t budget) {
    require_valid(graph);
    const auto n = static_cast<std::size_t>(graph.n);
    const auto total_edges = static_cast<std::int64_t>(graph.edges.size());

    // K^n, saturating.
    std::uint64_t space = 1;
    bool overflow = false;
    for (std::size_t v = 0; v < n && !overflow; ++v) {
        if (space > UINT64_MAX / static_cast<std::uint64_t>(graph.K)) {
            overflow = true;
        } else {
            space *= static_cast<std::uint64_t>(graph.K);
        }
    }
    const bool exhaustive = !overflow && space <= budget;
    const std::uint64_t limit = exhaustive ? space : std::max<std::uint64_t>(budget, 1);

    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const Edge& e = graph.edges[i];
        incident[static_cast<std::size_t>(e.u)].push_back(i);
        if (e.v != e.u) incident[static_cast<std::size_t>(e.v)].push_back(i);
    }

    Coloring current(n, 0);
    std::vector<std::uint8_t> sat(graph.edges.size());
    std::int64_t satisfied = 0;
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        sat[i] = edge_satisfied(graph.edges[i], current);
        satisfied += sat[i];
    }

    GapCertificate cert;
    cert.witness = current;
    std::int64_t best = satisfied;
    std::uint64_t enumerated = 1;

    while (enumerated < limit) {
        // Odometer step: the last vertex is least significant.
        std::size_t pos = n;
        while (pos > 0) {
            --pos;
            if (++current[pos] < graph.K) break;
            current[pos] = 0;
        }
        for (std::size_t v = pos; v < n; ++v) {
            for (std::size_t i : incident[v]) {
                const auto now = static_cast<std::uint8_t>(edge_satisfied(graph.edges[i], current));
                satisfied += static_cast<std::int64_t>(now) - static_cast<std::int64_t>(sat[i]);
                sat[i] = now;
            }
        }
        ++enumerated;
        if (satisfied > best) {
            best = satisfied;
            cert.witness = current;
        }
    }

    cert.max_satisfied_fraction = {best, total_edges};
    cert.eta = cert.max_satisfied_fraction.complement();
    cert.exhaustive = exhaustive;
    cert.enumerated = enumerated;
    return cert;
}

EdgeIndex::EdgeIndex(const ConstraintGraph& graph) : adjacency_(static_cast<std::size_t>(graph.n)) {
    require_valid(graph);
    relations_.reserve(graph.edges.size());
    for (const Edge& e : graph.edges) {
        const int r = static_cast<int>(relations_.size());
        relations_.push_back(e.relation);
        adjacency_[static_cast<std::size_t>(e.u)].push_back({e.v, r, false});
        adjacency_[static_cast<std::size_t>(e.v)].push_back({e.u, r, true});
    }
}

bool EdgeIndex::violated(int vi, int ci, int vj, int cj) const {
    for (const Incidence& inc : adjacency_[static_cast<std::size_t>(vi)]) {
        if (inc.neighbor != vj) continue;
        const Relation& r = relations_[static_cast<std::size_t>(inc.relation)];
        if (!(inc.transposed ? r.allows(cj, ci) : r.allows(ci, cj))) return true;
    }
    return false;
}

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::planted_satisfiable: return "planted_satisfiable";
        case GeneratorKind::odd_cycle_neq: return "odd_cycle_neq";
        case GeneratorKind::clique_neq: return "clique_neq";
        case GeneratorKind::random_regular: return "random_regular";
    }
    return "unknown";
}

std::optional<GeneratorKind> parse_generator_kind(std::string_view name) {
    for (auto kind : {GeneratorKind::planted_satisfiable, GeneratorKind::odd_cycle_neq, GeneratorKind::clique_neq,
                      GeneratorKind::random_regular}) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

namespace {

std::vector<int> random_permutation(int n, RandomStream& rng) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
    }
    return perm;
}

// d-regular multigraph: floor(d/2) random Hamiltonian cycles, plus a random
// perfect matching when d is odd (the leftover vertex of an odd n gets a
// self-loop, which counts once).
std::vector<std::pair<int, int>> regular_skeleton(int n, int d, RandomStream& rng) {
    if (d < 1) throw std::invalid_argument("degree d must be at least 1");
    if (d >= 2 && n < 2) throw std::invalid_argument("degree d >= 2 needs n >= 2");
    std::vector<std::pair<int, int>> pairs;
    for (int layer = 0; layer < d / 2; ++layer) {
        const auto perm = random_permutation(n, rng);
        for (int k = 0; k < n; ++k) {
            pairs.emplace_back(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>((k + 1) % n)]);
        }
    }
    if (d % 2 == 1) {
        const auto perm = random_permutation(n, rng);
        int k = 0;
        for (; k + 1 < n; k += 2) pairs.emplace_back(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(k + 1)]);
        if (k < n) pairs.emplace_back(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(k)]);
    }
    return pairs;
}

Relation random_relation(int K, double density, RandomStream& rng) {
    std::vector<std::uint8_t> table(static_cast<std::size_t>(K * K));
    for (auto& entry : table) entry = rng.uniform() < density;
    return Relation(K, std::move(table));
}

}  // namespace

GeneratedInstance generate(const GeneratorParams& params) {
    RandomStream rng(params.seed);
    GeneratedInstance out;
    ConstraintGraph& g = out.graph;
    g.n = params.n;

    switch (params.kind) {
        case GeneratorKind::planted_satisfiable:
        case GeneratorKind::random_regular: {
            if (params.n < 1) throw std::invalid_argument("n must be positive");
            if (params.K < 1) throw std::invalid_argument("K must be positive");
            if (!(params.density >= 0.0 && params.density <= 1.0)) throw std::invalid_argument("density must lie in [0, 1]");
            g.K = params.K;
            g.degree = params.d;
            const auto skeleton = regular_skeleton(params.n, params.d, rng);
            if (params.kind == GeneratorKind::planted_satisfiable) {
                Coloring tau(static_cast<std::size_t>(params.n));
                for (auto& c : tau) c = static_cast<int>(rng.below(static_cast<std::uint64_t>(params.K)));
                for (auto [u, v] : skeleton) {
                    Relation r = random_relation(params.K, params.density, rng);
                    auto table = r.table();
                    table[static_cast<std::size_t>(tau[static_cast<std::size_t>(u)] * params.K +
                                                   tau[static_cast<std::size_t>(v)])] = 1;
                    g.edges.push_back({u, v, Relation(params.K, std::move(table))});
                }
                out.planted = std::move(tau);
            } else {
                for (auto [u, v] : skeleton) g.edges.push_back({u, v, random_relation(params.K, params.density, rng)});
            }
            break;
        }
        case GeneratorKind::odd_cycle_neq: {
            if (params.n < 3 || params.n % 2 == 0) throw std::invalid_argument("odd_cycle_neq needs odd n >= 3");
            if (params.K != 2) throw std::invalid_argument("odd_cycle_neq is defined for K = 2");
            g.K = 2;
            g.degree = 2;
            for (int v = 0; v < params.n; ++v) g.edges.push_back({v, (v + 1) % params.n, Relation::not_equal(2)});
            break;
        }
        case GeneratorKind::clique_neq: {
            if (params.n < 2) throw std::invalid_argument("clique_neq needs n >= 2");
            if (params.K < 1 || params.K >= params.n) throw std::invalid_argument("clique_neq needs 1 <= K < n");
            g.K = params.K;
            g.degree = params.n - 1;
            for (int u = 0; u < params.n; ++u) {
                for (int v = u + 1; v < params.n; ++v) g.edges.push_back({u, v, Relation::not_equal(params.K)});
            }
            break;
        }
    }
    return out;
}

}  // namespace bellqma
