#include "bellqma/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "bellqma/binomial.h"
#include "bellqma/random_stream.h"
#include "parallel.h"

namespace bellqma {

double default_epsilon(const Fraction& eta) { return eta.to_double() / 21.0; }

std::string_view to_string(SoundnessCase c) {
    switch (c) {
        case SoundnessCase::low_z_prime: return "low_z_prime";
        case SoundnessCase::large_r_set: return "large_r_set";
        case SoundnessCase::main_case: return "main_case";
    }
    return "unknown";
}

FourierDistance fourier_distance(const ProofState& state) {
    const ConditionedVertexState cond = conditional_vertex_state(state);
    const double n = static_cast<double>(state.n());
    FourierDistance out;

    const double psi = 1.0 / std::sqrt(n);
    for (const Amplitude& g : cond.gamma) out.via_direct += std::norm(g - psi);

    std::vector<Amplitude> transformed = cond.gamma;
    dft_in_place(transformed);
    for (std::size_t k = 0; k < transformed.size(); ++k) {
        out.via_transform += std::norm(transformed[k] - (k == 0 ? Amplitude(1.0) : Amplitude(0.0)));
    }
    out.zero_amplitude = std::abs(transformed[0]);
    return out;
}

SoundnessReport soundness_report(std::span<const ProofState> states, const ConstraintGraph& graph,
                                 const ProtocolParams& params, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    const int n = params.n;
    const int K = params.K;
    if (graph.n != n || graph.K != K) throw std::invalid_argument("protocol params do not match the graph");

    SoundnessReport report;
    report.epsilon = epsilon;
    const double z_prime_cut = 1.0 / (4.0 * K);
    const double r_set_cut = 1.0 / (8.0 * K * n);

    for (std::size_t i = 0; i < states.size(); ++i) {
        const ProofState& s = states[i];
        if (s.n() != n || s.K() != K) throw std::invalid_argument("proof dimensions do not match params");
        const double p0 = prob_color_zero(s);
        const auto alpha2 = vertex_marginals(s);
        report.p0.push_back(p0);
        const bool in_z_prime = p0 >= z_prime_cut;
        if (in_z_prime) report.z_prime.push_back(static_cast<int>(i));
        report.r_set_size.push_back(
            static_cast<int>(std::count_if(alpha2.begin(), alpha2.end(), [&](double a) { return a < r_set_cut; })));

        bool alpha_ok = true;
        bool bound_ok = true;
        std::optional<double> distance;
        if (p0 > 0.0) {
            const auto cond = conditional_vertex_state(s);
            for (int v = 0; v < n; ++v) {
                const double g2 = std::norm(cond.gamma[static_cast<std::size_t>(v)]);
                const double a2 = alpha2[static_cast<std::size_t>(v)];
                alpha_ok = alpha_ok && cond.p0 * g2 <= a2 + kInequalityTolerance;
                if (in_z_prime) bound_ok = bound_ok && g2 <= 4.0 * K * a2 + kInequalityTolerance;
            }
            if (in_z_prime) distance = fourier_distance(s).via_transform;
        }
        report.gamma_alpha_ok.push_back(alpha_ok);
        report.gamma_bound_ok.push_back(bound_ok);
        report.fourier_distance.push_back(distance);
    }

    if (static_cast<double>(report.z_prime.size()) <= params.mu / 2.0) {
        report.case_label = SoundnessCase::low_z_prime;
    } else if (std::any_of(report.z_prime.begin(), report.z_prime.end(), [&](int i) {
                   return report.r_set_size[static_cast<std::size_t>(i)] >= epsilon * n;
               })) {
        report.case_label = SoundnessCase::large_r_set;
    } else {
        report.case_label = SoundnessCase::main_case;
    }
    return report;
}

ZDoublePrimeReport z_double_prime_simulation(std::span<const ProofState> states, const ProtocolParams& params,
                                             double epsilon, std::uint64_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    const int n = params.n;
    const int K = params.K;
    ZDoublePrimeReport report;
    report.trials = trials;
    report.size_threshold = params.C * std::sqrt(static_cast<double>(n)) / (32.0 * K * K);

    for (const ProofState& s : states) {
        double prob = 0.0;
        if (prob_color_zero(s) >= 1.0 / (4.0 * K)) {
            const auto alpha2 = vertex_marginals(s);
            const double cut = 1.0 / (8.0 * K * n);
            const auto r = std::count_if(alpha2.begin(), alpha2.end(), [&](double a) { return a < cut; });
            if (static_cast<double>(r) < epsilon * n) prob = (1.0 - static_cast<double>(r) / n) / (8.0 * K);
        }
        report.inclusion_probability.push_back(prob);
        report.expected_mean += prob;
    }

    const RandomStream master(seed);
    report.histogram.assign(states.size() + 1, 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
        RandomStream rng = master.substream(t);
        std::size_t size = 0;
        for (double prob : report.inclusion_probability) size += rng.uniform() < prob;
        ++report.histogram[size];
    }

    double sum = 0.0;
    double sum2 = 0.0;
    std::uint64_t meeting = 0;
    for (std::size_t k = 0; k < report.histogram.size(); ++k) {
        const auto c = static_cast<double>(report.histogram[k]);
        sum += c * static_cast<double>(k);
        sum2 += c * static_cast<double>(k) * static_cast<double>(k);
        if (static_cast<double>(k) >= report.size_threshold) meeting += report.histogram[k];
    }
    const auto T = static_cast<double>(trials);
    report.mean = sum / T;
    report.mean_se = std::sqrt(std::max(0.0, sum2 / T - report.mean * report.mean) / T);
    report.fraction_meeting_size_threshold = static_cast<double>(meeting) / T;
    return report;
}

ColorRule::ColorRule(int n, int K, std::vector<double> probabilities)
    : n_(n), K_(K), probabilities_(std::move(probabilities)) {
    if (n < 1 || K < 1) throw std::invalid_argument("color rule dimensions must be positive");
    if (probabilities_.size() != static_cast<std::size_t>(n * K)) throw std::invalid_argument("color rule needs n*K entries");
    for (int v = 0; v < n; ++v) {
        double total = 0.0;
        for (double p : row(v)) {
            if (p < 0.0) throw std::invalid_argument("negative color probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("color law of vertex " + std::to_string(v) + " does not sum to 1");
        }
    }
}

ColorRule ColorRule::deterministic(const Coloring& coloring, int K) {
    const int n = static_cast<int>(coloring.size());
    std::vector<double> probs(static_cast<std::size_t>(n * K), 0.0);
    for (int v = 0; v < n; ++v) {
        const int c = coloring[static_cast<std::size_t>(v)];
        if (c < 0 || c >= K) throw std::invalid_argument("coloring entry out of range");
        probs[static_cast<std::size_t>(v * K + c)] = 1.0;
    }
    return ColorRule(n, K, std::move(probs));
}

ColorRule ColorRule::from_state(const ProofState& state) {
    const int n = state.n();
    const int K = state.K();
    const auto joint = born_probabilities(state.amplitudes());
    std::vector<double> probs(joint.size());
    for (int v = 0; v < n; ++v) {
        double marginal = 0.0;
        for (int c = 0; c < K; ++c) marginal += joint[static_cast<std::size_t>(v * K + c)];
        for (int c = 0; c < K; ++c) {
            probs[static_cast<std::size_t>(v * K + c)] =
                marginal > 0.0 ? joint[static_cast<std::size_t>(v * K + c)] / marginal : 1.0 / K;
        }
    }
    return ColorRule(n, K, std::move(probs));
}

namespace {

struct PreparedSetup {
    std::vector<std::vector<int>> sets;
    const CollisionSetup* setup = nullptr;

    std::size_t set_index(int i) const { return sets.size() == 1 ? 0 : static_cast<std::size_t>(i); }
    std::size_t rule_index(int i) const { return setup->color_rules.size() == 1 ? 0 : static_cast<std::size_t>(i); }
    const std::vector<int>& set(int i) const { return sets[set_index(i)]; }
    const ColorRule& rule(int i) const { return setup->color_rules[rule_index(i)]; }
};

PreparedSetup prepare_setup(const ConstraintGraph& graph, const CollisionSetup& setup) {
    require_valid(graph);
    if (setup.m_prime < 2) throw std::invalid_argument("m' must be at least 2");
    const auto m = static_cast<std::size_t>(setup.m_prime);
    if (setup.s_sets.size() != 1 && setup.s_sets.size() != m) throw std::invalid_argument("need one S set or one per sample");
    if (setup.color_rules.size() != 1 && setup.color_rules.size() != m) {
        throw std::invalid_argument("need one color rule or one per sample");
    }
    PreparedSetup out;
    out.setup = &setup;
    for (const auto& raw : setup.s_sets) {
        const std::set<int> unique(raw.begin(), raw.end());
        if (unique.empty() || *unique.begin() < 0 || *unique.rbegin() >= graph.n) {
            throw std::invalid_argument("S set must be a nonempty subset of the vertices");
        }
        if (static_cast<double>(unique.size()) < (1.0 - setup.epsilon) * graph.n - 1e-9) {
            throw std::invalid_argument("S set of size " + std::to_string(unique.size()) + " is below (1 - eps) n");
        }
        out.sets.emplace_back(unique.begin(), unique.end());
    }
    for (const ColorRule& rule : setup.color_rules) {
        if (rule.n() != graph.n || rule.K() != graph.K) throw std::invalid_argument("color rule dimensions do not match");
    }
    return out;
}

bool pair_violates(const EdgeIndex& edges, int vi, int ci, int vj, int cj) {
    return edges.violated(vi, ci, vj, cj) || (vi == vj && ci != cj);
}

struct MomentAccumulator {
    std::uint64_t sum = 0;
    std::uint64_t sum_sq = 0;
    std::uint64_t zeros = 0;
};

double choose2(int m) { return 0.5 * m * (m - 1.0); }

}  // namespace

CollisionEstimate lemma3_estimate(const ConstraintGraph& graph, const CollisionSetup& setup, std::uint64_t trials,
                                  std::uint64_t seed, unsigned workers) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    const PreparedSetup prepared = prepare_setup(graph, setup);
    const EdgeIndex edges(graph);
    const int m = setup.m_prime;

    // One sampler per (rule, vertex).
    std::vector<std::vector<DiscreteSampler>> samplers;
    for (const ColorRule& rule : setup.color_rules) {
        auto& per_vertex = samplers.emplace_back();
        for (int v = 0; v < graph.n; ++v) per_vertex.emplace_back(rule.row(v));
    }

    const RandomStream master(seed);
    const auto parts = detail::parallel_chunks<MomentAccumulator>(
        trials, workers, [&](std::uint64_t begin, std::uint64_t end, MomentAccumulator& acc) {
            std::vector<int> vs(static_cast<std::size_t>(m));
            std::vector<int> cs(static_cast<std::size_t>(m));
            for (std::uint64_t t = begin; t < end; ++t) {
                RandomStream rng = master.substream(t);
                for (int i = 0; i < m; ++i) {
                    const auto& s = prepared.set(i);
                    const int v = s[static_cast<std::size_t>(rng.below(s.size()))];
                    vs[static_cast<std::size_t>(i)] = v;
                    cs[static_cast<std::size_t>(i)] =
                        static_cast<int>(samplers[prepared.rule_index(i)][static_cast<std::size_t>(v)].sample(rng.uniform()));
                }
                std::uint64_t V = 0;
                for (int i = 0; i < m; ++i) {
                    for (int j = i + 1; j < m; ++j) {
                        V += pair_violates(edges, vs[static_cast<std::size_t>(i)], cs[static_cast<std::size_t>(i)],
                                           vs[static_cast<std::size_t>(j)], cs[static_cast<std::size_t>(j)]);
                    }
                }
                acc.sum += V;
                acc.sum_sq += V * V;
                acc.zeros += V == 0;
            }
        });
    MomentAccumulator total;
    for (const auto& p : parts) {
        total.sum += p.sum;
        total.sum_sq += p.sum_sq;
        total.zeros += p.zeros;
    }

    const auto T = static_cast<double>(trials);
    CollisionEstimate est;
    est.m_prime = m;
    est.trials = trials;
    est.seed = seed;
    est.e_v_empirical = static_cast<double>(total.sum) / T;
    est.e_v2_empirical = static_cast<double>(total.sum_sq) / T;
    const double variance = std::max(0.0, est.e_v2_empirical - est.e_v_empirical * est.e_v_empirical);
    est.e_v_se = std::sqrt(variance / T);
    est.e_v_ci = 1.96 * est.e_v_se;
    est.e_v_lower_bound = setup.epsilon * choose2(m) / graph.n;
    est.pair_mean = est.e_v_empirical / choose2(m);
    est.pair_mean_se = est.e_v_se / choose2(m);
    est.pr_v_zero_empirical = static_cast<double>(total.zeros) / T;
    est.pr_v_zero_se = std::sqrt(est.pr_v_zero_empirical * (1.0 - est.pr_v_zero_empirical) / T);
    est.pr_v_zero_ci = 1.96 * est.pr_v_zero_se;
    est.chebyshev_upper_bound = est.e_v_empirical > 0.0 ? variance / (est.e_v_empirical * est.e_v_empirical)
                                                        : std::numeric_limits<double>::infinity();
    return est;
}

double exact_expected_violations(const ConstraintGraph& graph, const CollisionSetup& setup) {
    const PreparedSetup prepared = prepare_setup(graph, setup);
    const EdgeIndex edges(graph);

    std::vector<std::set<int>> near(static_cast<std::size_t>(graph.n));
    for (int v = 0; v < graph.n; ++v) near[static_cast<std::size_t>(v)].insert(v);
    for (const Edge& e : graph.edges) {
        near[static_cast<std::size_t>(e.u)].insert(e.v);
        near[static_cast<std::size_t>(e.v)].insert(e.u);
    }

    auto pair_expectation = [&](int i, int j) {
        const auto& si = prepared.set(i);
        const auto& sj = prepared.set(j);
        const std::set<int> sj_members(sj.begin(), sj.end());
        const ColorRule& ri = prepared.rule(i);
        const ColorRule& rj = prepared.rule(j);
        double total = 0.0;
        for (int v : si) {
            for (int w : near[static_cast<std::size_t>(v)]) {
                if (!sj_members.contains(w)) continue;
                for (int c = 0; c < graph.K; ++c) {
                    const double pc = ri.probability(v, c);
                    if (pc == 0.0) continue;
                    for (int d = 0; d < graph.K; ++d) {
                        const double pd = rj.probability(w, d);
                        if (pd != 0.0 && pair_violates(edges, v, c, w, d)) total += pc * pd;
                    }
                }
            }
        }
        return total / (static_cast<double>(si.size()) * static_cast<double>(sj.size()));
    };

    std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, double> cache;
    double sum = 0.0;
    for (int i = 0; i < setup.m_prime; ++i) {
        for (int j = i + 1; j < setup.m_prime; ++j) {
            const auto key = std::make_tuple(prepared.set_index(i), prepared.rule_index(i), prepared.set_index(j),
                                             prepared.rule_index(j));
            auto it = cache.find(key);
            if (it == cache.end()) it = cache.emplace(key, pair_expectation(i, j)).first;
            sum += it->second;
        }
    }
    return sum;
}

SecondMomentReport second_moment_audit(const ConstraintGraph& graph, const CollisionSetup& setup, std::uint64_t trials,
                                       std::uint64_t seed) {
    SecondMomentReport report;
    report.estimate = lemma3_estimate(graph, setup, trials, seed);
    report.exact_e_v = exact_expected_violations(graph, setup);
    const CollisionEstimate& e = report.estimate;
    report.exact_agreement_ok = std::abs(e.e_v_empirical - report.exact_e_v) <= 4.0 * e.e_v_se + 1e-12;
    report.lower_bound_ok = e.e_v_empirical + 4.0 * e.e_v_se >= e.e_v_lower_bound;
    report.degenerate = e.e_v_empirical == 0.0;
    if (!report.degenerate) {
        report.chebyshev_ok = e.pr_v_zero_empirical <= e.chebyshev_upper_bound + 4.0 * e.pr_v_zero_se;
    }
    return report;
}

std::string_view to_string(ChernoffSide side) {
    return side == ChernoffSide::completeness ? "completeness" : "soundness";
}

ChernoffAudit chernoff_audit(ChernoffSide side, int num_provers, double p, int threshold, double mu) {
    ChernoffAudit a;
    a.side = side;
    a.num_provers = num_provers;
    a.p = p;
    a.threshold = threshold;
    a.mu = mu;
    if (side == ChernoffSide::completeness) {
        a.exact_tail = binomial_lower_tail(num_provers, p, threshold);
        a.bound = std::exp(-mu / 2e4);
    } else {
        a.exact_tail = binomial_upper_tail(num_provers, p, threshold);
        a.bound = std::exp(-(24.0 * 24.0 / (25.0 * 25.0 * 2.0)) * mu / 4.0);
    }
    a.holds = a.exact_tail <= a.bound;
    return a;
}

ChernoffAudit completeness_chernoff(const ProtocolParams& params) {
    return chernoff_audit(ChernoffSide::completeness, params.num_provers, 1.0 / params.K, params.z_threshold, params.mu);
}

ChernoffAudit soundness_chernoff(const ProtocolParams& params) {
    return chernoff_audit(ChernoffSide::soundness, params.num_provers, 1.0 / (4.0 * params.K),
                          robust_ceil(params.mu / 4.0 + 24.0 * params.mu / 100.0), params.mu);
}

std::vector<ChernoffAudit> chernoff_grid_audit(const ParameterGrid& grid) {
    std::vector<ChernoffAudit> out;
    for (int n : grid.n) {
        for (int K : grid.K) {
            for (double C : grid.C) {
                const auto params = ProtocolParams::make(C, n, K);
                out.push_back(completeness_chernoff(params));
                out.push_back(soundness_chernoff(params));
            }
        }
    }
    return out;
}

}  // namespace bellqma
