#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bellqma/constraint_graph.h"
#include "bellqma/proof_state.h"
#include "bellqma/protocol_params.h"

namespace bellqma {

/// Tolerance for the amplitude inequalities checked by soundness_report.
inline constexpr double kInequalityTolerance = 1e-10;

/// eta / 21: strictly below eta / 20.
double default_epsilon(const Fraction& eta);

enum class SoundnessCase { low_z_prime, large_r_set, main_case };
std::string_view to_string(SoundnessCase c);

struct FourierDistance {
    double via_transform = 0.0;  // ||F_n gamma - e_0||^2
    double via_direct = 0.0;     // ||gamma - psi||^2, psi uniform
    double zero_amplitude = 0.0; // |<0| F_n |gamma>|
};

/// Distance of the color-0-conditioned vertex state from passing Step 2.
/// Throws std::domain_error when p0 = 0.
FourierDistance fourier_distance(const ProofState& state);

struct SoundnessReport {
    double epsilon = 0.0;
    std::vector<double> p0;
    std::vector<int> z_prime;                  // {i : p0_i >= 1/(4K)}
    std::vector<int> r_set_size;               // |{v : |alpha_v|^2 < 1/(8Kn)}|
    std::vector<bool> gamma_alpha_ok;          // p0 |gamma_v|^2 <= |alpha_v|^2 for all v (vacuous when p0 = 0)
    std::vector<bool> gamma_bound_ok;          // |gamma_v|^2 <= 4K |alpha_v|^2 for all v (checked for Z' members)
    std::vector<std::optional<double>> fourier_distance;  // present for Z' members
    SoundnessCase case_label = SoundnessCase::main_case;
};

SoundnessReport soundness_report(std::span<const ProofState> states, const ConstraintGraph& graph,
                                 const ProtocolParams& params, double epsilon);

struct ZDoublePrimeReport {
    std::vector<double> inclusion_probability;  // (1 - |R_i|/n) / (8K) for eligible provers, else 0
    std::vector<std::uint64_t> histogram;       // index = |Z''|
    double mean = 0.0;
    double mean_se = 0.0;
    double expected_mean = 0.0;
    double size_threshold = 0.0;                // C sqrt(n) / (32 K^2)
    double fraction_meeting_size_threshold = 0.0;
    std::uint64_t trials = 0;
};

/// Realizes Z'' = {i in Z' : U_i in J_i} as independent Bernoulli inclusions
/// with the exact measure of J_i, for provers in Z' whose R_i is below eps n.
ZDoublePrimeReport z_double_prime_simulation(std::span<const ProofState> states, const ProtocolParams& params,
                                             double epsilon, std::uint64_t trials, std::uint64_t seed);

/// Per-vertex color distribution Pr[c | v], stored n x K.
class ColorRule {
  public:
    ColorRule(int n, int K, std::vector<double> probabilities);

    static ColorRule deterministic(const Coloring& coloring, int K);
    /// Conditional color law of a computational-basis measurement of `state`;
    /// vertices with zero marginal get the uniform law.
    static ColorRule from_state(const ProofState& state);

    int n() const { return n_; }
    int K() const { return K_; }
    double probability(int vertex, int color) const {
        return probabilities_[static_cast<std::size_t>(vertex * K_ + color)];
    }
    std::span<const double> row(int vertex) const {
        return std::span<const double>(probabilities_).subspan(static_cast<std::size_t>(vertex * K_),
                                                               static_cast<std::size_t>(K_));
    }

  private:
    int n_;
    int K_;
    std::vector<double> probabilities_;
};

/// Sampling setup for the collision lemma. `s_sets` and `color_rules` hold
/// either one entry per sample index or a single entry shared by all.
struct CollisionSetup {
    std::vector<std::vector<int>> s_sets;
    std::vector<ColorRule> color_rules;
    int m_prime = 2;
    double epsilon = 0.0;
};

struct CollisionEstimate {
    int m_prime = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double e_v_empirical = 0.0;
    double e_v_se = 0.0;
    double e_v_ci = 0.0;
    double e_v_lower_bound = 0.0;      // eps * C(m', 2) / n
    double pair_mean = 0.0;            // E[V] / C(m', 2)
    double pair_mean_se = 0.0;
    double pr_v_zero_empirical = 0.0;
    double pr_v_zero_se = 0.0;
    double pr_v_zero_ci = 0.0;
    double e_v2_empirical = 0.0;
    double chebyshev_upper_bound = 0.0;  // (E[V^2] - E[V]^2) / E[V]^2; +inf when E[V] = 0
};

/// Samples v_i uniform on S_i and c_i from the rule, independently per i, and
/// counts V = sum_{i<j} V_ij where V_ij flags a violated edge between v_i and
/// v_j or a same-vertex color mismatch. Throws std::invalid_argument when some
/// |S_i| < (1 - eps) n or m' < 2.
CollisionEstimate lemma3_estimate(const ConstraintGraph& graph, const CollisionSetup& setup, std::uint64_t trials,
                                  std::uint64_t seed, unsigned workers = 1);

/// E[V] by enumeration over S_i x S_j x colors for every pair.
double exact_expected_violations(const ConstraintGraph& graph, const CollisionSetup& setup);

struct SecondMomentReport {
    CollisionEstimate estimate;
    double exact_e_v = 0.0;
    bool exact_agreement_ok = false;   // |E[V] - exact| <= 4 se
    bool lower_bound_ok = false;       // E[V] + 4 se >= eps C(m', 2) / n
    bool degenerate = false;           // E[V] = 0 empirically; Chebyshev skipped
    std::optional<bool> chebyshev_ok;  // Pr[V = 0] <= Var/E^2 + 4 se
};

SecondMomentReport second_moment_audit(const ConstraintGraph& graph, const CollisionSetup& setup, std::uint64_t trials,
                                       std::uint64_t seed);

enum class ChernoffSide { completeness, soundness };
std::string_view to_string(ChernoffSide side);

struct ChernoffAudit {
    ChernoffSide side = ChernoffSide::completeness;
    int num_provers = 0;
    double p = 0.0;
    int threshold = 0;
    double mu = 0.0;
    double exact_tail = 0.0;
    double bound = 0.0;
    bool holds = false;
};

/// completeness: exact_tail = P[Bin(N, p) < threshold], bound = exp(-mu / (2 * 10^4)).
/// soundness:    exact_tail = P[Bin(N, p) >= threshold], bound = exp(-(24^2 / (25^2 * 2)) * mu / 4).
ChernoffAudit chernoff_audit(ChernoffSide side, int num_provers, double p, int threshold, double mu);

/// p = 1/K, threshold = z_threshold.
ChernoffAudit completeness_chernoff(const ProtocolParams& params);
/// p = 1/(4K), threshold = ceil(mu/4 + 24 mu/100).
ChernoffAudit soundness_chernoff(const ProtocolParams& params);

struct ParameterGrid {
    std::vector<int> n = {25, 100, 400};
    std::vector<int> K = {2, 3, 4};
    std::vector<double> C = {8, 16, 32};
};

/// Both sides at every grid point, ordered n, K, C, side.
std::vector<ChernoffAudit> chernoff_grid_audit(const ParameterGrid& grid);

}  // namespace bellqma
