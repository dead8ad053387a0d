#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bellqma/constraint_graph.h"
#include "bellqma/random_stream.h"

namespace bellqma {

using Amplitude = std::complex<double>;

inline constexpr double kNormTolerance = 1e-10;

/// Born probabilities below this are treated as exactly zero. Amplitudes are
/// unit-norm, so transform round-off sits near 1e-30 while any physically
/// meaningful probability is far above it.
inline constexpr double kNegligibleProbability = 1e-20;

/// Pure state of one proof over |vertex>|color>, basis index v * K + c.
/// Immutable; every operation returns a new state.
class ProofState {
  public:
    /// Throws std::invalid_argument unless dimensions are positive, the
    /// amplitude count is n * K, and the norm is 1 within kNormTolerance.
    ProofState(int n, int K, std::vector<Amplitude> amplitudes);

    /// Rescales to unit norm first; throws on the zero vector.
    static ProofState normalized(int n, int K, std::vector<Amplitude> amplitudes);
    static ProofState basis(int n, int K, int vertex, int color);

    int n() const { return n_; }
    int K() const { return K_; }
    std::span<const Amplitude> amplitudes() const { return amplitudes_; }
    Amplitude amplitude(int vertex, int color) const { return amplitudes_[index(vertex, color)]; }
    double norm_squared() const;

    friend bool operator==(const ProofState&, const ProofState&) = default;

  private:
    std::size_t index(int vertex, int color) const {
        return static_cast<std::size_t>(vertex) * static_cast<std::size_t>(K_) + static_cast<std::size_t>(color);
    }

    int n_;
    int K_;
    std::vector<Amplitude> amplitudes_;
};

/// |<a|b>|, insensitive to global phase.
double fidelity(const ProofState& a, const ProofState& b);

/// (1/sqrt(n)) sum_v |v>|tau(v)>.
ProofState honest_state(const ConstraintGraph& graph, const Coloring& coloring);

enum class FourierMethod { direct, fast };
enum class FourierDirection { forward, inverse };

/// Unitary DFT with kernel exp(+2 pi i jk / N) / sqrt(N) (conjugated for the
/// inverse). `direct` is the O(N^2) matrix application; `fast` goes through
/// FFTW. The two agree to ~1e-14.
void dft_in_place(std::span<Amplitude> data, FourierDirection direction = FourierDirection::forward,
                  FourierMethod method = FourierMethod::direct);

/// I_n (x) F_K.
ProofState fourier_color(const ProofState& state, FourierDirection direction = FourierDirection::forward,
                         FourierMethod method = FourierMethod::direct);
/// F_n (x) I_K.
ProofState fourier_vertex(const ProofState& state, FourierDirection direction = FourierDirection::forward,
                          FourierMethod method = FourierMethod::direct);

std::vector<double> flush_negligible(std::vector<double> probabilities);

/// |a|^2 per amplitude, with values under kNegligibleProbability flushed to 0.
std::vector<double> born_probabilities(std::span<const Amplitude> amplitudes);

/// Probability that the color register reads 0 after fourier_color.
double prob_color_zero(const ProofState& state);

struct ConditionedVertexState {
    std::vector<Amplitude> gamma;  // unit-norm vertex register state
    double p0 = 0.0;
};

/// Vertex register after fourier_color and post-selection on color 0.
/// p0 * |gamma_v|^2 equals the joint probability of (color 0, vertex v).
/// Throws std::domain_error when p0 is zero.
ConditionedVertexState conditional_vertex_state(const ProofState& state);

/// sum_c |amplitude(v, c)|^2 for each v.
std::vector<double> vertex_marginals(const ProofState& state);
std::vector<double> color_marginals(const ProofState& state);

/// Inverse-CDF sampler over a finite outcome set. One uniform draw per sample;
/// zero-weight outcomes are never returned.
class DiscreteSampler {
  public:
    DiscreteSampler() = default;
    explicit DiscreteSampler(std::span<const double> weights);

    std::size_t sample(double u) const;
    std::size_t size() const { return cumulative_.size(); }
    double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  private:
    std::vector<double> cumulative_;
};

enum class Register { color, vertex, both };

struct MeasurementOutcome {
    Register reg = Register::both;
    int vertex = -1;  // set for vertex and both
    int color = -1;   // set for color and both
    std::optional<ProofState> posterior;  // collapsed state; absent for `both`
};

/// Born-rule measurement in the computational basis of `reg`, consuming
/// exactly one draw from rng.
MeasurementOutcome measure(const ProofState& state, Register reg, RandomStream& rng);

/// (v, c, re, im) per nonzero amplitude, one record per line.
std::string dump_state(const ProofState& state);

}  // namespace bellqma
