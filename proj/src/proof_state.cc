#include "bellqma/proof_state.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bellqma {

ProofState::ProofState(int n, int K, std::vector<Amplitude> amplitudes) : n_(n), K_(K), amplitudes_(std::move(amplitudes)) {
    if (n < 1 || K < 1) throw std::invalid_argument("proof state dimensions must be positive");
    if (amplitudes_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(K)) {
        throw std::invalid_argument("proof state needs n*K = " + std::to_string(n * K) + " amplitudes, got " +
                                    std::to_string(amplitudes_.size()));
    }
    const double norm = norm_squared();
    if (std::abs(norm - 1.0) > kNormTolerance) {
        throw std::invalid_argument("proof state is not normalized (norm^2 = " + std::to_string(norm) + ")");
    }
}

ProofState ProofState::normalized(int n, int K, std::vector<Amplitude> amplitudes) {
    double norm = 0.0;
    for (const auto& a : amplitudes) norm += std::norm(a);
    if (!(norm > 0.0)) throw std::invalid_argument("cannot normalize the zero vector");
    const double scale = 1.0 / std::sqrt(norm);
    for (auto& a : amplitudes) a *= scale;
    return ProofState(n, K, std::move(amplitudes));
}

ProofState ProofState::basis(int n, int K, int vertex, int color) {
    if (vertex < 0 || vertex >= n || color < 0 || color >= K) throw std::invalid_argument("basis label out of range");
    std::vector<Amplitude> amps(static_cast<std::size_t>(n) * static_cast<std::size_t>(K));
    amps[static_cast<std::size_t>(vertex) * static_cast<std::size_t>(K) + static_cast<std::size_t>(color)] = 1.0;
    return ProofState(n, K, std::move(amps));
}

double ProofState::norm_squared() const {
    double total = 0.0;
    for (const auto& a : amplitudes_) total += std::norm(a);
    return total;
}

double fidelity(const ProofState& a, const ProofState& b) {
    if (a.n() != b.n() || a.K() != b.K()) throw std::invalid_argument("fidelity of states with different dimensions");
    Amplitude overlap = 0.0;
    for (std::size_t i = 0; i < a.amplitudes().size(); ++i) overlap += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
    return std::abs(overlap);
}

ProofState honest_state(const ConstraintGraph& graph, const Coloring& coloring) {
    require_coloring(graph, coloring);
    std::vector<Amplitude> amps(static_cast<std::size_t>(graph.n) * static_cast<std::size_t>(graph.K));
    const double weight = 1.0 / std::sqrt(static_cast<double>(graph.n));
    for (int v = 0; v < graph.n; ++v) {
        amps[static_cast<std::size_t>(v * graph.K + coloring[static_cast<std::size_t>(v)])] = weight;
    }
    return ProofState(graph.n, graph.K, std::move(amps));
}

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

void dft_direct(std::span<Amplitude> data, FourierDirection direction) {
    const std::size_t N = data.size();
    const double sign = direction == FourierDirection::forward ? 1.0 : -1.0;
    std::vector<Amplitude> twiddle(N);
    for (std::size_t m = 0; m < N; ++m) {
        twiddle[m] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(N));
    }
    std::vector<Amplitude> out(N);
    for (std::size_t k = 0; k < N; ++k) {
        Amplitude acc = 0.0;
        for (std::size_t j = 0; j < N; ++j) acc += data[j] * twiddle[(j * k) % N];
        out[k] = acc;
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    for (std::size_t k = 0; k < N; ++k) data[k] = out[k] * scale;
}

void dft_fftw(std::span<Amplitude> data, FourierDirection direction) {
    const int N = static_cast<int>(data.size());
    auto* buffer = reinterpret_cast<fftw_complex*>(data.data());
    // FFTW_BACKWARD is the exp(+i) kernel.
    const int sign = direction == FourierDirection::forward ? FFTW_BACKWARD : FFTW_FORWARD;
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(N, buffer, buffer, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    for (auto& a : data) a *= scale;
}

}  // namespace

void dft_in_place(std::span<Amplitude> data, FourierDirection direction, FourierMethod method) {
    if (data.size() <= 1) return;
    if (method == FourierMethod::fast) {
        dft_fftw(data, direction);
    } else {
        dft_direct(data, direction);
    }
}

ProofState fourier_color(const ProofState& state, FourierDirection direction, FourierMethod method) {
    std::vector<Amplitude> amps(state.amplitudes().begin(), state.amplitudes().end());
    const auto K = static_cast<std::size_t>(state.K());
    for (std::size_t v = 0; v < static_cast<std::size_t>(state.n()); ++v) {
        dft_in_place(std::span<Amplitude>(amps).subspan(v * K, K), direction, method);
    }
    return ProofState(state.n(), state.K(), std::move(amps));
}

ProofState fourier_vertex(const ProofState& state, FourierDirection direction, FourierMethod method) {
    std::vector<Amplitude> amps(state.amplitudes().begin(), state.amplitudes().end());
    const auto n = static_cast<std::size_t>(state.n());
    const auto K = static_cast<std::size_t>(state.K());
    std::vector<Amplitude> column(n);
    for (std::size_t c = 0; c < K; ++c) {
        for (std::size_t v = 0; v < n; ++v) column[v] = amps[v * K + c];
        dft_in_place(column, direction, method);
        for (std::size_t v = 0; v < n; ++v) amps[v * K + c] = column[v];
    }
    return ProofState(state.n(), state.K(), std::move(amps));
}

std::vector<double> flush_negligible(std::vector<double> probabilities) {
    for (auto& p : probabilities) {
        if (p < kNegligibleProbability) p = 0.0;
    }
    return probabilities;
}

std::vector<double> born_probabilities(std::span<const Amplitude> amplitudes) {
    std::vector<double> out(amplitudes.size());
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        const double p = std::norm(amplitudes[i]);
        out[i] = p < kNegligibleProbability ? 0.0 : p;
    }
    return out;
}

double prob_color_zero(const ProofState& state) {
    const ProofState phi = fourier_color(state);
    double total = 0.0;
    for (int v = 0; v < phi.n(); ++v) total += std::norm(phi.amplitude(v, 0));
    return total < kNegligibleProbability ? 0.0 : total;
}

ConditionedVertexState conditional_vertex_state(const ProofState& state) {
    const ProofState phi = fourier_color(state);
    ConditionedVertexState out;
    out.gamma.resize(static_cast<std::size_t>(state.n()));
    for (int v = 0; v < state.n(); ++v) {
        out.gamma[static_cast<std::size_t>(v)] = phi.amplitude(v, 0);
        out.p0 += std::norm(phi.amplitude(v, 0));
    }
    if (out.p0 < kNegligibleProbability) throw std::domain_error("conditioning on a null event: p0 = 0");
    const double scale = 1.0 / std::sqrt(out.p0);
    for (auto& g : out.gamma) g *= scale;
    return out;
}

std::vector<double> vertex_marginals(const ProofState& state) {
    std::vector<double> out(static_cast<std::size_t>(state.n()), 0.0);
    for (int v = 0; v < state.n(); ++v) {
        for (int c = 0; c < state.K(); ++c) out[static_cast<std::size_t>(v)] += std::norm(state.amplitude(v, c));
    }
    return out;
}

std::vector<double> color_marginals(const ProofState& state) {
    std::vector<double> out(static_cast<std::size_t>(state.K()), 0.0);
    for (int v = 0; v < state.n(); ++v) {
        for (int c = 0; c < state.K(); ++c) out[static_cast<std::size_t>(c)] += std::norm(state.amplitude(v, c));
    }
    return out;
}

DiscreteSampler::DiscreteSampler(std::span<const double> weights) : cumulative_(weights.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw std::invalid_argument("negative sampling weight");
        acc += weights[i];
        cumulative_[i] = acc;
    }
    if (!(acc > 0.0)) throw std::invalid_argument("sampling weights sum to zero");
}

std::size_t DiscreteSampler::sample(double u) const {
    const double target = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) {
        // u * total rounded up to total: take the last outcome with weight.
        it = std::lower_bound(cumulative_.begin(), cumulative_.end(), cumulative_.back());
    }
    return static_cast<std::size_t>(it - cumulative_.begin());
}

MeasurementOutcome measure(const ProofState& state, Register reg, RandomStream& rng) {
    const double u = rng.uniform();
    MeasurementOutcome out;
    out.reg = reg;
    const int n = state.n();
    const int K = state.K();

    if (reg == Register::both) {
        const auto probs = born_probabilities(state.amplitudes());
        const auto idx = static_cast<int>(DiscreteSampler(probs).sample(u));
        out.vertex = idx / K;
        out.color = idx % K;
        return out;
    }

    std::vector<Amplitude> collapsed(state.amplitudes().size());
    if (reg == Register::color) {
        const auto probs = flush_negligible(color_marginals(state));
        out.color = static_cast<int>(DiscreteSampler(probs).sample(u));
        for (int v = 0; v < n; ++v) collapsed[static_cast<std::size_t>(v * K + out.color)] = state.amplitude(v, out.color);
    } else {
        const auto probs = flush_negligible(vertex_marginals(state));
        out.vertex = static_cast<int>(DiscreteSampler(probs).sample(u));
        for (int c = 0; c < K; ++c) collapsed[static_cast<std::size_t>(out.vertex * K + c)] = state.amplitude(out.vertex, c);
    }
    out.posterior = ProofState::normalized(n, K, std::move(collapsed));
    return out;
}

std::string dump_state(const ProofState& state) {
    std::ostringstream out;
    out.precision(17);
    for (int v = 0; v < state.n(); ++v) {
        for (int c = 0; c < state.K(); ++c) {
            const Amplitude a = state.amplitude(v, c);
            if (std::norm(a) < kNegligibleProbability) continue;
            out << v << ',' << c << ',' << a.real() << ',' << a.imag() << '\n';
        }
    }
    return out.str();
}

}  // namespace bellqma
