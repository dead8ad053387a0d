#pragma once

#include <cstdint>
#include <limits>

namespace bellqma {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seedable, splittable random stream.
///
/// A stream is identified by a 64-bit key. `substream(i)` derives a child key
/// from (key, i) without advancing the parent, so a hierarchy such as
/// master seed -> trial -> prover is a pure function of the indices and
/// independent of the order in which workers consume streams.
class RandomStream {
  public:
    using result_type = std::uint64_t;

    explicit constexpr RandomStream(std::uint64_t key) noexcept : key_(key), state_(mix64(key)) {}

    constexpr std::uint64_t key() const noexcept { return key_; }

    constexpr RandomStream substream(std::uint64_t index) const noexcept {
        return RandomStream(mix64(mix64(key_ ^ 0x6a09e667f3bcc909ULL) + mix64(index + 0x9e3779b97f4a7c15ULL)));
    }

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    result_type operator()() noexcept { return next(); }
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Fair bit.
    bool coin() noexcept { return (next() >> 63) != 0; }

    /// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t bound) noexcept {
        __uint128_t m = static_cast<__uint128_t>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<__uint128_t>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

  private:
    std::uint64_t key_;
    std::uint64_t state_;
};

}  // namespace bellqma
