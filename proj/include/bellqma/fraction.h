#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

namespace bellqma {

/// Exact non-negative fraction kept in unreduced form, so that a satisfied
/// fraction over a graph always carries |edges| as its denominator.
struct Fraction {
    std::int64_t numerator = 0;
    std::int64_t denominator = 1;

    double to_double() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }

    Fraction reduced() const {
        const std::int64_t g = std::gcd(numerator, denominator);
        return g == 0 ? Fraction{0, 1} : Fraction{numerator / g, denominator / g};
    }

    /// 1 - this.
    Fraction complement() const { return {denominator - numerator, denominator}; }

    /// Reduced form, "p/q", or "p" when q = 1.
    std::string str() const {
        const Fraction r = reduced();
        if (r.denominator == 1) return std::to_string(r.numerator);
        return std::to_string(r.numerator) + "/" + std::to_string(r.denominator);
    }

    friend bool operator==(const Fraction& a, const Fraction& b) {
        return static_cast<__int128>(a.numerator) * b.denominator == static_cast<__int128>(b.numerator) * a.denominator;
    }
    friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
        return static_cast<__int128>(a.numerator) * b.denominator <=> static_cast<__int128>(b.numerator) * a.denominator;
    }
};

}  // namespace bellqma
