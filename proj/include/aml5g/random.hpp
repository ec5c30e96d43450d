#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace aml5g {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Seeded random stream with counter-style child derivation.
///
/// A child stream depends only on the parent's key and the child's name or
/// index, never on how many draws the parent has made. Adding a new consumer
/// therefore never perturbs the draws seen by existing consumers.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : key_(detail::splitmix64(seed)), engine_(key_) {}

    RandomStream child(std::string_view name) const {
        return RandomStream(Key{detail::splitmix64(key_ ^ detail::splitmix64(detail::fnv1a(name)))});
    }

    RandomStream child(std::uint64_t index) const {
        return RandomStream(Key{detail::splitmix64(key_ + detail::splitmix64(index ^ 0xA5A5A5A5A5A5A5A5ULL))});
    }

    RandomStream child(std::string_view name, std::uint64_t index) const { return child(name).child(index); }

    std::uint64_t key() const noexcept { return key_; }

    std::mt19937_64& engine() noexcept { return engine_; }

    double uniform() { return uniform_(engine_); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

    bool bernoulli(double p) { return uniform_(engine_) < p; }

    double normal() { return normal_(engine_); }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance = 1.0) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal_(engine_);
        const double im = normal_(engine_);
        return {s * re, s * im};
    }

    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

private:
    struct Key {
        std::uint64_t value;
    };
    explicit RandomStream(Key k) : key_(k.value), engine_(key_) {}

    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace aml5g
