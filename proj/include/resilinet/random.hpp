#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace resilinet {

/// SplitMix64 finaliser. Used to derive independent stream seeds from counters.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed for the stream identified by (master, k0, k1, ...). Distinct key tuples give unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept
{
    std::uint64_t s = splitmix64(master);
    for (const auto k : keys) s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ull));
    return s;
}

using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection; unlike std::uniform_int_distribution the
/// sequence is identical across standard libraries.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound)
{
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % bound;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

/// Standard normal via Box-Muller (one value per call; portable, unlike std::normal_distribution).
inline double standard_normal(Rng& rng)
{
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0) u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

/// `count` distinct indices from [0, n) in selection order (partial Fisher-Yates).
std::vector<std::uint64_t> sample_without_replacement(Rng& rng, std::uint64_t n, std::uint64_t count);

}  // namespace resilinet
