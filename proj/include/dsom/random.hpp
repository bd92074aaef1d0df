#ifndef DSOM_RANDOM_HPP
#define DSOM_RANDOM_HPP

#include <cstdint>
#include <numeric>
#include <random>
#include <span>

namespace dsom {

/**
 * Seeded source of randomness for the baseline (non-deterministic-by-design) modes.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++ standard.
 * The standard library distributions are not (their algorithms are implementation
 * defined), so the mappings to [0,1) and to bounded integers are spelled out here:
 *
 *  - uniform01:     top 53 bits of one engine draw, scaled by 2^-53.
 *  - uniform_below: rejection sampling on the full 64-bit draw (no modulo bias).
 *  - shuffle:       Fisher-Yates from the back, j = uniform_below(i + 1).
 *
 * Together these make every seeded output identical on every conforming platform.
 */
class SeededRandom {
public:
    explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}

    double uniform01()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::uint64_t uniform_below(std::uint64_t bound)
    {
        // Accept draws below the largest multiple of bound.
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
        std::uint64_t x = engine_();
        while (x > limit)
            x = engine_();
        return x % bound;
    }

    template <typename T>
    void shuffle(std::span<T> values)
    {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent stream seeds from one user seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace streams {
inline constexpr std::uint64_t init = 0;
inline constexpr std::uint64_t selection = 1;
} // namespace streams

} // namespace dsom

#endif // DSOM_RANDOM_HPP
