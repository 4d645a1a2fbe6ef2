#ifndef OPO_RNG_HPP
#define OPO_RNG_HPP

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, index), so results do not depend on call order or on how a
// loop is split across threads.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace opo
{
enum class Stream : std::uint64_t
{
    drift = 1,
    seed_detector = 2,
    homodyne = 3,
    fit_noise = 4,
    scan = 5,
};

class CounterRng
{
public:
    constexpr explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

    constexpr std::uint64_t seed() const { return seed_; }

    constexpr std::uint64_t bits(Stream stream, std::uint64_t block, std::uint64_t index) const
    {
        std::uint64_t h = mix(seed_ ^ 0x6a09e667f3bcc909ULL);
        h = mix(h ^ (static_cast<std::uint64_t>(stream) * 0xbb67ae8584caa73bULL));
        h = mix(h ^ block);
        return mix(h ^ (index * 0x3c6ef372fe94f82bULL + 0xa54ff53a5f1d36f1ULL));
    }

    // Uniform in (0, 1); never exactly 0 so it is safe under log().
    double uniform(Stream stream, std::uint64_t block, std::uint64_t index) const
    {
        return (static_cast<double>(bits(stream, block, index) >> 11) + 0.5) * 0x1.0p-53;
    }

    // Two independent standard normals (Box-Muller) from counters 2i and 2i+1.
    std::pair<double, double> normal_pair(Stream stream, std::uint64_t block, std::uint64_t i) const
    {
        const double u1 = uniform(stream, block, 2 * i);
        const double u2 = uniform(stream, block, 2 * i + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    double normal(Stream stream, std::uint64_t block, std::uint64_t i) const
    {
        return normal_pair(stream, block, i).first;
    }

private:
    // splitmix64 finalizer
    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};
} // namespace opo

#endif
