#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace irsim {

using Rng = std::mt19937_64;

// Independent sub-seed streams derived from one root seed. Trials, links and
// pilots each get their own stream so runs are reproducible and trials can be
// executed in any order.
enum class Stream : std::uint64_t {
    channel = 1,
    pilot = 2,
    noise = 3,
    params = 4,
    denominator = 5,
    generic = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t counter) {
    std::uint64_t s = splitmix64(root);
    s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
    return splitmix64(s ^ counter);
}

inline Rng make_rng(std::uint64_t root, Stream stream, std::uint64_t counter) {
    return Rng(derive_seed(root, stream, counter));
}

// Circularly-symmetric complex Gaussian with the given total variance.
inline std::complex<double> sample_cn(Rng& rng, double variance) {
    if (variance <= 0.0) {
        return {0.0, 0.0};
    }
    std::normal_distribution<double> part(0.0, std::sqrt(variance / 2.0));
    const double re = part(rng);
    const double im = part(rng);
    return {re, im};
}

} // namespace irsim
