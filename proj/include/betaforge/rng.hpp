#ifndef BETAFORGE_RNG_HPP
#define BETAFORGE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace betaforge {

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for the k-th worker stream of a master seed. All per-tree, per-pair
// and per-block seeds in the project go through this one function so that
// results do not depend on scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index + 1));
}

// mt19937_64 wrapper that avoids std::uniform_*_distribution: those are
// implementation-defined, this keeps byte-identical output everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // unbiased integer in [0, bound)
    std::uint64_t uniform_index(std::uint64_t bound) {
        // rejection sampling over the top multiple of bound
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % bound;
        }
    }

    // double in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // double in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (explicit, no cached spare)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace betaforge

#endif
