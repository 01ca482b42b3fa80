#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace tfk3d {

// All randomness in the library flows through this generator so that results
// are reproducible from a seed across builds of the same codebase version.
//
// Generator: xoshiro256++ (Blackman & Vigna), state seeded by SplitMix64.
// Uniform doubles take the top 53 bits; bounded integers use the 128-bit
// multiply-shift reduction; gaussians use Box-Muller on two uniforms.
// These choices are part of the dataset format contract: identical seeds
// produce byte-identical datasets and training trajectories on one machine.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes an arbitrary tag into a seed. Used to derive independent streams
// (per-sample trajectory seeds, per-run weight/selection seeds) so that
// generation order never matters.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL + (tag << 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b >> 1) ^ tag;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag1, std::uint64_t tag2) {
    return derive_seed(derive_seed(base, tag1), tag2);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). n must be nonzero.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // One of {-1, +1}.
    int sign() { return (next_u64() >> 63) ? 1 : -1; }

    double gaussian(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller; u1 nudged away from 0 so log stays finite.
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-54));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Fisher-Yates shuffle of an index range held in `items`.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace tfk3d
