#pragma once

#include <cmath>
#include <cstdint>

namespace graphmix {

// Counter-style seedable generator built on SplitMix64. Every stochastic
// operation in the library takes an explicit seed, and sub-streams are
// derived by hashing (seed, tag...) so that parallel workers never share
// state. Same seed, same build -> bit-identical draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ kGolden) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += kGolden);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform on [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on {0, ..., m-1}
    std::uint64_t next_below(std::uint64_t m) {
        // 128-bit multiply-shift; bias < 2^-64, irrelevant at desk scale
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * m) >> 64);
    }

    // standard normal via Box-Muller (cached pair, no libm distribution
    // objects so the stream is identical across standard libraries)
    double next_gauss() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    // +1 or -1 with equal probability
    int next_sign() { return (next_u64() >> 63) ? 1 : -1; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    std::uint64_t state_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

// Deterministic stream derivation: mixes words one by one.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return mix_seed(mix_seed(a, b), rest...);
}

}  // namespace graphmix
