#ifndef SRNN_RNG_H
#define SRNN_RNG_H

#include <cmath>
#include <cstdint>

namespace srnn {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Mix independent stream identifiers into one seed (used to derive
// per-utterance / per-epoch dropout streams from a global seed).
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0) {
    uint64_t s = a;
    uint64_t h = splitmix64(s);
    s ^= b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= splitmix64(s);
    s ^= c + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return splitmix64(s);
}

// xoshiro256** with fully specified integer/double conversions, so generated
// corpora and parameter initializations are byte-stable across platforms.
class Rng {
public:
    explicit Rng(uint64_t seed = 1) {
        uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    uint64_t next_u64() {
        uint64_t* s = state_;
        uint64_t result = rotl(s[1] * 5, 7) * 9;
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // Uniform in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(next_u64() % span);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; caches the second draw.
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace srnn

#endif
