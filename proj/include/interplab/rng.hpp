#pragma once

#include <cmath>
#include <cstdint>

namespace interplab {

// Deterministic random stream with explicit substream derivation.
//
// Streams are xoshiro256** generators seeded through splitmix64.  A trial
// substream is derived from (master seed, trial index) alone, so results do
// not depend on how trials are distributed over worker threads.  Gaussian
// variates use Box-Muller on fixed-layout uniforms; no libstdc++
// distribution objects are involved, keeping byte-level reproducibility.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) { seed_state(seed); }

    static RngStream substream(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t x = splitmix(master_seed ^ 0x8000000000000000ULL);
        std::uint64_t y = splitmix(index * 0x9E3779B97F4A7C15ULL + 0x6A09E667F3BCC909ULL);
        return RngStream(x ^ (y + 0x9E3779B97F4A7C15ULL + (x << 6) + (x >> 2)));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe under log().
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix(std::uint64_t& state) {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t splitmix(std::uint64_t&& seed) {
        std::uint64_t s = seed;
        return splitmix(s);
    }

    void seed_state(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : s_) w = splitmix(s);
    }

    std::uint64_t s_[4] = {};
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace interplab
