#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tanet {

// Deterministic PRNG (xoshiro256++ over a splitmix64-expanded seed).
//
// The standard <random> distributions are not bit-reproducible across
// implementations, so everything seed-sensitive in this project draws from
// this class instead. The full state is 4 words and can be saved into a
// checkpoint and restored exactly.
class Rng {
public:
    using State = std::array<std::uint64_t, 4>;

    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    static Rng from_state(const State& s) {
        Rng r(0);
        r.state_ = s;
        return r;
    }

    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

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

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                                 static_cast<unsigned __int128>(n)) >> 64);
    }

    // Standard normal via Box-Muller. Uses two draws per call and keeps no
    // cached spare, so the state alone reproduces the stream.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1], keeps log() finite
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent child stream; same (seed, tag) always gives the same child.
    Rng fork(std::uint64_t tag) const {
        std::uint64_t x = state_[0] ^ (0x9e3779b97f4a7c15ull * (tag + 1));
        return Rng(x);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    State state_{};
};

} // namespace tanet
