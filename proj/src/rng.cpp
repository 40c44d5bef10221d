#include "sigdim/rng.hpp"

#include <cmath>

namespace sigdim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// splitmix64 finalizer (Stafford mix13).
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) {
    // Expand the seed with a splitmix64 chain; xoshiro state must not be all zero,
    // which mix64 cannot produce four times in a row from distinct inputs.
    std::uint64_t s = seed;
    for (auto& w : state_) {
        s = mix64(s);
        w = s;
    }
}

RngStream RngStream::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t t : tags) {
        h = mix64(h ^ mix64(t));
    }
    return RngStream(h);
}

std::uint64_t RngStream::next_u64() {
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

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + uniform() * (hi - lo);
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
    // Rejection below 2^64 mod n keeps the draw exactly uniform.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x >= threshold) return x % n;
    }
}

std::pair<double, double> RngStream::normal_pair() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

}  // namespace sigdim
