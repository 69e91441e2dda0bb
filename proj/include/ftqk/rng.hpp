#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace ftqk::rng {

// Counter-based generator (splitmix64). Every consumer derives an independent
// stream from an explicit key tuple, so the values drawn for a given
// (seed, sample, sector, ...) are identical regardless of thread scheduling.

constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Stream {
public:
    explicit Stream(std::initializer_list<std::uint64_t> keys) {
        for (std::uint64_t k : keys) state_ = mix64(state_ ^ mix64(k));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // uniform on (0, 1]; never returns 0, so it is safe under log()
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // one Box-Muller pair of independent standard normals
    void gaussian_pair(double& z0, double& z1) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        z0 = r * std::cos(phi);
        z1 = r * std::sin(phi);
    }

private:
    std::uint64_t state_ = 0x243f6a8885a308d3ULL;
};

// stream tags keeping unrelated consumers statistically independent
inline constexpr std::uint64_t kTagInitialVector = 0x1a2b3c4d5e6f7081ULL;
inline constexpr std::uint64_t kTagOverlapNoise = 0x9d8c7b6a59483726ULL;
inline constexpr std::uint64_t kTagLanczosStart = 0x5b1ce5571600d1ceULL;
inline constexpr std::uint64_t kTagFtlmVector = 0xfeedb0a710caddedULL;

// encodes a (possibly negative) sector label as a key component
constexpr std::uint64_t sector_key(int q) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(q) + (1LL << 32));
}

}  // namespace ftqk::rng
