// Copyright (c) 2026 the simvae authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace simvae {

namespace detail {

// splitmix64 finalizer; used both for seeding and for deriving substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// xoshiro256++ with splitmix64 seeding. The generator identifier is
// recorded in checkpoints so streams stay reproducible across versions.
//
// Substreams are derived from the *seed* plus integer tags, never from
// the running state. Training derives one stream per (purpose, epoch,
// source index), so a resumed run regenerates the exact streams of an
// unbroken run without serializing generator state.
class Rng {
public:
    static constexpr const char* kAlgorithm = "xoshiro256++";

    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& s : state_) s = detail::splitmix64(sm);
    }

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection to avoid modulo bias.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0ULL - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller; consumes two uniforms per pair and
    // caches the second value, keeping the draw count deterministic.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = next_double();
        // Guard against log(0): remap 0 to the smallest representable draw.
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    // Derives an independent substream from the seed and up to three tags.
    Rng fork(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
        std::uint64_t sm = seed_;
        std::uint64_t h = detail::splitmix64(sm);
        sm = h ^ (a * 0x9e3779b97f4a7c15ULL);
        h = detail::splitmix64(sm);
        sm = h ^ (b * 0xd1b54a32d192ed03ULL);
        h = detail::splitmix64(sm);
        sm = h ^ (c * 0x8cb92ba72f3d8dd7ULL);
        return Rng(detail::splitmix64(sm));
    }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Well-known substream tags used by training and data pipelines.
namespace stream {
inline constexpr std::uint64_t kInit = 1;    // parameter initialization
inline constexpr std::uint64_t kAugment = 2; // data augmentation
inline constexpr std::uint64_t kSample = 3;  // reparameterization noise
inline constexpr std::uint64_t kShuffle = 4; // epoch shuffling
inline constexpr std::uint64_t kData = 5;    // synthetic data generation
inline constexpr std::uint64_t kEval = 6;    // probes / generation
} // namespace stream

} // namespace simvae
