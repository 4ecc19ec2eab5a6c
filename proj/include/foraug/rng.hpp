#pragma once

#include <cstdint>
#include <initializer_list>

namespace foraug {

/// SplitMix64 finalizer; used both as a hash and to expand seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a key tuple. hash_key({seed, epoch, index}) addresses
/// one sample's random stream independently of every other sample.
constexpr std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t p : parts) {
        h = mix64(h ^ mix64(p));
    }
    return h;
}

/// Domain tags keep streams for different purposes disjoint.
namespace stream_tag {
inline constexpr std::uint64_t plan = 0x706c616eULL;
inline constexpr std::uint64_t shuffle = 0x73687566ULL;
inline constexpr std::uint64_t stage = 0x73746167ULL;
inline constexpr std::uint64_t probe = 0x70726f62ULL;
inline constexpr std::uint64_t synth = 0x73796e74ULL;
} // namespace stream_tag

/// xoshiro256** seeded through SplitMix64. Bit-exact across platforms; all
/// derived draws use explicit arithmetic, never <random> distributions.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept { return next(); }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        ++draws_;
        return result;
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        const auto pick = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return pick < n ? pick : n - 1;
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Number of 64-bit words consumed so far.
    std::uint64_t draws() const noexcept { return draws_; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
    std::uint64_t draws_ = 0;
};

/// Bijection on [0, n) keyed by a 64-bit key: a 4-round balanced Feistel network
/// on the next even power of two, with cycle walking. Evaluates a single
/// position in O(1) expected time, so shuffled order is index-addressable.
class KeyedPermutation {
public:
    KeyedPermutation(std::uint64_t n, std::uint64_t key) noexcept : n_(n), key_(key) {
        int bits = 0;
        while ((std::uint64_t{1} << bits) < n && bits < 62) {
            ++bits;
        }
        if (bits % 2 != 0) {
            ++bits;
        }
        if (bits == 0) {
            bits = 2;
        }
        half_ = bits / 2;
        mask_ = (std::uint64_t{1} << half_) - 1;
    }

    std::uint64_t size() const noexcept { return n_; }

    std::uint64_t operator()(std::uint64_t i) const noexcept {
        if (n_ <= 1) {
            return 0;
        }
        std::uint64_t y = encrypt(i);
        while (y >= n_) {
            y = encrypt(y);
        }
        return y;
    }

private:
    std::uint64_t encrypt(std::uint64_t x) const noexcept {
        std::uint64_t left = x >> half_;
        std::uint64_t right = x & mask_;
        for (std::uint64_t round = 0; round < 4; ++round) {
            const std::uint64_t f = hash_key({key_, round, right}) & mask_;
            const std::uint64_t next_right = left ^ f;
            left = right;
            right = next_right;
        }
        return (left << half_) | right;
    }

    std::uint64_t n_;
    std::uint64_t key_;
    int half_ = 1;
    std::uint64_t mask_ = 1;
};

} // namespace foraug
