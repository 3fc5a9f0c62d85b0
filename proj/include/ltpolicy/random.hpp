#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace ltp {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Identifies one replication's random streams. Every stream used by a
// replication is a pure function of (master_seed, replication_index, substream).
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t replication_index = 0;
};

// xoshiro256** seeded through splitmix64. Streams are derived statelessly
// from a key, so replication i always sees the same numbers no matter which
// thread runs it or in what order.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key) noexcept {
        std::uint64_t x = key;
        for (auto& w : s_) {
            x = splitmix64(x);
            w = x;
        }
    }

    Rng(SeedSpec seed, std::uint64_t substream) noexcept
        : Rng(derive_key(seed, substream)) {}

    static constexpr std::uint64_t derive_key(SeedSpec seed, std::uint64_t substream) noexcept {
        std::uint64_t k = splitmix64(seed.master_seed ^ 0x6A09E667F3BCC909ULL);
        k = splitmix64(k ^ seed.replication_index);
        return splitmix64(k ^ (substream * 0xD1B54A32D192ED03ULL));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
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

    // Uniform on (0, 1]; never returns 0 so log() is always finite.
    double uniform_open0() noexcept {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

    double exponential(double rate) noexcept { return -std::log(uniform_open0()) / rate; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

}  // namespace ltp
