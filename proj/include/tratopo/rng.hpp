#pragma once

// Counter-free deterministic RNG. std::shuffle / std::*_distribution are
// implementation-defined across standard libraries, so everything that must
// reproduce bit-exactly (splits, noise, perturbations, samplers, weight init)
// goes through this header instead.

#include <cstdint>
#include <string_view>
#include <vector>

namespace tratopo {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Splittable generator: `Rng(seed)` or a substream derived from a parent
/// seed plus tags, e.g. `Rng::substream(seed, "noise")` or per-node streams
/// keyed by (seed, transition, node).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds (0,1,2,...)
        next_u64();
        next_u64();
    }

    static Rng substream(std::uint64_t seed, std::string_view tag) {
        std::uint64_t s = seed;
        std::uint64_t mixed = splitmix64(s) ^ hash_tag(tag);
        return Rng(mixed);
    }

    static Rng substream(std::uint64_t seed, std::string_view tag,
                         std::uint64_t a, std::uint64_t b = 0) {
        std::uint64_t s = seed;
        std::uint64_t mixed = splitmix64(s) ^ hash_tag(tag);
        mixed ^= 0x9e3779b97f4a7c15ULL * (a + 1);
        std::uint64_t t = mixed + 0xd1b54a32d192ed03ULL * (b + 1);
        return Rng(splitmix64(t));
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased integer in [0, bound); bound must be > 0.
    std::uint64_t uniform_int(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct values from [0, n), order unspecified but deterministic.
    std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k) {
        std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        // partial Fisher-Yates: first k slots
        for (std::int64_t i = 0; i < k; ++i) {
            const std::int64_t j =
                i + static_cast<std::int64_t>(uniform_int(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
        return pool;
    }

private:
    std::uint64_t state_;
};

}  // namespace tratopo
