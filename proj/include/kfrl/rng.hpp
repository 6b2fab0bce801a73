#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace kfrl {

// splitmix64 finalizer. Shared by the generator and the seed-splitting scheme.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent sub-seed from (master, stream). Every piece of
// randomness in the project flows through this, so a run is a pure function
// of its master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return mix64(master + 0x9e3779b97f4a7c15ull * (stream + 0x632be59bd9b4e019ull));
}

// Small deterministic generator (splitmix64 stream). We avoid the standard
// <random> distributions on purpose: their output is implementation-defined,
// and the reproducibility contract here is byte-exact.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    // Unbiased integer in [0, n). n must be >= 1.
    std::uint64_t bounded(std::uint64_t n) noexcept {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via the Marsaglia polar method (caches the spare draw).
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0, v = 0.0, s = 0.0;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// In-place Fisher-Yates shuffle.
template <typename T>
void fisher_yates_shuffle(std::vector<T>& values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        std::swap(values[i - 1], values[j]);
    }
}

// Draws k elements from pool uniformly without replacement (partial
// Fisher-Yates over a copy). k must not exceed pool.size().
template <typename T>
std::vector<T> sample_without_replacement(const std::vector<T>& pool, std::size_t k, Rng& rng) {
    std::vector<T> scratch = pool;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(scratch.size() - i));
        std::swap(scratch[i], scratch[j]);
    }
    scratch.resize(k);
    return scratch;
}

}  // namespace kfrl
