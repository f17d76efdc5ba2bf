#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mkge {

// All randomness in a run flows from a single root seed. Sub-seeds are
// derived by folding a stream tag and up to three counters through the
// splitmix64 finalizer, so any (stream, counters) tuple maps to a stable
// seed regardless of how many other streams exist.
enum class RngStream : std::uint64_t {
    entity_init = 1,
    relation_init = 2,
    matrix_init = 3,
    knowledge_shuffle = 4,
    alignment_shuffle = 5,
    twa_negatives = 6,
    twa_folds = 7,
    alignment_split = 8,
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t root, RngStream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = detail::mix64(root);
    s = detail::mix64(s ^ static_cast<std::uint64_t>(stream));
    s = detail::mix64(s ^ a);
    s = detail::mix64(s ^ b);
    s = detail::mix64(s ^ c);
    return s;
}

// Deterministic sampler. The engine (mt19937_64) is fully specified by the
// standard and the distributions below are hand-rolled, so identical seeds
// give identical draws on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n). Rejects the partial top interval.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        std::uint64_t r;
        do {
            r = engine_();
        } while (r < threshold);
        return r % n;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    void fill_normal(std::span<double> out) {
        for (double& x : out) x = normal();
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline std::vector<std::size_t> index_permutation(std::size_t n, Rng& rng,
                                                  bool shuffled = true) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (shuffled) rng.shuffle(idx);
    return idx;
}

}  // namespace mkge
