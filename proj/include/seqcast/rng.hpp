#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace seqcast {

// Counter-based generator: each draw hashes (key, counter), so streams can be
// split by key without sharing state. Reproducible independent of call order
// across split children.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ 0x9e3779b97f4a7c15ull, stream)), counter_(0) {}

    // Child generator with an independent stream derived from this key.
    Rng split(std::uint64_t stream) const {
        Rng child(*this);
        child.key_ = mix(key_, stream + 0x5851f42d4c957f2dull);
        child.counter_ = 0;
        return child;
    }

    std::uint64_t next_u64() { return mix(key_, ++counter_); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one value per call, deterministic.
    double normal() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return next_u64() % n; // modulo bias negligible for n << 2^64
    }

    // Fisher-Yates permutation of {0..n-1}.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    // splitmix64-style finalizer over the pair.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace seqcast
