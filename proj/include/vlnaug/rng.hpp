#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace vlnaug {

/// 64-bit FNV-1a; stable across platforms, used to derive per-unit seeds.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for an independent work unit (clip, shard, sample) so results do not
/// depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::string_view unit_id) noexcept;

/// Seeded random source. The distributions are implemented here rather than
/// through <random> distributions, whose output is implementation-defined;
/// this keeps generated files byte-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n);

    /// Uniform integer in [lo, hi] inclusive.
    long long uniform_int(long long lo, long long hi);

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Index drawn with probability proportional to weights (all >= 0, sum > 0).
    std::size_t weighted_index(std::span<const double> weights);

    /// Standard normal via Box-Muller.
    double normal();

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::iter_swap(first + (i - 1), first + j);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace vlnaug
