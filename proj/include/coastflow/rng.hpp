#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace coastflow {

/// FNV-1a 64-bit hash of a string (used to derive stage seeds from names).
std::uint64_t fnv1a64(std::string_view s);

/// SplitMix64 output function: maps x to a well-mixed 64-bit value.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed-splitting rule shared by every stage of the pipeline:
///   derive_seed(master, stage, index) = splitmix64(splitmix64(master ^ fnv1a64(stage)) + index)
/// Deterministic, documented, and collision-resistant enough for disjoint
/// per-member RNG streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index);

/// Seeded generator with the draw helpers the pipeline needs.
/// One instance per (stage, member) stream; never shared across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }
    std::uint64_t next_u64() { return eng_(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
        return d(eng_);
    }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace coastflow
