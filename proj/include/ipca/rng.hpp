#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace ipca {

/// Counter-based random stream. Draw k of stream (seed, index) is a fixed
/// hash of (seed, index, k), so a trial's samples do not depend on which
/// thread runs it or on what other trials have drawn.
///
/// Satisfies UniformRandomBitGenerator so standard distributions can be
/// driven from it.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal.
    double normal();

    std::uint64_t draws() const noexcept { return counter_; }

    /// Independent child stream; used to give a trial's side computations
    /// (e.g. collapse replacements) their own sequence.
    RngStream child(std::uint64_t tag) const;

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace ipca
