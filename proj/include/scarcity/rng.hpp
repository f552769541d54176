#pragma once

#include <cstdint>
#include <limits>

namespace scarcity {

/// Who owns a stream. Streams are keyed by (master seed, role, agent), never by draw order,
/// so adding a consumer or reordering agents leaves every other stream untouched.
enum class StreamRole : std::uint32_t {
    WarmStart = 1,
    PInit = 2,
    Decide = 3,
    Adapt = 4,
    Forecast = 5,
    Bootstrap = 6,
};

struct StreamId {
    StreamRole role;
    std::uint32_t agent = 0;

    friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Counter-based SplitMix64 stream. Draw k is a pure function of (seed, stream id, k).
/// Satisfies UniformRandomBitGenerator. Single owner: never share an instance across workers.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, StreamId id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer on [lo, hi] inclusive (rejection sampling, unbiased).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    std::uint64_t seed() const noexcept { return seed_; }
    StreamId id() const noexcept { return id_; }
    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    StreamId id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

} // namespace scarcity
