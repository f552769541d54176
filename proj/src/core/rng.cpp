#include "scarcity/rng.hpp"

#include "scarcity/error.hpp"

namespace scarcity {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed, StreamId id)
    : seed_(seed)
    , id_(id)
{
    const std::uint64_t tag = (static_cast<std::uint64_t>(id.role) << 32) | id.agent;
    key_ = mix64(mix64(seed + kGolden) ^ mix64(tag * kGolden + 0x632BE59BD9B4E019ULL));
}

std::uint64_t RngStream::next_u64()
{
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi)
{
    if (hi < lo) {
        throw InvalidArgument("uniform_int: empty range");
    }
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) { // full 64-bit span
        return static_cast<std::int64_t>(next_u64());
    }
    const std::uint64_t limit = max() - max() % range;
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
        draw = next_u64();
    }
    return lo + static_cast<std::int64_t>(draw % range);
}

} // namespace scarcity
