#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace hdexp {

// Counter-based generator: every draw is the SplitMix64 finalizer applied to
// a (seed, stream, counter) key.  No state is carried between draws, so any
// draw can be recomputed in isolation and work can be split across threads
// without changing a single bit.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    [[nodiscard]] std::uint64_t bits(std::uint64_t counter) const {
        return splitmix64(splitmix64(seed_ ^ splitmix64(stream_)) + counter * 0xd1b54a32d192ed03ull);
    }

    // uniform on [0, 1) with 53 random bits
    [[nodiscard]] double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    // uniform in the open unit disk: square-root radius, uniform angle
    [[nodiscard]] std::complex<double> unit_disk(std::uint64_t counter) const {
        double rad = std::sqrt(uniform(2 * counter));
        double ang = 2.0 * std::numbers::pi * uniform(2 * counter + 1);
        return std::polar(rad, ang);
    }

    [[nodiscard]] CounterRng substream(std::uint64_t s) const { return {seed_, splitmix64(stream_ + s)}; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

}  // namespace hdexp
