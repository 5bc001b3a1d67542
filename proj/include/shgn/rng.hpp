#pragma once

#include <cstdint>
#include <random>

namespace shgn {

// Seedable generator used for every initialization draw. std::mt19937_64 is fully
// specified by the standard; the real-valued conversion is done here rather than through
// std::uniform_real_distribution, whose output differs between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used by the hash embedding provider.
std::uint64_t splitmix64(std::uint64_t& state);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace shgn
