#pragma once

#include <cstdint>

namespace evf {

/// SplitMix64 generator. Chosen because the output sequence is fixed by the
/// algorithm itself, so seeded streams reproduce bit-for-bit across
/// compilers and standard libraries (std distributions do not guarantee
/// that). `split()` derives an independent child generator.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound); bound 0 yields 0. Multiply-shift
    /// mapping, bias below 2^-32 for the bounds used here.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) return 0;
        return std::uint64_t((static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() { return double(next() >> 11) * 0x1.0p-53; }

    SplitMix64 split() { return SplitMix64(next() ^ 0x3C79AC492BA7B653ULL); }

private:
    std::uint64_t state_;
};

} // namespace evf
