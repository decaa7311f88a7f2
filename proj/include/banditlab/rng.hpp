#pragma once
// Counter-based uniform stream: every draw is a pure function of
// (master_seed, replicate, draw_index), so replicates can run on any worker
// in any order and still consume identical randomness.
//
// Construction: the splitmix64 finalizer applied to an affine counter walk
// (Steele, Lea & Flood 2014; Vigna 2015). Stream keys are derived from
// (master_seed, replicate) through the same finalizer, which avalanches
// related seeds apart.

#include <cstdint>

namespace banditlab {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class UniformStream {
  public:
    UniformStream(std::uint64_t master_seed, std::uint64_t replicate)
        : key_(mix64(master_seed + kGoldenGamma * (replicate + 1)) ^
               0xD1B54A32D192ED03ULL) {}

    // j-th 64-bit word of this stream.
    std::uint64_t word(std::uint64_t j) const {
        return mix64(key_ + kGoldenGamma * (j + 1));
    }

    // j-th uniform draw in [0,1), 53-bit resolution.
    double uniform(std::uint64_t j) const {
        return static_cast<double>(word(j) >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t key_;
};

}  // namespace banditlab
