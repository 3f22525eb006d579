#ifndef FTHRESH_RNG_HPP
#define FTHRESH_RNG_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace fthresh {

/**
 * SplitMix64: a counter-based 64-bit generator (state advances by a fixed
 * odd increment, output is a bijective mix of the counter).
 *
 * All randomness in the library goes through this type and the helpers below,
 * which avoid the implementation-defined `std::*_distribution` classes, so a
 * seed reproduces the same stream on every platform.
 */
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    result_type operator()() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

/// Seed of the independent sub-stream `stream` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return SplitMix64::mix(master ^ SplitMix64::mix(stream + 0x632BE59BD9B4E019ULL));
}

/// Uniform on [0, 1) with 53 random bits.
double uniform01(SplitMix64& gen);

/// Standard normal via Box–Muller (one draw per call, two uniforms consumed).
double standard_normal(SplitMix64& gen);

/// Uniform integer in [0, bound) without modulo bias.
std::size_t uniform_index(SplitMix64& gen, std::size_t bound);

/// Random permutation of 0..n-1 (Fisher–Yates).
std::vector<std::size_t> random_permutation(SplitMix64& gen, std::size_t n);

}

#endif
