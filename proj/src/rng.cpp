#include "fthresh/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

namespace fthresh {

double uniform01(SplitMix64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double standard_normal(SplitMix64& gen) {
    // 1 - U keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01(gen);
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t uniform_index(SplitMix64& gen, std::size_t bound) {
    // Lemire's multiply-shift with rejection.
    const auto range = static_cast<std::uint64_t>(bound);
    std::uint64_t x = gen();
    __uint128_t m = static_cast<__uint128_t>(x) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
        const std::uint64_t threshold = (0 - range) % range;
        while (low < threshold) {
            x = gen();
            m = static_cast<__uint128_t>(x) * range;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::size_t>(m >> 64);
}

std::vector<std::size_t> random_permutation(SplitMix64& gen, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::swap(perm[i - 1], perm[uniform_index(gen, i)]);
    }
    return perm;
}

}
