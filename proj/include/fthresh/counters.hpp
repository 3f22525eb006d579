#ifndef FTHRESH_COUNTERS_HPP
#define FTHRESH_COUNTERS_HPP

#include <cstdint>

namespace fthresh {

/// Work tallies gathered while smoothing: kernel evaluations and additions/multiplications.
struct OpCounts {
    std::uint64_t kernel_evals = 0;
    std::uint64_t arithmetic_ops = 0;

    OpCounts& operator+=(const OpCounts& other) {
        kernel_evals += other.kernel_evals;
        arithmetic_ops += other.arithmetic_ops;
        return *this;
    }
};

}

#endif
