#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "ksm/types.hpp"

namespace ksm {

/// Caps the worker count used by parallel_for. 0 restores the hardware default.
void set_max_threads(unsigned n) noexcept;
[[nodiscard]] unsigned max_threads() noexcept;

/// Calls fn(i) for every i in [begin, end) using static contiguous chunks.
/// fn must only write state owned by index i, so results never depend on the
/// schedule.
template <typename Fn>
void parallel_for(Index begin, Index end, Fn&& fn, Index min_chunk = 16) {
    const Index count = end - begin;
    if (count <= 0) {
        return;
    }
    const Index workers = std::min<Index>(static_cast<Index>(max_threads()),
                                          std::max<Index>(1, count / min_chunk));
    if (workers <= 1) {
        for (Index i = begin; i < end; ++i) {
            fn(i);
        }
        return;
    }
    const Index chunk = (count + workers - 1) / workers;
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (Index w = 1; w < workers; ++w) {
        const Index lo = begin + w * chunk;
        const Index hi = std::min(end, lo + chunk);
        if (lo >= hi) {
            break;
        }
        pool.emplace_back([lo, hi, &fn] {
            for (Index i = lo; i < hi; ++i) {
                fn(i);
            }
        });
    }
    for (Index i = begin; i < std::min(end, begin + chunk); ++i) {
        fn(i);
    }
}

}  // namespace ksm
