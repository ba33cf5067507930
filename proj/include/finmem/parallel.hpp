#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace finmem {

/// Calls fn(begin, end) over contiguous chunks of [0, n) on up to `threads` workers.
/// Each index is visited by exactly one worker, so results do not depend on the
/// thread count as long as fn writes only to its own indices.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (workers == 1 || n < 256) {
        fn(std::size_t(0), n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    fn(std::size_t(0), std::min(n, chunk));
}

} // namespace finmem
