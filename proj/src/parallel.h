#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace bellqma::detail {

/// Splits [0, count) into contiguous chunks, one per worker, and runs
/// fn(begin, end, accumulator) on each. Accumulators come back in chunk order.
template <class Accumulator, class Fn>
std::vector<Accumulator> parallel_chunks(std::uint64_t count, unsigned workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::clamp<std::uint64_t>(count, 1, workers));
    std::vector<Accumulator> partial(workers);
    auto run = [&](unsigned w) { fn(count * w / workers, count * (w + 1) / workers, partial[w]); };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) threads.emplace_back(run, w);
    }
    return partial;
}

}  // namespace bellqma::detail
