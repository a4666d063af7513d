#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace bdre {

/// Number of worker threads used when a caller passes 0.
inline unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Evaluates `body(batch_begin, batch_end) -> Acc` on fixed batches of
/// [0, n) and merges the per-batch accumulators with `merge(Acc&, const Acc&)`
/// in batch order. Batch boundaries depend only on n and batch_size, so the
/// result is identical for every thread count.
template <class Acc, class Body, class Merge>
Acc parallel_batches(std::size_t n, std::size_t batch_size, unsigned threads, Body&& body,
                     Merge&& merge) {
    if (batch_size == 0) batch_size = 1;
    const std::size_t batches = (n + batch_size - 1) / batch_size;
    std::vector<Acc> partial(batches);
    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(batches, 1)));

    auto run_range = [&](std::size_t first_batch, std::size_t stride) {
        for (std::size_t b = first_batch; b < batches; b += stride) {
            const std::size_t lo = b * batch_size;
            const std::size_t hi = std::min(n, lo + batch_size);
            partial[b] = body(lo, hi);
        }
    };

    if (threads <= 1) {
        run_range(0, 1);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    run_range(t, threads);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    Acc total{};
    for (const auto& acc : partial) merge(total, acc);
    return total;
}

}  // namespace bdre
