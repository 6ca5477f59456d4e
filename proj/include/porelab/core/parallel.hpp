#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace porelab {

inline int& worker_threads() {
    static int n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

// Runs fn(begin, end) over disjoint slabs of [0, n). The slab partition is
// fixed (independent of the thread count), so per-slab work is reproducible.
inline void parallel_for_slabs(int n, const std::function<void(int, int)>& fn) {
    const int threads = std::min(worker_threads(), n);
    if (threads <= 1 || n <= 1) {
        if (n > 0) fn(0, n);
        return;
    }
    const int slabs = std::min(n, 4 * threads);
    std::atomic<int> next{0};
    auto work = [&] {
        for (;;) {
            const int s = next.fetch_add(1);
            if (s >= slabs) return;
            const int b = static_cast<int>(static_cast<long long>(s) * n / slabs);
            const int e = static_cast<int>(static_cast<long long>(s + 1) * n / slabs);
            if (b < e) fn(b, e);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

// Deterministic parallel reduction: partial sums are computed per fixed slab
// and combined in slab order, so the result does not depend on thread count.
inline double parallel_sum_slabs(int n, const std::function<double(int, int)>& fn) {
    const int slabs = std::max(1, std::min(n, 64));
    std::vector<double> partial(slabs, 0.0);
    parallel_for_slabs(slabs, [&](int sb, int se) {
        for (int s = sb; s < se; ++s) {
            const int b = static_cast<int>(static_cast<long long>(s) * n / slabs);
            const int e = static_cast<int>(static_cast<long long>(s + 1) * n / slabs);
            partial[s] = fn(b, e);
        }
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace porelab
