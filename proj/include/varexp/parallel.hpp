#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace varexp::detail {

/// Runs fn(0..count-1) on up to `threads` workers; results must be written to per-index slots.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    if (threads <= 1 || count < 2) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, count); ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace varexp::detail
