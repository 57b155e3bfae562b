// parallel.hpp - static-partition parallel loops.
//
// Every output element is written by exactly one worker and the per-element
// arithmetic order never depends on the worker count, so results are
// bit-identical for any --threads setting.

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace g2s {

class Parallel {
public:
    static int threads() { return threads_(); }

    static void set_threads(int n) {
        threads_() = std::max(1, n);
    }

    // Calls fn(begin, end) on contiguous chunks of [0, n). min_serial is the
    // size below which spawning threads costs more than it saves.
    template <typename Fn>
    static void for_range(std::size_t n, Fn&& fn, std::size_t min_serial = 2048) {
        int t = threads_();
        if (t <= 1 || n < min_serial) {
            if (n > 0) fn(std::size_t{0}, n);
            return;
        }
        std::size_t nchunks = std::min<std::size_t>(static_cast<std::size_t>(t), n);
        std::size_t chunk = (n + nchunks - 1) / nchunks;
        std::vector<std::thread> workers;
        workers.reserve(nchunks);
        for (std::size_t c = 0; c < nchunks; ++c) {
            std::size_t b = c * chunk;
            std::size_t e = std::min(n, b + chunk);
            if (b >= e) break;
            workers.emplace_back([&fn, b, e] { fn(b, e); });
        }
        for (auto& w : workers) w.join();
    }

private:
    static int& threads_() {
        static int value = defaults();
        return value;
    }
    static int defaults() {
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }
};

}  // namespace g2s
