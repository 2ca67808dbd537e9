#include "mbl/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mbl {

namespace {
int g_threads = 0; // 0 = not set explicitly
}

int thread_count() {
    if (g_threads > 0) return g_threads;
    if (const char* env = std::getenv("MBL_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_thread_count(int n) { g_threads = n; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const int nw = thread_count();
    if (nw <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int spawn = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(nw)));
    pool.reserve(spawn - 1);
    for (int t = 0; t < spawn - 1; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

} // namespace mbl
