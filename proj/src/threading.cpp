#include "dbc/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace dbc {

std::size_t worker_count() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("DBC_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    }
    return n;
}

void parallel_for_blocks(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    const std::size_t total = end > begin ? end - begin : 0;
    const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(total, 1));
    if (workers <= 1 || total < 2) {
        if (total > 0) body(begin, end);
        return;
    }
    const std::size_t block = (total + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = begin + w * block;
        if (lo >= end) break;
        std::size_t hi = std::min(end, lo + block);
        threads.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : threads) t.join();
}

}  // namespace dbc
