#include "fharm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace fharm {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads = std::max(1, n); }
int thread_count() { return g_threads; }

void parallel_blocks(std::size_t count, std::size_t block,
                     const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    block = std::max<std::size_t>(1, block);
    const std::size_t nblocks = (count + block - 1) / block;
    const std::size_t workers = std::min<std::size_t>(thread_count(), nblocks);
    auto run = [&](std::size_t b) { body(b * block, std::min(count, (b + 1) * block)); };
    if (workers <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) run(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t b = next++; b < nblocks; b = next++) run(b);
        });
    }
    for (auto& t : pool) t.join();
}

double parallel_sum(std::size_t count, const std::function<double(std::size_t)>& f,
                    std::size_t block) {
    block = std::max<std::size_t>(1, block);
    const std::size_t nblocks = (count + block - 1) / block;
    std::vector<double> partial(nblocks, 0.0);
    parallel_blocks(count, block, [&](std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += f(i);
        partial[b / block] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace fharm
