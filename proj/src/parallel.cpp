#include "curation/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>


namespace curation {

namespace parallel {

namespace {
std::atomic<std::size_t> g_threads{1};
}

void set_threads(std::size_t n) { g_threads.store(std::max<std::size_t>(n, 1)); }

std::size_t threads() noexcept { return g_threads.load(); }

void for_blocks(std::size_t n, std::size_t block, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    block = std::max<std::size_t>(block, 1);
    const std::size_t nblocks = (n + block - 1) / block;
    const std::size_t workers = std::min(threads(), nblocks);
    if (workers <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) {
            fn(b * block, std::min(n, (b + 1) * block));
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) {
            try {
                fn(b * block, std::min(n, (b + 1) * block));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace parallel

}  // namespace curation
