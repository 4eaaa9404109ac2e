#include "hflow/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "hflow/errors.hpp"

namespace hflow {

namespace {
int g_workers = 1;
}

void set_worker_threads(int n) {
    if (n < 1) throw ValidationError("worker thread count must be at least 1");
    g_workers = n;
}

int worker_threads() { return g_workers; }

void parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    int workers = std::min(g_workers, n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hflow
