#include "sepda/parallel.hpp"

#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>
#include <vector>

namespace sepda {

WorkerPool::WorkerPool(int workers) : workers_(workers) {
    if (workers < 1) {
        throw std::invalid_argument("WorkerPool: worker count must be >= 1");
    }
}

void WorkerPool::for_index(std::size_t count, const std::function<void(std::size_t)> &fn) const {
    if (count == 0) {
        return;
    }
    if (workers_ == 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto run = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t nthreads = std::min<std::size_t>(workers_, count);
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        threads.emplace_back(run);
    }
    for (auto &t : threads) {
        t.join();
    }
    // Rethrow the lowest-index failure so diagnostics do not depend on
    // scheduling order.
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace sepda
