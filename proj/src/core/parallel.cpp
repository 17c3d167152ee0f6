#include "parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "errors.hpp"

namespace amfm {

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    if (threads < 1) throw ParamError("thread count must be at least 1");
    const int workers = std::min(threads, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const int chunk = (count + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(count, lo + chunk);
        pool.emplace_back([&, lo, hi] {
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace amfm
