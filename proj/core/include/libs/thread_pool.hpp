#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace libs {

/// Fixed-size worker pool for data-parallel loops. parallel_for blocks
/// until every index is done; the calling thread participates, and calls
/// made from inside a pool task degrade to sequential execution instead
/// of deadlocking.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t worker_count() const { return workers_.size(); }

    /// Runs fn(i) for i in [0, n) across the pool.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

private:
    void worker_loop();

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::queue<std::function<void()>> tasks_;
    bool stop_ = false;
};

/// Worker count from the LIBS_WORKERS environment variable, falling back
/// to the hardware concurrency.
std::size_t default_worker_count();

}  // namespace libs
