#include "libs/thread_pool.hpp"

#include <atomic>
#include <memory>
#include <cstdlib>
#include <string>

namespace libs {

namespace {
thread_local bool inside_pool_task = false;
}

ThreadPool::ThreadPool(std::size_t workers) {
    if (workers == 0) {
        workers = 1;
    }
    workers_.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) {
        w.join();
    }
}

void ThreadPool::worker_loop() {
    inside_pool_task = true;
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(mutex_);
            wake_.wait(lock, [this] { return stop_ || !tasks_.empty(); });
            if (stop_ && tasks_.empty()) {
                return;
            }
            task = std::move(tasks_.front());
            tasks_.pop();
        }
        task();
    }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    // Nested use runs inline: a blocked pool thread must not wait on
    // tasks that only pool threads can run.
    if (inside_pool_task || workers_.empty() || n == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    // Shared state keeps straggling helper tasks valid after the caller
    // has been released.
    struct ForState {
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> done{0};
        std::size_t total;
        const std::function<void(std::size_t)>* body;
        std::mutex m;
        std::condition_variable cv;
    };
    auto st = std::make_shared<ForState>();
    st->total = n;
    st->body = &fn;

    auto drain = [st] {
        std::size_t i;
        while ((i = st->next.fetch_add(1)) < st->total) {
            (*st->body)(i);
            if (st->done.fetch_add(1) + 1 == st->total) {
                std::lock_guard lock(st->m);
                st->cv.notify_one();
            }
        }
    };

    std::size_t helpers = std::min(workers_.size(), n - 1);
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < helpers; ++i) {
            tasks_.push(drain);
        }
    }
    wake_.notify_all();

    drain();  // calling thread participates

    std::unique_lock lock(st->m);
    st->cv.wait(lock, [&] { return st->done.load() == n; });
}

std::size_t default_worker_count() {
    if (const char* env = std::getenv("LIBS_WORKERS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace libs
