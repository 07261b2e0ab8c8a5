#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hdexp {

// Fixed-size worker pool with a blocking parallel_for.  Work items are
// indices; each index is computed by exactly one worker and writes only
// its own output slot, so results never depend on the thread count.
// Calls made from inside a worker run inline (no nested fan-out).
class ThreadPool {
public:
    explicit ThreadPool(unsigned n_threads) { resize(n_threads); }
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;
    ~ThreadPool() { stop(); }

    [[nodiscard]] unsigned size() const { return static_cast<unsigned>(workers_.size()) + 1; }

    void resize(unsigned n_threads) {
        stop();
        n_threads = std::max(1u, n_threads);
        done_ = false;
        for (unsigned i = 1; i < n_threads; ++i) workers_.emplace_back([this] { worker_loop(); });
    }

    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
        if (n == 0) return;
        if (workers_.empty() || in_worker() || n == 1) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        std::unique_lock lock(submit_mutex_);  // one job at a time
        {
            std::lock_guard g(m_);
            job_ = &fn;
            n_ = n;
            next_.store(0);
            pending_ = workers_.size();
            error_ = nullptr;
            ++generation_;
        }
        cv_.notify_all();
        run_items();
        std::unique_lock g(m_);
        done_cv_.wait(g, [this] { return pending_ == 0; });
        job_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    static bool& in_worker() {
        thread_local bool flag = false;
        return flag;
    }

    void run_items() {
        bool saved = in_worker();
        in_worker() = true;
        for (;;) {
            std::size_t i = next_.fetch_add(1);
            if (i >= n_) break;
            try {
                (*job_)(i);
            } catch (...) {
                std::lock_guard g(m_);
                if (!error_) error_ = std::current_exception();
            }
        }
        in_worker() = saved;
    }

    void worker_loop() {
        in_worker() = true;
        std::size_t seen = 0;
        for (;;) {
            {
                std::unique_lock g(m_);
                cv_.wait(g, [&] { return done_ || generation_ != seen; });
                if (done_) return;
                seen = generation_;
            }
            run_items();
            std::lock_guard g(m_);
            if (--pending_ == 0) done_cv_.notify_all();
        }
    }

    void stop() {
        {
            std::lock_guard g(m_);
            done_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
        workers_.clear();
    }

    std::vector<std::thread> workers_;
    std::mutex m_, submit_mutex_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t n_ = 0;
    std::atomic<std::size_t> next_{0};
    std::size_t pending_ = 0;
    std::size_t generation_ = 0;
    bool done_ = false;
    std::exception_ptr error_;
};

inline unsigned default_thread_count() { return std::max(1u, std::thread::hardware_concurrency()); }

inline ThreadPool& global_pool() {
    static ThreadPool pool(1);
    return pool;
}

inline void set_thread_count(unsigned n) { global_pool().resize(n == 0 ? default_thread_count() : n); }

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    global_pool().parallel_for(n, fn);
}

}  // namespace hdexp
