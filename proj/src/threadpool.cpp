#include "objnerf/threadpool.hpp"

#include <cstdlib>
#include <memory>
#include <stdexcept>

namespace objnerf {

ThreadPool::ThreadPool(int n_workers) {
    if (n_workers < 1) n_workers = 1;
    for (int i = 0; i < n_workers - 1; ++i)
        workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lk(mutex_);
        stop_ = true;
    }
    cv_work_.notify_all();
    for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop() {
    uint64_t seen = 0;
    for (;;) {
        const std::function<void(int, int64_t, int64_t)>* job;
        {
            std::unique_lock<std::mutex> lk(mutex_);
            cv_work_.wait(lk, [&] { return stop_ || (job_ && generation_ != seen); });
            if (stop_) return;
            seen = generation_;
            job = job_;
            ++busy_;
        }
        for (;;) {
            int c;
            {
                std::lock_guard<std::mutex> lk(mutex_);
                if (next_chunk_ >= job_chunk_count_) break;
                c = next_chunk_++;
            }
            int64_t b = int64_t(c) * job_chunk_;
            int64_t e = std::min(job_items_, b + job_chunk_);
            (*job)(c, b, e);
        }
        {
            std::lock_guard<std::mutex> lk(mutex_);
            --busy_;
        }
        cv_done_.notify_all();
    }
}

void ThreadPool::run_chunks(int64_t n_items, int64_t chunk_size,
                            const std::function<void(int, int64_t, int64_t)>& fn) {
    if (n_items <= 0) return;
    if (chunk_size < 1) chunk_size = 1;
    int chunk_count = int((n_items + chunk_size - 1) / chunk_size);

    if (workers_.empty() || chunk_count == 1) {
        for (int c = 0; c < chunk_count; ++c) {
            int64_t b = int64_t(c) * chunk_size;
            fn(c, b, std::min(n_items, b + chunk_size));
        }
        return;
    }

    std::lock_guard<std::mutex> job_lk(job_gate_);
    {
        std::lock_guard<std::mutex> lk(mutex_);
        job_ = &fn;
        job_items_ = n_items;
        job_chunk_ = chunk_size;
        job_chunk_count_ = chunk_count;
        next_chunk_ = 0;
        ++generation_;
    }
    cv_work_.notify_all();

    // the caller participates too
    for (;;) {
        int c;
        {
            std::lock_guard<std::mutex> lk(mutex_);
            if (next_chunk_ >= job_chunk_count_) break;
            c = next_chunk_++;
        }
        int64_t b = int64_t(c) * chunk_size;
        fn(c, b, std::min(n_items, b + chunk_size));
    }

    std::unique_lock<std::mutex> lk(mutex_);
    cv_done_.wait(lk, [&] { return busy_ == 0; });
    job_ = nullptr;
}

namespace {
std::unique_ptr<ThreadPool> g_pool;
std::mutex g_pool_mutex;

int default_pool_size() {
    if (const char* env = std::getenv("OBJNERF_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}
} // namespace

ThreadPool& ThreadPool::global() {
    std::lock_guard<std::mutex> lk(g_pool_mutex);
    if (!g_pool) g_pool = std::make_unique<ThreadPool>(default_pool_size());
    return *g_pool;
}

void ThreadPool::set_global_size(int n) {
    std::lock_guard<std::mutex> lk(g_pool_mutex);
    g_pool = std::make_unique<ThreadPool>(n);
}

void parallel_chunks(int64_t n_items, int64_t chunk_size,
                     const std::function<void(int, int64_t, int64_t)>& fn) {
    ThreadPool::global().run_chunks(n_items, chunk_size, fn);
}

} // namespace objnerf
