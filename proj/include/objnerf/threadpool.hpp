#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace objnerf {

// Fixed-size worker pool running chunked index ranges. Work is split into a
// chunk count that depends only on the problem size, never on the worker
// count, so callers that merge per-chunk outputs in chunk order get results
// independent of parallelism.
class ThreadPool {
public:
    explicit ThreadPool(int n_workers);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int size() const { return int(workers_.size()) + 1; } // workers + caller

    // fn(chunk_index, begin, end); blocks until all chunks are done.
    void run_chunks(int64_t n_items, int64_t chunk_size,
                    const std::function<void(int, int64_t, int64_t)>& fn);

    // Process-wide pool sized from OBJNERF_THREADS (default: hardware threads).
    static ThreadPool& global();
    // Replaces the global pool; used by tests and the CLI --threads flag.
    static void set_global_size(int n);

private:
    void worker_loop();

    std::vector<std::thread> workers_;
    std::mutex job_gate_; // serializes concurrent top-level run_chunks calls
    std::mutex mutex_;
    std::condition_variable cv_work_;
    std::condition_variable cv_done_;
    const std::function<void(int, int64_t, int64_t)>* job_ = nullptr;
    int64_t job_items_ = 0;
    int64_t job_chunk_ = 0;
    int job_chunk_count_ = 0;
    int next_chunk_ = 0;
    int busy_ = 0;
    uint64_t generation_ = 0;
    bool stop_ = false;
};

// Convenience: parallel loop over [0, n) in deterministic chunks.
void parallel_chunks(int64_t n_items, int64_t chunk_size,
                     const std::function<void(int, int64_t, int64_t)>& fn);

} // namespace objnerf
