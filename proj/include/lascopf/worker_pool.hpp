#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lascopf {

// Fixed-size pool. Nested parallel_for calls from inside a task run inline.
class WorkerPool {
public:
    explicit WorkerPool(int workers);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    int size() const { return static_cast<int>(threads_.size()) + 1; }
    void parallel_for(int n, const std::function<void(int)>& fn);

private:
    struct Job;
    void worker_loop();

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_;
    Job* job_ = nullptr;
    unsigned long generation_ = 0;
    int active_ = 0;
    bool stop_ = false;
};

// Runs inline when pool is null.
void parallel_for(WorkerPool* pool, int n, const std::function<void(int)>& fn);

}  // namespace lascopf
