#include "lascopf/worker_pool.hpp"

#include <atomic>
#include <exception>

namespace lascopf {

namespace {
thread_local bool inside_task = false;
}

struct WorkerPool::Job {
    const std::function<void(int)>* fn = nullptr;
    int n = 0;
    std::atomic<int> next{0};
    std::atomic<int> finished{0};
    std::mutex err_mu;
    std::exception_ptr error;
    int error_index = -1;

    void run() {
        const bool was_inside = inside_task;
        inside_task = true;
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                (*fn)(i);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (error_index < 0 || i < error_index) {
                    error = std::current_exception();
                    error_index = i;
                }
            }
            finished.fetch_add(1);
        }
        inside_task = was_inside;
    }
};

WorkerPool::WorkerPool(int workers) {
    for (int i = 1; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::worker_loop() {
    unsigned long seen = 0;
    while (true) {
        Job* job = nullptr;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stop_ || (job_ && generation_ != seen); });
            if (stop_) return;
            seen = generation_;
            job = job_;
            ++active_;
        }
        job->run();
        {
            std::lock_guard lock(mu_);
            --active_;
        }
        cv_.notify_all();
    }
}

void WorkerPool::parallel_for(int n, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads_.empty() || inside_task || n == 1) {
        Job local;
        local.fn = &fn;
        local.n = n;
        local.run();
        if (local.error) std::rethrow_exception(local.error);
        return;
    }
    Job job;
    job.fn = &fn;
    job.n = n;
    {
        std::lock_guard lock(mu_);
        job_ = &job;
        ++generation_;
    }
    cv_.notify_all();
    job.run();
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return job.finished.load() == n && active_ == 0; });
        job_ = nullptr;
    }
    if (job.error) std::rethrow_exception(job.error);
}

void parallel_for(WorkerPool* pool, int n, const std::function<void(int)>& fn) {
    if (pool) {
        pool->parallel_for(n, fn);
        return;
    }
    for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace lascopf
