#include "hps/pool.hpp"

#include <algorithm>
#include <cmath>

#include "hps/error.hpp"

namespace hps {

void PoolConfig::validate() const
{
    if (max_concurrent < 1)
        throw ContractViolation("pool: max_concurrent must be >= 1");
    if (check_timeout_ms < 1)
        throw ContractViolation("pool: check_timeout_ms must be >= 1");
    if (queue_capacity < 1)
        throw ContractViolation("pool: queue_capacity must be >= 1");
}

double nearest_rank(std::vector<double> samples, double q)
{
    if (samples.empty())
        return 0.0;
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n));
    rank = std::clamp<std::size_t>(rank, 1, samples.size());
    return samples[rank - 1];
}

VerifyPool::VerifyPool(std::shared_ptr<const Checker> checker, PoolConfig config)
    : checker_(std::move(checker)), config_(config)
{
    config_.validate();
    if (!checker_)
        throw ContractViolation("VerifyPool: null checker");
    watchdog_ = std::jthread([this] { watchdog_loop(); });
}

VerifyPool::~VerifyPool()
{
    {
        std::lock_guard lock(mu_);
        shutting_down_ = true;
    }
    cancel_all("pool shut down");
    work_cv_.notify_all();
    watch_cv_.notify_all();
    for (auto& w : workers_)
        if (w.joinable())
            w.join();
    if (watchdog_.joinable())
        watchdog_.join();
}

JobHandle VerifyPool::submit(Obligation obligation, std::optional<std::int64_t> timeout_override)
{
    std::lock_guard lock(mu_);
    if (shutting_down_)
        throw ContractViolation("VerifyPool: submit during shutdown");
    if (static_cast<std::int64_t>(queue_.size()) >= config_.queue_capacity)
        throw QueueFull("verification queue is full (" + std::to_string(config_.queue_capacity) + " jobs)");

    auto job = std::make_shared<Job>();
    job->id = "job-" + std::to_string(next_id_++);
    job->obligation = std::move(obligation);
    job->timeout_ms = std::max<std::int64_t>(1, std::min(timeout_override.value_or(config_.check_timeout_ms),
                                                    config_.check_timeout_ms));
    const JobHandle handle{job->id, std::chrono::steady_clock::now()};
    queue_.push_back(job);
    jobs_.emplace(job->id, job);
    ++counters_.submitted;
    ++counters_.queued;

    const auto threads = static_cast<std::int64_t>(workers_.size());
    if (threads < config_.max_concurrent && threads - busy_ < static_cast<std::int64_t>(queue_.size()))
        workers_.emplace_back([this] { worker_loop(); });
    work_cv_.notify_one();
    return handle;
}

void VerifyPool::finish(Job& job, CheckVerdict verdict)
{
    job.state = JobState::Done;
    job.verdict = std::move(verdict);
    done_cv_.notify_all();
}

void VerifyPool::worker_loop()
{
    std::unique_lock lock(mu_);
    for (;;) {
        ++idle_workers_;
        work_cv_.wait(lock, [&] { return shutting_down_ || (!queue_.empty() && busy_ < config_.max_concurrent); });
        --idle_workers_;
        if (shutting_down_)
            return;

        auto job = queue_.front();
        queue_.pop_front();
        --counters_.queued;
        ++busy_;
        ++counters_.in_flight;
        counters_.peak_in_flight = std::max(counters_.peak_in_flight, counters_.in_flight);
        job->state = JobState::Running;
        job->started = std::chrono::steady_clock::now();
        job->deadline = job->started + std::chrono::milliseconds(job->timeout_ms);
        running_.push_back(job);
        watch_cv_.notify_one();
        lock.unlock();

        CheckVerdict verdict;
        try {
            verdict = checker_->check(job->obligation, job->timeout_ms, job->stop.get_token());
        } catch (const std::exception& e) {
            verdict = CheckVerdict::error(e.what());
        }

        lock.lock();
        --busy_;
        running_.erase(std::find(running_.begin(), running_.end(), job));
        if (job->state != JobState::Done) {
            // The watchdog or cancel_all has not claimed it, so this result stands.
            const std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - job->started;
            latencies_.push_back(took.count());
            --counters_.in_flight;
            ++counters_.completed;
            finish(*job, std::move(verdict));
        }
        work_cv_.notify_one();
    }
}

void VerifyPool::watchdog_loop()
{
    std::unique_lock lock(mu_);
    while (!shutting_down_) {
        auto next = std::chrono::steady_clock::time_point::max();
        const auto now = std::chrono::steady_clock::now();
        for (auto& job : running_) {
            if (job->state != JobState::Running)
                continue;
            if (job->deadline <= now) {
                job->stop.request_stop();
                --counters_.in_flight;
                ++counters_.timed_out;
                finish(*job, CheckVerdict::timeout(job->timeout_ms));
            } else {
                next = std::min(next, job->deadline);
            }
        }
        if (next == std::chrono::steady_clock::time_point::max())
            watch_cv_.wait(lock);
        else
            watch_cv_.wait_until(lock, next);
    }
}

CheckVerdict VerifyPool::await(const JobHandle& handle)
{
    std::unique_lock lock(mu_);
    auto it = jobs_.find(handle.job_id);
    if (it == jobs_.end())
        throw UnknownHandle("unknown job handle '" + handle.job_id + "'");
    auto job = it->second;
    done_cv_.wait(lock, [&] { return job->state == JobState::Done; });
    jobs_.erase(handle.job_id);
    return *job->verdict;
}

std::size_t VerifyPool::cancel_all(const std::string& reason)
{
    std::lock_guard lock(mu_);
    const std::string why = reason == "cancelled" ? reason : "cancelled: " + reason;
    std::size_t n = 0;
    for (auto& job : queue_) {
        --counters_.queued;
        ++counters_.cancelled;
        finish(*job, CheckVerdict::error(why));
        ++n;
    }
    queue_.clear();
    for (auto& job : running_) {
        if (job->state != JobState::Running)
            continue;
        job->stop.request_stop();
        --counters_.in_flight;
        ++counters_.cancelled;
        finish(*job, CheckVerdict::error(why));
        ++n;
    }
    return n;
}

PoolStats VerifyPool::stats() const
{
    std::lock_guard lock(mu_);
    PoolStats s = counters_;
    s.p50_ms = nearest_rank(latencies_, 0.50);
    s.p95_ms = nearest_rank(latencies_, 0.95);
    s.p99_ms = nearest_rank(latencies_, 0.99);
    return s;
}

std::vector<double> VerifyPool::latencies() const
{
    std::lock_guard lock(mu_);
    return latencies_;
}

} // namespace hps
