#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hps/prover.hpp"

namespace hps {

struct PoolConfig {
    std::int64_t max_concurrent = 512;
    std::int64_t check_timeout_ms = 300'000;
    std::int64_t queue_capacity = 4096;

    void validate() const;
    friend bool operator==(const PoolConfig&, const PoolConfig&) = default;
};

struct JobHandle {
    std::string job_id;
    std::chrono::steady_clock::time_point submitted_at;
};

struct PoolStats {
    std::int64_t submitted = 0;
    std::int64_t completed = 0;
    std::int64_t timed_out = 0;
    std::int64_t cancelled = 0;
    std::int64_t in_flight = 0;
    std::int64_t queued = 0;
    std::int64_t peak_in_flight = 0;
    // Nearest-rank quantiles of completed-job latency (start to finish), ms.
    double p50_ms = 0;
    double p95_ms = 0;
    double p99_ms = 0;

    bool conserved() const { return submitted == completed + timed_out + cancelled + in_flight + queued; }
};

class QueueFull : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownHandle : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Nearest-rank quantile (q in (0, 1]) of an unsorted sample; 0 when empty.
double nearest_rank(std::vector<double> samples, double q);

/// Bounded-concurrency verification pool. Jobs start in FIFO order on worker
/// threads, at most max_concurrent at a time. A watchdog times jobs out
/// measured from their start; the checker sees a stop request and its late
/// result is discarded. A timed-out job keeps its worker slot until the
/// checker actually returns, so busy threads never exceed max_concurrent.
class VerifyPool {
public:
    VerifyPool(std::shared_ptr<const Checker> checker, PoolConfig config = {});
    ~VerifyPool();
    VerifyPool(const VerifyPool&) = delete;
    VerifyPool& operator=(const VerifyPool&) = delete;

    /// Effective timeout is min(override, check_timeout_ms). Throws QueueFull.
    JobHandle submit(Obligation obligation, std::optional<std::int64_t> timeout_override = std::nullopt);

    /// Blocks until the job has a verdict. Each handle can be awaited once;
    /// afterwards (or for a foreign handle) this throws UnknownHandle.
    CheckVerdict await(const JobHandle& handle);

    /// Drops queued jobs and signals in-flight ones; all of them resolve to
    /// CheckerError("cancelled"). Returns how many jobs were affected.
    std::size_t cancel_all(const std::string& reason = "cancelled");

    PoolStats stats() const;
    /// Latencies of completed jobs in completion order (ms).
    std::vector<double> latencies() const;

    const PoolConfig& config() const { return config_; }

private:
    enum class JobState : std::uint8_t { Queued, Running, Done };

    struct Job {
        std::string id;
        Obligation obligation;
        std::int64_t timeout_ms = 0;
        JobState state = JobState::Queued;
        std::optional<CheckVerdict> verdict;
        std::chrono::steady_clock::time_point started;
        std::chrono::steady_clock::time_point deadline;
        std::stop_source stop;
    };

    std::shared_ptr<const Checker> checker_;
    PoolConfig config_;

    mutable std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    std::condition_variable watch_cv_;
    std::deque<std::shared_ptr<Job>> queue_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::vector<std::shared_ptr<Job>> running_;
    std::vector<std::jthread> workers_;
    std::jthread watchdog_;
    std::int64_t idle_workers_ = 0;
    std::int64_t busy_ = 0;
    std::uint64_t next_id_ = 1;
    bool shutting_down_ = false;

    PoolStats counters_;
    std::vector<double> latencies_;

    void worker_loop();
    void watchdog_loop();
    void finish(Job& job, CheckVerdict verdict); // caller holds mu_
};

} // namespace hps
