#pragma once

// Checker stubs for pool and search tests.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hps/prover.hpp"

namespace hps::testing {

// Blocks every check until release() (or a stop request), tracking the
// number of concurrent calls.
class ParkingChecker final : public Checker {
public:
    CheckVerdict check(const Obligation&, std::int64_t, std::stop_token stop = {}) const override
    {
        const int now = ++current_;
        int seen = high_.load();
        while (now > seen && !high_.compare_exchange_weak(seen, now)) {
        }
        ++calls_;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, stop, [&] { return released_; });
        }
        --current_;
        return CheckVerdict::accepted_with({});
    }

    void release()
    {
        {
            std::lock_guard lock(mu_);
            released_ = true;
        }
        cv_.notify_all();
    }

    int high_water() const { return high_.load(); }
    int calls() const { return calls_.load(); }
    int current() const { return current_.load(); }

private:
    mutable std::mutex mu_;
    mutable std::condition_variable_any cv_;
    mutable bool released_ = false;
    mutable std::atomic<int> current_{0};
    mutable std::atomic<int> high_{0};
    mutable std::atomic<int> calls_{0};
};

// Sleeps a fixed time regardless of stop requests.
class SleepChecker final : public Checker {
public:
    explicit SleepChecker(std::int64_t ms) : ms_(ms) {}
    CheckVerdict check(const Obligation&, std::int64_t, std::stop_token = {}) const override
    {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms_));
        return CheckVerdict::accepted_with({});
    }

private:
    std::int64_t ms_;
};

// Sleeps for the number of milliseconds named by the goal ("s3" -> 3 ms) and
// records the order in which checks finish.
class NamedSleepChecker final : public Checker {
public:
    CheckVerdict check(const Obligation& ob, std::int64_t, std::stop_token = {}) const override
    {
        const auto ms = std::stoll(ob.goal.name.substr(1));
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        std::lock_guard lock(mu_);
        order_.push_back(ob.goal.name);
        return CheckVerdict::accepted_with({});
    }

    std::vector<std::string> order() const
    {
        std::lock_guard lock(mu_);
        return order_;
    }

private:
    mutable std::mutex mu_;
    mutable std::vector<std::string> order_;
};

// Fixed verdict; completion proofs are echoed as accepted with the axioms
// listed after "axioms:" in the proof text.
class ScriptedChecker final : public Checker {
public:
    explicit ScriptedChecker(std::vector<std::string> axioms) : axioms_(std::move(axioms)) {}
    CheckVerdict check(const Obligation&, std::int64_t, std::stop_token = {}) const override
    {
        return CheckVerdict::accepted_with(axioms_);
    }

private:
    std::vector<std::string> axioms_;
};

inline Obligation named_obligation(const std::string& name)
{
    GoalDecl g;
    g.name = name;
    return Obligation::direct(std::move(g));
}

} // namespace hps::testing
