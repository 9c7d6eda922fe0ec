#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "hps/ast.hpp"
#include "hps/eval.hpp"

namespace hps {

struct QcConfig {
    std::int64_t trials = 1000;
    std::uint64_t seed = 0;
    std::int64_t gen_int_lo = -100;
    std::int64_t gen_int_hi = 100;
    std::int64_t gen_max_list_len = 8;
    // List elements are drawn from [gen_int_lo, gen_int_hi] unless overridden.
    std::optional<std::int64_t> gen_elem_lo;
    std::optional<std::int64_t> gen_elem_hi;

    void validate() const;
    friend bool operator==(const QcConfig&, const QcConfig&) = default;
};

/// Seeded generator state. Two states constructed from the same seed produce
/// the same stream of environments.
class GenState {
public:
    explicit GenState(std::uint64_t seed) : rng_(seed) {}

    std::int64_t uniform(std::int64_t lo, std::int64_t hi)
    {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
    }

    friend bool operator==(const GenState&, const GenState&) = default;

private:
    std::mt19937_64 rng_;
};

/// Independent uniform draw per binder: integers in [gen_int_lo, gen_int_hi];
/// lists with length uniform in [0, gen_max_list_len].
Env generate_env(const std::vector<Binder>& binders, const QcConfig& config, GenState& state);

struct QcOutcome {
    enum class Status : std::uint8_t { NoCounterexample, Counterexample };
    enum class Reason : std::uint8_t { None, False, EvalError, BudgetExceeded };

    Status status = Status::NoCounterexample;
    Reason reason = Reason::None;
    std::int64_t trials_run = 0;
    std::optional<Env> witness;
    std::int64_t trial_index = 0; // 1-based, set for Counterexample

    bool found() const { return status == Status::Counterexample; }
};

/// 64-bit mix of the configured seed and the goal name; the generator stream
/// of a quickcheck call depends only on these two.
std::uint64_t qc_stream_seed(std::uint64_t seed, std::string_view goal_name);

/// Samples outer binders; inner quantifiers range over `domain`. A reported
/// falsifying witness has been re-evaluated before return.
QcOutcome quickcheck(const GoalDecl& goal, const QcConfig& config, const Domain& domain);

} // namespace hps
