#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hps/ast.hpp"

namespace hps {

/// Finite universe over which quantifiers and goal binders range.
struct Domain {
    std::int64_t int_lo = -8;
    std::int64_t int_hi = 8;
    std::int64_t max_list_len = 3;
    std::int64_t list_elem_lo = -2;
    std::int64_t list_elem_hi = 2;
    std::int64_t node_budget = 2'000'000;

    void validate() const;
    friend bool operator==(const Domain&, const Domain&) = default;
};

using IntList = std::vector<std::int64_t>;
using Value = std::variant<std::int64_t, IntList>;

std::string format_value(const Value& v);

/// One concrete input. Later bindings shadow earlier ones with the same name.
class Env {
public:
    Env() = default;

    void bind(std::string name, Value v) { bindings_.emplace_back(std::move(name), std::move(v)); }
    void pop() { bindings_.pop_back(); }
    const Value* find(const std::string& name) const;
    const std::vector<std::pair<std::string, Value>>& bindings() const { return bindings_; }
    bool empty() const { return bindings_.empty(); }

    /// `x = 3, l = [1, 2]`
    std::string to_string() const;

    friend bool operator==(const Env&, const Env&) = default;

private:
    std::vector<std::pair<std::string, Value>> bindings_;
};

/// Enumerates a sort's carrier in the canonical order: integers ascending,
/// lists by length then lexicographically.
std::vector<Value> enumerate_sort(Sort s, const Domain& domain);
std::uint64_t carrier_size(Sort s, const Domain& domain);

/// Step-counting evaluator. Throws EvalError on Mod-by-zero or overflow and
/// BudgetExceeded once more than `budget` nodes have been visited.
class Evaluator {
public:
    Evaluator(const Domain& domain, std::int64_t budget);

    Value term(const Term& t, Env& env);
    bool formula(const Formula& f, Env& env);

    std::int64_t steps() const { return steps_; }

private:
    const Domain& domain_;
    std::int64_t budget_;
    std::int64_t steps_ = 0;
    std::vector<Value> ints_;
    std::vector<Value> lists_;
    bool carriers_ready_ = false;

    void tick();
    std::int64_t int_of(const Term& t, Env& env);
    IntList list_of(const Term& t, Env& env);
    const std::vector<Value>& carrier(Sort s);
};

Value eval_term(const Term& t, const Env& env);
bool eval_formula(const Formula& f, const Env& env, const Domain& domain);

struct DecisionVerdict {
    enum class Status : std::uint8_t { Valid, CounterexampleFound, ResourceExceeded };
    Status status = Status::Valid;
    std::optional<Env> witness;
    std::int64_t steps_used = 0;
};

/// Exhaustive decision over all binder assignments. The first binder varies
/// slowest. An assignment whose evaluation raises EvalError falsifies.
DecisionVerdict decide_bounded(const GoalDecl& goal, const Domain& domain);

struct EntailmentResult {
    enum class Status : std::uint8_t { Entailed, NotEntailed, ResourceExceeded };
    Status status = Status::Entailed;
    std::int64_t steps_used = 0;
    std::optional<Env> witness;

    bool entailed() const { return status == Status::Entailed; }
};

/// Checks (L1 /\ ... /\ Lk) => G over the domain. Lemma binders that match a
/// goal binder by name and sort are shared; the rest are universally closed.
/// Goal conjuncts that appear verbatim among the lemma conjuncts are
/// discharged without enumeration (conjunction introduction).
EntailmentResult entailment_check(const std::vector<GoalDecl>& lemmas, const GoalDecl& goal, const Domain& domain);

/// Entry i is true iff dropping lemma i breaks entailment. Throws
/// BudgetExceeded when any sub-check runs out of budget.
std::vector<bool> leave_one_out_necessity(
    const std::vector<GoalDecl>& lemmas, const GoalDecl& goal, const Domain& domain);

} // namespace hps
