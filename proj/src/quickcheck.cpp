#include "hps/quickcheck.hpp"

#include "hps/error.hpp"

namespace hps {

void QcConfig::validate() const
{
    if (trials < 1)
        throw ContractViolation("quickcheck: trials must be >= 1");
    if (gen_int_lo > gen_int_hi)
        throw ContractViolation("quickcheck: gen_int_lo > gen_int_hi");
    if (gen_max_list_len < 0)
        throw ContractViolation("quickcheck: gen_max_list_len < 0");
    if (gen_elem_lo.value_or(gen_int_lo) > gen_elem_hi.value_or(gen_int_hi))
        throw ContractViolation("quickcheck: element range is empty");
}

Env generate_env(const std::vector<Binder>& binders, const QcConfig& config, GenState& state)
{
    const std::int64_t elo = config.gen_elem_lo.value_or(config.gen_int_lo);
    const std::int64_t ehi = config.gen_elem_hi.value_or(config.gen_int_hi);
    Env env;
    for (const auto& b : binders) {
        if (b.sort == Sort::Int) {
            env.bind(b.name, state.uniform(config.gen_int_lo, config.gen_int_hi));
        } else {
            const auto len = state.uniform(0, config.gen_max_list_len);
            IntList l;
            l.reserve(static_cast<std::size_t>(len));
            for (std::int64_t i = 0; i < len; ++i)
                l.push_back(state.uniform(elo, ehi));
            env.bind(b.name, std::move(l));
        }
    }
    return env;
}

std::uint64_t qc_stream_seed(std::uint64_t seed, std::string_view goal_name)
{
    // FNV-1a over the name, then a splitmix64 finalizer over the combination.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : goal_name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

QcOutcome::Reason classify(const GoalDecl& goal, const Env& env, const Domain& domain)
{
    try {
        return eval_formula(*goal.body, env, domain) ? QcOutcome::Reason::None : QcOutcome::Reason::False;
    } catch (const EvalError&) {
        return QcOutcome::Reason::EvalError;
    } catch (const BudgetExceeded&) {
        return QcOutcome::Reason::BudgetExceeded;
    }
}

} // namespace

QcOutcome quickcheck(const GoalDecl& goal, const QcConfig& config, const Domain& domain)
{
    config.validate();
    GenState state(qc_stream_seed(config.seed, goal.name));
    QcOutcome out;
    for (std::int64_t trial = 1; trial <= config.trials; ++trial) {
        Env env = generate_env(goal.binders, config, state);
        const auto reason = classify(goal, env, domain);
        out.trials_run = trial;
        if (reason == QcOutcome::Reason::None)
            continue;
        // Re-verify: evaluation is deterministic, so a second pass must agree.
        if (classify(goal, env, domain) != reason)
            throw ContractViolation("quickcheck: witness failed re-verification");
        out.status = QcOutcome::Status::Counterexample;
        out.reason = reason;
        out.witness = std::move(env);
        out.trial_index = trial;
        return out;
    }
    return out;
}

} // namespace hps
