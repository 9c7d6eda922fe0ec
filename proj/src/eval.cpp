#include "hps/eval.hpp"

#include <algorithm>

#include "hps/error.hpp"

namespace hps {

void Domain::validate() const
{
    if (int_lo > int_hi)
        throw ContractViolation("domain: int_lo > int_hi");
    if (list_elem_lo > list_elem_hi)
        throw ContractViolation("domain: list_elem_lo > list_elem_hi");
    if (max_list_len < 0)
        throw ContractViolation("domain: max_list_len < 0");
    if (node_budget < 1)
        throw ContractViolation("domain: node_budget < 1");
}

std::string format_value(const Value& v)
{
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return std::to_string(*i);
    const auto& l = std::get<IntList>(v);
    std::string out = "[";
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (i)
            out += ", ";
        out += std::to_string(l[i]);
    }
    out += ']';
    return out;
}

const Value* Env::find(const std::string& name) const
{
    for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it)
        if (it->first == name)
            return &it->second;
    return nullptr;
}

std::string Env::to_string() const
{
    std::string out;
    for (const auto& [name, v] : bindings_) {
        if (!out.empty())
            out += ", ";
        out += name + " = " + format_value(v);
    }
    return out;
}

std::uint64_t carrier_size(Sort s, const Domain& d)
{
    if (s == Sort::Int)
        return static_cast<std::uint64_t>(d.int_hi - d.int_lo) + 1;
    const auto base = static_cast<std::uint64_t>(d.list_elem_hi - d.list_elem_lo) + 1;
    std::uint64_t total = 0;
    std::uint64_t layer = 1;
    constexpr std::uint64_t cap = std::uint64_t{1} << 62;
    for (std::int64_t len = 0; len <= d.max_list_len; ++len) {
        total += layer;
        if (total >= cap)
            return cap;
        if (layer > cap / base)
            layer = cap;
        else
            layer *= base;
    }
    return total;
}

std::vector<Value> enumerate_sort(Sort s, const Domain& d)
{
    std::vector<Value> out;
    if (s == Sort::Int) {
        for (std::int64_t v = d.int_lo; v <= d.int_hi; ++v)
            out.emplace_back(v);
        return out;
    }
    out.emplace_back(IntList{});
    for (std::int64_t len = 1; len <= d.max_list_len; ++len) {
        IntList cur(static_cast<std::size_t>(len), d.list_elem_lo);
        for (;;) {
            out.emplace_back(cur);
            // Odometer, last position fastest: lexicographic order.
            std::size_t i = cur.size();
            while (i > 0 && cur[i - 1] == d.list_elem_hi) {
                cur[i - 1] = d.list_elem_lo;
                --i;
            }
            if (i == 0)
                break;
            ++cur[i - 1];
        }
    }
    return out;
}

namespace {

// Keeps Env push/pop balanced when evaluation throws.
struct ScopedBinding {
    Env& env;
    ScopedBinding(Env& e, const std::string& name, Value v) : env(e) { env.bind(name, std::move(v)); }
    ~ScopedBinding() { env.pop(); }
    ScopedBinding(const ScopedBinding&) = delete;
    ScopedBinding& operator=(const ScopedBinding&) = delete;
};

const std::vector<Value>& checked_carrier(Sort s, const Domain& d, std::int64_t budget, std::vector<Value>& slot)
{
    if (slot.empty()) {
        if (carrier_size(s, d) > static_cast<std::uint64_t>(budget))
            throw BudgetExceeded("carrier larger than node budget");
        slot = enumerate_sort(s, d);
    }
    return slot;
}

} // namespace

Evaluator::Evaluator(const Domain& domain, std::int64_t budget) : domain_(domain), budget_(budget) {}

void Evaluator::tick()
{
    if (++steps_ > budget_)
        throw BudgetExceeded("node budget exhausted");
}

const std::vector<Value>& Evaluator::carrier(Sort s)
{
    return checked_carrier(s, domain_, budget_, s == Sort::Int ? ints_ : lists_);
}

std::int64_t Evaluator::int_of(const Term& t, Env& env)
{
    return std::get<std::int64_t>(term(t, env));
}

IntList Evaluator::list_of(const Term& t, Env& env)
{
    return std::get<IntList>(term(t, env));
}

Value Evaluator::term(const Term& t, Env& env)
{
    tick();
    switch (t.kind) {
    case TermKind::IntLit:
        return t.value;
    case TermKind::Var: {
        const Value* v = env.find(t.name);
        if (!v)
            throw ContractViolation("unbound variable '" + t.name + "' during evaluation");
        return *v;
    }
    case TermKind::Add:
    case TermKind::Sub:
    case TermKind::Mul:
    case TermKind::Mod: {
        const std::int64_t a = int_of(*t.args[0], env);
        const std::int64_t b = int_of(*t.args[1], env);
        std::int64_t r = 0;
        bool overflow = false;
        switch (t.kind) {
        case TermKind::Add:
            overflow = __builtin_add_overflow(a, b, &r);
            break;
        case TermKind::Sub:
            overflow = __builtin_sub_overflow(a, b, &r);
            break;
        case TermKind::Mul:
            overflow = __builtin_mul_overflow(a, b, &r);
            break;
        default:
            if (b == 0)
                throw EvalError("modulo by zero");
            if (a == INT64_MIN && b == -1)
                r = 0;
            else
                r = a % b; // truncated: sign follows the dividend
        }
        if (overflow)
            throw EvalError("integer overflow");
        return r;
    }
    case TermKind::ListLit: {
        IntList out;
        out.reserve(t.args.size());
        for (const auto& a : t.args)
            out.push_back(int_of(*a, env));
        return out;
    }
    case TermKind::Cons: {
        const std::int64_t h = int_of(*t.args[0], env);
        IntList tail = list_of(*t.args[1], env);
        tail.insert(tail.begin(), h);
        return tail;
    }
    case TermKind::Append: {
        IntList l = list_of(*t.args[0], env);
        IntList r = list_of(*t.args[1], env);
        l.insert(l.end(), r.begin(), r.end());
        return l;
    }
    case TermKind::Length:
        return static_cast<std::int64_t>(list_of(*t.args[0], env).size());
    case TermKind::Count: {
        const IntList l = list_of(*t.args[0], env);
        const std::int64_t x = int_of(*t.args[1], env);
        return static_cast<std::int64_t>(std::count(l.begin(), l.end(), x));
    }
    case TermKind::Ite:
        return formula(*t.cond, env) ? term(*t.args[0], env) : term(*t.args[1], env);
    }
    throw ContractViolation("unknown term kind");
}

bool Evaluator::formula(const Formula& f, Env& env)
{
    tick();
    switch (f.kind) {
    case FormulaKind::True:
        return true;
    case FormulaKind::False:
        return false;
    case FormulaKind::Eq:
        return term(*f.terms[0], env) == term(*f.terms[1], env);
    case FormulaKind::Lt:
        return int_of(*f.terms[0], env) < int_of(*f.terms[1], env);
    case FormulaKind::Le:
        return int_of(*f.terms[0], env) <= int_of(*f.terms[1], env);
    case FormulaKind::Mem: {
        const std::int64_t x = int_of(*f.terms[0], env);
        const IntList l = list_of(*f.terms[1], env);
        return std::find(l.begin(), l.end(), x) != l.end();
    }
    case FormulaKind::Not:
        return !formula(*f.subs[0], env);
    case FormulaKind::And:
        return formula(*f.subs[0], env) && formula(*f.subs[1], env);
    case FormulaKind::Or:
        return formula(*f.subs[0], env) || formula(*f.subs[1], env);
    case FormulaKind::Implies:
        return !formula(*f.subs[0], env) || formula(*f.subs[1], env);
    case FormulaKind::Forall:
    case FormulaKind::Exists: {
        const bool is_forall = f.kind == FormulaKind::Forall;
        for (const Value& v : carrier(f.binder_sort)) {
            ScopedBinding bind(env, f.binder, v);
            if (formula(*f.subs[0], env) != is_forall)
                return !is_forall;
        }
        return is_forall;
    }
    }
    throw ContractViolation("unknown formula kind");
}

Value eval_term(const Term& t, const Env& env)
{
    static const Domain unused{};
    Evaluator ev(unused, INT64_MAX);
    Env scratch = env;
    return ev.term(t, scratch);
}

bool eval_formula(const Formula& f, const Env& env, const Domain& domain)
{
    Evaluator ev(domain, domain.node_budget);
    Env scratch = env;
    return ev.formula(f, scratch);
}

namespace {

// Visits every assignment of `binders` (first binder slowest), binding them in
// `env`. `visit` returns false to stop early. Returns false if stopped.
template <typename Visit>
bool for_each_assignment(const std::vector<Binder>& binders, const std::vector<const std::vector<Value>*>& carriers,
    std::size_t idx, Env& env, Visit&& visit)
{
    if (idx == binders.size())
        return visit();
    for (const Value& v : *carriers[idx]) {
        ScopedBinding bind(env, binders[idx].name, v);
        if (!for_each_assignment(binders, carriers, idx + 1, env, visit))
            return false;
    }
    return true;
}

struct Carriers {
    std::vector<Value> ints;
    std::vector<Value> lists;

    std::vector<const std::vector<Value>*> for_binders(
        const std::vector<Binder>& binders, const Domain& d, std::int64_t budget)
    {
        std::vector<const std::vector<Value>*> out;
        for (const auto& b : binders)
            out.push_back(&checked_carrier(b.sort, d, budget, b.sort == Sort::Int ? ints : lists));
        return out;
    }
};

} // namespace

DecisionVerdict decide_bounded(const GoalDecl& goal, const Domain& domain)
{
    DecisionVerdict verdict;
    Evaluator ev(domain, domain.node_budget);
    Carriers carriers;
    Env env;
    try {
        auto cs = carriers.for_binders(goal.binders, domain, domain.node_budget);
        for_each_assignment(goal.binders, cs, 0, env, [&] {
            bool holds = false;
            try {
                holds = ev.formula(*goal.body, env);
            } catch (const EvalError&) {
                holds = false;
            }
            if (!holds) {
                verdict.status = DecisionVerdict::Status::CounterexampleFound;
                verdict.witness = env;
                return false;
            }
            return true;
        });
    } catch (const BudgetExceeded&) {
        verdict.status = DecisionVerdict::Status::ResourceExceeded;
        verdict.witness.reset();
    }
    verdict.steps_used = std::min(ev.steps(), domain.node_budget);
    return verdict;
}

namespace {

struct LemmaPlan {
    const GoalDecl* lemma = nullptr;
    std::vector<Binder> unshared;
    bool constant = false;
    std::optional<bool> cached;
};

bool goal_has_binder(const GoalDecl& goal, const Binder& b)
{
    return std::find(goal.binders.begin(), goal.binders.end(), b) != goal.binders.end();
}

} // namespace

EntailmentResult entailment_check(const std::vector<GoalDecl>& lemmas, const GoalDecl& goal, const Domain& domain)
{
    EntailmentResult result;

    std::vector<FormulaPtr> lemma_parts;
    for (const auto& l : lemmas)
        for (auto& c : conjuncts(l.body))
            lemma_parts.push_back(std::move(c));

    std::vector<FormulaPtr> remaining;
    for (auto& c : conjuncts(goal.body)) {
        const bool matched = std::any_of(lemma_parts.begin(), lemma_parts.end(),
            [&](const FormulaPtr& p) { return same(p, c); });
        if (!matched)
            remaining.push_back(std::move(c));
    }
    if (remaining.empty())
        return result;

    FormulaPtr residual = remaining.back();
    for (std::size_t i = remaining.size() - 1; i-- > 0;)
        residual = conj(remaining[i], residual);

    std::vector<LemmaPlan> plans;
    for (const auto& l : lemmas) {
        LemmaPlan p;
        p.lemma = &l;
        bool any_shared = false;
        for (const auto& b : l.binders) {
            if (goal_has_binder(goal, b))
                any_shared = true;
            else
                p.unshared.push_back(b);
        }
        p.constant = !any_shared;
        plans.push_back(std::move(p));
    }

    Evaluator ev(domain, domain.node_budget);
    Carriers carriers;
    Env env;

    auto lemma_holds = [&](LemmaPlan& p) {
        if (p.constant && p.cached)
            return *p.cached;
        auto cs = carriers.for_binders(p.unshared, domain, domain.node_budget);
        const bool holds = for_each_assignment(p.unshared, cs, 0, env,
            [&] { return ev.formula(*p.lemma->body, env); });
        if (p.constant)
            p.cached = holds;
        return holds;
    };

    try {
        auto cs = carriers.for_binders(goal.binders, domain, domain.node_budget);
        for_each_assignment(goal.binders, cs, 0, env, [&] {
            try {
                if (ev.formula(*residual, env))
                    return true;
                for (auto& p : plans)
                    if (!lemma_holds(p))
                        return true;
            } catch (const EvalError&) {
                // Conservative: a crash anywhere refutes entailment.
            }
            result.status = EntailmentResult::Status::NotEntailed;
            result.witness = env;
            return false;
        });
    } catch (const BudgetExceeded&) {
        result.status = EntailmentResult::Status::ResourceExceeded;
        result.witness.reset();
    }
    result.steps_used = std::min(ev.steps(), domain.node_budget);
    return result;
}

std::vector<bool> leave_one_out_necessity(
    const std::vector<GoalDecl>& lemmas, const GoalDecl& goal, const Domain& domain)
{
    std::vector<bool> out;
    out.reserve(lemmas.size());
    for (std::size_t i = 0; i < lemmas.size(); ++i) {
        std::vector<GoalDecl> rest;
        for (std::size_t j = 0; j < lemmas.size(); ++j)
            if (j != i)
                rest.push_back(lemmas[j]);
        const auto r = entailment_check(rest, goal, domain);
        if (r.status == EntailmentResult::Status::ResourceExceeded)
            throw BudgetExceeded("necessity check exceeded node budget");
        out.push_back(!r.entailed());
    }
    return out;
}

} // namespace hps
