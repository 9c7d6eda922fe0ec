#include "hps/builtin.hpp"

#include <charconv>
#include <string>

#include "hps/error.hpp"

namespace hps {

namespace {

std::int64_t saturating_mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        return INT64_MAX;
    return r;
}

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// splitmix64 step; deterministic stream for stochastic policies.
std::uint64_t mix(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double unit(std::uint64_t& state)
{
    return static_cast<double>(mix(state) >> 11) * 0x1.0p-53;
}

} // namespace

BuiltinChecker::BuiltinChecker(Domain domain, std::int64_t steps_per_ms) : domain_(domain), steps_per_ms_(steps_per_ms)
{
    domain_.validate();
    if (steps_per_ms_ < 1)
        throw ContractViolation("BuiltinChecker: steps_per_ms must be >= 1");
}

Domain BuiltinChecker::budgeted(std::int64_t timeout_ms) const
{
    Domain d = domain_;
    d.node_budget = std::min(d.node_budget, saturating_mul(std::max<std::int64_t>(timeout_ms, 1), steps_per_ms_));
    return d;
}

CheckVerdict BuiltinChecker::check(const Obligation& ob, std::int64_t timeout_ms, std::stop_token /*stop*/) const
{
    const Domain d = budgeted(timeout_ms);
    const auto ms = [&](std::int64_t steps) { return steps / steps_per_ms_; };
    try {
        auto decide = [&]() -> CheckVerdict {
            const auto v = decide_bounded(ob.goal, d);
            switch (v.status) {
            case DecisionVerdict::Status::Valid:
                return CheckVerdict::accepted_with({}, ms(v.steps_used));
            case DecisionVerdict::Status::CounterexampleFound:
                return CheckVerdict::rejected("counterexample: " + v.witness->to_string(), ms(v.steps_used));
            case DecisionVerdict::Status::ResourceExceeded:
                break;
            }
            return CheckVerdict::timeout(ms(v.steps_used));
        };

        switch (ob.kind) {
        case ObligationKind::Direct:
            return decide();
        case ObligationKind::Completion:
            if (!ob.proof || trim(*ob.proof) != kDecideDirective)
                return CheckVerdict::rejected("unrecognized proof directive");
            return decide();
        case ObligationKind::Reconstruction: {
            const auto r = entailment_check(ob.lemmas, ob.goal, d);
            switch (r.status) {
            case EntailmentResult::Status::Entailed:
                return CheckVerdict::accepted_with({}, ms(r.steps_used));
            case EntailmentResult::Status::NotEntailed:
                return CheckVerdict::rejected(
                    "lemmas do not entail goal at " + (r.witness ? r.witness->to_string() : std::string("?")),
                    ms(r.steps_used));
            case EntailmentResult::Status::ResourceExceeded:
                return CheckVerdict::timeout(ms(r.steps_used));
            }
            break;
        }
        }
    } catch (const std::exception& e) {
        return CheckVerdict::error(e.what());
    }
    return CheckVerdict::error("unknown obligation kind");
}

std::optional<std::vector<std::optional<bool>>> BuiltinChecker::necessity(
    const std::vector<GoalDecl>& lemmas, const GoalDecl& goal) const
{
    std::vector<std::optional<bool>> out;
    for (std::size_t i = 0; i < lemmas.size(); ++i) {
        std::vector<GoalDecl> rest;
        for (std::size_t j = 0; j < lemmas.size(); ++j)
            if (j != i)
                rest.push_back(lemmas[j]);
        const auto r = entailment_check(rest, goal, domain_);
        if (r.status == EntailmentResult::Status::ResourceExceeded)
            out.emplace_back(std::nullopt);
        else
            out.emplace_back(!r.entailed());
    }
    return out;
}

CompletionAttempt BuiltinPolicy::propose_completion(const PolicyContext& context) const
{
    return {std::string(kDecideDirective), static_cast<std::int64_t>(context.feedback_history.size()) + 1};
}

namespace {

void split(const FormulaPtr& f, int depth_left, bool unlimited, std::vector<FormulaPtr>& out)
{
    if (f->kind == FormulaKind::And && (unlimited || depth_left > 0)) {
        split(f->subs[0], depth_left - 1, unlimited, out);
        split(f->subs[1], depth_left - 1, unlimited, out);
    } else {
        out.push_back(f);
    }
}

GoalDecl lemma_over(const GoalDecl& parent, std::size_t ordinal, FormulaPtr body)
{
    GoalDecl l;
    l.name = parent.name + "_" + std::to_string(ordinal);
    l.binders = binders_used_by(parent.binders, *body);
    l.body = std::move(body);
    return l;
}

} // namespace

std::optional<DecompositionProposal> ConjunctionSplitter::propose_decomposition(const PolicyContext& context) const
{
    const auto& goal = context.goal;
    if (goal.body->kind != FormulaKind::And)
        return std::nullopt;
    std::vector<FormulaPtr> parts;
    split(goal.body, depth_, depth_ <= 0, parts);
    DecompositionProposal p;
    for (std::size_t i = 0; i < parts.size(); ++i)
        p.lemmas.push_back(lemma_over(goal, i + 1, parts[i]));
    p.reconstruction = std::string(kAndIntroMarker);
    p.rationale = "split conjunction into " + std::to_string(parts.size()) + " parts";
    return p;
}

std::optional<DecompositionProposal> QuantifierGrounder::propose_decomposition(const PolicyContext& context) const
{
    const auto& goal = context.goal;
    const auto& body = goal.body;
    if (body->kind != FormulaKind::Forall)
        return std::nullopt;
    if (carrier_size(body->binder_sort, domain_) > max_points_)
        return std::nullopt;
    DecompositionProposal p;
    std::size_t ordinal = 0;
    for (const Value& v : enumerate_sort(body->binder_sort, domain_)) {
        TermPtr lit;
        if (const auto* i = std::get_if<std::int64_t>(&v)) {
            lit = int_lit(*i);
        } else {
            std::vector<TermPtr> elems;
            for (auto e : std::get<IntList>(v))
                elems.push_back(int_lit(e));
            lit = list_lit(std::move(elems));
        }
        p.lemmas.push_back(lemma_over(goal, ++ordinal, substitute(body->subs[0], body->binder, lit)));
    }
    p.reconstruction = std::string(kGroundMarker);
    p.rationale = "ground '" + body->binder + "' over " + std::to_string(ordinal) + " values";
    return p;
}

std::optional<DecompositionProposal> DirectSubmit::propose_decomposition(const PolicyContext&) const
{
    return DecompositionProposal{{}, std::string(kDirectMarker), "discharge directly"};
}

StochasticPolicy::StochasticPolicy(Domain domain, StochasticWeights weights, int split_depth)
    : weights_(weights), splitter_(split_depth), grounder_(domain)
{
    if (weights_.split < 0 || weights_.ground < 0 || weights_.direct < 0 ||
        weights_.split + weights_.ground + weights_.direct <= 0)
        throw ContractViolation("StochasticPolicy: weights must be non-negative with a positive sum");
}

std::optional<DecompositionProposal> StochasticPolicy::propose_decomposition(const PolicyContext& context) const
{
    std::uint64_t state = context.rng_seed;
    const double total = weights_.split + weights_.ground + weights_.direct;
    const double u = unit(state) * total;
    std::optional<DecompositionProposal> p;
    if (u < weights_.split)
        p = splitter_.propose_decomposition(context);
    else if (u < weights_.split + weights_.ground)
        p = grounder_.propose_decomposition(context);
    if (!p)
        p = direct_.propose_decomposition(context);
    return p;
}

std::optional<DecompositionProposal> NoisyPolicy::propose_decomposition(const PolicyContext& context) const
{
    auto p = inner_->propose_decomposition(context);
    if (!p || p->lemmas.empty())
        return p;
    std::uint64_t state = context.rng_seed ^ 0x5bd1e9955bd1e995ULL;
    if (unit(state) >= rate_)
        return p;
    const auto victim = static_cast<std::size_t>(mix(state) % p->lemmas.size());
    if (p->lemmas.size() >= 2 && (mix(state) & 1U)) {
        p->lemmas.erase(p->lemmas.begin() + static_cast<std::ptrdiff_t>(victim));
        p->rationale += " (dropped a lemma)";
    } else {
        auto& l = p->lemmas[victim];
        l.body = neg(l.body);
        p->rationale += " (negated a lemma)";
    }
    return p;
}

CompletionAttempt NoisyPolicy::propose_completion(const PolicyContext& context) const
{
    return inner_->propose_completion(context);
}

namespace {

double parse_double(std::string_view s)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(std::string(s), &used);
        if (used != s.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ContractViolation("bad number in policy spec: '" + std::string(s) + "'");
    }
}

} // namespace

std::shared_ptr<const Policy> make_builtin_policy(std::string_view name, const Domain& domain)
{
    if (name == "splitter")
        return std::make_shared<ConjunctionSplitter>(0);
    if (name.starts_with("splitter:")) {
        int depth = 0;
        const auto arg = name.substr(9);
        auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), depth);
        if (ec != std::errc{} || ptr != arg.data() + arg.size() || depth < 0)
            throw ContractViolation("bad splitter depth in '" + std::string(name) + "'");
        return std::make_shared<ConjunctionSplitter>(depth);
    }
    if (name == "grounder")
        return std::make_shared<QuantifierGrounder>(domain);
    if (name == "direct")
        return std::make_shared<DirectSubmit>();
    if (name == "stochastic")
        return std::make_shared<StochasticPolicy>(domain);
    if (name.starts_with("stochastic:")) {
        auto rest = name.substr(11);
        double w[3] = {0, 0, 0};
        for (int i = 0; i < 3; ++i) {
            const auto comma = rest.find(',');
            if ((comma == std::string_view::npos) != (i == 2))
                throw ContractViolation("stochastic policy expects three weights");
            w[i] = parse_double(rest.substr(0, comma));
            if (comma != std::string_view::npos)
                rest = rest.substr(comma + 1);
        }
        return std::make_shared<StochasticPolicy>(domain, StochasticWeights{w[0], w[1], w[2]});
    }
    if (name.starts_with("noisy:")) {
        const auto rest = name.substr(6);
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos)
            throw ContractViolation("noisy policy expects noisy:<rate>:<inner>");
        return std::make_shared<NoisyPolicy>(
            make_builtin_policy(rest.substr(colon + 1), domain), parse_double(rest.substr(0, colon)));
    }
    throw ContractViolation("unknown built-in policy '" + std::string(name) + "'");
}

} // namespace hps
