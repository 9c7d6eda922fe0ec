#include "hps/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <thread>

#include "hps/config.hpp"
#include "hps/error.hpp"
#include "hps/pool.hpp"
#include "hps/syntax.hpp"

namespace hps {

std::string_view strategy_name(TargetStrategy s)
{
    return s == TargetStrategy::HighestScore ? "score" : "footprint";
}

std::optional<TargetStrategy> parse_strategy(std::string_view s)
{
    if (s == "footprint")
        return TargetStrategy::HighestFootprint;
    if (s == "score")
        return TargetStrategy::HighestScore;
    return std::nullopt;
}

void SearchConfig::validate() const
{
    if (decompose_iters < 0 || complete_iters < 0)
        throw ContractViolation("search: iteration budgets must be non-negative");
    if (max_open_lemmas < 1)
        throw ContractViolation("search: max_open_lemmas must be >= 1");
    if (wall_budget_secs < 1)
        throw ContractViolation("search: wall_budget_secs must be >= 1");
    if (k_parallel < 1)
        throw ContractViolation("search: k_parallel must be >= 1");
    if (check_timeout_ms < 1)
        throw ContractViolation("search: check_timeout_ms must be >= 1");
    qc.validate();
    score.validate();
    domain.validate();
}

std::string_view goal_status_name(GoalStatus s)
{
    switch (s) {
    case GoalStatus::Open: return "open";
    case GoalStatus::Decomposed: return "decomposed";
    case GoalStatus::ClosedByDischarge: return "discharged";
    case GoalStatus::ClosedByProof: return "proved";
    }
    return "open";
}

std::string_view gate_failure_name(GateFailure f)
{
    switch (f) {
    case GateFailure::None: return "none";
    case GateFailure::TargetQcFailed: return "target_qc_failed";
    case GateFailure::QcFailed: return "qc_failed";
    case GateFailure::ReconstructionFailed: return "reconstruction_failed";
    case GateFailure::ReconstructionTimeout: return "reconstruction_timeout";
    case GateFailure::AuditFailed: return "audit_failed";
    case GateFailure::TrivialTarget: return "trivial_target";
    case GateFailure::LemmaCapExceeded: return "lemma_cap_exceeded";
    }
    return "none";
}

std::string_view outcome_name(RunResult::Outcome o)
{
    switch (o) {
    case RunResult::Outcome::Proved: return "proved";
    case RunResult::Outcome::Disproved: return "disproved";
    case RunResult::Outcome::Exhausted: return "exhausted";
    }
    return "exhausted";
}

// ---- OpenGoalSet -------------------------------------------------------------

OpenGoalSet::OpenGoalSet(GoalDecl root)
{
    GoalEntry e;
    e.footprint = operator_footprint(*root.body);
    e.goal = std::move(root);
    index_.emplace(e.goal.name, 0);
    entries_.push_back(std::move(e));
}

std::optional<std::size_t> OpenGoalSet::find(const std::string& name) const
{
    auto it = index_.find(name);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

void OpenGoalSet::decompose(std::size_t parent, const std::vector<GoalDecl>& lemmas, const ScoreBreakdown& score)
{
    if (parent >= entries_.size() || entries_[parent].status != GoalStatus::Open)
        throw ContractViolation("OpenGoalSet::decompose: parent is not an open goal");
    for (const auto& l : lemmas)
        if (index_.contains(l.name))
            throw ContractViolation("OpenGoalSet::decompose: duplicate goal name '" + l.name + "'");
    entries_[parent].status = GoalStatus::Decomposed;
    const std::string parent_name = entries_[parent].goal.name;
    const int depth = entries_[parent].depth + 1;
    for (const auto& l : lemmas) {
        GoalEntry e;
        e.goal = l;
        e.footprint = operator_footprint(*l.body);
        e.parent = parent_name;
        e.depth = depth;
        e.created_by = score;
        index_.emplace(l.name, entries_.size());
        entries_.push_back(std::move(e));
    }
}

std::vector<std::size_t> OpenGoalSet::leaves() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].status != GoalStatus::Decomposed)
            out.push_back(i);
    return out;
}

std::size_t OpenGoalSet::open_count() const
{
    return static_cast<std::size_t>(
        std::count_if(entries_.begin(), entries_.end(), [](const GoalEntry& e) { return e.status == GoalStatus::Open; }));
}

std::optional<std::size_t> select_target(const OpenGoalSet& set, TargetStrategy strategy)
{
    std::optional<std::size_t> best;
    auto score_of = [](const GoalEntry& e) { return e.created_by ? e.created_by->S : 1.0; };
    const auto& es = set.entries();
    for (std::size_t i = 0; i < es.size(); ++i) {
        const auto& e = es[i];
        if (e.status != GoalStatus::Open || e.settled)
            continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = es[*best];
        // Strict comparisons keep the older entry on ties.
        if (strategy == TargetStrategy::HighestScore) {
            if (score_of(e) > score_of(b) || (score_of(e) == score_of(b) && e.footprint > b.footprint))
                best = i;
        } else if (e.footprint > b.footprint) {
            best = i;
        }
    }
    return best;
}

// ---- JSON helpers ------------------------------------------------------------

namespace {

ojson value_json(const Value& v)
{
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return *i;
    return std::get<IntList>(v);
}

ojson env_json(const Env& env)
{
    ojson o = ojson::object();
    for (const auto& [name, v] : env.bindings())
        o[name] = value_json(v);
    return o;
}

ojson score_json(const ScoreBreakdown& s)
{
    return ojson{{"v", s.v}, {"d_parent", s.d_parent}, {"d_children", s.d_children}, {"d_bar", s.d_bar}, {"r", s.r},
        {"S", s.S}};
}

std::string_view qc_reason_name(QcOutcome::Reason r)
{
    switch (r) {
    case QcOutcome::Reason::None: return "none";
    case QcOutcome::Reason::False: return "false";
    case QcOutcome::Reason::EvalError: return "eval_error";
    case QcOutcome::Reason::BudgetExceeded: return "budget_exceeded";
    }
    return "none";
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t tag, std::int64_t iteration, std::string_view name)
{
    return qc_stream_seed(run_seed ^ (tag * 0x9e3779b97f4a7c15ULL) ^ (static_cast<std::uint64_t>(iteration) << 20), name);
}

QcConfig run_qc(const SearchConfig& c)
{
    QcConfig q = c.qc;
    q.seed ^= c.seed;
    return q;
}

const QcOutcome& cached_qc(const GoalDecl& g, const SearchConfig& config, std::map<std::string, QcOutcome>* cache,
    QcOutcome& scratch)
{
    if (!cache) {
        scratch = quickcheck(g, run_qc(config), config.domain);
        return scratch;
    }
    // Keyed by full text: a retried proposal may reuse a name for a new body.
    const auto key = print_goal(g);
    auto it = cache->find(key);
    if (it == cache->end())
        it = cache->emplace(key, quickcheck(g, run_qc(config), config.domain)).first;
    return it->second;
}

std::int64_t count_lines(const std::string& text)
{
    std::int64_t n = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos)
            nl = text.size();
        if (text.substr(pos, nl - pos).find_first_not_of(" \t\r") != std::string::npos)
            ++n;
        pos = nl + 1;
    }
    return n;
}

std::int64_t now_ms()
{
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

} // namespace

// ---- gate ----------------------------------------------------------------------

GateReport gate_proposal(const GoalDecl& target, std::int64_t target_footprint, const DecompositionProposal& proposal,
    const Checker& checker, const SearchConfig& config, std::map<std::string, QcOutcome>* qc_cache)
{
    GateReport r;
    bool all_ok = true;
    for (const auto& l : proposal.lemmas) {
        QcOutcome scratch;
        r.lemma_qc.push_back(cached_qc(l, config, qc_cache, scratch));
        const bool ok = !r.lemma_qc.back().found();
        r.gate.qc_ok_per_lemma.push_back(ok);
        all_ok = all_ok && ok;
    }

    if (!all_ok) {
        r.failure = GateFailure::QcFailed;
    } else {
        const Obligation ob = proposal.lemmas.empty()
            ? Obligation::direct(target)
            : Obligation::reconstruct(target, proposal.lemmas, proposal.reconstruction);
        const auto v = checker.check(ob, config.check_timeout_ms);
        r.reconstruction = v;
        switch (v.status) {
        case CheckVerdict::Status::Accepted:
            if (axiom_audit(v).pass)
                r.gate.reconstruction_ok = true;
            else
                r.failure = GateFailure::AuditFailed;
            break;
        case CheckVerdict::Status::Rejected:
            r.failure = GateFailure::ReconstructionFailed;
            break;
        case CheckVerdict::Status::Timeout:
            r.failure = GateFailure::ReconstructionTimeout;
            break;
        case CheckVerdict::Status::CheckerError:
            r.infra_error = v.diagnostics;
            break;
        }
    }

    std::vector<std::int64_t> children;
    for (const auto& l : proposal.lemmas)
        children.push_back(operator_footprint(*l.body));
    if (target_footprint >= 1) {
        r.score = decomposition_score(r.gate, target_footprint, children, config.score);
    } else {
        // A zero-footprint goal can only be discharged, never decomposed.
        r.score.v = r.gate.value() ? 1 : 0;
        r.score.d_parent = 0;
        r.score.d_children = children;
        if (children.empty()) {
            r.score.r = 1.0;
        } else {
            r.score.d_bar = logsumexp_footprint(children, config.score.temperature);
            if (r.failure == GateFailure::None && !r.infra_error)
                r.failure = GateFailure::TrivialTarget;
        }
        r.score.S = r.score.r * r.score.v;
    }
    return r;
}

// ---- run state -----------------------------------------------------------------

RunState::RunState(GoalDecl root, SearchConfig cfg, RunTrace t)
    : goals(std::move(root)), trace(std::move(t)), config(std::move(cfg))
{
    deadline_ms = now_ms() + config.wall_budget_secs * 1000;
}

bool RunState::out_of_time() const
{
    return deadline_ms > 0 && now_ms() >= deadline_ms;
}

namespace {

std::vector<GoalDecl> siblings_of(const OpenGoalSet& set, std::size_t target)
{
    std::vector<GoalDecl> out;
    const auto& me = set.at(target);
    for (std::size_t i = 0; i < set.entries().size(); ++i) {
        const auto& e = set.at(i);
        if (i != target && e.status == GoalStatus::Open && e.parent == me.parent)
            out.push_back(e.goal);
    }
    return out;
}

ojson check_json(const CheckVerdict& v)
{
    return ojson{{"status", std::string(status_name(v.status))}, {"diagnostics", v.diagnostics},
        {"axioms", v.axioms_used}, {"wall_time_ms", v.wall_time_ms}};
}

} // namespace

StepOutcome decompose_step(RunState& st, const Policy& policy, const Checker& checker)
{
    StepOutcome out;
    const auto t = select_target(st.goals, st.config.target_strategy);
    if (!t)
        return out;
    out.target = t;
    const GoalDecl target = st.goals.at(*t).goal;
    const std::int64_t footprint = st.goals.at(*t).footprint;
    const int depth = st.goals.at(*t).depth;
    const bool is_root = *t == 0;
    const std::int64_t iteration = ++st.decompose_used;

    QcOutcome scratch;
    const QcOutcome tq = cached_qc(target, st.config, &st.qc_cache, scratch);
    if (tq.found()) {
        if (is_root) {
            st.disproof = tq.witness;
            st.trace.append("GoalDisproved", {{"iteration", iteration}, {"target", target.name},
                                                 {"witness", env_json(*tq.witness)}, {"trial_index", tq.trial_index},
                                                 {"reason", std::string(qc_reason_name(tq.reason))}});
            out.kind = StepOutcome::Kind::GoalDisproved;
            out.witness = tq.witness;
            return out;
        }
        st.goals.at(*t).settled = true;
        st.trace.append("DecomposeAttempt", {{"iteration", iteration}, {"target", target.name}, {"depth", depth},
                                                {"accepted", false},
                                                {"reason", std::string(gate_failure_name(GateFailure::TargetQcFailed))},
                                                {"witness", env_json(*tq.witness)}});
        out.kind = StepOutcome::Kind::RejectedGate;
        out.reason = GateFailure::TargetQcFailed;
        out.witness = tq.witness;
        return out;
    }

    PolicyContext ctx;
    ctx.goal = target;
    ctx.sibling_goals = siblings_of(st.goals, *t);
    ctx.mode = PolicyContext::Mode::Decompose;
    ctx.rng_seed = derive_seed(st.config.seed, 1, iteration, target.name);

    std::optional<DecompositionProposal> proposal;
    try {
        proposal = policy.propose_decomposition(ctx);
    } catch (const std::exception& e) {
        st.trace.append("StepError",
            {{"stage", "decompose"}, {"iteration", iteration}, {"target", target.name}, {"message", e.what()}});
        out.kind = StepOutcome::Kind::InfrastructureError;
        out.message = e.what();
        return out;
    }
    if (!proposal) {
        --st.decompose_used;
        st.goals.at(*t).settled = true;
        st.trace.append("PolicyDeclined", {{"target", target.name}});
        out.kind = StepOutcome::Kind::Declined;
        return out;
    }

    for (std::size_t i = 0; i < proposal->lemmas.size(); ++i)
        proposal->lemmas[i].name = target.name + "_" + std::to_string(depth + 1) + "_" + std::to_string(i + 1);

    GateReport report;
    try {
        report = gate_proposal(target, footprint, *proposal, checker, st.config, &st.qc_cache);
    } catch (const std::exception& e) {
        report.infra_error = e.what();
    }
    if (report.infra_error) {
        st.trace.append("StepError", {{"stage", "decompose"}, {"iteration", iteration}, {"target", target.name},
                                         {"message", *report.infra_error}});
        out.kind = StepOutcome::Kind::InfrastructureError;
        out.message = *report.infra_error;
        return out;
    }

    const auto k = static_cast<std::int64_t>(proposal->lemmas.size());
    GateFailure failure = report.failure;
    if (failure == GateFailure::None && k >= 1 && st.goals.inserted_lemmas() + k > st.config.max_open_lemmas)
        failure = GateFailure::LemmaCapExceeded;
    const bool accepted = failure == GateFailure::None;

    ojson ev;
    ev["iteration"] = iteration;
    ev["target"] = target.name;
    ev["depth"] = depth;
    ev["k"] = k;
    ojson lemmas = ojson::array();
    ojson qc = ojson::array();
    for (std::size_t i = 0; i < proposal->lemmas.size(); ++i) {
        lemmas.push_back(print_goal(proposal->lemmas[i]));
        const auto& q = report.lemma_qc[i];
        ojson qj{{"ok", !q.found()}};
        if (q.found()) {
            qj["reason"] = std::string(qc_reason_name(q.reason));
            qj["witness"] = env_json(*q.witness);
            qj["trial_index"] = q.trial_index;
        }
        qc.push_back(std::move(qj));
    }
    ev["lemmas"] = std::move(lemmas);
    ev["reconstruction"] = proposal->reconstruction;
    ev["rationale"] = proposal->rationale;
    ev["qc"] = std::move(qc);
    ev["reconstruction_check"] = report.reconstruction ? check_json(*report.reconstruction) : ojson(nullptr);
    ev["score"] = score_json(report.score);
    ev["accepted"] = accepted;
    ev["reason"] = std::string(gate_failure_name(failure));
    if (accepted && k >= 1 && st.config.record_necessity) {
        std::optional<std::vector<std::optional<bool>>> nec;
        try {
            nec = checker.necessity(proposal->lemmas, target);
        } catch (const std::exception&) {
            nec.reset();
        }
        if (nec) {
            ojson bits = ojson::array();
            for (const auto& b : *nec)
                bits.push_back(b ? ojson(*b) : ojson(nullptr));
            ev["necessity"] = std::move(bits);
        } else {
            ev["necessity"] = nullptr;
        }
    }
    st.trace.append("DecomposeAttempt", std::move(ev));

    out.reason = failure;
    if (!accepted) {
        out.kind = StepOutcome::Kind::RejectedGate;
    } else if (k == 0) {
        st.goals.at(*t).status = GoalStatus::ClosedByDischarge;
        out.kind = StepOutcome::Kind::AcceptedDischarge;
    } else {
        st.goals.decompose(*t, proposal->lemmas, report.score);
        out.kind = StepOutcome::Kind::AcceptedDecomposition;
    }
    return out;
}

void decomposition_stage(RunState& st, const Policy& policy, const Checker& checker)
{
    while (st.decompose_used < st.config.decompose_iters && !st.disproof) {
        if (st.stop.stop_requested() || st.out_of_time())
            break;
        if (decompose_step(st, policy, checker).kind == StepOutcome::Kind::NoneOpen)
            break;
    }
}

// ---- completion ------------------------------------------------------------------


std::map<std::string, CheckVerdict> completion_stage(
    RunState& st, const Policy& policy, const Checker& checker, VerifyPool* pool)
{
    std::map<std::string, CheckVerdict> final_verdicts;
    struct LeafState {
        std::size_t index;
        std::vector<std::pair<CompletionAttempt, CheckVerdict>> feedback;
        std::optional<bool> compiles;
    };
    std::vector<LeafState> leaves;
    for (auto i : st.goals.leaves())
        if (st.goals.at(i).status == GoalStatus::Open)
            leaves.push_back({i, {}, std::nullopt});

    for (std::int64_t j = 1; j <= st.config.complete_iters; ++j) {
        std::vector<LeafState*> pending;
        for (auto& l : leaves)
            if (st.goals.at(l.index).status == GoalStatus::Open)
                pending.push_back(&l);
        if (pending.empty() || st.stop.stop_requested() || st.out_of_time())
            break;
        st.complete_used = j;

        std::vector<std::optional<CompletionAttempt>> attempts(pending.size());
        for (std::size_t p = 0; p < pending.size(); ++p) {
            auto& leaf = *pending[p];
            const auto& goal = st.goals.at(leaf.index).goal;
            PolicyContext ctx;
            ctx.goal = goal;
            for (auto* other : pending)
                if (other != &leaf)
                    ctx.sibling_goals.push_back(st.goals.at(other->index).goal);
            ctx.feedback_history = leaf.feedback;
            ctx.mode = PolicyContext::Mode::Complete;
            ctx.rng_seed = derive_seed(st.config.seed, 2, j, goal.name);
            ctx.compiles = leaf.compiles;
            try {
                attempts[p] = policy.propose_completion(ctx);
            } catch (const std::exception& e) {
                const auto index = static_cast<std::int64_t>(leaf.feedback.size()) + 1;
                st.trace.append("StepError", {{"stage", "complete"}, {"iteration", j}, {"lemma", goal.name},
                                                 {"attempt", index}, {"message", e.what()}});
                leaf.feedback.emplace_back(CompletionAttempt{"", index}, CheckVerdict::error(e.what()));
            }
        }

        std::vector<std::optional<CheckVerdict>> verdicts(pending.size());
        std::vector<std::optional<JobHandle>> handles(pending.size());
        for (std::size_t p = 0; p < pending.size(); ++p) {
            if (!attempts[p])
                continue;
            auto ob = Obligation::completion(st.goals.at(pending[p]->index).goal, attempts[p]->proof_text);
            ++st.tally.submitted;
            if (!pool) {
                try {
                    verdicts[p] = checker.check(ob, st.config.check_timeout_ms, st.stop);
                } catch (const std::exception& e) {
                    verdicts[p] = CheckVerdict::error(e.what());
                }
                continue;
            }
            try {
                handles[p] = pool->submit(std::move(ob), st.config.check_timeout_ms);
            } catch (const std::exception& e) {
                verdicts[p] = CheckVerdict::error(e.what());
            }
        }
        for (std::size_t p = 0; p < pending.size(); ++p)
            if (handles[p])
                verdicts[p] = pool->await(*handles[p]);

        for (std::size_t p = 0; p < pending.size(); ++p) {
            if (!verdicts[p])
                continue;
            auto& leaf = *pending[p];
            auto& entry = st.goals.at(leaf.index);
            const CheckVerdict& v = *verdicts[p];
            if (v.status == CheckVerdict::Status::Timeout)
                ++st.tally.timed_out;
            else if (v.status == CheckVerdict::Status::CheckerError && v.diagnostics.starts_with("cancelled"))
                ++st.tally.cancelled;
            else if (v.status == CheckVerdict::Status::CheckerError)
                ++st.tally.errors;
            else
                ++st.tally.completed;

            ojson ev;
            ev["iteration"] = j;
            ev["lemma"] = entry.goal.name;
            ev["attempt"] = attempts[p]->attempt_index;
            ev["proof"] = attempts[p]->proof_text;
            ev["verdict"] = check_json(v);
            std::optional<AuditResult> audit;
            if (v.accepted()) {
                audit = axiom_audit(v);
                ev["audit_pass"] = audit->pass;
            }
            st.trace.append("CompleteAttempt", std::move(ev));

            if (audit && audit->pass) {
                entry.status = GoalStatus::ClosedByProof;
                final_verdicts[entry.goal.name] = v;
                st.accepted_proofs[entry.goal.name] = attempts[p]->proof_text;
                continue;
            }
            CheckVerdict fed = v;
            if (audit) {
                st.trace.append("AxiomAuditFailed", {{"lemma", entry.goal.name}, {"offending", audit->offending}});
                std::string list;
                for (const auto& a : audit->offending)
                    list += (list.empty() ? "" : ", ") + a;
                fed = CheckVerdict::rejected("proof relies on disallowed axioms: " + list, v.wall_time_ms);
            }
            final_verdicts[entry.goal.name] = fed;
            leaf.compiles = fed.status != CheckVerdict::Status::CheckerError;
            leaf.feedback.emplace_back(*attempts[p], std::move(fed));
        }
    }
    return final_verdicts;
}

// ---- runs ------------------------------------------------------------------------

RunOutput run_single(const GoalDecl& problem, const Policy& policy, const Checker& checker, const SearchConfig& config,
    const RunOptions& options)
{
    config.validate();
    const std::string run_id = problem.name + ".run" + std::to_string(options.run_index);
    ojson header;
    header["type"] = "Config";
    header["format_version"] = kTraceFormatVersion;
    header["run_id"] = run_id;
    header["problem"] = problem.name;
    header["goal"] = print_goal(problem);
    header["run_index"] = options.run_index;
    header["seed"] = config.seed;
    header["checker_emits_proof_text"] = checker.emits_proof_text();
    header["config"] = to_json(config);

    RunState st(problem, config, RunTrace(run_id, std::move(header)));
    st.stop = options.stop;

    RunOutput out;
    auto& res = out.result;

    QcOutcome scratch;
    const QcOutcome root_qc = cached_qc(problem, st.config, &st.qc_cache, scratch);
    if (root_qc.found()) {
        st.disproof = root_qc.witness;
        st.trace.append("GoalDisproved", {{"iteration", 0}, {"target", problem.name},
                                             {"witness", env_json(*root_qc.witness)},
                                             {"trial_index", root_qc.trial_index},
                                             {"reason", std::string(qc_reason_name(root_qc.reason))}});
    } else {
        decomposition_stage(st, policy, checker);
    }

    if (st.disproof) {
        res.outcome = RunResult::Outcome::Disproved;
        res.witness = st.disproof;
    } else {
        const auto leaves = st.goals.leaves();
        res.lemma_count = static_cast<std::int64_t>(leaves.size());
        ojson names = ojson::array();
        for (auto i : leaves)
            names.push_back(st.goals.at(i).goal.name);
        st.trace.append("StageTransition", {{"from", "decompose"}, {"to", "complete"},
                                               {"decompose_iterations", st.decompose_used},
                                               {"lemma_count", res.lemma_count}, {"leaves", std::move(names)}});
        completion_stage(st, policy, checker, options.pool);
        const bool all_closed = std::all_of(leaves.begin(), leaves.end(), [&](std::size_t i) {
            const auto s = st.goals.at(i).status;
            return s == GoalStatus::ClosedByProof || s == GoalStatus::ClosedByDischarge;
        });
        res.outcome = all_closed ? RunResult::Outcome::Proved : RunResult::Outcome::Exhausted;
        if (checker.emits_proof_text() && all_closed) {
            std::int64_t lines = 0;
            for (const auto& [name, text] : st.accepted_proofs)
                lines += count_lines(text);
            res.proof_lines = lines;
        }
    }
    res.decompose_iterations = st.decompose_used;
    res.complete_iterations = st.complete_used;
    res.cancelled = st.stop.stop_requested() && res.outcome != RunResult::Outcome::Proved;

    ojson end;
    end["outcome"] = std::string(outcome_name(res.outcome));
    end["witness"] = res.witness ? env_json(*res.witness) : ojson(nullptr);
    end["iterations"] = {{"decompose", res.decompose_iterations}, {"complete", res.complete_iterations}};
    end["lemma_count"] = res.lemma_count;
    end["proof_lines"] = res.proof_lines ? ojson(*res.proof_lines) : ojson(nullptr);
    end["cancelled"] = res.cancelled;
    const auto& c = st.tally;
    end["checks"] = {{"submitted", c.submitted}, {"completed", c.completed}, {"timed_out", c.timed_out},
        {"cancelled", c.cancelled}, {"errors", c.errors}};
    st.trace.append("RunEnd", std::move(end));

    out.trace = std::move(st.trace);
    return out;
}

PassKResult run_pass_k(const GoalDecl& problem, const Policy& policy, const Checker& checker,
    const SearchConfig& config, VerifyPool* pool, unsigned threads)
{
    config.validate();
    const auto k = static_cast<std::size_t>(config.k_parallel);
    PassKResult out;
    out.per_run.resize(k);
    out.traces.resize(k);
    std::vector<std::stop_source> stops(k);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> first_proved{std::numeric_limits<std::size_t>::max()};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= k)
                return;
            SearchConfig cfg = config;
            cfg.seed = run_seed(config.seed, static_cast<std::int64_t>(i));
            RunOptions opts;
            opts.run_index = static_cast<std::int64_t>(i);
            opts.pool = pool;
            opts.stop = stops[i].get_token();
            auto r = run_single(problem, policy, checker, cfg, opts);
            if (r.result.outcome == RunResult::Outcome::Proved && config.fail_fast) {
                std::size_t seen = first_proved.load();
                while (i < seen && !first_proved.compare_exchange_weak(seen, i)) {
                }
                for (std::size_t later = i + 1; later < k; ++later)
                    stops[later].request_stop();
            }
            out.per_run[i] = std::move(r.result);
            out.traces[i] = std::move(r.trace);
        }
    };

    unsigned n = threads ? threads : std::max(1U, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, k));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool_threads;
        for (unsigned t = 0; t < n; ++t)
            pool_threads.emplace_back(worker);
    }

    for (std::size_t i = 0; i < k; ++i) {
        if (out.per_run[i].outcome == RunResult::Outcome::Proved) {
            out.solved = true;
            out.first_success_run = static_cast<std::int64_t>(i) + 1;
            break;
        }
    }
    return out;
}

} // namespace hps
