#include "hps/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "hps/error.hpp"
#include "hps/syntax.hpp"

namespace hps {

void TrainingConfig::validate() const
{
    if (iterations < 0)
        throw ContractViolation("training: iterations must be >= 0");
    if (group_size < 1)
        throw ContractViolation("training: group_size must be >= 1");
    if (fallback_after < 1)
        throw ContractViolation("training: fallback_after (m) must be >= 1");
    if (completion_budget < 1)
        throw ContractViolation("training: completion_budget must be >= 1");
    if (!(replay_ratio >= 0.0 && replay_ratio <= 1.0))
        throw ContractViolation("training: replay_ratio must be in [0, 1]");
}

// ---- curriculum -------------------------------------------------------------------

Curriculum Curriculum::from_seed(const std::vector<GoalDecl>& goals)
{
    Curriculum c;
    for (const auto& g : goals)
        c.insert({g, CurriculumEntry::Provenance::Seed, "", ""});
    return c;
}

bool Curriculum::contains(const GoalDecl& g) const
{
    return keys_.contains(alpha_key(g));
}

double Curriculum::mean_footprint() const
{
    if (entries_.empty())
        return 0.0;
    double total = 0.0;
    for (const auto& e : entries_)
        total += static_cast<double>(operator_footprint(*e.goal.body));
    return total / static_cast<double>(entries_.size());
}

bool Curriculum::insert(CurriculumEntry e)
{
    if (!keys_.insert(alpha_key(e.goal)).second)
        return false;
    // Keep names unique so the curriculum can be written back as a goal file.
    if (names_.contains(e.goal.name)) {
        int n = 2;
        while (names_.contains(e.goal.name + "_v" + std::to_string(n)))
            ++n;
        e.goal.name += "_v" + std::to_string(n);
    }
    names_.insert(e.goal.name);
    entries_.push_back(std::move(e));
    return true;
}

Curriculum augment_curriculum(Curriculum curriculum, const std::vector<GoalDecl>& accepted_lemmas,
    const std::string& parent, const std::string& run_id)
{
    bool added = false;
    for (const auto& l : accepted_lemmas)
        added |= curriculum.insert({l, CurriculumEntry::Provenance::InjectedLemma, parent, run_id});
    if (added)
        curriculum.bump();
    return curriculum;
}

// ---- rollout groups ---------------------------------------------------------------

std::optional<double> RolloutGroup::informative_mean() const
{
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        if (errors[i])
            continue;
        sum += rewards[i];
        ++n;
    }
    if (n == 0)
        return std::nullopt;
    return sum / static_cast<double>(n);
}

RolloutGroup score_rollout_group(const GoalDecl& goal, std::vector<DecompositionProposal> proposals,
    const Checker& checker, const SearchConfig& config)
{
    if (proposals.empty())
        throw ContractViolation("score_rollout_group: no proposals");
    RolloutGroup g;
    g.goal = goal;
    const auto footprint = operator_footprint(*goal.body);
    for (auto& p : proposals) {
        for (std::size_t i = 0; i < p.lemmas.size(); ++i)
            p.lemmas[i].name = goal.name + "_1_" + std::to_string(i + 1);
        GateReport rep;
        try {
            rep = gate_proposal(goal, footprint, p, checker, config);
        } catch (const std::exception& e) {
            rep.infra_error = e.what();
        }
        if (rep.infra_error) {
            g.rewards.push_back(0.0);
            g.scores.push_back(ScoreBreakdown{});
            g.errors.emplace_back(*rep.infra_error);
        } else {
            g.rewards.push_back(rep.failure == GateFailure::None ? rep.score.S : 0.0);
            g.scores.push_back(rep.score);
            g.errors.emplace_back(std::nullopt);
        }
    }
    g.proposals = std::move(proposals);
    g.mean_reward = std::accumulate(g.rewards.begin(), g.rewards.end(), 0.0) / static_cast<double>(g.rewards.size());
    return g;
}

std::vector<RolloutGroup> filter_groups(const std::vector<RolloutGroup>& groups)
{
    std::vector<RolloutGroup> kept;
    for (const auto& g : groups) {
        const auto m = g.informative_mean();
        if (m && *m != 0.0 && *m != 1.0)
            kept.push_back(g);
    }
    return kept;
}

// ---- trajectories -----------------------------------------------------------------

namespace {

ojson score_to_json(const ScoreBreakdown& s)
{
    return ojson{{"v", s.v}, {"d_parent", s.d_parent}, {"d_children", s.d_children}, {"d_bar", s.d_bar}, {"r", s.r},
        {"S", s.S}};
}

ScoreBreakdown score_from_json(const ojson& j)
{
    ScoreBreakdown s;
    s.v = j.at("v").get<int>();
    s.d_parent = j.at("d_parent").get<std::int64_t>();
    s.d_children = j.at("d_children").get<std::vector<std::int64_t>>();
    s.d_bar = j.at("d_bar").get<double>();
    s.r = j.at("r").get<double>();
    s.S = j.at("S").get<double>();
    return s;
}

ojson verdict_to_json(const CheckVerdict& v)
{
    return ojson{{"status", std::string(status_name(v.status))}, {"diagnostics", v.diagnostics},
        {"axioms", v.axioms_used}, {"wall_time_ms", v.wall_time_ms}};
}

CheckVerdict verdict_from_json(const ojson& j)
{
    CheckVerdict v;
    const auto st = parse_status(j.at("status").get<std::string>());
    if (!st)
        throw std::runtime_error("unknown verdict status in trajectory");
    v.status = *st;
    v.diagnostics = j.value("diagnostics", "");
    v.axioms_used = j.value("axioms", std::vector<std::string>{});
    v.wall_time_ms = j.value("wall_time_ms", std::int64_t{0});
    return v;
}

} // namespace

bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b)
{
    return to_json(a) == to_json(b);
}

ojson context_json(const PolicyContext& ctx)
{
    ojson j;
    j["mode"] = ctx.mode == PolicyContext::Mode::Decompose ? "decompose" : "complete";
    j["goal"] = print_goal(ctx.goal);
    ojson sib = ojson::array();
    for (const auto& s : ctx.sibling_goals)
        sib.push_back(print_goal(s));
    j["siblings"] = std::move(sib);
    ojson fb = ojson::array();
    for (const auto& [a, v] : ctx.feedback_history)
        fb.push_back({{"proof", a.proof_text}, {"diagnostics", v.diagnostics}});
    j["feedback"] = std::move(fb);
    j["compiles"] = ctx.compiles ? ojson(*ctx.compiles) : ojson(nullptr);
    return j;
}

ojson proposal_json(const DecompositionProposal& p)
{
    ojson lemmas = ojson::array();
    for (const auto& l : p.lemmas)
        lemmas.push_back(print_goal(l));
    return ojson{{"lemmas", std::move(lemmas)}, {"reconstruction", p.reconstruction}, {"rationale", p.rationale}};
}

ojson to_json(const TrajectoryRecord& r)
{
    ojson j;
    j["kind"] = r.kind == TrajectoryRecord::Kind::Decomposition ? "decomposition" : "completion";
    j["source"] = r.source == TrajectoryRecord::Source::Policy ? "policy" : "fallback";
    j["input"] = r.input;
    j["output"] = r.output;
    j["score"] = r.score ? score_to_json(*r.score) : ojson(nullptr);
    j["verdict"] = r.verdict ? verdict_to_json(*r.verdict) : ojson(nullptr);
    j["audit_pass"] = r.audit_pass ? ojson(*r.audit_pass) : ojson(nullptr);
    j["attempts"] = r.attempts;
    return j;
}

TrajectoryRecord trajectory_from_json(const ojson& j)
{
    TrajectoryRecord r;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "decomposition")
        r.kind = TrajectoryRecord::Kind::Decomposition;
    else if (kind == "completion")
        r.kind = TrajectoryRecord::Kind::Completion;
    else
        throw std::runtime_error("unknown trajectory kind '" + kind + "'");
    r.source = j.at("source").get<std::string>() == "fallback" ? TrajectoryRecord::Source::Fallback
                                                               : TrajectoryRecord::Source::Policy;
    r.input = j.at("input");
    r.output = j.at("output");
    if (!j.at("score").is_null())
        r.score = score_from_json(j.at("score"));
    if (!j.at("verdict").is_null())
        r.verdict = verdict_from_json(j.at("verdict"));
    if (!j.at("audit_pass").is_null())
        r.audit_pass = j.at("audit_pass").get<bool>();
    r.attempts = j.value("attempts", std::int64_t{1});
    return r;
}

void validate_record(const TrajectoryRecord& r)
{
    if (r.kind == TrajectoryRecord::Kind::Decomposition) {
        if (!r.score)
            throw FilterViolation("decomposition record without a score");
        if (r.score->v != 1)
            throw FilterViolation("decomposition record failed the validity gate (v = 0)");
        if (!(r.score->r > 0.0))
            throw FilterViolation("decomposition record has no structural reduction (r <= 0)");
        return;
    }
    if (!r.verdict || !r.verdict->accepted())
        throw FilterViolation("completion record without an Accepted verdict");
    if (!axiom_audit(*r.verdict).pass || r.audit_pass != true)
        throw FilterViolation("completion record fails the axiom audit");
}

std::size_t export_trajectories(const std::vector<TrajectoryRecord>& records, const std::filesystem::path& path)
{
    for (const auto& r : records)
        validate_record(r);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << ojson{{"type", "TrajectoryHeader"}, {"schema_version", kTrajectorySchemaVersion}}.dump() << '\n';
    for (const auto& r : records)
        f << to_json(r).dump() << '\n';
    if (!f)
        throw std::runtime_error("write failed for " + path.string());
    return records.size();
}

std::vector<TrajectoryRecord> import_trajectories(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open " + path.string());
    std::vector<TrajectoryRecord> out;
    std::string line;
    bool header = false;
    std::size_t n = 0;
    while (std::getline(f, line)) {
        ++n;
        if (line.empty())
            continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const ojson::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
        if (!header) {
            if (j.value("type", "") != "TrajectoryHeader")
                throw std::runtime_error(path.string() + ": missing trajectory header");
            if (j.value("schema_version", 0) > kTrajectorySchemaVersion)
                throw std::runtime_error(path.string() + ": trajectory schema is newer than supported");
            header = true;
            continue;
        }
        out.push_back(trajectory_from_json(j));
    }
    if (!header)
        throw std::runtime_error(path.string() + ": empty trajectory file");
    return out;
}

// ---- completion --------------------------------------------------------------------

CompletionOutcome policy_first_completion(const GoalDecl& lemma, const Policy& policy, const Policy& fallback,
    const Checker& checker, std::int64_t m, std::int64_t budget, std::int64_t timeout_ms, std::uint64_t seed)
{
    if (m < 1)
        throw ContractViolation("policy_first_completion: m must be >= 1");
    CompletionOutcome out;
    std::optional<bool> compiles;
    for (std::int64_t i = 0; i < budget; ++i) {
        const bool use_policy = i < m;
        const Policy& actor = use_policy ? policy : fallback;
        PolicyContext ctx;
        ctx.goal = lemma;
        ctx.feedback_history = out.attempts;
        ctx.mode = PolicyContext::Mode::Complete;
        ctx.rng_seed = seed + static_cast<std::uint64_t>(i);
        ctx.compiles = compiles;
        const auto snapshot = context_json(ctx);
        (use_policy ? out.policy_attempts : out.fallback_attempts)++;

        CompletionAttempt attempt{"", i + 1};
        CheckVerdict v;
        try {
            attempt = actor.propose_completion(ctx);
            v = checker.check(Obligation::completion(lemma, attempt.proof_text), timeout_ms);
        } catch (const std::exception& e) {
            v = CheckVerdict::error(e.what());
        }
        if (v.accepted() && axiom_audit(v).pass) {
            TrajectoryRecord r;
            r.kind = TrajectoryRecord::Kind::Completion;
            r.source = use_policy ? TrajectoryRecord::Source::Policy : TrajectoryRecord::Source::Fallback;
            r.input = snapshot;
            r.output = ojson{{"proof", attempt.proof_text}, {"attempt_index", attempt.attempt_index}};
            r.verdict = v;
            r.audit_pass = true;
            r.attempts = i + 1;
            out.attempts.emplace_back(std::move(attempt), std::move(v));
            out.record = std::move(r);
            return out;
        }
        if (v.accepted())
            v = CheckVerdict::rejected("proof relies on disallowed axioms", v.wall_time_ms);
        compiles = v.status != CheckVerdict::Status::CheckerError;
        out.attempts.emplace_back(std::move(attempt), std::move(v));
    }
    return out;
}

std::vector<TrajectoryRecord> replay_sample(
    const std::vector<TrajectoryRecord>& records, double ratio, std::uint64_t seed)
{
    std::vector<const TrajectoryRecord*> pool;
    for (const auto& r : records)
        if (r.kind == TrajectoryRecord::Kind::Completion)
            pool.push_back(&r);
    const auto want = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(pool.size())));
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<TrajectoryRecord> out;
    for (std::size_t i = 0; i < want && i < pool.size(); ++i)
        out.push_back(*pool[i]);
    return out;
}

// ---- environment loop --------------------------------------------------------------

CollectResult collect(Curriculum curriculum, const Policy& policy, const Policy& fallback, const Checker& checker,
    const SearchConfig& search, const TrainingConfig& training)
{
    search.validate();
    training.validate();
    CollectResult out;
    std::mt19937_64 rng(training.seed);
    for (std::int64_t t = 1; t <= training.iterations; ++t) {
        if (curriculum.size() == 0)
            break;
        const auto pick = std::uniform_int_distribution<std::size_t>(0, curriculum.size() - 1)(rng);
        const GoalDecl goal = curriculum.entries()[pick].goal;
        const std::string run_id = "collect.t" + std::to_string(t);

        std::vector<DecompositionProposal> proposals;
        std::vector<PolicyContext> contexts;
        std::vector<bool> declined;
        for (std::int64_t i = 0; i < training.group_size; ++i) {
            PolicyContext ctx;
            ctx.goal = goal;
            ctx.mode = PolicyContext::Mode::Decompose;
            ctx.rng_seed = rng();
            std::optional<DecompositionProposal> p;
            try {
                p = policy.propose_decomposition(ctx);
            } catch (const std::exception&) {
                p.reset();
            }
            declined.push_back(!p);
            proposals.push_back(p.value_or(DecompositionProposal{}));
            contexts.push_back(std::move(ctx));
        }

        auto group = score_rollout_group(goal, proposals, checker, search);
        // A declined rollout carries no signal; keep it out of the filter mean.
        for (std::size_t i = 0; i < declined.size(); ++i) {
            if (declined[i]) {
                group.rewards[i] = 0.0;
                group.errors[i] = "policy declined";
            }
        }
        out.groups.push_back(group);
        if (!filter_groups({group}).empty())
            out.kept.push_back(group);

        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < group.proposals.size(); ++i) {
            if (group.errors[i] || group.rewards[i] <= 0.0 || group.scores[i].v != 1)
                continue;
            TrajectoryRecord r;
            r.kind = TrajectoryRecord::Kind::Decomposition;
            r.input = context_json(contexts[i]);
            r.output = proposal_json(group.proposals[i]);
            r.score = group.scores[i];
            out.trajectories.push_back(std::move(r));
            if (!best || group.rewards[i] > group.rewards[*best])
                best = i;
        }
        if (!best)
            continue;

        auto lemmas = group.proposals[*best].lemmas;
        for (std::size_t i = 0; i < lemmas.size(); ++i)
            lemmas[i].name = goal.name + "_" + std::to_string(t) + "_" + std::to_string(i + 1);
        for (std::size_t i = 0; i < lemmas.size(); ++i) {
            auto c = policy_first_completion(lemmas[i], policy, fallback, checker, training.fallback_after,
                training.completion_budget, search.check_timeout_ms, rng());
            if (c.record)
                out.trajectories.push_back(std::move(*c.record));
            else
                ++out.unresolved_lemmas;
        }
        curriculum = augment_curriculum(std::move(curriculum), lemmas, goal.name, run_id);
    }
    out.curriculum = std::move(curriculum);
    return out;
}

} // namespace hps
