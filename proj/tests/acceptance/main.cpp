// Acceptance checks, one line per criterion. Pass criterion numbers as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../gen.hpp"
#include "../stubs.hpp"
#include "hps/analytics.hpp"
#include "hps/builtin.hpp"
#include "hps/error.hpp"
#include "hps/pool.hpp"
#include "hps/quickcheck.hpp"
#include "hps/score.hpp"
#include "hps/search.hpp"
#include "hps/syntax.hpp"
#include "hps/training.hpp"

using namespace hps;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double secs_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Domain small_domain()
{
    Domain d;
    d.int_lo = -2;
    d.int_hi = 2;
    d.max_list_len = 2;
    d.list_elem_lo = -1;
    d.list_elem_hi = 1;
    return d;
}

bool holds(const Formula& f, const Env& env, const Domain& d)
{
    try {
        return eval_formula(f, env, d);
    } catch (const EvalError&) {
        return false;
    }
}

// ---- 1 ------------------------------------------------------------------------

Verdict score_reproduction()
{
    // 8 + ln(1 + e^-1) to 40 digits, computed offline with 50-digit decimal arithmetic.
    const long double oracle = 8.313261687518222834048995494967855641915L;
    const std::vector<std::int64_t> kids{7, 8};
    const double lse = logsumexp_footprint(kids, 1.0);
    const bool oracle_ok = std::abs(static_cast<double>(oracle) - 8.3133) < 5e-5 &&
                           std::abs(static_cast<long double>(lse) - oracle) < 1e-12L;
    ScoreConfig cfg;
    cfg.temperature = 1.0;
    const auto s = decomposition_score(ValidityGate{true, {true, true}}, 18, kids, cfg);
    const auto shown = render_score(s.S);
    const bool pass = oracle_ok && s.v == 1 && s.S >= 0.533 && s.S <= 0.543 && shown == "0.54";
    return {pass, fmt("d_bar=%.13f S=%.6f rendered %s", lse, s.S, shown.c_str())};
}

// ---- 2 ------------------------------------------------------------------------

// Every formula over free x: Int, l: IntList (and one bound y: Int) with at
// most five operator nodes.
class Enumerator {
public:
    Enumerator()
    {
        for (int q = 0; q < 2; ++q) {
            ints_[0][q].push_back(var("x", Sort::Int));
            if (q)
                ints_[0][q].push_back(var("y", Sort::Int));
            lists_[0][q].push_back(var("l", Sort::IntList));
        }
        for (int n = 1; n <= 4; ++n)
            for (int q = 0; q < 2; ++q) {
                terms(n, q);
                formulas(n, q, [&](FormulaPtr f) { forms_[n][q].push_back(std::move(f)); });
            }
    }

    void each(int n, const std::function<void(FormulaPtr)>& cb) { formulas(n, 0, cb); }

private:
    std::vector<TermPtr> ints_[5][2];
    std::vector<TermPtr> lists_[5][2];
    std::vector<FormulaPtr> forms_[5][2];

    void terms(int n, int q)
    {
        const int m = n - 1;
        auto& I = ints_[n][q];
        auto& L = lists_[n][q];
        for (int a = 0; a <= m; ++a) {
            for (const auto& l : ints_[a][q])
                for (const auto& r : ints_[m - a][q])
                    for (auto k : {TermKind::Add, TermKind::Sub, TermKind::Mul, TermKind::Mod})
                        I.push_back(make_term(k, {l, r}));
            for (const auto& xs : lists_[a][q])
                for (const auto& e : ints_[m - a][q])
                    I.push_back(count(xs, e));
            for (int b = 0; a + b <= m; ++b)
                for (const auto& c : forms_[a][q])
                    for (const auto& t : ints_[b][q])
                        for (const auto& e : ints_[m - a - b][q])
                            I.push_back(ite(c, t, e));
            for (const auto& h : ints_[a][q])
                for (const auto& t : lists_[m - a][q])
                    L.push_back(cons(h, t));
            for (const auto& l : lists_[a][q])
                for (const auto& r : lists_[m - a][q])
                    L.push_back(append(l, r));
        }
        for (const auto& xs : lists_[m][q])
            I.push_back(length(xs));
    }

    void formulas(int n, int q, const std::function<void(FormulaPtr)>& cb)
    {
        const int m = n - 1;
        for (int a = 0; a <= m; ++a) {
            for (const auto& l : ints_[a][q])
                for (const auto& r : ints_[m - a][q])
                    for (auto k : {FormulaKind::Eq, FormulaKind::Lt, FormulaKind::Le})
                        cb(make_atom(k, l, r));
            for (const auto& l : lists_[a][q])
                for (const auto& r : lists_[m - a][q])
                    cb(eq(l, r));
            for (const auto& e : ints_[a][q])
                for (const auto& xs : lists_[m - a][q])
                    cb(mem(e, xs));
            for (const auto& l : forms_[a][q])
                for (const auto& r : forms_[m - a][q])
                    for (auto k : {FormulaKind::And, FormulaKind::Or, FormulaKind::Implies})
                        cb(make_connective(k, l, r));
        }
        for (const auto& f : forms_[m][q])
            cb(neg(f));
        if (q == 0)
            for (const auto& f : forms_[m][1]) {
                cb(forall("y", Sort::Int, f));
                cb(exists("y", Sort::Int, f));
            }
    }
};

// Trials so that every point of the generator space is drawn with probability
// at least 1 - 1e-9.
std::int64_t covering_trials(const std::vector<Binder>& binders, const QcConfig& qc)
{
    double points = 1.0;
    double p_min = 1.0;
    for (const auto& b : binders) {
        const double ni = static_cast<double>(qc.gen_int_hi - qc.gen_int_lo + 1);
        if (b.sort == Sort::Int) {
            points *= ni;
            p_min /= ni;
        } else {
            const double ne = static_cast<double>(*qc.gen_elem_hi - *qc.gen_elem_lo + 1);
            const double lens = static_cast<double>(qc.gen_max_list_len + 1);
            double lists = 0;
            for (int k = 0; k <= qc.gen_max_list_len; ++k)
                lists += std::pow(ne, k);
            points *= lists;
            p_min *= 1.0 / lens / std::pow(ne, static_cast<double>(qc.gen_max_list_len));
        }
    }
    if (p_min >= 1.0)
        return 1;
    return static_cast<std::int64_t>(std::ceil(std::log(points / 1e-9) / -std::log1p(-p_min)));
}

Verdict oracle_equivalence()
{
    const auto t0 = Clock::now();
    const Domain d = small_domain();
    QcConfig qc;
    qc.seed = 2024;
    qc.gen_int_lo = d.int_lo;
    qc.gen_int_hi = d.int_hi;
    qc.gen_max_list_len = d.max_list_len;
    qc.gen_elem_lo = d.list_elem_lo;
    qc.gen_elem_hi = d.list_elem_hi;

    Enumerator en;
    std::int64_t total = 0;
    std::int64_t valid = 0;
    std::int64_t refuted = 0;
    std::int64_t bad_witness = 0;
    std::int64_t valid_flagged = 0;
    std::int64_t missed = 0;
    std::int64_t undecided = 0;
    std::string first_problem;
    std::map<std::size_t, std::int64_t> trials; // keyed by binder count: x first, then l

    for (int n = 1; n <= 5; ++n) {
        en.each(n, [&](FormulaPtr f) {
            GoalDecl g;
            g.name = "e" + std::to_string(total++);
            const auto fv = free_vars(*f);
            if (fv.contains("x"))
                g.binders.push_back({"x", Sort::Int});
            if (fv.contains("l"))
                g.binders.push_back({"l", Sort::IntList});
            g.body = std::move(f);
            const std::size_t key = g.binders.size() * 2 + (g.binders.empty() ? 0 : g.binders[0].sort == Sort::Int);
            auto it = trials.find(key);
            if (it == trials.end())
                it = trials.emplace(key, covering_trials(g.binders, qc)).first;
            qc.trials = it->second;

            const auto oracle = decide_bounded(g, d);
            const auto q = quickcheck(g, qc, d);
            if (oracle.status == DecisionVerdict::Status::ResourceExceeded) {
                ++undecided;
                return;
            }
            const bool is_valid = oracle.status == DecisionVerdict::Status::Valid;
            valid += is_valid;
            if (q.found()) {
                ++refuted;
                if (holds(*g.body, *q.witness, d)) {
                    ++bad_witness;
                    if (first_problem.empty())
                        first_problem = print_goal(g) + " witness " + q.witness->to_string();
                }
                if (is_valid) {
                    ++valid_flagged;
                    if (first_problem.empty())
                        first_problem = print_goal(g) + " valid but refuted";
                }
            } else if (!is_valid) {
                ++missed;
                if (first_problem.empty())
                    first_problem = print_goal(g) + " invalid but not refuted";
            }
        });
    }
    const double secs = secs_since(t0);
    const bool pass = bad_witness == 0 && valid_flagged == 0 && missed == 0 && undecided == 0 && secs < 300.0;
    auto detail = fmt("%lld formulas, %lld valid, %lld refuted; bad witnesses %lld, valid refuted %lld, "
                      "invalid missed %lld, undecided %lld; %.0fs",
        static_cast<long long>(total), static_cast<long long>(valid), static_cast<long long>(refuted),
        static_cast<long long>(bad_witness), static_cast<long long>(valid_flagged), static_cast<long long>(missed),
        static_cast<long long>(undecided), secs);
    if (!first_problem.empty())
        detail += "; first: " + first_problem;
    return {pass, detail};
}

// ---- 3 ------------------------------------------------------------------------

Verdict soundness()
{
    const auto t0 = Clock::now();
    const Domain d = small_domain();
    SearchConfig cfg;
    cfg.domain = d;
    cfg.decompose_iters = 8;
    cfg.complete_iters = 2;
    cfg.qc.trials = 300;
    const BuiltinChecker chk(d);
    const auto policy = make_builtin_policy("stochastic", d);
    Domain unbounded = d;
    unbounded.node_budget = std::int64_t{1} << 50;

    testing::FormulaGen gen(77);
    gen.lit_lo = -2;
    gen.lit_hi = 2;
    int proved = 0;
    int disproved = 0;
    int exhausted = 0;
    int violations = 0;
    std::string first;
    for (int i = 0; i < 200; ++i) {
        auto g = gen.goal("s" + std::to_string(i), 1 + i % 3);
        // every other goal is made valid by construction so both outcomes occur
        if (i % 2 == 1) {
            const auto f = g.body;
            g.body = conj(disj(f, neg(f)), implies(f, f));
        }
        cfg.seed = static_cast<std::uint64_t>(i);
        const auto out = run_single(g, *policy, chk, cfg);
        const auto& r = out.result;
        bool ok = true;
        if (r.outcome == RunResult::Outcome::Proved) {
            ++proved;
            ok = decide_bounded(g, unbounded).status == DecisionVerdict::Status::Valid;
        } else if (r.outcome == RunResult::Outcome::Disproved) {
            ++disproved;
            ok = r.witness.has_value() && !holds(*g.body, *r.witness, d);
        } else {
            ++exhausted;
        }
        if (!ok) {
            ++violations;
            if (first.empty())
                first = print_goal(g);
        }
    }
    const double secs = secs_since(t0);
    auto detail = fmt("200 goals: %d proved, %d disproved, %d exhausted; %d violations; %.1fs", proved, disproved,
        exhausted, violations, secs);
    if (!first.empty())
        detail += "; first: " + first;
    return {violations == 0 && proved > 0 && disproved > 0 && secs < 600.0, detail};
}

// ---- 4 ------------------------------------------------------------------------

constexpr std::int64_t kAtomBudget = 1000;

GoalDecl family(int n)
{
    std::string body;
    for (int i = 1; i <= n; ++i)
        body += (i > 1 ? " /\\ " : "") + fmt("x + %d = %d + x", i, i);
    return parse_goal(fmt("goal G%d (x: Int) := ", n) + body);
}

Domain budget_domain()
{
    Domain d;
    d.node_budget = kAtomBudget;
    return d;
}

Verdict separation()
{
    const auto t0 = Clock::now();
    const Domain d = budget_domain();
    Domain big = d;
    big.node_budget = std::int64_t{1} << 40;
    // premise: one atom fits the budget, G_8 does not
    const auto atom_cost = decide_bounded(parse_goal("goal a (x: Int) := x + 32 = 32 + x"), big).steps_used;
    const auto g8_cost = decide_bounded(family(8), big).steps_used;
    const bool premise = atom_cost <= kAtomBudget && g8_cost > kAtomBudget;

    const BuiltinChecker chk(d);
    const ConjunctionSplitter split;
    SearchConfig cfg;
    cfg.domain = d;
    cfg.seed = 4;
    cfg.complete_iters = 4;
    cfg.decompose_iters = 128;
    std::vector<int> flat_proved;
    std::vector<int> hier_failed;
    std::int64_t max_iters = 0;
    for (int n = 2; n <= 32; ++n) {
        const auto g = family(n);
        auto flat = cfg;
        flat.decompose_iters = 0;
        if (n >= 8 && run_single(g, split, chk, flat).result.outcome == RunResult::Outcome::Proved)
            flat_proved.push_back(n);
        const auto h = run_single(g, split, chk, cfg).result;
        if (h.outcome != RunResult::Outcome::Proved)
            hier_failed.push_back(n);
        max_iters = std::max(max_iters, h.decompose_iterations);
    }
    const double secs = secs_since(t0);
    const bool pass = premise && flat_proved.empty() && hier_failed.empty() && max_iters <= 128 && secs < 120.0;
    return {pass, fmt("budget %lld nodes (atom %lld, G_8 %lld); flat proved %zu of n in [8,32], hierarchical failed "
                      "%zu of n in [2,32], max %lld decomposition iterations; %.1fs",
                      static_cast<long long>(kAtomBudget), static_cast<long long>(atom_cost),
                      static_cast<long long>(g8_cost), flat_proved.size(), hier_failed.size(),
                      static_cast<long long>(max_iters), secs)};
}

// ---- 5 ------------------------------------------------------------------------

double binom_pmf(int n, int k, double p)
{
    if (p <= 0.0)
        return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0)
        return k == n ? 1.0 : 0.0;
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                    (n - k) * std::log1p(-p));
}

// Two-sided 95% acceptance: neither tail beyond the observed count is below 2.5%.
bool within_binomial(int n, int observed, double p)
{
    double lower = 0.0;
    double upper = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double pk = binom_pmf(n, k, p);
        if (k <= observed)
            lower += pk;
        if (k >= observed)
            upper += pk;
    }
    return lower >= 0.025 && upper >= 0.025;
}

Verdict scaling()
{
    const Domain d = budget_domain();
    const BuiltinChecker chk(d);
    const auto policy = make_builtin_policy("stochastic", d);
    SearchConfig cfg;
    cfg.domain = d;
    cfg.decompose_iters = 1;
    cfg.complete_iters = 2;
    cfg.k_parallel = 8;
    std::mt19937_64 rng(5);
    constexpr int kProblems = 50;
    std::vector<std::vector<bool>> success;
    int runs_ok = 0;
    for (int p = 0; p < kProblems; ++p) {
        const int n = 8 + static_cast<int>(rng() % 25);
        cfg.seed = rng();
        const auto r = run_pass_k(family(n), *policy, chk, cfg, nullptr, 1);
        std::vector<bool> row;
        for (const auto& run : r.per_run) {
            row.push_back(run.outcome == RunResult::Outcome::Proved);
            runs_ok += row.back();
        }
        success.push_back(row);
    }
    const double p_hat = runs_ok / static_cast<double>(kProblems * 8);
    std::string detail = fmt("p_hat=%.3f;", p_hat);
    bool monotone = true;
    bool bounded = true;
    double prev = -1.0;
    for (int k : {1, 2, 4, 8}) {
        int solved = 0;
        for (const auto& row : success)
            solved += std::any_of(row.begin(), row.begin() + k, [](bool b) { return b; });
        const double emp = solved / static_cast<double>(kProblems);
        const double pred = 1.0 - std::pow(1.0 - p_hat, k);
        monotone = monotone && emp >= prev;
        const bool in = within_binomial(kProblems, solved, pred);
        bounded = bounded && in;
        prev = emp;
        detail += fmt(" k=%d %.2f (pred %.3f%s)", k, emp, pred, in ? "" : " OUT");
    }
    return {monotone && bounded && p_hat > 0.0 && p_hat < 1.0, detail};
}

// ---- 6 ------------------------------------------------------------------------

Verdict correlation()
{
    const Domain d = budget_domain();
    const BuiltinChecker chk(d);
    const char* names[] = {"splitter", "noisy:0.6:splitter", "direct", "stochastic", "noisy:0.9:stochastic"};
    std::vector<std::shared_ptr<const Policy>> policies;
    for (auto* n : names)
        policies.push_back(make_builtin_policy(n, d));
    const char* shapes[] = {"x + %d = %d + x", "x * 1 + %d = %d + x", "(x + %d) * 1 = %d + x", "%d + x - x = %d"};
    SearchConfig cfg;
    cfg.domain = d;
    cfg.decompose_iters = 4;
    cfg.complete_iters = 2;
    cfg.k_parallel = 2;
    std::mt19937_64 rng(6);
    std::vector<RunTrace> traces;
    for (int p = 0; p < 100; ++p) {
        const int n = 2 + static_cast<int>(rng() % 23);
        std::string body;
        for (int i = 1; i <= n; ++i)
            body += (i > 1 ? " /\\ " : "") + fmt(shapes[rng() % 4], i, i);
        const auto g = parse_goal(fmt("goal c%d (x: Int) := ", p) + body);
        cfg.seed = rng();
        const auto& pol = *policies[rng() % policies.size()];
        for (auto& t : run_pass_k(g, pol, chk, cfg, nullptr, 1).traces)
            traces.push_back(std::move(t));
    }
    const auto outcomes = scored_outcomes(traces);
    const auto a = auroc(outcomes);
    const auto proved = std::count_if(outcomes.begin(), outcomes.end(), [](auto& o) { return o.proved; });
    return {a && *a > 0.5 && outcomes.size() == 100,
        fmt("auroc=%.4f over %zu problems (%ld proved)", a.value_or(-1.0), outcomes.size(), static_cast<long>(proved))};
}

// ---- 7 ------------------------------------------------------------------------

Verdict group_filtering()
{
    const Domain d = small_domain();
    const BuiltinChecker chk(d);
    SearchConfig cfg;
    cfg.domain = d;
    cfg.qc.trials = 200;
    const auto goal = parse_goal("goal w (x: Int) := x + 0 = x /\\ x * 1 = x");
    auto direct = [] { return DecompositionProposal{{}, std::string(kDirectMarker), ""}; };
    auto good = [] {
        return DecompositionProposal{{parse_goal("goal a (x: Int) := x + 0 = x"), parse_goal("goal b (x: Int) := x * 1 = x")},
            std::string(kAndIntroMarker), ""};
    };
    auto bad = [] {
        return DecompositionProposal{{parse_goal("goal a (x: Int) := x < 0")}, std::string(kAndIntroMarker), ""};
    };
    const auto zeros = score_rollout_group(goal, {bad(), bad()}, chk, cfg);
    const auto ones = score_rollout_group(goal, {direct(), direct()}, chk, cfg);
    const auto mixed = score_rollout_group(goal, {good(), bad()}, chk, cfg);
    const auto mixed2 = score_rollout_group(goal, {direct(), bad()}, chk, cfg);
    const auto kept = filter_groups({zeros, ones, mixed, mixed2});
    const bool filter_ok = zeros.mean_reward == 0.0 && ones.mean_reward == 1.0 && kept.size() == 2 &&
                           kept[0].rewards == mixed.rewards && kept[1].rewards == mixed2.rewards;

    // validator
    int rejected = 0;
    int cases = 0;
    auto expect_reject = [&](const TrajectoryRecord& r) {
        ++cases;
        try {
            validate_record(r);
        } catch (const FilterViolation&) {
            ++rejected;
        }
    };
    TrajectoryRecord dec;
    dec.kind = TrajectoryRecord::Kind::Decomposition;
    dec.score = mixed.scores[0];
    bool accepts_good = true;
    try {
        validate_record(dec);
    } catch (const FilterViolation&) {
        accepts_good = false;
    }
    auto r0 = dec;
    r0.score->r = 0.0;
    expect_reject(r0);
    auto rneg = dec;
    rneg.score->r = -0.1;
    expect_reject(rneg);
    auto v0 = dec;
    v0.score->v = 0;
    expect_reject(v0);
    TrajectoryRecord comp;
    comp.kind = TrajectoryRecord::Kind::Completion;
    for (auto status : {CheckVerdict::Status::Rejected, CheckVerdict::Status::Timeout, CheckVerdict::Status::CheckerError}) {
        auto c = comp;
        c.verdict = CheckVerdict{status, "x", {}, 0};
        c.audit_pass = true;
        expect_reject(c);
    }
    auto tainted = comp;
    tainted.verdict = CheckVerdict::accepted_with({"Lean.trustCompiler"});
    tainted.audit_pass = true;
    expect_reject(tainted);
    auto unaudited = comp;
    unaudited.verdict = CheckVerdict::accepted_with({});
    expect_reject(unaudited);
    auto fine = comp;
    fine.verdict = CheckVerdict::accepted_with({"propext"});
    fine.audit_pass = true;
    try {
        validate_record(fine);
    } catch (const FilterViolation&) {
        accepts_good = false;
    }
    const auto path = fs::temp_directory_path() / "hps_acceptance_refused.jsonl";
    fs::remove(path);
    bool export_refused = false;
    try {
        export_trajectories({fine, r0}, path);
    } catch (const FilterViolation&) {
        export_refused = !fs::exists(path);
    }
    return {filter_ok && accepts_good && rejected == cases && export_refused,
        fmt("kept %zu of 4 groups (means %.2f %.2f %.3f %.3f); validator rejected %d of %d bad records", kept.size(),
            zeros.mean_reward, ones.mean_reward, mixed.mean_reward, mixed2.mean_reward, rejected, cases)};
}

// ---- 8 ------------------------------------------------------------------------

template <typename Pred>
bool wait_for(Pred p, std::chrono::milliseconds limit)
{
    const auto end = Clock::now() + limit;
    while (Clock::now() < end) {
        if (p())
            return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return p();
}

Verdict pool_discipline()
{
    const auto t0 = Clock::now();
    PoolConfig pc;
    pc.max_concurrent = 16;
    pc.queue_capacity = 4096;
    pc.check_timeout_ms = 60'000;

    // admission bound
    auto park = std::make_shared<testing::ParkingChecker>();
    std::int64_t peak = 0;
    std::int64_t queued_at_peak = 0;
    int high = 0;
    {
        VerifyPool pool(park, pc);
        std::vector<JobHandle> hs;
        for (int i = 0; i < 2000; ++i)
            hs.push_back(pool.submit(testing::named_obligation("j")));
        wait_for([&] { return park->current() == 16; }, std::chrono::seconds(10));
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        queued_at_peak = pool.stats().queued;
        park->release();
        for (auto& h : hs)
            pool.await(h);
        peak = pool.stats().peak_in_flight;
        high = park->high_water();
    }
    const bool bound_ok = peak == 16 && high == 16 && queued_at_peak == 2000 - 16;

    // timeout accuracy
    constexpr std::int64_t kTimeout = 200;
    double worst = 0.0;
    bool all_timeout = true;
    {
        PoolConfig tc = pc;
        tc.check_timeout_ms = kTimeout;
        VerifyPool pool(std::make_shared<testing::SleepChecker>(2 * kTimeout), tc);
        for (int i = 0; i < 5; ++i) {
            const auto s = Clock::now();
            const auto v = pool.await(pool.submit(testing::named_obligation("slow")));
            const double ms = std::chrono::duration<double, std::milli>(Clock::now() - s).count();
            all_timeout = all_timeout && v.status == CheckVerdict::Status::Timeout;
            worst = std::max(worst, std::abs(ms - kTimeout) / kTimeout);
        }
    }
    const bool timeout_ok = all_timeout && worst <= 0.10;

    // conservation under stress
    int snapshots = 0;
    int conserved = 0;
    {
        PoolConfig sc = pc;
        sc.max_concurrent = 8;
        sc.check_timeout_ms = 2;
        sc.queue_capacity = 100'000;
        VerifyPool pool(std::make_shared<testing::NamedSleepChecker>(), sc);
        std::vector<std::thread> producers;
        for (int t = 0; t < 3; ++t)
            producers.emplace_back([&, t] {
                std::mt19937 rng(t);
                std::vector<JobHandle> mine;
                for (int i = 0; i < 400; ++i) {
                    mine.push_back(pool.submit(testing::named_obligation("s" + std::to_string(rng() % 4))));
                    if (i % 97 == 96)
                        pool.cancel_all();
                }
                for (auto& h : mine)
                    pool.await(h);
            });
        std::mt19937 rng(8);
        while (snapshots < 100) {
            conserved += pool.stats().conserved();
            ++snapshots;
            std::this_thread::sleep_for(std::chrono::microseconds(200 + rng() % 2000));
        }
        for (auto& p : producers)
            p.join();
        conserved += pool.stats().conserved() ? 0 : -1000;
    }
    const double secs = secs_since(t0);
    return {bound_ok && timeout_ok && conserved == 100 && secs < 180.0,
        fmt("peak_in_flight %lld (stub high-water %d, %lld queued); timeout error %.1f%%; conservation %d/%d; %.1fs",
            static_cast<long long>(peak), high, static_cast<long long>(queued_at_peak), worst * 100.0, conserved,
            snapshots, secs)};
}

// ---- 9 ------------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(HPS_CLI) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

// Folds raw trace lines without the analytics module.
struct Folded {
    std::map<std::string, std::map<std::int64_t, bool>> proved;         // problem -> run -> proved
    std::map<std::string, std::map<std::int64_t, std::int64_t>> closed; // proved runs -> last accepted round
    std::map<std::string, double> root_s;
    std::map<std::int64_t, std::pair<double, std::int64_t>> remaining;
    std::vector<double> lemma_counts;
};

Folded fold(const fs::path& dir)
{
    Folded out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::istringstream in(slurp(entry.path()));
        std::string line;
        std::string problem;
        std::int64_t run = 0;
        std::int64_t last = 0;
        while (std::getline(in, line)) {
            const auto j = ojson::parse(line);
            const auto type = j["type"].get<std::string>();
            if (type == "Config") {
                problem = j["problem"].get<std::string>();
                run = j["run_index"].get<std::int64_t>();
                out.root_s.emplace(problem, 0.0);
            } else if (type == "DecomposeAttempt") {
                if (j["target"] == problem && j.contains("score"))
                    out.root_s[problem] = std::max(out.root_s[problem], j["score"]["S"].get<double>());
                if (j["accepted"] == true && j["k"].get<int>() >= 1) {
                    auto& [sum, n] = out.remaining[j["iteration"].get<std::int64_t>()];
                    sum += std::min(j["score"]["d_bar"].get<double>() / j["score"]["d_parent"].get<double>(), 1.0);
                    ++n;
                }
            } else if (type == "CompleteAttempt") {
                if (j["verdict"]["status"] == "accepted" && j["audit_pass"] == true)
                    last = std::max(last, j["iteration"].get<std::int64_t>());
            } else if (type == "RunEnd") {
                const bool ok = j["outcome"] == "proved";
                out.proved[problem][run] = ok;
                if (ok) {
                    out.closed[problem][run] = last;
                    out.lemma_counts.push_back(static_cast<double>(j["lemma_count"].get<std::int64_t>()));
                }
            }
        }
    }
    return out;
}

Verdict determinism()
{
    const auto dir = fs::temp_directory_path() / "hps_acceptance_replay";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto goals = dir / "goals.hps";
    std::ofstream(goals) << "goal comm (x: Int) (y: Int) := x + y = y + x /\\ x * y = y * x\n"
                            "goal lists (l: IntList) := length(l ++ []) = length(l) /\\ (0 :: l) != l\n"
                            "goal nested (x: Int) := (x + 0 = x /\\ x * 1 = x) /\\ (x - x = 0 /\\ 0 + x = x)\n"
                            "goal wrong (x: Int) := x * x != 4\n"
                            "goal ground := forall a: Int, a * 0 = 0\n";
    const auto cfg = dir / "config.json";
    std::ofstream(cfg) << R"({"search": {"decompose_iters": 6, "complete_iters": 3, "k_parallel": 4},
                             "domain": {"int_lo": -3, "int_hi": 3, "max_list_len": 2}})";
    int rc = 0;
    for (const char* out : {"a", "b"})
        rc |= run_cli(fmt("--config %s run %s --seed 31 --policy builtin:stochastic --workers 1 --trace-out %s",
            cfg.c_str(), goals.c_str(), (dir / out).c_str()));
    std::size_t files = 0;
    std::size_t identical = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        ++files;
        const auto other = dir / "b" / e.path().filename();
        identical += fs::exists(other) && slurp(e.path()) == slurp(other);
    }
    const bool replay = rc == 0 && files == 20 && identical == files;

    // analytics against an independent fold
    const auto traces = load_trace_dir(dir / "a");
    const auto f = fold(dir / "a");
    double err = 0.0;
    const auto curve = pass_at_k_curve(traces);
    for (const auto& pt : curve) {
        int solved = 0;
        for (const auto& [p, runs] : f.proved) {
            bool any = false;
            for (const auto& [r, ok] : runs)
                any = any || (r < pt.x && ok);
            solved += any;
        }
        err = std::max(err, std::abs(pt.y - solved / static_cast<double>(f.proved.size())));
    }
    const auto red = reduction_rate_curve(traces);
    bool shapes = red.size() == f.remaining.size() && curve.size() == 4;
    for (const auto& pt : red) {
        const auto& [sum, n] = f.remaining.at(pt.iteration);
        err = std::max(err, std::abs(pt.remaining - sum / static_cast<double>(n)));
        shapes = shapes && pt.n == n;
    }
    const auto succ = success_vs_iterations(traces, {1, 4});
    for (const auto& [k, pts] : succ)
        for (const auto& pt : pts) {
            int solved = 0;
            for (const auto& [p, runs] : f.proved) {
                bool any = false;
                for (const auto& [r, ok] : runs)
                    any = any || (r < k && ok && f.closed.at(p).at(r) <= pt.x);
                solved += any;
            }
            err = std::max(err, std::abs(pt.y - solved / static_cast<double>(f.proved.size())));
        }
    std::vector<std::pair<double, bool>> so;
    for (const auto& [p, runs] : f.proved) {
        bool any = false;
        for (const auto& [r, ok] : runs)
            any = any || ok;
        so.emplace_back(f.root_s.at(p), any);
    }
    double wins = 0;
    double pairs = 0;
    for (const auto& a : so)
        for (const auto& b : so)
            if (a.second && !b.second) {
                pairs += 1;
                wins += a.first > b.first ? 1.0 : a.first == b.first ? 0.5 : 0.0;
            }
    const auto au = auroc(scored_outcomes(traces));
    if (pairs > 0)
        err = std::max(err, au ? std::abs(*au - wins / pairs) : 1.0);
    else
        shapes = shapes && !au;
    const auto st = proof_stats(traces);
    double mean = 0;
    for (double x : f.lemma_counts)
        mean += x;
    mean /= static_cast<double>(f.lemma_counts.size());
    double var = 0;
    for (double x : f.lemma_counts)
        var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(f.lemma_counts.size()));
    err = std::max({err, std::abs(st.lemma_count.mean - mean), std::abs(st.lemma_count.std - sd)});
    shapes = shapes && st.proved_runs == static_cast<std::int64_t>(f.lemma_counts.size());

    return {replay && shapes && err <= 1e-12,
        fmt("%zu/%zu trace files byte-identical; analytics max deviation %.3g", identical, files, err)};
}

// ---- 10 -----------------------------------------------------------------------

class AxiomChecker final : public Checker {
public:
    AxiomChecker(Domain d, std::string lemma, std::vector<std::string> axioms)
        : inner_(d), lemma_(std::move(lemma)), axioms_(std::move(axioms))
    {
    }
    CheckVerdict check(const Obligation& ob, std::int64_t t, std::stop_token s = {}) const override
    {
        auto v = inner_.check(ob, t, s);
        if (ob.kind == ObligationKind::Completion && v.accepted())
            v.axioms_used = ob.goal.name == lemma_ ? axioms_ : std::vector<std::string>{"propext", "Quot.sound"};
        return v;
    }

private:
    BuiltinChecker inner_;
    std::string lemma_;
    std::vector<std::string> axioms_;
};

Verdict axiom_audit_rule()
{
    const std::vector<std::string> standard{"propext", "Classical.choice", "Quot.sound"};
    bool unit_ok = axiom_audit(CheckVerdict::accepted_with(standard)).pass;
    for (const char* bad : {"Lean.ofReduceBool", "Lean.trustCompiler"}) {
        auto with = standard;
        with.emplace_back(bad);
        const auto a = axiom_audit(CheckVerdict::accepted_with(with));
        unit_ok = unit_ok && !a.pass && a.offending == std::vector<std::string>{bad};
        unit_ok = unit_ok && !axiom_audit(CheckVerdict::accepted_with({bad})).pass;
    }

    const Domain d = small_domain();
    SearchConfig cfg;
    cfg.domain = d;
    cfg.complete_iters = 3;
    const ConjunctionSplitter split;
    const auto g = parse_goal("goal ax (x: Int) := x + 0 = x /\\ x * 1 = x");
    int reverted = 0;
    for (const char* bad : {"Lean.ofReduceBool", "Lean.trustCompiler"}) {
        const AxiomChecker chk(d, "ax_1_2", {"propext", bad});
        const auto out = run_single(g, split, chk, cfg);
        const auto audits = out.trace.of_type("AxiomAuditFailed");
        bool lemma_closed = false;
        for (const auto* e : out.trace.of_type("CompleteAttempt"))
            if ((*e)["lemma"] == "ax_1_2" && (*e)["audit_pass"] == true)
                lemma_closed = true;
        if (out.result.outcome == RunResult::Outcome::Exhausted && audits.size() == 3 && !lemma_closed &&
            (*audits[0])["offending"] == ojson::array({bad}))
            ++reverted;
    }
    const AxiomChecker clean(d, "ax_1_2", standard);
    const bool clean_proves = run_single(g, split, clean, cfg).result.outcome == RunResult::Outcome::Proved;
    return {unit_ok && reverted == 2 && clean_proves,
        fmt("allowlisted set %s; disallowed axioms reverted the lemma in %d/2 runs; standard set proves: %s",
            unit_ok ? "passes, others fail" : "MISJUDGED", reverted, clean_proves ? "yes" : "no")};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"score reproduction", score_reproduction},
        {"quickcheck vs bounded decision", oracle_equivalence},
        {"end-to-end soundness", soundness},
        {"hierarchical vs flat separation", separation},
        {"pass@k scaling", scaling},
        {"score-provability auroc", correlation},
        {"reward-group filtering", group_filtering},
        {"pool discipline", pool_discipline},
        {"determinism and replay", determinism},
        {"axiom audit", axiom_audit_rule},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.contains(id))
            continue;
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("%s C%-2d %-32s %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
