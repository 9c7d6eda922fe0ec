#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "hps/analytics.hpp"
#include "hps/builtin.hpp"
#include "hps/search.hpp"
#include "hps/syntax.hpp"

using namespace hps;

namespace {

struct Fake {
    std::string problem = "p";
    std::int64_t run = 0;
    std::string outcome = "exhausted";
    std::vector<double> root_scores;   // one accepted root decomposition each
    std::vector<std::int64_t> closes;  // completion rounds with an accepted, audited proof
    std::int64_t lemmas = 1;
    std::optional<std::int64_t> lines;
    std::int64_t decompose_iters = 8;
};

RunTrace fake(const Fake& f)
{
    ojson cfg{{"decompose_iters", f.decompose_iters}, {"seed", f.run}};
    RunTrace t(f.problem + ".run" + std::to_string(f.run),
        {{"type", "Config"}, {"format_version", 1}, {"problem", f.problem}, {"run_index", f.run}, {"config", cfg}});
    std::int64_t it = 0;
    for (double s : f.root_scores)
        t.append("DecomposeAttempt", {{"iteration", ++it}, {"target", f.problem}, {"k", 2}, {"accepted", s > 0},
                                         {"score", {{"v", 1}, {"d_parent", 10}, {"d_bar", 10 * (1 - s)}, {"r", s}, {"S", s}}}});
    for (auto round : f.closes)
        t.append("CompleteAttempt",
            {{"iteration", round}, {"lemma", "l"}, {"verdict", {{"status", "accepted"}}}, {"audit_pass", true}});
    t.append("RunEnd", {{"outcome", f.outcome}, {"lemma_count", f.lemmas},
                           {"proof_lines", f.lines ? ojson(*f.lines) : ojson(nullptr)},
                           {"iterations", {{"decompose", it}, {"complete", 0}}}});
    return t;
}

// O(n^2) pair count.
double brute_auroc(const std::vector<ScoredOutcome>& xs)
{
    double wins = 0;
    double pairs = 0;
    for (const auto& p : xs) {
        if (!p.proved)
            continue;
        for (const auto& q : xs) {
            if (q.proved)
                continue;
            pairs += 1;
            wins += p.score > q.score ? 1.0 : p.score == q.score ? 0.5 : 0.0;
        }
    }
    return wins / pairs;
}

Domain small()
{
    Domain d;
    d.int_lo = -2;
    d.int_hi = 2;
    d.max_list_len = 2;
    d.list_elem_lo = -1;
    d.list_elem_hi = 1;
    return d;
}

// Splits conjunctions; a completion succeeds on roughly a third of the
// (round, lemma, seed) draws.
class Flaky final : public BuiltinPolicy {
public:
    std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& c) const override
    {
        return split_.propose_decomposition(c);
    }
    CompletionAttempt propose_completion(const PolicyContext& c) const override
    {
        std::mt19937_64 rng(c.rng_seed);
        return {rng() % 3 == 0 ? "decide" : "rfl", static_cast<std::int64_t>(c.feedback_history.size()) + 1};
    }

private:
    ConjunctionSplitter split_;
};

} // namespace

TEST_SUITE("analytics") {

TEST_CASE("summaries")
{
    const auto s = summarize(fake({.problem = "q", .run = 2, .outcome = "proved", .root_scores = {0.2, 0.7, 0.0},
        .closes = {1, 3}, .lemmas = 2, .lines = 5}));
    CHECK(s.problem == "q");
    CHECK(s.run_index == 2);
    CHECK(s.proved());
    CHECK(s.proved_at == 3);
    CHECK(s.max_root_score == 0.7);
    CHECK(s.proof_lines == 5);
    CHECK_FALSE(s.config.contains("seed"));
    CHECK_FALSE(summarize(fake({})).proved_at.has_value());

    RunTrace no_end("x.run0", {{"type", "Config"}, {"format_version", 1}});
    CHECK_THROWS_AS(summarize(no_end), TraceFormatError);
}

TEST_CASE("pass@k")
{
    const std::vector<RunTrace> ts{fake({.run = 0}), fake({.run = 1, .outcome = "proved"})};
    const auto c = pass_at_k_curve(ts);
    REQUIRE(c.size() == 2);
    CHECK(c[0] == CurvePoint{1, 0.0, 1});
    CHECK(c[1] == CurvePoint{2, 1.0, 1});

    // order of the input does not matter, run index does
    const std::vector<RunTrace> rev{ts[1], ts[0]};
    CHECK(pass_at_k_curve(rev) == c);

    std::vector<RunTrace> many;
    for (int p = 0; p < 4; ++p)
        for (int r = 0; r < 3; ++r)
            many.push_back(fake({.problem = "p" + std::to_string(p), .run = r,
                .outcome = (p == 0 && r == 0) || (p == 1 && r == 2) ? "proved" : "exhausted"}));
    const auto m = pass_at_k_curve(many);
    REQUIRE(m.size() == 3);
    CHECK(m[0].y == 0.25);
    CHECK(m[1].y == 0.25);
    CHECK(m[2].y == 0.5);
    CHECK(m[2].n == 4);
    CHECK(pass_at_k_curve({}).empty());
}

TEST_CASE("mixed configurations are refused")
{
    const std::vector<RunTrace> ts{fake({.run = 0}), fake({.run = 1, .decompose_iters = 4})};
    CHECK_THROWS_AS(group_runs(ts), MixedConfig);
    CHECK_THROWS_AS(pass_at_k_curve(ts), MixedConfig);
    // different seeds alone are fine
    CHECK_NOTHROW(group_runs({fake({.run = 0}), fake({.run = 1})}));
}

TEST_CASE("reduction curve")
{
    const auto r = 1.0 - (8.0 + std::log1p(std::exp(-1.0))) / 18.0;
    RunTrace t("p.run0", {{"type", "Config"}, {"format_version", 1}, {"problem", "p"}});
    t.append("DecomposeAttempt", {{"iteration", 1}, {"target", "p"}, {"k", 2}, {"accepted", true},
                                     {"score", {{"d_parent", 18}, {"d_bar", 18 * (1 - r)}, {"r", r}, {"S", r}}}});
    // ignored: rejected, and a discharge
    t.append("DecomposeAttempt", {{"iteration", 2}, {"target", "p"}, {"k", 2}, {"accepted", false},
                                     {"score", {{"d_parent", 18}, {"d_bar", 17.0}, {"r", 0.0}, {"S", 0.0}}}});
    t.append("DecomposeAttempt", {{"iteration", 3}, {"target", "p"}, {"k", 0}, {"accepted", true},
                                     {"score", {{"d_parent", 18}, {"d_bar", 0.0}, {"r", 1.0}, {"S", 1.0}}}});
    const auto c = reduction_rate_curve({t});
    REQUIRE(c.size() == 1);
    CHECK(c[0].iteration == 1);
    CHECK(std::abs(c[0].remaining - 0.4618478715287902) < 1e-12);
    CHECK(std::abs(c[0].r - 0.5381521284712098) < 1e-12);
    CHECK(std::abs(c[0].remaining + c[0].r - 1.0) < 1e-12);
}

TEST_CASE("auroc examples")
{
    CHECK(auroc({{0.9, true, "a"}, {0.1, false, "b"}}) == 1.0);
    CHECK(auroc({{0.1, true, "a"}, {0.9, false, "b"}}) == 0.0);
    CHECK(auroc({{0.5, true, "a"}, {0.5, false, "b"}, {0.5, true, "c"}}) == 0.5);
    CHECK(auroc({{0.8, true, "a"}, {0.4, true, "b"}, {0.6, false, "c"}, {0.2, false, "d"}}) == 0.75);
    CHECK_FALSE(auroc({{0.8, true, "a"}, {0.4, true, "b"}}).has_value());
    CHECK_FALSE(auroc({}).has_value());
}

TEST_CASE("auroc against pair counting")
{
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 200; ++rep) {
        const auto n = 2 + rng() % 30;
        std::vector<ScoredOutcome> xs;
        for (std::size_t i = 0; i < n; ++i)
            xs.push_back({static_cast<double>(rng() % 7) / 6.0, static_cast<bool>(rng() & 1), std::to_string(i)});
        const auto a = auroc(xs);
        const bool mixed = std::any_of(xs.begin(), xs.end(), [](auto& x) { return x.proved; }) &&
                           std::any_of(xs.begin(), xs.end(), [](auto& x) { return !x.proved; });
        REQUIRE(a.has_value() == mixed);
        if (!mixed)
            continue;
        CHECK(std::abs(*a - brute_auroc(xs)) < 1e-12);

        auto cubed = xs;
        for (auto& x : cubed)
            x.score = x.score * x.score * x.score;
        CHECK(std::abs(*auroc(cubed) - *a) < 1e-12);

        auto swapped = xs;
        for (auto& x : swapped)
            x.proved = !x.proved;
        CHECK(std::abs(*auroc(swapped) - (1.0 - *a)) < 1e-12);
    }
}

TEST_CASE("scored outcomes take the best root score and any proof")
{
    const std::vector<RunTrace> ts{fake({.problem = "a", .run = 0, .root_scores = {0.3}}),
        fake({.problem = "a", .run = 1, .outcome = "proved", .root_scores = {0.6}, .closes = {1}}),
        fake({.problem = "b", .run = 0})};
    const auto s = scored_outcomes(ts);
    REQUIRE(s.size() == 2);
    CHECK(s[0].problem_id == "a");
    CHECK(s[0].score == 0.6);
    CHECK(s[0].proved);
    CHECK(s[1].score == 0.0);
    CHECK_FALSE(s[1].proved);
    CHECK(auroc(s) == 1.0);
}

TEST_CASE("proof statistics")
{
    const std::vector<RunTrace> ts{fake({.problem = "a", .outcome = "proved", .closes = {1}, .lemmas = 2, .lines = 4}),
        fake({.problem = "b", .outcome = "proved", .closes = {1}, .lemmas = 4, .lines = 8}), fake({.problem = "c"})};
    const auto st = proof_stats(ts);
    CHECK(st.proved_runs == 2);
    CHECK(st.lemma_count.mean == 3.0);
    CHECK(st.lemma_count.std == 1.0);
    REQUIRE(st.proof_lines.has_value());
    CHECK(st.proof_lines->mean == 6.0);
    CHECK(st.max_lines == 8);

    const auto no_text = proof_stats({fake({.outcome = "proved", .closes = {1}, .lemmas = 3})});
    CHECK_FALSE(no_text.proof_lines.has_value());
    CHECK(mean_std({}).mean == 0.0);
    const auto ms = mean_std({1, 2, 3, 4});
    CHECK(ms.mean == 2.5);
    CHECK(std::abs(ms.std - std::sqrt(1.25)) < 1e-15);
}

TEST_CASE("csv output")
{
    std::ostringstream a;
    write_passk_csv(a, {{1, 0.5, 2}, {2, 1.0, 2}});
    CHECK(a.str() == "k,pass_rate,n\n1,0.5,2\n2,1,2\n");
    std::ostringstream b;
    write_auroc_csv(b, {{0.5, true, "a"}});
    CHECK(b.str() == "auroc,proved,unproved\nundefined,1,0\n");
    std::ostringstream c;
    write_reduction_csv(c, {{1, 0.25, 0.75, 3}});
    CHECK(c.str() == "iteration,remaining_fraction,r,n\n1,0.25,0.75,3\n");
}

TEST_CASE("success curve agrees with truncated reruns")
{
    const Flaky pol;
    const BuiltinChecker chk(small());
    std::vector<GoalDecl> problems;
    const char* atoms[] = {"x + 0 = x", "x * 1 = x", "0 + x = x", "x - x = 0", "x * 0 = 0", "1 * x = x"};
    for (int i = 0; i < 20; ++i) {
        std::string body = atoms[i % 6];
        for (int j = 1; j <= i % 3 + 1; ++j)
            body += std::string(" /\\ ") + atoms[(i + j) % 6];
        problems.push_back(parse_goal("goal s" + std::to_string(i) + " (x: Int) := " + body));
    }
    SearchConfig cfg;
    cfg.domain = small();
    cfg.qc.trials = 100;
    cfg.k_parallel = 2;
    cfg.complete_iters = 8;
    cfg.seed = 11;
    std::vector<RunTrace> full;
    for (const auto& p : problems)
        for (auto& t : run_pass_k(p, pol, chk, cfg, nullptr, 1).traces)
            full.push_back(std::move(t));
    const auto curves = success_vs_iterations(full, {1, 2}, 8);

    bool varied = false;
    for (std::int64_t i : {1, 2, 4}) {
        auto trunc = cfg;
        trunc.complete_iters = i;
        int solved_k1 = 0;
        int solved_k2 = 0;
        for (const auto& p : problems) {
            const auto r = run_pass_k(p, pol, chk, trunc, nullptr, 1);
            solved_k1 += r.per_run[0].outcome == RunResult::Outcome::Proved;
            solved_k2 += r.solved;
        }
        CHECK(curves.at(1).at(i - 1).x == i);
        CHECK(std::abs(curves.at(1).at(i - 1).y - solved_k1 / 20.0) < 1e-12);
        CHECK(std::abs(curves.at(2).at(i - 1).y - solved_k2 / 20.0) < 1e-12);
        varied |= solved_k2 > 0 && solved_k2 < 20;
    }
    CHECK(varied);
    CHECK(success_vs_iterations({}, {1}).empty());
}

}
