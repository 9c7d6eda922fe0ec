// Command-line front end: run, qc, collect, pool-stats, analyze.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "hps/analytics.hpp"
#include "hps/builtin.hpp"
#include "hps/config.hpp"
#include "hps/external.hpp"
#include "hps/pool.hpp"
#include "hps/quickcheck.hpp"
#include "hps/search.hpp"
#include "hps/syntax.hpp"
#include "hps/training.hpp"

namespace fs = std::filesystem;
using namespace hps;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<GoalDecl> load_goals(const std::string& path)
{
    return parse_goal_file(read_file(path));
}

std::shared_ptr<const Policy> make_policy(const std::string& spec, const EngineConfig& cfg, const std::string& templates,
    std::size_t connections)
{
    if (spec.starts_with("builtin:"))
        return make_builtin_policy(spec.substr(8), cfg.search.domain);
    if (spec.starts_with("extern:")) {
        auto t = templates.empty() ? PromptTemplates::defaults() : PromptTemplates::from_directory(templates);
        return std::make_shared<ExternalPolicy>(
            transport_factory(spec.substr(7)), std::move(t), cfg.search.check_timeout_ms, connections);
    }
    throw std::runtime_error("policy must be builtin:<name> or extern:<endpoint>, got '" + spec + "'");
}

std::shared_ptr<const Checker> make_checker(const std::string& spec, const EngineConfig& cfg, std::size_t connections)
{
    if (spec == "builtin")
        return std::make_shared<BuiltinChecker>(cfg.search.domain, cfg.steps_per_ms);
    if (spec.starts_with("extern:"))
        return std::make_shared<ExternalChecker>(transport_factory(spec.substr(7)), connections);
    throw std::runtime_error("checker must be builtin or extern:<endpoint>, got '" + spec + "'");
}

// Writes to `path`, or stdout for "-".
template <typename F>
void emit(const std::string& path, F&& write)
{
    if (path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open " + path + " for writing");
    write(f);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchical proof search over a small first-order language"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "engine configuration file (JSON)")->check(CLI::ExistingFile);

    // Values left unset on the command line keep whatever the config file says.
    struct RunArgs {
        std::string goal_file;
        std::optional<std::int64_t> k, decompose_iters, max_lemmas, complete_iters, budget_secs, workers, check_timeout;
        std::optional<double> temperature;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> strategy;
        std::string policy = "builtin:splitter";
        std::string checker = "builtin";
        std::string templates;
        std::string trace_out;
    } ra;
    auto* run = app.add_subcommand("run", "search for proofs of every goal in a file");
    run->add_option("goal_file", ra.goal_file)->required()->check(CLI::ExistingFile);
    run->add_option("--k", ra.k, "independent runs per goal (pass@k)");
    run->add_option("--decompose-iters", ra.decompose_iters);
    run->add_option("--max-lemmas", ra.max_lemmas);
    run->add_option("--complete-iters", ra.complete_iters);
    run->add_option("--budget-secs", ra.budget_secs);
    run->add_option("--temperature", ra.temperature);
    run->add_option("--seed", ra.seed);
    run->add_option("--strategy", ra.strategy, "footprint|score");
    run->add_option("--policy", ra.policy, "builtin:<name> or extern:<endpoint>");
    run->add_option("--checker", ra.checker, "builtin or extern:<endpoint>");
    run->add_option("--templates", ra.templates, "prompt template directory for extern policies");
    run->add_option("--trace-out", ra.trace_out, "directory for one JSONL trace per run");
    run->add_option("--workers", ra.workers, "verification pool size (0: check inline)");
    run->add_option("--check-timeout", ra.check_timeout, "per-check timeout, ms");

    std::string qc_file;
    std::optional<std::int64_t> qc_trials;
    std::optional<std::uint64_t> qc_seed;
    auto* qc = app.add_subcommand("qc", "look for counterexamples by random testing");
    qc->add_option("goal_file", qc_file)->required()->check(CLI::ExistingFile);
    qc->add_option("--trials", qc_trials);
    qc->add_option("--seed", qc_seed);

    struct CollectArgs {
        std::string curriculum;
        std::string out_dir = "collect-out";
        std::optional<std::int64_t> iterations, group_size;
        std::optional<std::uint64_t> seed;
        std::string policy = "builtin:stochastic";
        std::string fallback = "builtin:direct";
        std::string checker = "builtin";
        std::string templates;
    } ca;
    auto* col = app.add_subcommand("collect", "roll out the training environment loop over a curriculum");
    col->add_option("curriculum", ca.curriculum)->required()->check(CLI::ExistingFile);
    col->add_option("--out-dir", ca.out_dir);
    col->add_option("--iterations", ca.iterations);
    col->add_option("--group-size", ca.group_size);
    col->add_option("--seed", ca.seed);
    col->add_option("--policy", ca.policy);
    col->add_option("--fallback", ca.fallback);
    col->add_option("--checker", ca.checker);
    col->add_option("--templates", ca.templates);

    std::string ps_dir;
    auto* ps = app.add_subcommand("pool-stats", "summarize verification counters recorded in traces");
    ps->add_option("trace_dir", ps_dir)->required()->check(CLI::ExistingDirectory);

    std::string an_metric, an_dir, an_out = "-";
    std::vector<std::int64_t> an_ks{1, 2, 4, 8};
    auto* an = app.add_subcommand("analyze", "compute evaluation curves from traces as CSV");
    an->add_option("metric", an_metric)->required()->check(CLI::IsMember({"passk", "reduction", "success", "auroc", "stats"}));
    an->add_option("trace_dir", an_dir)->required()->check(CLI::ExistingDirectory);
    an->add_option("--out", an_out, "CSV path, - for stdout");
    an->add_option("--ks", an_ks, "pass@k budgets for the success curve")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        EngineConfig cfg = config_path.empty() ? EngineConfig{} : load_engine_config(config_path);

        if (*run) {
            auto& s = cfg.search;
            if (ra.k) s.k_parallel = *ra.k;
            if (ra.decompose_iters) s.decompose_iters = *ra.decompose_iters;
            if (ra.max_lemmas) s.max_open_lemmas = *ra.max_lemmas;
            if (ra.complete_iters) s.complete_iters = *ra.complete_iters;
            if (ra.budget_secs) s.wall_budget_secs = *ra.budget_secs;
            if (ra.temperature) s.score.temperature = *ra.temperature;
            if (ra.seed) s.seed = *ra.seed;
            if (ra.check_timeout) {
                s.check_timeout_ms = *ra.check_timeout;
                cfg.pool.check_timeout_ms = *ra.check_timeout;
            }
            if (ra.workers) cfg.pool.max_concurrent = *ra.workers;
            if (ra.strategy) {
                const auto st = parse_strategy(*ra.strategy);
                if (!st)
                    throw std::runtime_error("unknown strategy '" + *ra.strategy + "' (footprint|score)");
                s.target_strategy = *st;
            }
            const bool use_pool = ra.workers && *ra.workers > 0;
            if (use_pool)
                cfg.validate();
            else
                s.validate();

            const auto conns = static_cast<std::size_t>(use_pool ? *ra.workers : 1);
            auto policy = make_policy(ra.policy, cfg, ra.templates, conns);
            auto checker = make_checker(ra.checker, cfg, conns);
            std::unique_ptr<VerifyPool> pool;
            if (use_pool)
                pool = std::make_unique<VerifyPool>(checker, cfg.pool);
            if (!ra.trace_out.empty())
                fs::create_directories(ra.trace_out);

            for (const auto& goal : load_goals(ra.goal_file)) {
                // One thread per run unless a pool is in play; traces do not depend on it.
                const auto res = run_pass_k(goal, *policy, *checker, s, pool.get(), use_pool ? 0 : 1);
                if (!ra.trace_out.empty())
                    for (const auto& t : res.traces)
                        t.write(fs::path(ra.trace_out) / (t.run_id() + ".jsonl"));
                std::cout << goal.name << ": ";
                if (res.solved) {
                    const auto& r = res.per_run.at(static_cast<std::size_t>(*res.first_success_run - 1));
                    std::cout << "proved (run " << *res.first_success_run << "/" << s.k_parallel << ", "
                              << r.lemma_count << " lemma" << (r.lemma_count == 1 ? "" : "s") << ")\n";
                    continue;
                }
                const RunResult* disproved = nullptr;
                for (const auto& r : res.per_run)
                    if (r.outcome == RunResult::Outcome::Disproved)
                        disproved = &r;
                if (disproved)
                    std::cout << "disproved, counterexample " << disproved->witness->to_string() << '\n';
                else
                    std::cout << "not proved in " << s.k_parallel << " run" << (s.k_parallel == 1 ? "" : "s") << '\n';
            }
            if (pool) {
                const auto st = pool->stats();
                std::cerr << "pool: submitted " << st.submitted << ", completed " << st.completed << ", timed out "
                          << st.timed_out << ", cancelled " << st.cancelled << ", peak in flight "
                          << st.peak_in_flight << ", p50/p95/p99 " << st.p50_ms << "/" << st.p95_ms << "/"
                          << st.p99_ms << " ms\n";
            }
            return 0;
        }

        if (*qc) {
            auto q = cfg.search.qc;
            if (qc_trials) q.trials = *qc_trials;
            if (qc_seed) q.seed = *qc_seed;
            q.validate();
            bool any = false;
            for (const auto& goal : load_goals(qc_file)) {
                const auto out = quickcheck(goal, q, cfg.search.domain);
                if (out.found()) {
                    any = true;
                    std::cout << goal.name << ": counterexample at trial " << out.trial_index << ": "
                              << out.witness->to_string() << '\n';
                } else {
                    std::cout << goal.name << ": no counterexample in " << out.trials_run << " trials\n";
                }
            }
            return any ? 1 : 0;
        }

        if (*col) {
            auto& t = cfg.training;
            if (ca.iterations) t.iterations = *ca.iterations;
            if (ca.group_size) t.group_size = *ca.group_size;
            if (ca.seed) t.seed = *ca.seed;
            t.validate();
            cfg.search.validate();
            auto policy = make_policy(ca.policy, cfg, ca.templates, 1);
            auto fallback = make_policy(ca.fallback, cfg, ca.templates, 1);
            auto checker = make_checker(ca.checker, cfg, 1);
            auto result = collect(Curriculum::from_seed(load_goals(ca.curriculum)), *policy, *fallback, *checker,
                cfg.search, t);

            fs::create_directories(ca.out_dir);
            const auto dir = fs::path(ca.out_dir);
            const auto n = export_trajectories(result.trajectories, dir / "trajectories.jsonl");
            std::ofstream groups(dir / "groups.jsonl", std::ios::binary | std::ios::trunc);
            for (const auto& g : result.groups) {
                const bool kept = !filter_groups({g}).empty();
                ojson errs = ojson::array();
                for (const auto& e : g.errors)
                    errs.push_back(e ? ojson(*e) : ojson(nullptr));
                groups << ojson{{"goal", print_goal(g.goal)}, {"rewards", g.rewards}, {"errors", std::move(errs)},
                                   {"mean_reward", g.mean_reward}, {"kept", kept}}
                              .dump()
                       << '\n';
            }
            std::vector<GoalDecl> goals;
            for (const auto& e : result.curriculum.entries())
                goals.push_back(e.goal);
            std::ofstream(dir / "curriculum.goals", std::ios::binary | std::ios::trunc) << print_goal_file(goals);
            std::cout << "groups " << result.groups.size() << ", kept " << result.kept.size() << ", trajectories "
                      << n << ", unresolved lemmas " << result.unresolved_lemmas << ", curriculum "
                      << result.curriculum.size() << " (version " << result.curriculum.version() << ")\n";
            return 0;
        }

        if (*ps) {
            const auto traces = load_trace_dir(ps_dir);
            CheckTally sum;
            std::vector<double> lat;
            for (const auto& t : traces) {
                for (const auto* e : t.of_type("RunEnd")) {
                    const auto& c = (*e)["checks"];
                    sum.submitted += c.value("submitted", std::int64_t{0});
                    sum.completed += c.value("completed", std::int64_t{0});
                    sum.timed_out += c.value("timed_out", std::int64_t{0});
                    sum.cancelled += c.value("cancelled", std::int64_t{0});
                    sum.errors += c.value("errors", std::int64_t{0});
                }
                for (const auto* e : t.of_type("CompleteAttempt"))
                    lat.push_back((*e)["verdict"].value("wall_time_ms", 0.0));
            }
            std::cout << "runs,submitted,completed,timed_out,cancelled,errors,p50_ms,p95_ms,p99_ms\n"
                      << traces.size() << ',' << sum.submitted << ',' << sum.completed << ',' << sum.timed_out << ','
                      << sum.cancelled << ',' << sum.errors << ',' << nearest_rank(lat, 0.50) << ','
                      << nearest_rank(lat, 0.95) << ',' << nearest_rank(lat, 0.99) << '\n';
            return 0;
        }

        if (*an) {
            const auto traces = load_trace_dir(an_dir);
            emit(an_out, [&](std::ostream& o) {
                if (an_metric == "passk")
                    write_passk_csv(o, pass_at_k_curve(traces));
                else if (an_metric == "reduction")
                    write_reduction_csv(o, reduction_rate_curve(traces));
                else if (an_metric == "success")
                    write_success_csv(o, success_vs_iterations(traces, an_ks));
                else if (an_metric == "auroc")
                    write_auroc_csv(o, scored_outcomes(traces));
                else
                    write_stats_csv(o, proof_stats(traces));
            });
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "hps: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
