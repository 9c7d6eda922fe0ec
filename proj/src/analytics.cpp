#include "hps/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hps {

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

const ojson* find_run_end(const RunTrace& t)
{
    const auto ends = t.of_type("RunEnd");
    return ends.empty() ? nullptr : ends.back();
}

} // namespace

RunSummary summarize(const RunTrace& trace)
{
    const ojson* end = find_run_end(trace);
    if (!end)
        throw TraceFormatError("trace " + trace.run_id() + " has no RunEnd event");
    const auto& h = trace.header();
    RunSummary s;
    s.problem = h.value("problem", "");
    s.run_index = h.value("run_index", std::int64_t{0});
    s.outcome = end->value("outcome", "");
    s.lemma_count = end->value("lemma_count", std::int64_t{0});
    if (end->contains("proof_lines") && !(*end)["proof_lines"].is_null())
        s.proof_lines = (*end)["proof_lines"].get<std::int64_t>();
    if (end->contains("iterations"))
        s.complete_iterations = (*end)["iterations"].value("complete", std::int64_t{0});
    s.config = h.value("config", ojson::object());
    s.config.erase("seed");

    for (const auto* e : trace.of_type("DecomposeAttempt")) {
        if (e->value("target", "") != s.problem || !e->contains("score"))
            continue;
        s.max_root_score = std::max(s.max_root_score, (*e)["score"].value("S", 0.0));
    }
    if (s.proved()) {
        std::int64_t last = 0;
        for (const auto* e : trace.of_type("CompleteAttempt"))
            if ((*e)["verdict"].value("status", "") == "accepted" && e->value("audit_pass", false))
                last = std::max(last, e->value("iteration", std::int64_t{0}));
        s.proved_at = last;
    }
    return s;
}

std::map<std::string, std::vector<RunSummary>> group_runs(const std::vector<RunTrace>& traces)
{
    std::map<std::string, std::vector<RunSummary>> out;
    for (const auto& t : traces)
        out[t.header().value("problem", "")].push_back(summarize(t));
    for (auto& [problem, runs] : out) {
        std::sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) {
            return a.run_index < b.run_index;
        });
        for (const auto& r : runs)
            if (r.config != runs.front().config)
                throw MixedConfig("runs of problem '" + problem + "' were made with different configurations");
    }
    return out;
}

std::vector<CurvePoint> pass_at_k_curve(const std::vector<RunTrace>& traces)
{
    const auto groups = group_runs(traces);
    std::size_t max_k = 0;
    for (const auto& [_, runs] : groups)
        max_k = std::max(max_k, runs.size());
    std::vector<CurvePoint> out;
    for (std::size_t k = 1; k <= max_k; ++k) {
        std::int64_t solved = 0;
        for (const auto& [_, runs] : groups) {
            const auto upto = std::min(k, runs.size());
            if (std::any_of(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(upto),
                    [](const RunSummary& r) { return r.proved(); }))
                ++solved;
        }
        const auto n = static_cast<std::int64_t>(groups.size());
        out.push_back({static_cast<std::int64_t>(k), static_cast<double>(solved) / static_cast<double>(n), n});
    }
    return out;
}

std::vector<ReductionPoint> reduction_rate_curve(const std::vector<RunTrace>& traces)
{
    struct Acc {
        double remaining = 0.0;
        double r = 0.0;
        std::int64_t n = 0;
    };
    std::map<std::int64_t, Acc> acc;
    for (const auto& t : traces) {
        for (const auto* e : t.of_type("DecomposeAttempt")) {
            if (!e->value("accepted", false) || e->value("k", std::int64_t{0}) < 1)
                continue;
            const auto& sc = (*e)["score"];
            const auto d_parent = sc.value("d_parent", std::int64_t{0});
            if (d_parent < 1)
                continue;
            auto& a = acc[e->value("iteration", std::int64_t{0})];
            a.remaining += std::min(sc.value("d_bar", 0.0) / static_cast<double>(d_parent), 1.0);
            a.r += sc.value("r", 0.0);
            ++a.n;
        }
    }
    std::vector<ReductionPoint> out;
    for (const auto& [i, a] : acc) {
        const auto n = static_cast<double>(a.n);
        out.push_back({i, a.remaining / n, a.r / n, a.n});
    }
    return out;
}

std::map<std::int64_t, std::vector<CurvePoint>> success_vs_iterations(
    const std::vector<RunTrace>& traces, const std::vector<std::int64_t>& ks, std::int64_t max_iteration)
{
    const auto groups = group_runs(traces);
    if (max_iteration <= 0) {
        for (const auto& [_, runs] : groups)
            for (const auto& r : runs)
                max_iteration = std::max(max_iteration, r.complete_iterations);
        max_iteration = std::max<std::int64_t>(max_iteration, 1);
    }
    std::map<std::int64_t, std::vector<CurvePoint>> out;
    const auto n = static_cast<std::int64_t>(groups.size());
    if (n == 0)
        return out;
    for (const auto k : ks) {
        auto& curve = out[k];
        for (std::int64_t i = 1; i <= max_iteration; ++i) {
            std::int64_t solved = 0;
            for (const auto& [_, runs] : groups) {
                const auto upto = std::min<std::size_t>(static_cast<std::size_t>(std::max<std::int64_t>(k, 0)), runs.size());
                for (std::size_t j = 0; j < upto; ++j) {
                    if (runs[j].proved_at && *runs[j].proved_at <= i) {
                        ++solved;
                        break;
                    }
                }
            }
            curve.push_back({i, static_cast<double>(solved) / static_cast<double>(n), n});
        }
    }
    return out;
}

std::vector<ScoredOutcome> scored_outcomes(const std::vector<RunTrace>& traces)
{
    std::vector<ScoredOutcome> out;
    for (const auto& [problem, runs] : group_runs(traces)) {
        ScoredOutcome o;
        o.problem_id = problem;
        for (const auto& r : runs) {
            o.score = std::max(o.score, r.max_root_score);
            o.proved = o.proved || r.proved();
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::optional<double> auroc(const std::vector<ScoredOutcome>& outcomes)
{
    std::vector<double> pos;
    std::vector<double> neg;
    for (const auto& o : outcomes)
        (o.proved ? pos : neg).push_back(o.score);
    if (pos.empty() || neg.empty())
        return std::nullopt;
    // Rank statistic via sorting: for each positive, count negatives below and tied.
    std::sort(neg.begin(), neg.end());
    double wins = 0.0;
    for (double p : pos) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
        wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

MeanStd mean_std(const std::vector<double>& xs)
{
    MeanStd m;
    if (xs.empty())
        return m;
    for (double x : xs)
        m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs)
        ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size()));
    return m;
}

ProofStats proof_stats(const std::vector<RunTrace>& traces)
{
    ProofStats s;
    std::vector<double> lemmas;
    std::vector<double> lines;
    for (const auto& t : traces) {
        const auto r = summarize(t);
        if (!r.proved())
            continue;
        ++s.proved_runs;
        lemmas.push_back(static_cast<double>(r.lemma_count));
        if (r.proof_lines) {
            lines.push_back(static_cast<double>(*r.proof_lines));
            s.max_lines = std::max(s.max_lines.value_or(0), *r.proof_lines);
        }
    }
    s.lemma_count = mean_std(lemmas);
    if (!lines.empty())
        s.proof_lines = mean_std(lines);
    return s;
}

void write_passk_csv(std::ostream& out, const std::vector<CurvePoint>& curve)
{
    out << "k,pass_rate,n\n";
    for (const auto& p : curve)
        out << p.x << ',' << fmt(p.y) << ',' << p.n << '\n';
}

void write_reduction_csv(std::ostream& out, const std::vector<ReductionPoint>& curve)
{
    out << "iteration,remaining_fraction,r,n\n";
    for (const auto& p : curve)
        out << p.iteration << ',' << fmt(p.remaining) << ',' << fmt(p.r) << ',' << p.n << '\n';
}

void write_success_csv(std::ostream& out, const std::map<std::int64_t, std::vector<CurvePoint>>& curves)
{
    out << "k,iteration,success_rate,n\n";
    for (const auto& [k, curve] : curves)
        for (const auto& p : curve)
            out << k << ',' << p.x << ',' << fmt(p.y) << ',' << p.n << '\n';
}

void write_auroc_csv(std::ostream& out, const std::vector<ScoredOutcome>& outcomes)
{
    std::int64_t pos = 0;
    for (const auto& o : outcomes)
        pos += o.proved ? 1 : 0;
    const auto a = auroc(outcomes);
    out << "auroc,proved,unproved\n";
    out << (a ? fmt(*a) : std::string("undefined")) << ',' << pos << ','
        << static_cast<std::int64_t>(outcomes.size()) - pos << '\n';
}

void write_stats_csv(std::ostream& out, const ProofStats& s)
{
    out << "metric,mean,std,max,proved_runs\n";
    out << "lemma_count," << fmt(s.lemma_count.mean) << ',' << fmt(s.lemma_count.std) << ",," << s.proved_runs
        << '\n';
    if (s.proof_lines)
        out << "proof_lines," << fmt(s.proof_lines->mean) << ',' << fmt(s.proof_lines->std) << ','
            << *s.max_lines << ',' << s.proved_runs << '\n';
    else
        out << "proof_lines,,,," << s.proved_runs << '\n';
}

} // namespace hps
