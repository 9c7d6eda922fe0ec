#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hps/trace.hpp"

namespace hps {

struct CurvePoint {
    std::int64_t x = 0;
    double y = 0.0;
    std::int64_t n = 0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

class MixedConfig : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// What analytics needs from one trace.
struct RunSummary {
    std::string problem;
    std::int64_t run_index = 0;
    std::string outcome; // "proved" | "disproved" | "exhausted"
    std::int64_t lemma_count = 0;
    std::optional<std::int64_t> proof_lines;
    std::int64_t complete_iterations = 0;
    // Completion round in which the last leaf closed (0: closed during
    // decomposition). Set only for proved runs.
    std::optional<std::int64_t> proved_at;
    // Highest S among decompositions of the root (0 when there were none).
    double max_root_score = 0.0;
    ojson config; // without the per-run seed

    bool proved() const { return outcome == "proved"; }
};

/// Throws TraceFormatError when the trace has no RunEnd.
RunSummary summarize(const RunTrace& trace);

/// Runs of each problem ordered by run index. Throws MixedConfig when runs of
/// one problem disagree on anything but the seed.
std::map<std::string, std::vector<RunSummary>> group_runs(const std::vector<RunTrace>& traces);

/// y(k): fraction of problems with a proved run among their first k runs,
/// for k = 1 .. the largest run count.
std::vector<CurvePoint> pass_at_k_curve(const std::vector<RunTrace>& traces);

struct ReductionPoint {
    std::int64_t iteration = 0;
    double remaining = 0.0; // mean min(d_bar / d_parent, 1)
    double r = 0.0;         // mean reduction ratio, 1 - remaining
    std::int64_t n = 0;
};

/// Accepted decompositions with at least one lemma, bucketed by decomposition
/// iteration; iterations without any are omitted.
std::vector<ReductionPoint> reduction_rate_curve(const std::vector<RunTrace>& traces);

/// For each k in `ks`: y(i) = fraction of problems proved within completion
/// budget i by one of their first k runs, i = 1 .. max_iteration (0: the
/// largest completion iteration seen).
std::map<std::int64_t, std::vector<CurvePoint>> success_vs_iterations(
    const std::vector<RunTrace>& traces, const std::vector<std::int64_t>& ks, std::int64_t max_iteration = 0);

struct ScoredOutcome {
    double score = 0.0;
    bool proved = false;
    std::string problem_id;
};

/// One outcome per problem: max root S over runs, proved if any run proved.
std::vector<ScoredOutcome> scored_outcomes(const std::vector<RunTrace>& traces);

/// P(score of a random proved instance > a random unproved one), ties 0.5.
/// nullopt when all labels agree.
std::optional<double> auroc(const std::vector<ScoredOutcome>& outcomes);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // population
};

MeanStd mean_std(const std::vector<double>& xs);

struct ProofStats {
    std::int64_t proved_runs = 0;
    MeanStd lemma_count;
    std::optional<MeanStd> proof_lines; // absent without proof text
    std::optional<std::int64_t> max_lines;
};

ProofStats proof_stats(const std::vector<RunTrace>& traces);

// CSV writers (header row first).
void write_passk_csv(std::ostream& out, const std::vector<CurvePoint>& curve);
void write_reduction_csv(std::ostream& out, const std::vector<ReductionPoint>& curve);
void write_success_csv(std::ostream& out, const std::map<std::int64_t, std::vector<CurvePoint>>& curves);
void write_auroc_csv(std::ostream& out, const std::vector<ScoredOutcome>& outcomes);
void write_stats_csv(std::ostream& out, const ProofStats& stats);

} // namespace hps
