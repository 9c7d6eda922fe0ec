#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "hps/ast.hpp"
#include "hps/eval.hpp"
#include "hps/prover.hpp"
#include "hps/quickcheck.hpp"
#include "hps/score.hpp"
#include "hps/trace.hpp"

namespace hps {

class VerifyPool;

enum class TargetStrategy : std::uint8_t { HighestFootprint, HighestScore };

std::string_view strategy_name(TargetStrategy s);
std::optional<TargetStrategy> parse_strategy(std::string_view s);

struct SearchConfig {
    std::int64_t decompose_iters = 128;
    std::int64_t max_open_lemmas = 32;
    std::int64_t complete_iters = 128;
    std::int64_t wall_budget_secs = 1800;
    std::int64_t k_parallel = 1;
    TargetStrategy target_strategy = TargetStrategy::HighestFootprint;
    QcConfig qc;
    ScoreConfig score;
    Domain domain;
    std::uint64_t seed = 0;
    // Per-check timeout handed to the checker (and capped by the pool's own).
    std::int64_t check_timeout_ms = 300'000;
    // Stop the remaining runs of a pass@k batch once a lower-index run proves.
    bool fail_fast = false;
    // Record advisory leave-one-out necessity bits on accepted decompositions.
    bool record_necessity = true;

    void validate() const;
    friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

enum class GoalStatus : std::uint8_t { Open, Decomposed, ClosedByDischarge, ClosedByProof };

std::string_view goal_status_name(GoalStatus s);

struct GoalEntry {
    GoalDecl goal;
    std::int64_t footprint = 0;
    GoalStatus status = GoalStatus::Open;
    std::optional<std::string> parent;
    int depth = 0;
    // Score of the decomposition that created this goal (root: none).
    std::optional<ScoreBreakdown> created_by;
    // No further decomposition will be attempted: the policy declined it, or
    // a non-root quickcheck refuted it. Settled goals stay Open for completion.
    bool settled = false;
};

/// The goal tree of one run. Entries keep insertion order; the root is entry 0.
class OpenGoalSet {
public:
    explicit OpenGoalSet(GoalDecl root);

    const std::vector<GoalEntry>& entries() const { return entries_; }
    const GoalEntry& at(std::size_t i) const { return entries_.at(i); }
    GoalEntry& at(std::size_t i) { return entries_.at(i); }
    std::optional<std::size_t> find(const std::string& name) const;

    /// Appends Open children under `parent`, who becomes Decomposed.
    void decompose(std::size_t parent, const std::vector<GoalDecl>& lemmas, const ScoreBreakdown& score);

    /// Lemmas inserted so far (every entry except the root).
    std::int64_t inserted_lemmas() const { return static_cast<std::int64_t>(entries_.size()) - 1; }
    /// Entries never decomposed, in insertion order.
    std::vector<std::size_t> leaves() const;
    std::size_t open_count() const;

private:
    std::vector<GoalEntry> entries_;
    std::map<std::string, std::size_t> index_;
};

/// HighestFootprint: maximal footprint, oldest first on ties. HighestScore:
/// maximal creating-decomposition S (root counts as 1), then footprint, then
/// age. Only Open, unsettled entries are eligible; nullopt when none is.
std::optional<std::size_t> select_target(const OpenGoalSet& set, TargetStrategy strategy);

enum class GateFailure : std::uint8_t {
    None,
    TargetQcFailed,
    QcFailed,
    ReconstructionFailed,
    ReconstructionTimeout,
    AuditFailed,
    TrivialTarget,
    LemmaCapExceeded
};

std::string_view gate_failure_name(GateFailure f);

/// Full gate evaluation of one proposal against its target.
struct GateReport {
    ValidityGate gate;
    ScoreBreakdown score;
    GateFailure failure = GateFailure::None;
    std::vector<QcOutcome> lemma_qc;
    std::optional<CheckVerdict> reconstruction; // absent when quickcheck already failed
    // Set when the checker reported an infrastructure error; nothing is decided.
    std::optional<std::string> infra_error;
};

/// Quickchecks every lemma, then (only if all survive) runs the
/// reconstruction check, or a direct check when k = 0, and scores.
/// `qc_cache` memoizes quickcheck by printed goal within a run.
GateReport gate_proposal(const GoalDecl& target, std::int64_t target_footprint, const DecompositionProposal& proposal,
    const Checker& checker, const SearchConfig& config, std::map<std::string, QcOutcome>* qc_cache = nullptr);

struct StepOutcome {
    enum class Kind : std::uint8_t {
        AcceptedDecomposition,
        AcceptedDischarge,
        RejectedGate,
        GoalDisproved,
        Declined,
        InfrastructureError,
        NoneOpen
    };
    Kind kind = Kind::NoneOpen;
    GateFailure reason = GateFailure::None;
    std::optional<std::size_t> target;
    std::optional<Env> witness;
    std::string message;
};

/// Completion-check tallies of one run (reported in RunEnd).
struct CheckTally {
    std::int64_t submitted = 0;
    std::int64_t completed = 0;
    std::int64_t timed_out = 0;
    std::int64_t cancelled = 0;
    std::int64_t errors = 0;
};

/// Mutable state of one run, owned by a single coordinator.
struct RunState {
    OpenGoalSet goals;
    RunTrace trace;
    SearchConfig config;
    std::map<std::string, QcOutcome> qc_cache;
    std::int64_t decompose_used = 0;
    std::int64_t complete_used = 0;
    std::optional<Env> disproof;
    std::stop_token stop;
    std::int64_t deadline_ms = 0; // steady-clock ms; 0 means none
    CheckTally tally;
    std::map<std::string, std::string> accepted_proofs;

    RunState(GoalDecl root, SearchConfig cfg, RunTrace trace = {});
    bool out_of_time() const;
};

/// One iteration of the decomposition stage. Declined proposals settle the
/// target and do not consume an iteration; everything else does.
StepOutcome decompose_step(RunState& state, const Policy& policy, const Checker& checker);

/// Repeats decompose_step until decompose_iters, the wall budget, a root
/// disproof or the lack of eligible targets stops it.
void decomposition_stage(RunState& state, const Policy& policy, const Checker& checker);

/// Completes every unclosed leaf, one attempt per leaf per round, for up to
/// complete_iters rounds. Accepted verdicts failing the axiom audit leave the
/// leaf unproved. With a pool, each round's checks are dispatched together.
std::map<std::string, CheckVerdict> completion_stage(
    RunState& state, const Policy& policy, const Checker& checker, VerifyPool* pool = nullptr);

struct RunResult {
    enum class Outcome : std::uint8_t { Proved, Disproved, Exhausted };
    Outcome outcome = Outcome::Exhausted;
    std::optional<Env> witness;
    std::int64_t decompose_iterations = 0;
    std::int64_t complete_iterations = 0;
    std::int64_t lemma_count = 0;
    std::optional<std::int64_t> proof_lines; // only with a checker that emits proof text
    bool cancelled = false;
};

std::string_view outcome_name(RunResult::Outcome o);

struct RunOptions {
    std::int64_t run_index = 0;
    VerifyPool* pool = nullptr;
    std::stop_token stop;
};

struct RunOutput {
    RunResult result;
    RunTrace trace;
};

/// Quickchecks the root, runs both stages and records RunEnd. Never throws
/// for search failures; those are outcomes or trace events.
RunOutput run_single(const GoalDecl& problem, const Policy& policy, const Checker& checker, const SearchConfig& config,
    const RunOptions& options = {});

struct PassKResult {
    bool solved = false;
    std::optional<std::int64_t> first_success_run; // 1-based
    std::vector<RunResult> per_run;
    std::vector<RunTrace> traces;
};

/// Seed of run i (0-based) in a pass@k batch.
inline std::uint64_t run_seed(std::uint64_t seed, std::int64_t run_index)
{
    return seed ^ static_cast<std::uint64_t>(run_index);
}

/// k_parallel independent runs on up to `threads` threads (0: hardware
/// concurrency). The result does not depend on scheduling unless fail_fast
/// cancels runs, and then only runs after the first success are affected.
PassKResult run_pass_k(const GoalDecl& problem, const Policy& policy, const Checker& checker,
    const SearchConfig& config, VerifyPool* pool = nullptr, unsigned threads = 0);

} // namespace hps
