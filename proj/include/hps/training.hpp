#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hps/ast.hpp"
#include "hps/prover.hpp"
#include "hps/search.hpp"
#include "hps/trace.hpp"

namespace hps {

inline constexpr int kTrajectorySchemaVersion = 1;

struct TrainingConfig {
    std::int64_t iterations = 16;     // environment-loop steps T
    std::int64_t group_size = 8;      // rollouts per sampled problem
    std::int64_t fallback_after = 4;  // m: policy attempts before the fallback takes over
    std::int64_t completion_budget = 8; // total attempts per lemma (policy + fallback)
    double replay_ratio = 0.25;       // share of completion records re-sampled for replay
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// ---- curriculum -----------------------------------------------------------------

struct CurriculumEntry {
    enum class Provenance : std::uint8_t { Seed, InjectedLemma };
    GoalDecl goal;
    Provenance provenance = Provenance::Seed;
    std::string parent; // InjectedLemma only
    std::string run_id; // InjectedLemma only
};

class Curriculum {
public:
    Curriculum() = default;
    static Curriculum from_seed(const std::vector<GoalDecl>& goals);

    const std::vector<CurriculumEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::int64_t version() const { return version_; }
    bool contains(const GoalDecl& g) const;
    double mean_footprint() const;

    /// Adds the entry unless an alpha-equivalent goal is present; a clashing
    /// name gets a `_v<n>` suffix. Does not bump the version.
    bool insert(CurriculumEntry e);
    void bump() { ++version_; }

private:
    std::vector<CurriculumEntry> entries_;
    std::set<std::string> keys_;
    std::set<std::string> names_;
    std::int64_t version_ = 0;
};

/// Adds gate-accepted lemmas, skipping alpha-equivalent duplicates. The version
/// goes up by one iff at least one lemma was new.
Curriculum augment_curriculum(Curriculum curriculum, const std::vector<GoalDecl>& accepted_lemmas,
    const std::string& parent, const std::string& run_id);

// ---- rollout groups -------------------------------------------------------------

struct RolloutGroup {
    GoalDecl goal;
    std::vector<DecompositionProposal> proposals;
    std::vector<double> rewards;
    std::vector<ScoreBreakdown> scores;
    // Infrastructure failures (or a declined rollout); such rewards are 0 and
    // are left out of the filtering mean.
    std::vector<std::optional<std::string>> errors;
    double mean_reward = 0.0;

    /// Mean over rewards without an error annotation; nullopt if there are none.
    std::optional<double> informative_mean() const;
};

/// Gates and scores every proposal independently (rewards are S). Lemmas are
/// renamed `<goal>_1_<i>` first.
RolloutGroup score_rollout_group(const GoalDecl& goal, std::vector<DecompositionProposal> proposals,
    const Checker& checker, const SearchConfig& config);

/// Keeps groups whose informative mean is strictly between 0 and 1.
std::vector<RolloutGroup> filter_groups(const std::vector<RolloutGroup>& groups);

// ---- trajectories ----------------------------------------------------------------

class FilterViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrajectoryRecord {
    enum class Kind : std::uint8_t { Decomposition, Completion };
    enum class Source : std::uint8_t { Policy, Fallback };

    Kind kind = Kind::Decomposition;
    Source source = Source::Policy;
    ojson input;  // serialized PolicyContext
    ojson output; // proposal or attempt
    std::optional<ScoreBreakdown> score;  // Decomposition
    std::optional<CheckVerdict> verdict;  // Completion
    std::optional<bool> audit_pass;       // Completion
    std::int64_t attempts = 1;

    friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&);
};

ojson to_json(const TrajectoryRecord& r);
TrajectoryRecord trajectory_from_json(const ojson& j);

ojson context_json(const PolicyContext& ctx);
ojson proposal_json(const DecompositionProposal& p);

/// Throws FilterViolation unless: decompositions have v = 1 and r > 0;
/// completions are Accepted and pass the axiom audit.
void validate_record(const TrajectoryRecord& r);

/// Writes a schema header line plus one record per line. Every record is
/// validated first; nothing is written if any fails.
std::size_t export_trajectories(const std::vector<TrajectoryRecord>& records, const std::filesystem::path& path);
std::vector<TrajectoryRecord> import_trajectories(const std::filesystem::path& path);

struct CompletionOutcome {
    std::optional<TrajectoryRecord> record; // nullopt: unresolved
    std::vector<std::pair<CompletionAttempt, CheckVerdict>> attempts;
    std::int64_t policy_attempts = 0;
    std::int64_t fallback_attempts = 0;
};

/// Up to m policy attempts with feedback, then the fallback for whatever
/// remains of `budget` total attempts.
CompletionOutcome policy_first_completion(const GoalDecl& lemma, const Policy& policy, const Policy& fallback,
    const Checker& checker, std::int64_t m, std::int64_t budget, std::int64_t timeout_ms, std::uint64_t seed = 0);

/// Deterministic sample of ceil(ratio * n) completion records for replay.
std::vector<TrajectoryRecord> replay_sample(
    const std::vector<TrajectoryRecord>& records, double ratio, std::uint64_t seed);

// ---- environment loop --------------------------------------------------------------

struct CollectResult {
    Curriculum curriculum;
    std::vector<RolloutGroup> groups;
    std::vector<RolloutGroup> kept;
    std::vector<TrajectoryRecord> trajectories;
    std::int64_t unresolved_lemmas = 0;
};

/// Environment side of the training loop: sample a problem, roll out a
/// group of decompositions, score and filter, complete the best
/// decomposition's lemmas policy-first, and grow the curriculum.
CollectResult collect(Curriculum curriculum, const Policy& policy, const Policy& fallback, const Checker& checker,
    const SearchConfig& search, const TrainingConfig& training);

} // namespace hps
