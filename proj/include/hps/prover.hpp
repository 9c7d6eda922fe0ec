#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <utility>
#include <vector>

#include "hps/ast.hpp"

namespace hps {

struct DecompositionProposal {
    std::vector<GoalDecl> lemmas;
    std::string reconstruction;
    std::string rationale;
};

struct CompletionAttempt {
    std::string proof_text;
    std::int64_t attempt_index = 1;
};

struct CheckVerdict {
    enum class Status : std::uint8_t { Accepted, Rejected, Timeout, CheckerError };

    Status status = Status::Rejected;
    std::string diagnostics;
    std::vector<std::string> axioms_used;
    std::int64_t wall_time_ms = 0;

    bool accepted() const { return status == Status::Accepted; }

    static CheckVerdict accepted_with(std::vector<std::string> axioms, std::int64_t ms = 0)
    {
        return {Status::Accepted, "", std::move(axioms), ms};
    }
    static CheckVerdict rejected(std::string why, std::int64_t ms = 0) { return {Status::Rejected, std::move(why), {}, ms}; }
    static CheckVerdict timeout(std::int64_t ms = 0) { return {Status::Timeout, "timeout", {}, ms}; }
    static CheckVerdict error(std::string why) { return {Status::CheckerError, std::move(why), {}, 0}; }
};

std::string_view status_name(CheckVerdict::Status s);
std::optional<CheckVerdict::Status> parse_status(std::string_view s);

enum class ObligationKind : std::uint8_t { Direct, Reconstruction, Completion };

std::string_view kind_name(ObligationKind k);

struct Obligation {
    ObligationKind kind = ObligationKind::Direct;
    GoalDecl goal;
    std::vector<GoalDecl> lemmas;
    std::optional<std::string> proof;
    std::string reconstruction;

    static Obligation direct(GoalDecl g) { return {ObligationKind::Direct, std::move(g), {}, std::nullopt, {}}; }
    static Obligation reconstruct(GoalDecl g, std::vector<GoalDecl> lemmas, std::string marker)
    {
        return {ObligationKind::Reconstruction, std::move(g), std::move(lemmas), std::nullopt, std::move(marker)};
    }
    static Obligation completion(GoalDecl g, std::string proof)
    {
        return {ObligationKind::Completion, std::move(g), {}, std::move(proof), {}};
    }
};

/// Kernel-side verification. Implementations must tolerate concurrent calls.
class Checker {
public:
    virtual ~Checker() = default;

    virtual CheckVerdict check(const Obligation& obligation, std::int64_t timeout_ms, std::stop_token stop = {}) const = 0;

    /// Whether accepted completions carry real proof text (line counts are
    /// meaningful only then).
    virtual bool emits_proof_text() const { return false; }

    /// Advisory leave-one-out necessity per lemma; nullopt when the backend
    /// cannot tell. Entries are nullopt when undecided within budget.
    virtual std::optional<std::vector<std::optional<bool>>> necessity(
        const std::vector<GoalDecl>& /*lemmas*/, const GoalDecl& /*goal*/) const
    {
        return std::nullopt;
    }
};

struct PolicyContext {
    enum class Mode : std::uint8_t { Decompose, Complete };

    GoalDecl goal;
    std::vector<GoalDecl> sibling_goals;
    std::vector<std::pair<CompletionAttempt, CheckVerdict>> feedback_history;
    Mode mode = Mode::Decompose;
    // Per-call randomness for stochastic policies; derived by the caller.
    std::uint64_t rng_seed = 0;
    // Whether the last attempt at least compiled (Rejected rather than an
    // error); unset before the first attempt.
    std::optional<bool> compiles;
};

/// Decomposition/completion proposer. Implementations must be stateless with
/// respect to calls (all randomness comes from PolicyContext::rng_seed).
class Policy {
public:
    virtual ~Policy() = default;

    /// nullopt: the policy has no decomposition to offer for this goal.
    virtual std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& context) const = 0;
    virtual CompletionAttempt propose_completion(const PolicyContext& context) const = 0;
};

const std::set<std::string>& standard_axioms();

struct AuditResult {
    bool pass = true;
    std::vector<std::string> offending;
};

/// Subset test of the verdict's axioms against `allowlist`. Only meaningful
/// for Accepted verdicts; anything else is a ContractViolation.
AuditResult axiom_audit(const CheckVerdict& verdict, const std::set<std::string>& allowlist = standard_axioms());

} // namespace hps
