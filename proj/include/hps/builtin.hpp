#pragma once

#include <memory>
#include <string_view>

#include "hps/eval.hpp"
#include "hps/prover.hpp"

namespace hps {

/// Completion directive understood by the built-in checker.
inline constexpr std::string_view kDecideDirective = "decide";

inline constexpr std::string_view kAndIntroMarker = "builtin:and-intro";
inline constexpr std::string_view kGroundMarker = "builtin:forall-ground";
inline constexpr std::string_view kDirectMarker = "builtin:direct";

/// Bounded-domain checker. Direct and completion obligations are decided by
/// exhaustive evaluation; reconstructions by entailment. The node budget is
/// min(domain.node_budget, timeout_ms * steps_per_ms) and running out maps to
/// Timeout. Reported wall time is steps / steps_per_ms, so verdicts are
/// reproducible.
class BuiltinChecker final : public Checker {
public:
    explicit BuiltinChecker(Domain domain, std::int64_t steps_per_ms = 10'000);

    CheckVerdict check(const Obligation& obligation, std::int64_t timeout_ms, std::stop_token stop = {}) const override;

    std::optional<std::vector<std::optional<bool>>> necessity(
        const std::vector<GoalDecl>& lemmas, const GoalDecl& goal) const override;

    const Domain& domain() const { return domain_; }

private:
    Domain domain_;
    std::int64_t steps_per_ms_;

    Domain budgeted(std::int64_t timeout_ms) const;
};

/// Shared completion behaviour of the built-in policies: always submit the
/// decide directive.
class BuiltinPolicy : public Policy {
public:
    CompletionAttempt propose_completion(const PolicyContext& context) const override;
};

/// Splits a top-level conjunction into its conjuncts, descending at most
/// `depth` And levels (depth 0 means unlimited). Each lemma keeps only the
/// goal binders it mentions.
class ConjunctionSplitter final : public BuiltinPolicy {
public:
    explicit ConjunctionSplitter(int depth = 0) : depth_(depth) {}
    std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& context) const override;

private:
    int depth_;
};

/// Replaces a top-level `forall x: S, body` by one instance per carrier value
/// when the carrier has at most `max_points` elements.
class QuantifierGrounder final : public BuiltinPolicy {
public:
    explicit QuantifierGrounder(Domain domain, std::uint64_t max_points = 8) : domain_(domain), max_points_(max_points) {}
    std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& context) const override;

private:
    Domain domain_;
    std::uint64_t max_points_;
};

/// Claims the goal can be discharged as is (k = 0).
class DirectSubmit final : public BuiltinPolicy {
public:
    std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& context) const override;
};

struct StochasticWeights {
    double split = 0.5;
    double ground = 0.2;
    double direct = 0.3;
};

/// Draws one of splitter / grounder / direct-submit per call. If the drawn
/// strategy has nothing to offer it falls back to a direct-submit claim.
class StochasticPolicy final : public BuiltinPolicy {
public:
    StochasticPolicy(Domain domain, StochasticWeights weights = {}, int split_depth = 0);
    std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& context) const override;

private:
    StochasticWeights weights_;
    ConjunctionSplitter splitter_;
    QuantifierGrounder grounder_;
    DirectSubmit direct_;
};

/// Wraps another policy and, with probability `rate` per call, corrupts its
/// proposal: negates one lemma or drops one lemma.
class NoisyPolicy final : public BuiltinPolicy {
public:
    NoisyPolicy(std::shared_ptr<const Policy> inner, double rate) : inner_(std::move(inner)), rate_(rate) {}
    std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& context) const override;
    CompletionAttempt propose_completion(const PolicyContext& context) const override;

private:
    std::shared_ptr<const Policy> inner_;
    double rate_;
};

/// Resolves `splitter`, `splitter:<depth>`, `grounder`, `direct`,
/// `stochastic[:<split>,<ground>,<direct>]`, `noisy:<rate>:<inner>`.
std::shared_ptr<const Policy> make_builtin_policy(std::string_view name, const Domain& domain);

} // namespace hps
