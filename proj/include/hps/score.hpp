#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hps {

struct ScoreConfig {
    double temperature = 1.0;

    void validate() const;
    friend bool operator==(const ScoreConfig&, const ScoreConfig&) = default;
};

/// Binary validity gate: reconstruction succeeded and every lemma survived
/// quickcheck.
struct ValidityGate {
    bool reconstruction_ok = false;
    std::vector<bool> qc_ok_per_lemma;

    bool value() const;
};

struct ScoreBreakdown {
    int v = 0;
    std::int64_t d_parent = 0;
    std::vector<std::int64_t> d_children;
    double d_bar = 0.0;
    double r = 0.0;
    double S = 0.0;
};

/// Smooth maximum T * log(sum_i exp(d_i / T)), evaluated with the maximum
/// factored out so large footprints cannot overflow.
double logsumexp_footprint(std::span<const std::int64_t> footprints, double temperature);

/// max(1 - d_bar / d_parent, 0). Requires d_parent >= 1.
double reduction_ratio(std::int64_t d_parent, double d_bar);

/// S = r * v. With no children (a direct discharge) r is 1 and S equals v.
ScoreBreakdown decomposition_score(const ValidityGate& gate, std::int64_t d_parent,
    std::span<const std::int64_t> d_children, const ScoreConfig& config);

/// Two-decimal rendering used in human-facing output ("0.54").
std::string render_score(double s);

} // namespace hps
