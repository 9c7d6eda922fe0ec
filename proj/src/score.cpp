#include "hps/score.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hps/error.hpp"

namespace hps {

void ScoreConfig::validate() const
{
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw ContractViolation("score: temperature must be a positive finite number");
}

bool ValidityGate::value() const
{
    return reconstruction_ok && std::all_of(qc_ok_per_lemma.begin(), qc_ok_per_lemma.end(), [](bool b) { return b; });
}

double logsumexp_footprint(std::span<const std::int64_t> footprints, double temperature)
{
    if (footprints.empty())
        throw ContractViolation("logsumexp_footprint: empty footprint list");
    if (!(temperature > 0.0))
        throw ContractViolation("logsumexp_footprint: temperature must be positive");
    const auto top = static_cast<double>(*std::max_element(footprints.begin(), footprints.end()));
    double acc = 0.0;
    for (auto d : footprints)
        acc += std::exp((static_cast<double>(d) - top) / temperature);
    return top + temperature * std::log(acc);
}

double reduction_ratio(std::int64_t d_parent, double d_bar)
{
    if (d_parent < 1)
        throw ContractViolation("reduction_ratio: parent footprint must be >= 1");
    return std::max(1.0 - d_bar / static_cast<double>(d_parent), 0.0);
}

ScoreBreakdown decomposition_score(const ValidityGate& gate, std::int64_t d_parent,
    std::span<const std::int64_t> d_children, const ScoreConfig& config)
{
    config.validate();
    if (d_parent < 1)
        throw ContractViolation("decomposition_score: parent footprint must be >= 1");
    ScoreBreakdown out;
    out.v = gate.value() ? 1 : 0;
    out.d_parent = d_parent;
    out.d_children.assign(d_children.begin(), d_children.end());
    if (d_children.empty()) {
        out.d_bar = 0.0;
        out.r = 1.0;
    } else {
        out.d_bar = logsumexp_footprint(d_children, config.temperature);
        out.r = reduction_ratio(d_parent, out.d_bar);
    }
    out.S = out.r * out.v;
    return out;
}

std::string render_score(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", s);
    return buf;
}

} // namespace hps
