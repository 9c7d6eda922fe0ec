#include "hps/prover.hpp"

#include <algorithm>

#include "hps/error.hpp"

namespace hps {

std::string_view status_name(CheckVerdict::Status s)
{
    switch (s) {
    case CheckVerdict::Status::Accepted: return "accepted";
    case CheckVerdict::Status::Rejected: return "rejected";
    case CheckVerdict::Status::Timeout: return "timeout";
    case CheckVerdict::Status::CheckerError: return "error";
    }
    return "error";
}

std::optional<CheckVerdict::Status> parse_status(std::string_view s)
{
    if (s == "accepted")
        return CheckVerdict::Status::Accepted;
    if (s == "rejected")
        return CheckVerdict::Status::Rejected;
    if (s == "timeout")
        return CheckVerdict::Status::Timeout;
    if (s == "error")
        return CheckVerdict::Status::CheckerError;
    return std::nullopt;
}

std::string_view kind_name(ObligationKind k)
{
    switch (k) {
    case ObligationKind::Direct: return "direct";
    case ObligationKind::Reconstruction: return "reconstruction";
    case ObligationKind::Completion: return "completion";
    }
    return "direct";
}

const std::set<std::string>& standard_axioms()
{
    static const std::set<std::string> axioms{"propext", "Classical.choice", "Quot.sound"};
    return axioms;
}

AuditResult axiom_audit(const CheckVerdict& verdict, const std::set<std::string>& allowlist)
{
    if (!verdict.accepted())
        throw ContractViolation("axiom_audit: verdict is not Accepted");
    AuditResult out;
    for (const auto& a : verdict.axioms_used)
        if (!allowlist.contains(a) && std::find(out.offending.begin(), out.offending.end(), a) == out.offending.end())
            out.offending.push_back(a);
    out.pass = out.offending.empty();
    return out;
}

} // namespace hps
