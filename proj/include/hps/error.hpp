#pragma once

#include <stdexcept>
#include <string>

namespace hps {

struct SourceSpan {
    int line = 1;
    int column = 1;
    int length = 0;

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, SourceSpan span)
        : std::runtime_error(std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + message),
          span_(span), message_(message)
    {
    }

    const SourceSpan& span() const noexcept { return span_; }
    const std::string& message() const noexcept { return message_; }

private:
    SourceSpan span_;
    std::string message_;
};

// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Mod by zero or integer overflow during evaluation.
class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hps
