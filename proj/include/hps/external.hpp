#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hps/error.hpp"
#include "hps/prover.hpp"

namespace hps {

// ---- Wire protocol (newline-delimited JSON) --------------------------------

struct CheckRequest {
    std::string id;
    ObligationKind kind = ObligationKind::Direct;
    std::string goal;
    std::vector<std::string> lemmas;
    std::optional<std::string> proof;
    std::int64_t timeout_ms = 0;

    friend bool operator==(const CheckRequest&, const CheckRequest&) = default;
};

struct CheckResponse {
    std::string id;
    CheckVerdict::Status status = CheckVerdict::Status::Rejected;
    std::string diagnostics;
    std::vector<std::string> axioms;
    std::int64_t wall_time_ms = 0;

    friend bool operator==(const CheckResponse&, const CheckResponse&) = default;
};

struct FeedbackItem {
    std::string proof;
    std::string diagnostics;

    friend bool operator==(const FeedbackItem&, const FeedbackItem&) = default;
};

struct PolicyRequest {
    std::string id;
    PolicyContext::Mode mode = PolicyContext::Mode::Decompose;
    std::string goal;
    std::vector<std::string> siblings;
    std::vector<FeedbackItem> feedback;
    std::optional<std::string> prompt;
    std::optional<bool> compiles;

    friend bool operator==(const PolicyRequest&, const PolicyRequest&) = default;
};

struct PolicyResponse {
    std::string id;
    std::vector<std::string> lemmas;
    std::string reconstruction;
    std::string rationale;
    std::optional<std::string> proof;

    friend bool operator==(const PolicyResponse&, const PolicyResponse&) = default;
};

nlohmann::json to_json(const CheckRequest& r);
nlohmann::json to_json(const CheckResponse& r);
nlohmann::json to_json(const PolicyRequest& r);
nlohmann::json to_json(const PolicyResponse& r);

// Decoders ignore unknown fields and throw TransportError on missing or
// mistyped required fields.
CheckRequest decode_check_request(std::string_view line);
CheckResponse decode_check_response(std::string_view line);
PolicyRequest decode_policy_request(std::string_view line);
PolicyResponse decode_policy_response(std::string_view line, PolicyContext::Mode mode);

std::string encode_line(const nlohmann::json& j);

// ---- Transports -------------------------------------------------------------

/// One request line out, one response line back. Not thread-safe; callers
/// serialize per connection.
class Transport {
public:
    virtual ~Transport() = default;
    /// Throws TimeoutError when no response arrives in time and TransportError
    /// on any other failure. A connection that failed is not reused.
    virtual std::string exchange(const std::string& line, std::int64_t timeout_ms) = 0;
    virtual bool healthy() const = 0;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

/// Child process speaking the protocol on stdin/stdout (`/bin/sh -c cmd`).
class ProcessTransport final : public Transport {
public:
    explicit ProcessTransport(std::string command);
    ~ProcessTransport() override;
    ProcessTransport(const ProcessTransport&) = delete;
    ProcessTransport& operator=(const ProcessTransport&) = delete;

    std::string exchange(const std::string& line, std::int64_t timeout_ms) override;
    bool healthy() const override { return healthy_; }

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    bool healthy_ = true;
    std::string buffer_;
};

/// HTTP POST of the request line to http://host:port/path.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::string url);
    std::string exchange(const std::string& line, std::int64_t timeout_ms) override;
    bool healthy() const override { return true; }

private:
    std::string host_;
    int port_ = 80;
    std::string path_;
};

using TransportFactory = std::function<std::unique_ptr<Transport>()>;

/// `http://...` selects HTTP; `exec:<command>` or a bare command spawns a
/// child process.
TransportFactory transport_factory(std::string endpoint);

/// Bounded set of connections; each exchange holds one connection exclusively.
class ConnectionPool {
public:
    ConnectionPool(TransportFactory factory, std::size_t max_connections);

    std::string exchange(const std::string& line, std::int64_t timeout_ms);

private:
    TransportFactory factory_;
    std::size_t max_;
    std::size_t open_ = 0;
    std::vector<std::unique_ptr<Transport>> idle_;
    std::mutex mu_;
    std::condition_variable cv_;
};

// ---- Adapters ---------------------------------------------------------------

class ExternalChecker final : public Checker {
public:
    explicit ExternalChecker(TransportFactory factory, std::size_t connections = 1);

    CheckVerdict check(const Obligation& obligation, std::int64_t timeout_ms, std::stop_token stop = {}) const override;
    bool emits_proof_text() const override { return true; }

private:
    mutable ConnectionPool pool_;
    mutable std::atomic<std::uint64_t> next_id_{1};
};

struct PromptTemplates {
    std::string decompose;
    std::string complete;

    static PromptTemplates defaults();
    /// Reads `decompose.txt` and `complete.txt` from `dir`.
    static PromptTemplates from_directory(const std::string& dir);
};

/// Substitutes `{name}` placeholders; unknown placeholders are left intact.
std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars);

/// Extracts the REPLACE halves of SEARCH/REPLACE blocks; text without blocks
/// is returned unchanged. Throws PolicyError on unbalanced markers.
std::string extract_replace_blocks(std::string_view response);

class ExternalPolicy final : public Policy {
public:
    ExternalPolicy(TransportFactory factory, PromptTemplates templates = PromptTemplates::defaults(),
        std::int64_t timeout_ms = 300'000, std::size_t connections = 1);

    std::optional<DecompositionProposal> propose_decomposition(const PolicyContext& context) const override;
    CompletionAttempt propose_completion(const PolicyContext& context) const override;

    PolicyRequest build_request(const PolicyContext& context, std::string id) const;

private:
    mutable ConnectionPool pool_;
    PromptTemplates templates_;
    std::int64_t timeout_ms_;
    mutable std::atomic<std::uint64_t> next_id_{1};

    PolicyResponse call(const PolicyContext& context) const;
};

} // namespace hps
