#include "hps/external.hpp"

#include <chrono>
#include <csignal>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"

#include "hps/error.hpp"
#include "hps/syntax.hpp"

namespace hps {

using nlohmann::json;

namespace {

json parse_object(std::string_view line)
{
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object())
        throw TransportError("protocol message is not a JSON object");
    return j;
}

template <typename T>
T required(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end())
        throw TransportError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw TransportError(std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw TransportError(std::string("field '") + key + "' has the wrong type");
    }
}

std::optional<ObligationKind> parse_kind(std::string_view s)
{
    if (s == "direct")
        return ObligationKind::Direct;
    if (s == "reconstruction")
        return ObligationKind::Reconstruction;
    if (s == "completion")
        return ObligationKind::Completion;
    return std::nullopt;
}

} // namespace

std::string encode_line(const json& j)
{
    // dump() escapes embedded newlines, so one message is exactly one line.
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

json to_json(const CheckRequest& r)
{
    json j;
    j["id"] = r.id;
    j["kind"] = std::string(kind_name(r.kind));
    j["goal"] = r.goal;
    j["lemmas"] = r.lemmas;
    j["proof"] = r.proof ? json(*r.proof) : json(nullptr);
    j["timeout_ms"] = r.timeout_ms;
    return j;
}

json to_json(const CheckResponse& r)
{
    json j;
    j["id"] = r.id;
    j["status"] = std::string(status_name(r.status));
    j["diagnostics"] = r.diagnostics;
    j["axioms"] = r.axioms;
    j["wall_time_ms"] = r.wall_time_ms;
    return j;
}

json to_json(const PolicyRequest& r)
{
    json j;
    j["id"] = r.id;
    j["mode"] = r.mode == PolicyContext::Mode::Decompose ? "decompose" : "complete";
    j["goal"] = r.goal;
    j["siblings"] = r.siblings;
    json fb = json::array();
    for (const auto& f : r.feedback)
        fb.push_back({{"proof", f.proof}, {"diagnostics", f.diagnostics}});
    j["feedback"] = std::move(fb);
    if (r.prompt)
        j["prompt"] = *r.prompt;
    if (r.compiles)
        j["compiles"] = *r.compiles;
    return j;
}

json to_json(const PolicyResponse& r)
{
    json j;
    j["id"] = r.id;
    if (r.proof) {
        j["proof"] = *r.proof;
    } else {
        j["lemmas"] = r.lemmas;
        j["reconstruction"] = r.reconstruction;
        j["rationale"] = r.rationale;
    }
    return j;
}

CheckRequest decode_check_request(std::string_view line)
{
    const json j = parse_object(line);
    CheckRequest r;
    r.id = required<std::string>(j, "id");
    const auto kind = parse_kind(required<std::string>(j, "kind"));
    if (!kind)
        throw TransportError("unknown obligation kind");
    r.kind = *kind;
    r.goal = required<std::string>(j, "goal");
    r.lemmas = optional_field<std::vector<std::string>>(j, "lemmas", {});
    if (auto it = j.find("proof"); it != j.end() && !it->is_null())
        r.proof = required<std::string>(j, "proof");
    r.timeout_ms = required<std::int64_t>(j, "timeout_ms");
    return r;
}

CheckResponse decode_check_response(std::string_view line)
{
    const json j = parse_object(line);
    CheckResponse r;
    r.id = required<std::string>(j, "id");
    const auto status = parse_status(required<std::string>(j, "status"));
    if (!status)
        throw TransportError("unknown verdict status");
    r.status = *status;
    r.diagnostics = optional_field<std::string>(j, "diagnostics", "");
    r.axioms = optional_field<std::vector<std::string>>(j, "axioms", {});
    r.wall_time_ms = optional_field<std::int64_t>(j, "wall_time_ms", 0);
    return r;
}

PolicyRequest decode_policy_request(std::string_view line)
{
    const json j = parse_object(line);
    PolicyRequest r;
    r.id = required<std::string>(j, "id");
    const auto mode = required<std::string>(j, "mode");
    if (mode == "decompose")
        r.mode = PolicyContext::Mode::Decompose;
    else if (mode == "complete")
        r.mode = PolicyContext::Mode::Complete;
    else
        throw TransportError("unknown policy mode");
    r.goal = required<std::string>(j, "goal");
    r.siblings = optional_field<std::vector<std::string>>(j, "siblings", {});
    if (auto it = j.find("feedback"); it != j.end() && !it->is_null()) {
        if (!it->is_array())
            throw TransportError("field 'feedback' has the wrong type");
        for (const auto& f : *it) {
            if (!f.is_object())
                throw TransportError("feedback entries must be objects");
            r.feedback.push_back(
                {optional_field<std::string>(f, "proof", ""), optional_field<std::string>(f, "diagnostics", "")});
        }
    }
    if (auto it = j.find("prompt"); it != j.end() && !it->is_null())
        r.prompt = required<std::string>(j, "prompt");
    if (auto it = j.find("compiles"); it != j.end() && !it->is_null())
        r.compiles = required<bool>(j, "compiles");
    return r;
}

PolicyResponse decode_policy_response(std::string_view line, PolicyContext::Mode mode)
{
    const json j = parse_object(line);
    PolicyResponse r;
    r.id = required<std::string>(j, "id");
    if (mode == PolicyContext::Mode::Complete) {
        r.proof = required<std::string>(j, "proof");
    } else {
        r.lemmas = required<std::vector<std::string>>(j, "lemmas");
        r.reconstruction = optional_field<std::string>(j, "reconstruction", "");
        r.rationale = optional_field<std::string>(j, "rationale", "");
    }
    return r;
}

// ---- ProcessTransport --------------------------------------------------------

ProcessTransport::ProcessTransport(std::string command)
{
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0)
        throw TransportError("pipe() failed");
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw TransportError("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0)
        throw TransportError("fork() failed");
    if (pid_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

ProcessTransport::~ProcessTransport()
{
    if (to_child_ >= 0)
        close(to_child_);
    if (from_child_ >= 0)
        close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == 0) {
            kill(pid_, SIGTERM);
            waitpid(pid_, &status, 0);
        }
    }
}

std::string ProcessTransport::exchange(const std::string& line, std::int64_t timeout_ms)
{
    if (!healthy_)
        throw TransportError("connection is closed");
    std::string out = line;
    out += '\n';
    std::size_t written = 0;
    while (written < out.size()) {
        const auto n = write(to_child_, out.data() + written, out.size() - written);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            healthy_ = false;
            throw TransportError("write to child process failed");
        }
        written += static_cast<std::size_t>(n);
    }

    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string reply = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return reply;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now()).count();
        if (left <= 0) {
            healthy_ = false;
            throw TimeoutError("no response from child process");
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = poll(&pfd, 1, static_cast<int>(std::min<std::int64_t>(left, INT32_MAX)));
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            healthy_ = false;
            throw TransportError("poll() failed");
        }
        if (ready == 0)
            continue;
        char buf[4096];
        const auto n = read(from_child_, buf, sizeof buf);
        if (n <= 0) {
            if (n < 0 && errno == EINTR)
                continue;
            healthy_ = false;
            throw TransportError("child process closed its output");
        }
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

// ---- HttpTransport -----------------------------------------------------------

HttpTransport::HttpTransport(std::string url)
{
    constexpr std::string_view scheme = "http://";
    if (!std::string_view(url).starts_with(scheme))
        throw TransportError("only http:// endpoints are supported: " + url);
    std::string rest = url.substr(scheme.size());
    const auto slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        host_ = authority.substr(0, colon);
        try {
            port_ = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw TransportError("bad port in " + url);
        }
    } else {
        host_ = authority;
    }
}

std::string HttpTransport::exchange(const std::string& line, std::int64_t timeout_ms)
{
    httplib::Client client(host_, port_);
    const auto secs = timeout_ms / 1000;
    const auto usecs = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path_, line + "\n", "application/x-ndjson");
    if (!res) {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start).count();
        if (res.error() == httplib::Error::Read && elapsed >= timeout_ms)
            throw TimeoutError("HTTP request timed out");
        throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200)
        throw TransportError("HTTP status " + std::to_string(res->status));
    std::string body = res->body;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r'))
        body.pop_back();
    return body;
}

TransportFactory transport_factory(std::string endpoint)
{
    if (endpoint.starts_with("http://"))
        return [endpoint] { return std::make_unique<HttpTransport>(endpoint); };
    if (endpoint.starts_with("exec:"))
        endpoint = endpoint.substr(5);
    return [endpoint] { return std::make_unique<ProcessTransport>(endpoint); };
}

// ---- ConnectionPool ----------------------------------------------------------

ConnectionPool::ConnectionPool(TransportFactory factory, std::size_t max_connections)
    : factory_(std::move(factory)), max_(std::max<std::size_t>(max_connections, 1))
{
}

std::string ConnectionPool::exchange(const std::string& line, std::int64_t timeout_ms)
{
    std::unique_ptr<Transport> conn;
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !idle_.empty() || open_ < max_; });
        if (!idle_.empty()) {
            conn = std::move(idle_.back());
            idle_.pop_back();
        } else {
            ++open_;
        }
    }
    auto give_back = [&](bool keep) {
        std::lock_guard lock(mu_);
        if (keep && conn && conn->healthy())
            idle_.push_back(std::move(conn));
        else
            --open_;
        cv_.notify_one();
    };
    try {
        if (!conn)
            conn = factory_();
        std::string reply = conn->exchange(line, timeout_ms);
        give_back(true);
        return reply;
    } catch (...) {
        give_back(false);
        throw;
    }
}

// ---- ExternalChecker ---------------------------------------------------------

ExternalChecker::ExternalChecker(TransportFactory factory, std::size_t connections)
    : pool_(std::move(factory), connections)
{
}

CheckVerdict ExternalChecker::check(const Obligation& ob, std::int64_t timeout_ms, std::stop_token) const
{
    CheckRequest req;
    req.id = "chk-" + std::to_string(next_id_.fetch_add(1));
    req.kind = ob.kind;
    req.goal = print_goal(ob.goal);
    for (const auto& l : ob.lemmas)
        req.lemmas.push_back(print_goal(l));
    if (ob.kind == ObligationKind::Reconstruction)
        req.proof = ob.reconstruction;
    else
        req.proof = ob.proof;
    req.timeout_ms = timeout_ms;

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    };
    try {
        const auto reply = decode_check_response(pool_.exchange(encode_line(to_json(req)), timeout_ms));
        if (reply.id != req.id)
            return CheckVerdict::error("response id '" + reply.id + "' does not match request '" + req.id + "'");
        CheckVerdict v;
        v.status = reply.status;
        v.diagnostics = reply.diagnostics;
        if (v.status == CheckVerdict::Status::Accepted)
            v.axioms_used = reply.axioms;
        v.wall_time_ms = reply.wall_time_ms;
        return v;
    } catch (const TimeoutError&) {
        return CheckVerdict::timeout(elapsed());
    } catch (const TransportError& e) {
        return CheckVerdict::error(e.what());
    }
}

// ---- Prompt templates ----------------------------------------------------------

PromptTemplates PromptTemplates::defaults()
{
    PromptTemplates t;
    t.decompose =
        "System: Break the target theorem into helper lemmas that are each easier to prove.\n"
        "Reply with reasoning first, then the helper lemmas, then a proof of the target that uses every lemma.\n"
        "\n"
        "User: Decompose {theorem_name}.\n"
        "{formal_problem}\n";
    t.complete =
        "System: Fill in the missing proof. Explain your plan briefly, then answer with SEARCH/REPLACE blocks only.\n"
        "\n"
        "User: Close the goal below.\n"
        "{code}\n"
        "Goal (line {line}): {goal}\n"
        "{diagnostics}\n";
    return t;
}

PromptTemplates PromptTemplates::from_directory(const std::string& dir)
{
    auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot read prompt template " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    return {slurp(dir + "/decompose.txt"), slurp(dir + "/complete.txt")};
}

std::string render_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars)
{
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto key = tmpl.substr(i + 1, close - i - 1);
                bool replaced = false;
                for (const auto& [k, v] : vars) {
                    if (k == key) {
                        out += v;
                        replaced = true;
                        break;
                    }
                }
                if (replaced) {
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::string extract_replace_blocks(std::string_view response)
{
    constexpr std::string_view kSearch = "<<<<<<< SEARCH";
    constexpr std::string_view kSep = "=======";
    constexpr std::string_view kReplace = ">>>>>>> REPLACE";
    if (response.find(kSearch) == std::string_view::npos) {
        if (response.find(kReplace) != std::string_view::npos || response.find("<<<<<<<") != std::string_view::npos)
            throw PolicyError("unbalanced SEARCH/REPLACE markers");
        return std::string(response);
    }
    std::string out;
    std::size_t pos = 0;
    while ((pos = response.find(kSearch, pos)) != std::string_view::npos) {
        const auto sep = response.find(kSep, pos + kSearch.size());
        const auto end = response.find(kReplace, pos + kSearch.size());
        if (sep == std::string_view::npos || end == std::string_view::npos || sep > end)
            throw PolicyError("unbalanced SEARCH/REPLACE markers");
        auto body = response.substr(sep + kSep.size(), end - sep - kSep.size());
        if (body.starts_with('\n'))
            body.remove_prefix(1);
        if (body.ends_with('\n'))
            body.remove_suffix(1);
        if (!out.empty())
            out += '\n';
        out += body;
        pos = end + kReplace.size();
    }
    return out;
}

// ---- ExternalPolicy ----------------------------------------------------------

ExternalPolicy::ExternalPolicy(
    TransportFactory factory, PromptTemplates templates, std::int64_t timeout_ms, std::size_t connections)
    : pool_(std::move(factory), connections), templates_(std::move(templates)), timeout_ms_(timeout_ms)
{
}

PolicyRequest ExternalPolicy::build_request(const PolicyContext& ctx, std::string id) const
{
    PolicyRequest req;
    req.id = std::move(id);
    req.mode = ctx.mode;
    req.goal = print_goal(ctx.goal);
    for (const auto& s : ctx.sibling_goals)
        req.siblings.push_back(print_goal(s));
    for (const auto& [attempt, verdict] : ctx.feedback_history)
        req.feedback.push_back({attempt.proof_text, verdict.diagnostics});
    req.compiles = ctx.compiles;

    std::string code;
    for (const auto& s : ctx.sibling_goals)
        code += print_goal(s) + "\n";
    code += req.goal;
    if (ctx.mode == PolicyContext::Mode::Decompose) {
        req.prompt = render_template(templates_.decompose, {{"theorem_name", ctx.goal.name}, {"formal_problem", code}});
    } else {
        std::string diagnostics;
        if (!ctx.feedback_history.empty())
            diagnostics = "Previous attempt failed: " + ctx.feedback_history.back().second.diagnostics;
        const auto line = std::to_string(ctx.sibling_goals.size() + 1);
        req.prompt = render_template(templates_.complete,
            {{"code", code}, {"line", line}, {"goal", print_formula(*ctx.goal.body)}, {"diagnostics", diagnostics}});
    }
    return req;
}

PolicyResponse ExternalPolicy::call(const PolicyContext& ctx) const
{
    const auto req = build_request(ctx, "pol-" + std::to_string(next_id_.fetch_add(1)));
    PolicyResponse resp;
    try {
        resp = decode_policy_response(pool_.exchange(encode_line(to_json(req)), timeout_ms_), ctx.mode);
    } catch (const TransportError& e) {
        throw PolicyError(e.what());
    }
    if (resp.id != req.id)
        throw PolicyError("response id '" + resp.id + "' does not match request '" + req.id + "'");
    return resp;
}

std::optional<DecompositionProposal> ExternalPolicy::propose_decomposition(const PolicyContext& ctx) const
{
    const auto resp = call(ctx);
    DecompositionProposal p;
    p.reconstruction = resp.reconstruction;
    p.rationale = resp.rationale;
    std::size_t ordinal = 0;
    for (const auto& text : resp.lemmas) {
        ++ordinal;
        try {
            const auto first = text.find_first_not_of(" \t\r\n");
            if (first != std::string::npos && text.compare(first, 5, "goal ") == 0) {
                p.lemmas.push_back(parse_goal(text));
            } else {
                GoalDecl l;
                l.name = ctx.goal.name + "_" + std::to_string(ordinal);
                l.body = parse_formula(text, ctx.goal.binders);
                l.binders = binders_used_by(ctx.goal.binders, *l.body);
                p.lemmas.push_back(std::move(l));
            }
        } catch (const ParseError& e) {
            throw PolicyError("lemma " + std::to_string(ordinal) + " does not parse: " + e.what());
        }
    }
    return p;
}

CompletionAttempt ExternalPolicy::propose_completion(const PolicyContext& ctx) const
{
    const auto resp = call(ctx);
    return {extract_replace_blocks(*resp.proof), static_cast<std::int64_t>(ctx.feedback_history.size()) + 1};
}

} // namespace hps
