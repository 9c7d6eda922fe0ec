#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hps {

using ojson = nlohmann::ordered_json;

/// Bumped whenever an existing field changes meaning. New fields may be added
/// without a bump; readers ignore fields they do not know.
inline constexpr int kTraceFormatVersion = 1;

class TraceFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Append-only JSONL event log of one search run. Line 1 is the header
/// (`"type": "Config"`, format_version, problem, run_index, seed, config);
/// every later line is an event with a strictly increasing `seq` starting at 1.
class RunTrace {
public:
    RunTrace() = default;
    RunTrace(std::string run_id, ojson header);

    const std::string& run_id() const { return run_id_; }
    const ojson& header() const { return header_; }
    const std::vector<ojson>& events() const { return events_; }

    /// Appends `{"seq": n, "type": type, ...fields}` and returns the stored event.
    const ojson& append(std::string_view type, ojson fields = ojson::object());

    std::vector<const ojson*> of_type(std::string_view type) const;

    std::string to_jsonl() const;
    void write(const std::filesystem::path& path) const;

    /// Throws TraceFormatError on malformed input or a newer major format.
    static RunTrace parse(std::string_view text);
    static RunTrace load(const std::filesystem::path& path);

private:
    std::string run_id_;
    ojson header_ = ojson::object();
    std::vector<ojson> events_;
};

/// All `*.jsonl` traces under `dir`, sorted by file name.
std::vector<RunTrace> load_trace_dir(const std::filesystem::path& dir);

} // namespace hps
