#include "hps/trace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hps {

RunTrace::RunTrace(std::string run_id, ojson header) : run_id_(std::move(run_id)), header_(std::move(header))
{
    if (!header_.is_object())
        throw TraceFormatError("trace header must be an object");
}

const ojson& RunTrace::append(std::string_view type, ojson fields)
{
    ojson e = ojson::object();
    e["seq"] = static_cast<std::int64_t>(events_.size()) + 1;
    e["type"] = std::string(type);
    for (auto it = fields.begin(); it != fields.end(); ++it)
        e[it.key()] = std::move(it.value());
    events_.push_back(std::move(e));
    return events_.back();
}

std::vector<const ojson*> RunTrace::of_type(std::string_view type) const
{
    std::vector<const ojson*> out;
    for (const auto& e : events_)
        if (e.value("type", "") == type)
            out.push_back(&e);
    return out;
}

std::string RunTrace::to_jsonl() const
{
    std::string out = header_.dump() + '\n';
    for (const auto& e : events_)
        out += e.dump() + '\n';
    return out;
}

void RunTrace::write(const std::filesystem::path& path) const
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open trace file for writing: " + path.string());
    f << to_jsonl();
    if (!f)
        throw std::runtime_error("failed writing trace file: " + path.string());
}

RunTrace RunTrace::parse(std::string_view text)
{
    RunTrace t;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const ojson::parse_error& e) {
            throw TraceFormatError("trace line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object())
            throw TraceFormatError("trace line " + std::to_string(line_no) + " is not an object");
        if (!have_header) {
            if (j.value("type", "") != "Config" || !j.contains("format_version"))
                throw TraceFormatError("trace does not start with a Config header");
            if (j["format_version"].get<int>() > kTraceFormatVersion)
                throw TraceFormatError("trace format version " + j["format_version"].dump() + " is newer than supported");
            t.run_id_ = j.value("run_id", "");
            t.header_ = std::move(j);
            have_header = true;
            continue;
        }
        if (!j.contains("seq") || !j["seq"].is_number_integer() ||
            j["seq"].get<std::int64_t>() != static_cast<std::int64_t>(t.events_.size()) + 1)
            throw TraceFormatError("trace line " + std::to_string(line_no) + ": sequence number out of order");
        t.events_.push_back(std::move(j));
    }
    if (!have_header)
        throw TraceFormatError("empty trace");
    return t;
}

RunTrace RunTrace::load(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open trace file: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    try {
        return parse(ss.str());
    } catch (const TraceFormatError& e) {
        throw TraceFormatError(path.string() + ": " + e.what());
    }
}

std::vector<RunTrace> load_trace_dir(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<RunTrace> out;
    out.reserve(files.size());
    for (const auto& f : files)
        out.push_back(RunTrace::load(f));
    return out;
}

} // namespace hps
