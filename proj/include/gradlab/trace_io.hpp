#ifndef GRADLAB_TRACE_IO_HPP
#define GRADLAB_TRACE_IO_HPP

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gradlab/errors.hpp"
#include "gradlab/sweeps.hpp"

namespace gradlab {

/// 17 significant digits: enough for binary64 values to round-trip exactly
/// through the text form.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr std::string_view kTraceCsvHeader = "iter,f,gnorm,alpha,phase,sweep_id,events";

inline std::string trace_to_csv(const RunTrace& trace) {
    std::string out{kTraceCsvHeader};
    out += '\n';
    for (const TraceRecord& r : trace.records) {
        out += std::to_string(r.index);
        out += ',';
        out += format_double(r.fval);
        out += ',';
        out += format_double(r.gnorm);
        out += ',';
        out += format_double(r.alpha);
        out += ',';
        out += phase_token(r.phase);
        out += ',';
        out += std::to_string(r.sweep_id);
        out += ',';
        out += event_tokens(r.events);
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return fields;
}

inline double parse_double_field(std::string_view s, const char* key) {
    const std::string tmp(s);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || tmp.empty() || errno == ERANGE)
        throw ParseError(std::string("invalid numeric value '") + tmp + "' for " + key, key);
    return v;
}

inline long parse_int_field(std::string_view s, const char* key) {
    const std::string tmp(s);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(tmp.c_str(), &end, 10);
    if (end != tmp.c_str() + tmp.size() || tmp.empty() || errno == ERANGE)
        throw ParseError(std::string("invalid integer value '") + tmp + "' for " + key, key);
    return v;
}

}  // namespace detail

inline std::vector<TraceRecord> parse_trace_csv(const std::string& text) {
    std::vector<TraceRecord> records;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kTraceCsvHeader)
                throw ParseError("trace csv: unexpected header", "header");
            header_seen = true;
            continue;
        }
        const auto fields = detail::split(line, ',');
        if (fields.size() != 7) throw ParseError("trace csv: wrong field count", "row");
        TraceRecord r;
        r.index = static_cast<int>(detail::parse_int_field(fields[0], "iter"));
        r.fval = detail::parse_double_field(fields[1], "f");
        r.gnorm = detail::parse_double_field(fields[2], "gnorm");
        r.alpha = detail::parse_double_field(fields[3], "alpha");
        const auto phase = parse_phase_token(fields[4]);
        if (!phase) throw ParseError("trace csv: unknown phase token", "phase");
        r.phase = *phase;
        r.sweep_id = static_cast<int>(detail::parse_int_field(fields[5], "sweep_id"));
        const auto ev = parse_event_tokens(fields[6]);
        if (!ev) throw ParseError("trace csv: unknown event token", "events");
        r.events = *ev;
        records.push_back(r);
    }
    if (!header_seen) throw ParseError("trace csv: missing header", "header");
    return records;
}

/// Write the whole content to a sibling temporary, then rename into place, so
/// no reader ever sees a partially written file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

inline void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace) {
    atomic_write_file(path, trace_to_csv(trace));
}

inline std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_trace_csv(text);
}

}  // namespace gradlab

#endif
