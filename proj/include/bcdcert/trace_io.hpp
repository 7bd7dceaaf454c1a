#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bcdcert/certificate.hpp"
#include "bcdcert/error.hpp"
#include "bcdcert/solver.hpp"

namespace bcdcert {

inline constexpr std::string_view kTraceHeader =
    "t,f_before,f_after_x,f_after_y,gx_norm_sq,gy_residual,e_t,suff_ok,cum_sum,rate_bound_prefix";

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// One CSV row: the record plus the certificate state after folding it.
struct TraceRow
{
    IterationRecord rec;
    double cum_sum = 0.0;
    double rate_bound_prefix = 0.0;
};

inline std::string trace_to_csv(const RunResult& run)
{
    std::string out(kTraceHeader);
    out += '\n';
    Certificate cert = Certificate::start(run.certificate.tol);
    for (const IterationRecord& r : run.history) {
        double cum = 0.0;
        double bound = 0.0;
        if (!run.baseline) {
            cert = accumulate(std::move(cert), r);
            cum = cert.running_sum;
            bound = cert.rate_bound;
        }
        out += std::to_string(r.t);
        for (double v : {r.f_before, r.f_after_x, r.f_after_y, r.gx_norm_sq, r.gy_residual, r.e_t}) {
            out += ',';
            out += format_double(v);
        }
        out += r.suff_ok ? ",1," : ",0,";
        out += format_double(cum);
        out += ',';
        out += format_double(bound);
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(begin));
            return fields;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
}

template <class T>
T parse_field(std::string_view text, std::size_t line_no, std::string_view column)
{
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(Errc::SchemaMismatch, "line " + std::to_string(line_no) + ": cannot parse " +
                                              std::string(column) + " from '" + std::string(text) + "'");
    }
    return value;
}

} // namespace detail

inline std::vector<TraceRow> parse_trace_csv(std::string_view text)
{
    std::vector<TraceRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (!saw_header) {
            if (line != kTraceHeader) {
                throw Error(Errc::SchemaMismatch, "line 1: header does not match the trace schema");
            }
            saw_header = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const auto f = detail::split_fields(line);
        if (f.size() != 10) {
            throw Error(Errc::SchemaMismatch, "line " + std::to_string(line_no) + ": expected 10 fields, got " +
                                                  std::to_string(f.size()));
        }
        TraceRow row;
        row.rec.t = detail::parse_field<std::size_t>(f[0], line_no, "t");
        row.rec.f_before = detail::parse_field<double>(f[1], line_no, "f_before");
        row.rec.f_after_x = detail::parse_field<double>(f[2], line_no, "f_after_x");
        row.rec.f_after_y = detail::parse_field<double>(f[3], line_no, "f_after_y");
        row.rec.gx_norm_sq = detail::parse_field<double>(f[4], line_no, "gx_norm_sq");
        row.rec.gy_residual = detail::parse_field<double>(f[5], line_no, "gy_residual");
        row.rec.e_t = detail::parse_field<double>(f[6], line_no, "e_t");
        if (f[7] != "0" && f[7] != "1") {
            throw Error(Errc::SchemaMismatch, "line " + std::to_string(line_no) + ": suff_ok must be 0 or 1");
        }
        row.rec.suff_ok = f[7] == "1";
        row.cum_sum = detail::parse_field<double>(f[8], line_no, "cum_sum");
        row.rate_bound_prefix = detail::parse_field<double>(f[9], line_no, "rate_bound_prefix");
        rows.push_back(row);
    }
    if (!saw_header) {
        throw Error(Errc::SchemaMismatch, "empty trace file");
    }
    return rows;
}

/// 64-bit FNV-1a, used to bind a summary to the exact trace bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string digest_string(std::string_view bytes)
{
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << fnv1a64(bytes);
    return os.str();
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes to a sibling temporary file and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(Errc::IoError, "cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw Error(Errc::IoError, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw Error(Errc::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
    }
}

} // namespace bcdcert
