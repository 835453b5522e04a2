#include "slicedssm/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "slicedssm/error.hpp"

namespace slicedssm::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw data_error("not a number: '" + std::string(text) + "'");
    }
    return value;
}

long long parse_int(std::string_view text) {
    text = trim(text);
    long long value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw data_error("not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        auto field = trim(line.substr(start, pos == std::string_view::npos ? line.size() - start
                                                                            : pos - start));
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

Table read_table(const std::filesystem::path& path,
                 const std::vector<std::string>& required_columns,
                 const std::vector<std::string>& optional_columns) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open file: " + path.string());

    Table table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (!have_header) {
            table.header = fields;
            have_header = true;
            bool ok = fields.size() >= required_columns.size() &&
                      fields.size() <= required_columns.size() + optional_columns.size();
            for (std::size_t i = 0; ok && i < fields.size(); ++i) {
                const auto& want = i < required_columns.size()
                                       ? required_columns[i]
                                       : optional_columns[i - required_columns.size()];
                ok = fields[i] == want;
            }
            if (!ok) {
                std::string expected;
                for (const auto& c : required_columns) expected += (expected.empty() ? "" : ",") + c;
                throw data_error(path.string() + ": unexpected header '" + line +
                                 "', expected '" + expected + "'");
            }
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw data_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.lines.push_back(lineno);
    }
    if (!have_header) throw data_error(path.string() + ": empty file");
    return table;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw config_error("cannot write file: " + tmp.string());
        out << contents;
        if (!out) throw config_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace slicedssm::csv
