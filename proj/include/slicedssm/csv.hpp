#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace slicedssm::csv {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split_line(std::string_view line);

/// A parsed comma-separated file. Rows exclude the header; blank lines are
/// skipped. `line_of(i)` gives the 1-based source line of row i for messages.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;

    std::size_t line_of(std::size_t row) const { return lines.at(row); }
};

/// Reads a CSV whose header must start with `required_columns` (extra
/// trailing columns listed in `optional_columns` are accepted).
Table read_table(const std::filesystem::path& path,
                 const std::vector<std::string>& required_columns,
                 const std::vector<std::string>& optional_columns = {});

/// Writes `contents` to `path` through a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace slicedssm::csv
