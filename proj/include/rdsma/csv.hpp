#ifndef RDSMA_CSV_HPP
#define RDSMA_CSV_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdsma::csv {

/// Plain comma-separated table: no quoting, fields trimmed of surrounding
/// whitespace, blank lines skipped.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index of `name`; throws std::runtime_error when absent.
    std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string trim(std::string_view s);

long parse_long(std::string_view field, std::string_view what);
double parse_double(std::string_view field, std::string_view what);
std::optional<long> parse_optional_long(std::string_view field, std::string_view what);
std::optional<double> parse_optional_double(std::string_view field, std::string_view what);

/// Shortest decimal text that round-trips the double.
std::string format_double(double x);

} // namespace rdsma::csv

#endif
