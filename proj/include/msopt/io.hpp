#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace msopt {

/// 17 significant digits with '.' as decimal separator; "nan" for NaN.
std::string format_double(double v);

/// Parses a full token as a double ("nan", "inf" accepted). Throws
/// InvalidArgument naming the token on failure.
double parse_double(std::string_view token);

std::vector<std::string> split(std::string_view line, char sep);
std::string trim(std::string_view s);

/// Numeric CSV. When has_header is set the first line is returned in header
/// (if non-null) and skipped. Blank lines are ignored.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, bool has_header,
                                                  std::vector<std::string>* header = nullptr);

/// key=value lines in key order.
void write_key_values(const std::filesystem::path& path, const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Creates the parent directory of path if needed.
void ensure_parent(const std::filesystem::path& path);

}  // namespace msopt
