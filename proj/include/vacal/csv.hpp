#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vacal::csv {

// Plain comma-separated table: one header row, no quoting.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number of each row in the source file (header is line 1).
  std::vector<std::size_t> line_numbers;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::vector<std::string> split_line(std::string_view line);

double parse_double(std::string_view cell, std::string_view column, std::size_t line);
long long parse_integer(std::string_view cell, std::string_view column, std::size_t line);

}  // namespace vacal::csv
