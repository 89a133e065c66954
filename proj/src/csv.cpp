#include "vacal/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vacal/error.hpp"

namespace vacal::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.emplace_back(trim(line.substr(start)));
      break;
    }
    cells.emplace_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

Table parse(std::string_view text) {
  Table table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") {
      line.remove_prefix(3);
    }
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto cells = split_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != table.header.size()) {
        throw ParseError(fmt::format("line {}: expected {} cells, found {}", line_no,
                                     table.header.size(), cells.size()));
      }
      table.rows.push_back(std::move(cells));
      table.line_numbers.push_back(line_no);
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw SchemaError("empty CSV: no header row");
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

double parse_double(std::string_view cell, std::string_view column, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(fmt::format("line {}: column '{}': '{}' is not a number", line, column, cell));
  }
  return value;
}

long long parse_integer(std::string_view cell, std::string_view column, std::size_t line) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(fmt::format("line {}: column '{}': '{}' is not an integer", line, column, cell));
  }
  return value;
}

}  // namespace vacal::csv
