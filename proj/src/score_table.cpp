#include "vacal/score_table.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "vacal/csv.hpp"
#include "vacal/error.hpp"

namespace vacal {

namespace {

const std::vector<std::string> kColumns{"instance_id", "fold_id", "partition", "score", "label"};

ScoreTable from_table(const csv::Table& table) {
  if (table.header != kColumns) {
    for (const auto& c : kColumns) {
      if (std::find(table.header.begin(), table.header.end(), c) == table.header.end()) {
        throw SchemaError(fmt::format("score table: missing column '{}'", c));
      }
    }
    throw SchemaError("score table: header must be exactly instance_id,fold_id,partition,score,label");
  }
  ScoreTable out;
  std::set<std::pair<std::string, long long>> keys;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    ScoreRow row;
    row.instance_id = cells[0];
    if (row.instance_id.empty()) throw ParseError(fmt::format("score table line {}: empty instance_id", line));
    row.fold_id = csv::parse_integer(cells[1], "fold_id", line);
    if (cells[2] == "calibration") {
      row.partition = Partition::calibration;
    } else if (cells[2] == "test") {
      row.partition = Partition::test;
    } else {
      throw ParseError(fmt::format("score table line {}: partition '{}' is not calibration or test", line, cells[2]));
    }
    row.score = csv::parse_double(cells[3], "score", line);
    if (!(row.score >= 0.0 && row.score <= 1.0)) {
      throw ValidationError(fmt::format("score table line {}: score {} outside [0, 1]", line, cells[3]));
    }
    const long long label = csv::parse_integer(cells[4], "label", line);
    if (label != 0 && label != 1) {
      throw ValidationError(fmt::format("score table line {}: label {} is not 0 or 1", line, label));
    }
    row.label = static_cast<int>(label);
    if (!keys.emplace(row.instance_id, row.fold_id).second) {
      throw ValidationError(fmt::format("score table line {}: duplicate (instance_id, fold_id) = ({}, {})", line,
                                        row.instance_id, row.fold_id));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::vector<long long> ScoreTable::folds() const {
  std::vector<long long> ids;
  for (const auto& r : rows) ids.push_back(r.fold_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

ScoreTable load_score_table(const std::filesystem::path& path) { return from_table(csv::read(path)); }

ScoreTable parse_score_table(std::string_view text) { return from_table(csv::parse(text)); }

std::string_view to_string(Partition p) { return p == Partition::calibration ? "calibration" : "test"; }

}  // namespace vacal
