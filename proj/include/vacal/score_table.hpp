#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vacal {

enum class Partition { calibration, test };

/// Scores produced by an external model (e.g. gradient boosting trained
/// elsewhere), one row per instance per fold.
struct ScoreRow {
  std::string instance_id;
  long long fold_id = 0;
  Partition partition = Partition::test;
  double score = 0.0;
  int label = 0;
};

struct ScoreTable {
  std::vector<ScoreRow> rows;

  /// Distinct fold ids in ascending order.
  std::vector<long long> folds() const;
};

/// Reads a CSV with header `instance_id,fold_id,partition,score,label`.
/// Rejects scores outside [0,1], labels outside {0,1}, unknown partitions and
/// duplicate (instance_id, fold_id) keys; errors name the offending line.
ScoreTable load_score_table(const std::filesystem::path& path);
ScoreTable parse_score_table(std::string_view text);

std::string_view to_string(Partition p);

}  // namespace vacal
