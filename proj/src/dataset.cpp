#include "vacal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

#include "vacal/csv.hpp"
#include "vacal/error.hpp"
#include "vacal/rng.hpp"

namespace vacal {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("FeatureMatrix: value count does not match shape");
  }
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> ids) const {
  FeatureMatrix out(ids.size(), cols_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto src = row(ids[i]);
    std::copy(src.begin(), src.end(), out.values_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

std::size_t Dataset::n_positive() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw ValidationError("dataset: feature rows and label count differ");
  }
  if (feature_names.size() != features.cols()) {
    throw ValidationError("dataset: feature name count and column count differ");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError(fmt::format("dataset: label of instance {} is {}, expected 0 or 1", i, labels[i]));
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
  Dataset out;
  out.features = features.select_rows(ids);
  out.labels.reserve(ids.size());
  for (auto id : ids) out.labels.push_back(labels[id]);
  out.feature_names = feature_names;
  return out;
}

CsvSchema CsvSchema::ai4i() {
  CsvSchema s;
  s.id_columns = {"UDI", "Product ID"};
  s.quality_column = "Type";
  s.quality_feature_name = "quality";
  s.numeric_columns = {
      {"Air temperature [K]", "air temperature [K]"},
      {"Process temperature [K]", "process temperature [K]"},
      {"Rotational speed [rpm]", "rotational speed [rpm]"},
      {"Torque [Nm]", "torque [Nm]"},
      {"Tool wear [min]", "tool wear [min]"},
  };
  s.label_column = "Machine failure";
  s.dropped_columns = {"TWF", "HDF", "PWF", "OSF", "RNF"};
  return s;
}

namespace {

double parse_quality(std::string_view cell, std::string_view column, std::size_t line) {
  if (cell == "L") return 0.0;
  if (cell == "M") return 1.0;
  if (cell == "H") return 2.0;
  throw ParseError(fmt::format("line {}: column '{}': quality '{}' is not one of L, M, H", line, column, cell));
}

Dataset from_table(const csv::Table& table, const CsvSchema& schema) {
  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - table.header.begin());
  };
  auto require = [&](const std::string& name) {
    auto idx = find(name);
    if (!idx) throw SchemaError(fmt::format("missing column '{}'", name));
    return *idx;
  };

  for (const auto& name : table.header) {
    bool known = name == schema.quality_column || name == schema.label_column ||
                 std::find(schema.id_columns.begin(), schema.id_columns.end(), name) != schema.id_columns.end() ||
                 std::find(schema.dropped_columns.begin(), schema.dropped_columns.end(), name) !=
                     schema.dropped_columns.end() ||
                 std::any_of(schema.numeric_columns.begin(), schema.numeric_columns.end(),
                             [&](const auto& c) { return c.csv_name == name; });
    if (!known) throw SchemaError(fmt::format("unknown column '{}'", name));
  }

  const std::size_t quality_idx = require(schema.quality_column);
  const std::size_t label_idx = require(schema.label_column);
  std::vector<std::size_t> numeric_idx;
  for (const auto& c : schema.numeric_columns) numeric_idx.push_back(require(c.csv_name));

  const std::size_t n = table.rows.size();
  const std::size_t d = 1 + numeric_idx.size();
  Dataset ds;
  ds.features = FeatureMatrix(n, d);
  ds.labels.resize(n);
  ds.feature_names.push_back(schema.quality_feature_name);
  for (const auto& c : schema.numeric_columns) ds.feature_names.push_back(c.feature_name);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    ds.features(r, 0) = parse_quality(row[quality_idx], schema.quality_column, line);
    for (std::size_t j = 0; j < numeric_idx.size(); ++j) {
      double v = csv::parse_double(row[numeric_idx[j]], schema.numeric_columns[j].csv_name, line);
      if (!std::isfinite(v)) {
        throw ParseError(fmt::format("line {}: column '{}': non-finite value", line, schema.numeric_columns[j].csv_name));
      }
      ds.features(r, j + 1) = v;
    }
    long long label = csv::parse_integer(row[label_idx], schema.label_column, line);
    if (label != 0 && label != 1) {
      throw ValidationError(fmt::format("line {}: column '{}': label {} is not 0 or 1", line, schema.label_column, label));
    }
    ds.labels[r] = static_cast<int>(label);
  }
  return ds;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return from_table(csv::read(path), schema);
}

Dataset parse_csv(std::string_view text, const CsvSchema& schema) {
  return from_table(csv::parse(text), schema);
}

std::vector<std::size_t> FoldSplit::training_ids() const {
  std::vector<std::size_t> ids;
  ids.reserve(proper_train_ids.size() + calibration_ids.size());
  std::merge(proper_train_ids.begin(), proper_train_ids.end(), calibration_ids.begin(),
             calibration_ids.end(), std::back_inserter(ids));
  return ids;
}

std::vector<FoldSplit> repeated_stratified_kfold(std::span<const int> labels, std::size_t k,
                                                 std::size_t repetitions,
                                                 double calibration_fraction, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k-fold: k must be at least 2");
  if (repetitions < 1) throw std::invalid_argument("k-fold: repetitions must be at least 1");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw std::invalid_argument("k-fold: calibration fraction must lie in (0, 1)");
  }

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("k-fold: labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < k) {
      throw InfeasibleError(fmt::format("k-fold: class {} has {} instances, fewer than k = {}", c,
                                        by_class[c].size(), k));
    }
  }

  std::vector<FoldSplit> splits;
  splits.reserve(k * repetitions);
  std::vector<std::size_t> fold_of(labels.size());

  for (std::size_t r = 0; r < repetitions; ++r) {
    const std::uint64_t rep_seed = derive_seed(seed, r);
    Rng rng(rep_seed);
    // Positives are dealt first; negatives continue the round-robin so total
    // fold sizes differ by at most one.
    std::size_t offset = 0;
    std::vector<std::size_t> shuffled[2];
    for (int c : {1, 0}) {
      shuffled[c] = by_class[c];
      rng.shuffle(std::span<std::size_t>(shuffled[c]));
      for (std::size_t j = 0; j < shuffled[c].size(); ++j) fold_of[shuffled[c][j]] = (j + offset) % k;
      offset += shuffled[c].size();
    }

    for (std::size_t f = 0; f < k; ++f) {
      FoldSplit split;
      split.repetition = r;
      split.fold = f;
      split.seed = derive_seed(rep_seed, f);
      Rng fold_rng(split.seed);
      for (int c : {1, 0}) {
        std::vector<std::size_t> train;
        for (std::size_t id : shuffled[c]) {
          if (fold_of[id] == f) {
            split.test_ids.push_back(id);
          } else {
            train.push_back(id);
          }
        }
        fold_rng.shuffle(std::span<std::size_t>(train));
        const auto n_cal = static_cast<std::size_t>(
            std::llround(calibration_fraction * static_cast<double>(train.size())));
        split.calibration_ids.insert(split.calibration_ids.end(), train.begin(),
                                     train.begin() + static_cast<std::ptrdiff_t>(n_cal));
        split.proper_train_ids.insert(split.proper_train_ids.end(),
                                      train.begin() + static_cast<std::ptrdiff_t>(n_cal), train.end());
      }
      std::sort(split.test_ids.begin(), split.test_ids.end());
      std::sort(split.calibration_ids.begin(), split.calibration_ids.end());
      std::sort(split.proper_train_ids.begin(), split.proper_train_ids.end());
      splits.push_back(std::move(split));
    }
  }
  return splits;
}

Holdout stratified_holdout(std::span<const int> labels, double calibration_fraction, std::uint64_t seed) {
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw std::invalid_argument("holdout: calibration fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("holdout: labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  Rng rng(seed);
  Holdout out;
  for (int c : {1, 0}) {
    auto& ids = by_class[c];
    rng.shuffle(std::span<std::size_t>(ids));
    const auto n_cal = static_cast<std::size_t>(std::llround(calibration_fraction * static_cast<double>(ids.size())));
    out.calibration_ids.insert(out.calibration_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_cal));
    out.proper_train_ids.insert(out.proper_train_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_cal), ids.end());
  }
  std::sort(out.calibration_ids.begin(), out.calibration_ids.end());
  std::sort(out.proper_train_ids.begin(), out.proper_train_ids.end());
  return out;
}

nlohmann::json split_manifest(std::span<const FoldSplit> splits) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : splits) {
    out.push_back({{"repetition", s.repetition},
                   {"fold", s.fold},
                   {"seed", s.seed},
                   {"proper_train_ids", s.proper_train_ids},
                   {"calibration_ids", s.calibration_ids},
                   {"test_ids", s.test_ids}});
  }
  return out;
}

}  // namespace vacal
