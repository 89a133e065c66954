#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace vacal {

/// Dense row-major matrix of feature values.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  /// Copies the given rows (in order, duplicates allowed).
  FeatureMatrix select_rows(std::span<const std::size_t> ids) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Binary-labelled feature table. Label 1 is the failure (minority) class.
struct Dataset {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::size_t n_instances() const { return labels.size(); }
  std::size_t n_features() const { return features.cols(); }
  std::size_t n_positive() const;

  /// Throws ValidationError when labels are not binary or shapes disagree.
  void validate() const;

  Dataset subset(std::span<const std::size_t> ids) const;
};

/// Column layout of the input CSV. Defaults follow the AI4I 2020 file.
struct CsvSchema {
  struct NumericColumn {
    std::string csv_name;
    std::string feature_name;
  };

  // Ignored if present.
  std::vector<std::string> id_columns;
  // Ordinal L/M/H column, becomes the first feature.
  std::string quality_column;
  std::string quality_feature_name;
  std::vector<NumericColumn> numeric_columns;
  std::string label_column;
  // Failure-mode indicators: dropped if present, never used as features.
  std::vector<std::string> dropped_columns;

  static CsvSchema ai4i();
};

/// Loads a predictive-maintenance CSV. Quality is mapped L->0, M->1, H->2.
/// Throws SchemaError (missing/unknown column), ParseError (bad cell, with
/// line number) or ValidationError (label not in {0,1}).
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = CsvSchema::ai4i());
Dataset parse_csv(std::string_view text, const CsvSchema& schema = CsvSchema::ai4i());

/// One train/calibrate/test partition of a repeated k-fold run. Id lists are
/// sorted ascending and pairwise disjoint.
struct FoldSplit {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::vector<std::size_t> proper_train_ids;
  std::vector<std::size_t> calibration_ids;
  std::vector<std::size_t> test_ids;
  std::uint64_t seed = 0;

  /// proper_train ∪ calibration, sorted.
  std::vector<std::size_t> training_ids() const;
};

inline constexpr double kDefaultCalibrationFraction = 1.0 / 3.0;

/// Stratified k-fold, repeated with a fresh shuffle per repetition. Inside each
/// fold's training portion a stratified calibration_fraction is held out as the
/// calibration set. Deterministic in seed.
std::vector<FoldSplit> repeated_stratified_kfold(std::span<const int> labels, std::size_t k,
                                                 std::size_t repetitions,
                                                 double calibration_fraction, std::uint64_t seed);

struct Holdout {
  std::vector<std::size_t> proper_train_ids;
  std::vector<std::size_t> calibration_ids;
};

/// Single stratified proper-train/calibration split of all instances.
Holdout stratified_holdout(std::span<const int> labels, double calibration_fraction, std::uint64_t seed);

nlohmann::json split_manifest(std::span<const FoldSplit> splits);

}  // namespace vacal
