#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vacal/calibration.hpp"
#include "vacal/dataset.hpp"
#include "vacal/forest.hpp"
#include "vacal/logistic.hpp"
#include "vacal/metrics.hpp"
#include "vacal/score_table.hpp"
#include "vacal/tree.hpp"

namespace vacal {

enum class ModelKind { tree, forest, logistic, external };
enum class CalibratorKind { none, venn_abers, platt, isotonic };

std::string_view to_string(ModelKind kind);
std::string_view to_string(CalibratorKind kind);
ModelKind parse_model_kind(std::string_view text);
CalibratorKind parse_calibrator_kind(std::string_view text);

/// Score -> calibrated output. Point calibrators report p0 = p1 = point.
class Calibrator {
 public:
  virtual ~Calibrator() = default;
  virtual ProbabilityInterval calibrate(double score) const = 0;
};

/// Fits the requested calibrator on calibration scores/labels. `none` is the
/// identity map.
std::unique_ptr<Calibrator> fit_calibrator(CalibratorKind kind, std::span<const double> scores,
                                           std::span<const int> labels);

struct ExperimentConfig {
  // Empty: use the built-in regenerated AI4I reference table.
  std::filesystem::path data;
  std::optional<std::filesystem::path> scores;
  std::vector<ModelKind> models{ModelKind::tree, ModelKind::forest, ModelKind::logistic};
  std::vector<CalibratorKind> calibrators{CalibratorKind::none, CalibratorKind::venn_abers, CalibratorKind::platt,
                                          CalibratorKind::isotonic};
  std::size_t folds = 10;
  std::size_t repetitions = 10;
  double calibration_fraction = kDefaultCalibrationFraction;
  std::uint64_t seed = 42;
  std::filesystem::path out;
  std::size_t bins = 10;
  BinMode bin_mode = BinMode::width;
  // Fold-level worker threads; output does not depend on it.
  std::size_t threads = 1;
  ForestParams forest;
  TreeParams tree;
  LogisticParams logistic;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;

  nlohmann::json to_json() const;
  /// Overlays the keys present in j onto `base`.
  static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base);
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct Prediction {
  std::string instance_id;
  int label = 0;
  double score = 0.0;  // raw model score
  ProbabilityInterval calibrated;
};

struct FoldOutcome {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  ModelKind model = ModelKind::tree;
  CalibratorKind calibrator = CalibratorKind::none;
  std::vector<Prediction> predictions;
  EvaluationReport report;

  std::string artifact_stem() const;
};

/// Means over folds (metrics undefined in a fold are averaged over the folds
/// where they exist); positive predictions are summed.
struct AggregateRow {
  ModelKind model = ModelKind::tree;
  CalibratorKind calibrator = CalibratorKind::none;
  std::size_t n_folds = 0;
  double accuracy = 0.0;
  std::optional<double> auc;
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t positive_predictions = 0;
  double ece = 0.0;
  std::optional<double> ece1;
};

struct ExperimentResult {
  std::vector<FoldSplit> splits;
  std::vector<FoldOutcome> folds;
  std::vector<AggregateRow> table;
};

/// Runs every configured (model, calibrator) pair on every fold.
/// Uncalibrated models train on the whole training portion; calibrated
/// variants train on the proper-training part and fit the calibrator on the
/// calibration part. Logistic regression is only evaluated uncalibrated.
/// `dataset` is required for tree/forest/logistic, `scores` for external.
ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset* dataset, const ScoreTable* scores);

std::vector<AggregateRow> aggregate(std::span<const FoldOutcome> folds);

std::string aggregate_csv(std::span<const AggregateRow> rows);
nlohmann::json aggregate_json(std::span<const AggregateRow> rows);
/// Fixed-width text table, three decimals, one row per (model, calibrator).
std::string aggregate_text(std::span<const AggregateRow> rows);

std::string predictions_csv(std::span<const Prediction> predictions);

enum class ReliabilityScope { all, minority };
ReliabilityScope parse_reliability_scope(std::string_view text);

/// Pools calibrated point predictions over folds and bins them; with
/// ReliabilityScope::minority only predictions with point >= 0.5 count.
ReliabilityBins pooled_reliability(std::span<const Prediction> predictions, ReliabilityScope scope,
                                   std::size_t n_bins = 10, BinMode mode = BinMode::width);

/// Writes config.json, splits.json, aggregate.{csv,json}, per-fold
/// folds/rep{r}_fold{f}_{model}_{calibrator}.{json,csv} and pooled
/// reliability/{model}_{calibrator}_{all,minority}.csv.
void write_experiment_artifacts(const ExperimentResult& result, const ExperimentConfig& config,
                                const std::filesystem::path& out);

struct CalibratedScore {
  std::string instance_id;
  long long fold_id = 0;
  double score = 0.0;
  ProbabilityInterval calibrated;
};

/// Per fold: fit on the calibration rows, transform the test rows. Errors
/// name the fold when a partition is missing or the calibrator cannot be fit.
std::vector<CalibratedScore> calibrate_scores(const ScoreTable& table, CalibratorKind kind);

/// `instance_id,fold_id,score,p0,p1,point` with a header line.
std::string calibrated_scores_csv(std::span<const CalibratedScore> rows);

/// Reads the prediction CSVs written by write_experiment_artifacts.
std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path);

}  // namespace vacal
