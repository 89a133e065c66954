#include "vacal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "vacal/csv.hpp"
#include "vacal/error.hpp"
#include "vacal/rng.hpp"

namespace vacal {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::tree: return "tree";
    case ModelKind::forest: return "forest";
    case ModelKind::logistic: return "logistic";
    case ModelKind::external: return "external";
  }
  return "?";
}

std::string_view to_string(CalibratorKind kind) {
  switch (kind) {
    case CalibratorKind::none: return "none";
    case CalibratorKind::venn_abers: return "venn-abers";
    case CalibratorKind::platt: return "platt";
    case CalibratorKind::isotonic: return "isotonic";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::tree, ModelKind::forest, ModelKind::logistic, ModelKind::external}) {
    if (text == to_string(k)) return k;
  }
  throw std::invalid_argument(fmt::format("unknown model '{}' (expected tree, forest, logistic, external)", text));
}

CalibratorKind parse_calibrator_kind(std::string_view text) {
  for (auto k : {CalibratorKind::none, CalibratorKind::venn_abers, CalibratorKind::platt, CalibratorKind::isotonic}) {
    if (text == to_string(k)) return k;
  }
  throw std::invalid_argument(
      fmt::format("unknown calibrator '{}' (expected none, venn-abers, platt, isotonic)", text));
}

namespace {

class IdentityCalibrator final : public Calibrator {
 public:
  ProbabilityInterval calibrate(double score) const override { return {score, score, score}; }
};

class PlattCalibrator final : public Calibrator {
 public:
  explicit PlattCalibrator(PlattFit fit) : fit_(fit) {}
  ProbabilityInterval calibrate(double score) const override {
    const double p = fit_(score);
    return {p, p, p};
  }

 private:
  PlattFit fit_;
};

class IsotonicCalibrator final : public Calibrator {
 public:
  explicit IsotonicCalibrator(IsotonicFit fit) : fit_(std::move(fit)) {}
  ProbabilityInterval calibrate(double score) const override {
    const double p = fit_(score);
    return {p, p, p};
  }

 private:
  IsotonicFit fit_;
};

class VennAbersAdapter final : public Calibrator {
 public:
  VennAbersAdapter(std::span<const double> scores, std::span<const int> labels) : va_(scores, labels) {}
  ProbabilityInterval calibrate(double score) const override { return va_.interval(score); }

 private:
  VennAbersCalibrator va_;
};

}  // namespace

std::unique_ptr<Calibrator> fit_calibrator(CalibratorKind kind, std::span<const double> scores,
                                           std::span<const int> labels) {
  switch (kind) {
    case CalibratorKind::none: return std::make_unique<IdentityCalibrator>();
    case CalibratorKind::platt: return std::make_unique<PlattCalibrator>(fit_platt(scores, labels));
    case CalibratorKind::isotonic: return std::make_unique<IsotonicCalibrator>(pava(scores, labels));
    case CalibratorKind::venn_abers: return std::make_unique<VennAbersAdapter>(scores, labels);
  }
  throw std::logic_error("unhandled calibrator kind");
}

void ExperimentConfig::validate() const {
  if (folds < 2) throw std::invalid_argument("config: folds must be at least 2");
  if (repetitions < 1) throw std::invalid_argument("config: repetitions must be at least 1");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw std::invalid_argument("config: calibration fraction must lie in (0, 1)");
  }
  if (models.empty()) throw std::invalid_argument("config: select at least one model");
  if (calibrators.empty()) throw std::invalid_argument("config: select at least one calibrator");
  if (bins < 1) throw std::invalid_argument("config: bins must be at least 1");
}

nlohmann::json ExperimentConfig::to_json() const {
  std::vector<std::string> model_names, calibrator_names;
  for (auto m : models) model_names.emplace_back(to_string(m));
  for (auto c : calibrators) calibrator_names.emplace_back(to_string(c));
  nlohmann::json j{{"data", data.string()},
                   {"models", model_names},
                   {"calibrators", calibrator_names},
                   {"folds", folds},
                   {"repetitions", repetitions},
                   {"cal_fraction", calibration_fraction},
                   {"seed", seed},
                   {"bins", bins},
                   {"bin_mode", std::string(to_string(bin_mode))},
                   {"trees", forest.n_trees},
                   {"max_features", forest.max_features}};
  if (scores) j["scores"] = scores->string();
  if (tree.max_depth) j["tree_max_depth"] = *tree.max_depth;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, ExperimentConfig c) {
  if (j.contains("data")) c.data = j.at("data").get<std::string>();
  if (j.contains("scores")) c.scores = j.at("scores").get<std::string>();
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& m : j.at("models")) c.models.push_back(parse_model_kind(m.get<std::string>()));
  }
  if (j.contains("calibrators")) {
    c.calibrators.clear();
    for (const auto& m : j.at("calibrators")) c.calibrators.push_back(parse_calibrator_kind(m.get<std::string>()));
  }
  if (j.contains("folds")) c.folds = j.at("folds").get<std::size_t>();
  if (j.contains("repetitions")) c.repetitions = j.at("repetitions").get<std::size_t>();
  if (j.contains("cal_fraction")) c.calibration_fraction = j.at("cal_fraction").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out")) c.out = j.at("out").get<std::string>();
  if (j.contains("bins")) c.bins = j.at("bins").get<std::size_t>();
  if (j.contains("bin_mode")) c.bin_mode = parse_bin_mode(j.at("bin_mode").get<std::string>());
  if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
  if (j.contains("trees")) c.forest.n_trees = j.at("trees").get<std::size_t>();
  if (j.contains("max_features")) c.forest.max_features = j.at("max_features").get<std::size_t>();
  if (j.contains("tree_max_depth")) c.tree.max_depth = j.at("tree_max_depth").get<int>();
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) { return from_json(j, ExperimentConfig{}); }

std::string FoldOutcome::artifact_stem() const {
  return fmt::format("rep{}_fold{}_{}_{}", repetition, fold, to_string(model), to_string(calibrator));
}

namespace {

using ScoreFn = std::function<double(std::span<const double>)>;

ScoreFn train_model(ModelKind kind, const ExperimentConfig& config, const Dataset& ds,
                    std::span<const std::size_t> rows, std::uint64_t seed) {
  FeatureMatrix x = ds.features.select_rows(rows);
  std::vector<int> y;
  y.reserve(rows.size());
  for (auto r : rows) y.push_back(ds.labels[r]);
  switch (kind) {
    case ModelKind::tree: {
      auto model = std::make_shared<DecisionTree>(DecisionTree::fit(x, y, config.tree));
      return [model](std::span<const double> v) { return model->score(v); };
    }
    case ModelKind::forest: {
      ForestParams params = config.forest;
      params.threads = 1;
      auto model = std::make_shared<RandomForest>(RandomForest::fit(x, y, params, seed));
      return [model](std::span<const double> v) { return model->score(v); };
    }
    case ModelKind::logistic: {
      auto model = std::make_shared<LogisticRegression>(LogisticRegression::fit(x, y, config.logistic));
      return [model](std::span<const double> v) { return model->score(v); };
    }
    case ModelKind::external: break;
  }
  throw std::logic_error("train_model: external scores are not trained");
}

FoldOutcome make_outcome(std::size_t rep, std::size_t fold, ModelKind model, CalibratorKind cal,
                         std::vector<Prediction> predictions, const ExperimentConfig& config) {
  FoldOutcome out{rep, fold, model, cal, std::move(predictions), {}};
  std::vector<double> p, s;
  std::vector<int> y;
  for (const auto& pr : out.predictions) {
    p.push_back(pr.calibrated.point);
    y.push_back(pr.label);
  }
  out.report = evaluate(p, y, p, config.bins, config.bin_mode);
  return out;
}

std::vector<FoldOutcome> run_dataset_fold(const ExperimentConfig& config, const Dataset& ds, const FoldSplit& split) {
  std::vector<FoldOutcome> outcomes;
  const bool wants_uncalibrated =
      std::find(config.calibrators.begin(), config.calibrators.end(), CalibratorKind::none) != config.calibrators.end();
  std::vector<CalibratorKind> calibrated;
  for (auto c : config.calibrators) {
    if (c != CalibratorKind::none) calibrated.push_back(c);
  }
  const auto training = split.training_ids();

  auto predict = [&](const ScoreFn& model, const Calibrator& cal) {
    std::vector<Prediction> out;
    out.reserve(split.test_ids.size());
    for (auto id : split.test_ids) {
      const double s = model(ds.features.row(id));
      out.push_back({std::to_string(id), ds.labels[id], s, cal.calibrate(s)});
    }
    return out;
  };

  for (std::size_t m = 0; m < config.models.size(); ++m) {
    const ModelKind kind = config.models[m];
    if (kind == ModelKind::external) continue;
    const auto stream = static_cast<std::uint64_t>(kind) * 2;
    if (wants_uncalibrated || kind == ModelKind::logistic) {
      auto model = train_model(kind, config, ds, training, derive_seed(split.seed, stream));
      outcomes.push_back(make_outcome(split.repetition, split.fold, kind, CalibratorKind::none,
                                      predict(model, IdentityCalibrator()), config));
    }
    if (kind == ModelKind::logistic || calibrated.empty()) continue;

    auto model = train_model(kind, config, ds, split.proper_train_ids, derive_seed(split.seed, stream + 1));
    std::vector<double> cal_scores;
    std::vector<int> cal_labels;
    for (auto id : split.calibration_ids) {
      cal_scores.push_back(model(ds.features.row(id)));
      cal_labels.push_back(ds.labels[id]);
    }
    for (auto c : calibrated) {
      auto calibrator = fit_calibrator(c, cal_scores, cal_labels);
      outcomes.push_back(make_outcome(split.repetition, split.fold, kind, c, predict(model, *calibrator), config));
    }
  }
  return outcomes;
}

std::vector<FoldOutcome> run_external_fold(const ExperimentConfig& config, const ScoreTable& table, long long fold_id) {
  std::vector<double> cal_scores;
  std::vector<int> cal_labels;
  std::vector<const ScoreRow*> test;
  for (const auto& row : table.rows) {
    if (row.fold_id != fold_id) continue;
    if (row.partition == Partition::calibration) {
      cal_scores.push_back(row.score);
      cal_labels.push_back(row.label);
    } else {
      test.push_back(&row);
    }
  }
  if (test.empty()) throw ValidationError(fmt::format("fold {} has no test rows", fold_id));
  std::vector<FoldOutcome> outcomes;
  for (auto c : config.calibrators) {
    if (c != CalibratorKind::none && cal_scores.empty()) {
      throw ValidationError(fmt::format("fold {} has no calibration rows", fold_id));
    }
    auto calibrator = fit_calibrator(c, cal_scores, cal_labels);
    std::vector<Prediction> predictions;
    for (const auto* row : test) {
      predictions.push_back({row->instance_id, row->label, row->score, calibrator->calibrate(row->score)});
    }
    outcomes.push_back(
        make_outcome(0, static_cast<std::size_t>(fold_id), ModelKind::external, c, std::move(predictions), config));
  }
  return outcomes;
}

// Runs jobs on up to `threads` workers; results are stored by job index so the
// output order is the serial order. The first failing job's error is rethrown.
template <typename Job>
std::vector<std::vector<FoldOutcome>> run_jobs(std::size_t count, std::size_t threads, Job job) {
  std::vector<std::vector<FoldOutcome>> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const Dataset* dataset, const ScoreTable* scores) {
  config.validate();
  ExperimentResult result;
  const bool internal = std::any_of(config.models.begin(), config.models.end(),
                                    [](ModelKind m) { return m != ModelKind::external; });
  const bool external = std::find(config.models.begin(), config.models.end(), ModelKind::external) != config.models.end();

  if (internal) {
    if (dataset == nullptr) throw std::invalid_argument("run_experiment: dataset required");
    dataset->validate();
    result.splits = repeated_stratified_kfold(dataset->labels, config.folds, config.repetitions,
                                              config.calibration_fraction, config.seed);
    auto per_split = run_jobs(result.splits.size(), config.threads, [&](std::size_t i) {
      const auto& split = result.splits[i];
      try {
        return run_dataset_fold(config, *dataset, split);
      } catch (const std::exception& e) {
        throw std::runtime_error(fmt::format("repetition {} fold {}: {}", split.repetition, split.fold, e.what()));
      }
    });
    for (auto& v : per_split) std::move(v.begin(), v.end(), std::back_inserter(result.folds));
  }
  if (external) {
    if (scores == nullptr) throw std::invalid_argument("run_experiment: score table required for external model");
    const auto fold_ids = scores->folds();
    auto per_fold = run_jobs(fold_ids.size(), config.threads, [&](std::size_t i) {
      try {
        return run_external_fold(config, *scores, fold_ids[i]);
      } catch (const std::exception& e) {
        throw std::runtime_error(fmt::format("external scores: {}", e.what()));
      }
    });
    for (auto& v : per_fold) std::move(v.begin(), v.end(), std::back_inserter(result.folds));
  }
  result.table = aggregate(result.folds);
  return result;
}

std::vector<AggregateRow> aggregate(std::span<const FoldOutcome> folds) {
  struct Acc {
    AggregateRow row;
    double auc = 0, precision = 0, recall = 0, ece1 = 0;
    std::size_t n_auc = 0, n_precision = 0, n_recall = 0, n_ece1 = 0;
  };
  std::map<std::pair<int, int>, Acc> cells;
  for (const auto& f : folds) {
    auto& acc = cells[{static_cast<int>(f.model), static_cast<int>(f.calibrator)}];
    acc.row.model = f.model;
    acc.row.calibrator = f.calibrator;
    ++acc.row.n_folds;
    acc.row.accuracy += f.report.accuracy;
    acc.row.ece += f.report.ece;
    acc.row.positive_predictions += f.report.positive_prediction_count;
    if (f.report.auc) acc.auc += *f.report.auc, ++acc.n_auc;
    if (f.report.precision) acc.precision += *f.report.precision, ++acc.n_precision;
    if (f.report.recall) acc.recall += *f.report.recall, ++acc.n_recall;
    if (f.report.ece1) acc.ece1 += *f.report.ece1, ++acc.n_ece1;
  }
  std::vector<AggregateRow> rows;
  for (auto& [key, acc] : cells) {
    auto& r = acc.row;
    const auto n = static_cast<double>(r.n_folds);
    r.accuracy /= n;
    r.ece /= n;
    if (acc.n_auc) r.auc = acc.auc / static_cast<double>(acc.n_auc);
    if (acc.n_precision) r.precision = acc.precision / static_cast<double>(acc.n_precision);
    if (acc.n_recall) r.recall = acc.recall / static_cast<double>(acc.n_recall);
    if (acc.n_ece1) r.ece1 = acc.ece1 / static_cast<double>(acc.n_ece1);
    rows.push_back(r);
  }
  return rows;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }
std::string opt3(const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("-"); }
nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << content;
}

}  // namespace

std::string aggregate_csv(std::span<const AggregateRow> rows) {
  std::string out = "model,calibrator,folds,accuracy,auc,precision,recall,pos_pred,ece,ece1\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(r.model), to_string(r.calibrator), r.n_folds,
                       r.accuracy, opt(r.auc), opt(r.precision), opt(r.recall), r.positive_predictions, r.ece,
                       opt(r.ece1));
  }
  return out;
}

nlohmann::json aggregate_json(std::span<const AggregateRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"model", to_string(r.model)},
                   {"calibrator", to_string(r.calibrator)},
                   {"folds", r.n_folds},
                   {"accuracy", r.accuracy},
                   {"auc", opt_json(r.auc)},
                   {"precision", opt_json(r.precision)},
                   {"recall", opt_json(r.recall)},
                   {"pos_pred", r.positive_predictions},
                   {"ece", r.ece},
                   {"ece1", opt_json(r.ece1)}});
  }
  return out;
}

std::string aggregate_text(std::span<const AggregateRow> rows) {
  std::string out = fmt::format("{:<9} {:<11} {:>6} {:>6} {:>6} {:>6} {:>8} {:>6} {:>6}\n", "model", "calibrator",
                                "acc", "auc", "prec", "rec", "#pospred", "ece", "ece1");
  for (const auto& r : rows) {
    out += fmt::format("{:<9} {:<11} {:>6.3f} {:>6} {:>6} {:>6} {:>8} {:>6.3f} {:>6}\n", to_string(r.model),
                       to_string(r.calibrator), r.accuracy, opt3(r.auc), opt3(r.precision), opt3(r.recall),
                       r.positive_predictions, r.ece, opt3(r.ece1));
  }
  return out;
}

std::string predictions_csv(std::span<const Prediction> predictions) {
  std::string out = "instance_id,label,score,p0,p1,point\n";
  for (const auto& p : predictions) {
    out += fmt::format("{},{},{},{},{},{}\n", p.instance_id, p.label, p.score, p.calibrated.p0, p.calibrated.p1,
                       p.calibrated.point);
  }
  return out;
}

std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::vector<std::string> expected{"instance_id", "label", "score", "p0", "p1", "point"};
  if (table.header != expected) {
    throw SchemaError(fmt::format("'{}': header must be instance_id,label,score,p0,p1,point", path.string()));
  }
  std::vector<Prediction> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& c = table.rows[r];
    const auto line = table.line_numbers[r];
    Prediction p;
    p.instance_id = c[0];
    p.label = static_cast<int>(csv::parse_integer(c[1], "label", line));
    if (p.label != 0 && p.label != 1) throw ValidationError(fmt::format("line {}: label must be 0 or 1", line));
    p.score = csv::parse_double(c[2], "score", line);
    p.calibrated = {csv::parse_double(c[3], "p0", line), csv::parse_double(c[4], "p1", line),
                    csv::parse_double(c[5], "point", line)};
    if (!(p.calibrated.point >= 0.0 && p.calibrated.point <= 1.0)) {
      throw ValidationError(fmt::format("line {}: point outside [0, 1]", line));
    }
    out.push_back(std::move(p));
  }
  return out;
}

ReliabilityScope parse_reliability_scope(std::string_view text) {
  if (text == "all") return ReliabilityScope::all;
  if (text == "minority") return ReliabilityScope::minority;
  throw std::invalid_argument(fmt::format("unknown scope '{}' (expected all or minority)", text));
}

ReliabilityBins pooled_reliability(std::span<const Prediction> predictions, ReliabilityScope scope,
                                   std::size_t n_bins, BinMode mode) {
  std::vector<double> p;
  std::vector<int> y;
  for (const auto& pr : predictions) {
    if (scope == ReliabilityScope::minority && pr.calibrated.point < 0.5) continue;
    p.push_back(pr.calibrated.point);
    y.push_back(pr.label);
  }
  return reliability_bins(p, y, n_bins, mode);
}

void write_experiment_artifacts(const ExperimentResult& result, const ExperimentConfig& config,
                                const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  fs::create_directories(out / "folds");
  fs::create_directories(out / "reliability");
  write_file(out / "config.json", config.to_json().dump(2) + "\n");
  if (!result.splits.empty()) write_file(out / "splits.json", split_manifest(result.splits).dump() + "\n");
  write_file(out / "aggregate.csv", aggregate_csv(result.table));
  write_file(out / "aggregate.json", aggregate_json(result.table).dump(2) + "\n");

  std::map<std::pair<int, int>, std::vector<Prediction>> pooled;
  for (const auto& f : result.folds) {
    const auto stem = f.artifact_stem();
    auto report = to_json(f.report);
    report["repetition"] = f.repetition;
    report["fold"] = f.fold;
    report["model"] = to_string(f.model);
    report["calibrator"] = to_string(f.calibrator);
    write_file(out / "folds" / (stem + ".json"), report.dump(2) + "\n");
    write_file(out / "folds" / (stem + ".csv"), predictions_csv(f.predictions));
    auto& bucket = pooled[{static_cast<int>(f.model), static_cast<int>(f.calibrator)}];
    bucket.insert(bucket.end(), f.predictions.begin(), f.predictions.end());
  }
  for (const auto& [key, predictions] : pooled) {
    const auto name = fmt::format("{}_{}", to_string(static_cast<ModelKind>(key.first)),
                                  to_string(static_cast<CalibratorKind>(key.second)));
    for (auto scope : {ReliabilityScope::all, ReliabilityScope::minority}) {
      write_file(out / "reliability" / (name + (scope == ReliabilityScope::all ? "_all.csv" : "_minority.csv")),
                 reliability_csv(pooled_reliability(predictions, scope, config.bins, config.bin_mode)));
    }
  }
}

std::vector<CalibratedScore> calibrate_scores(const ScoreTable& table, CalibratorKind kind) {
  std::vector<CalibratedScore> out;
  for (long long fold : table.folds()) {
    std::vector<double> cal_scores;
    std::vector<int> cal_labels;
    std::vector<const ScoreRow*> test;
    for (const auto& row : table.rows) {
      if (row.fold_id != fold) continue;
      if (row.partition == Partition::calibration) {
        cal_scores.push_back(row.score);
        cal_labels.push_back(row.label);
      } else {
        test.push_back(&row);
      }
    }
    if (test.empty()) throw ValidationError(fmt::format("fold {}: no test rows", fold));
    if (kind != CalibratorKind::none && cal_scores.empty()) {
      throw ValidationError(fmt::format("fold {}: no calibration rows", fold));
    }
    std::unique_ptr<Calibrator> calibrator;
    try {
      calibrator = fit_calibrator(kind, cal_scores, cal_labels);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(fmt::format("fold {}: {}", fold, e.what()));
    }
    for (const auto* row : test) out.push_back({row->instance_id, fold, row->score, calibrator->calibrate(row->score)});
  }
  return out;
}

std::string calibrated_scores_csv(std::span<const CalibratedScore> rows) {
  std::string out = "instance_id,fold_id,score,p0,p1,point\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", r.instance_id, r.fold_id, r.score, r.calibrated.p0, r.calibrated.p1,
                       r.calibrated.point);
  }
  return out;
}

}  // namespace vacal
