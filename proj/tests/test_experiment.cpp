#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "vacal/csv.hpp"
#include "vacal/error.hpp"
#include "vacal/experiment.hpp"
#include "vacal/synthetic.hpp"

using namespace vacal;
namespace fs = std::filesystem;

namespace {

Dataset small_dataset() { return parse_csv(generate_ai4i({.rows = 800, .seed = 12}).csv); }

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.folds = 2;
  c.repetitions = 1;
  c.forest.n_trees = 5;
  c.seed = 9;
  return c;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("vacal_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const AggregateRow* find_row(std::span<const AggregateRow> rows, ModelKind m, CalibratorKind c) {
  for (const auto& r : rows)
    if (r.model == m && r.calibrator == c) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("names parse and print") {
  CHECK(parse_model_kind("forest") == ModelKind::forest);
  CHECK(parse_calibrator_kind("venn-abers") == CalibratorKind::venn_abers);
  CHECK(to_string(CalibratorKind::isotonic) == "isotonic");
  CHECK_THROWS(parse_model_kind("svm"));
  CHECK_THROWS(parse_calibrator_kind("beta"));
}

TEST_CASE("config: validation and JSON overlay") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.folds = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.calibrators.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  auto overlaid = ExperimentConfig::from_json(nlohmann::json{{"folds", 5}, {"calibrators", {"platt"}}}, c);
  CHECK(overlaid.folds == 5);
  CHECK(overlaid.repetitions == 1);
  CHECK(overlaid.calibrators == std::vector<CalibratorKind>{CalibratorKind::platt});
  auto round = ExperimentConfig::from_json(c.to_json());
  CHECK(round.to_json() == c.to_json());
}

TEST_CASE("experiment: smoke run covers every model and calibrator") {
  auto data = small_dataset();
  auto config = small_config();
  auto result = run_experiment(config, &data, nullptr);
  CHECK(result.splits.size() == 2);
  // tree and forest with four calibrators, logistic uncalibrated.
  CHECK(result.table.size() == 9);
  CHECK(result.folds.size() == 18);
  for (const auto& f : result.folds) {
    CHECK(f.predictions.size() == result.splits[f.fold].test_ids.size());
    for (const auto& p : f.predictions) {
      CHECK(p.calibrated.p0 <= p.calibrated.p1);
      CHECK(p.calibrated.point >= 0.0);
      CHECK(p.calibrated.point <= 1.0);
      if (f.calibrator != CalibratorKind::venn_abers) CHECK(p.calibrated.p0 == p.calibrated.p1);
    }
  }
  CHECK(find_row(result.table, ModelKind::logistic, CalibratorKind::platt) == nullptr);
  const auto* lr = find_row(result.table, ModelKind::logistic, CalibratorKind::none);
  REQUIRE(lr != nullptr);
  CHECK(lr->n_folds == 2);
  auto text = aggregate_text(result.table);
  CHECK(text.find("venn-abers") != std::string::npos);
}

TEST_CASE("experiment: calibrated variants share the model and only the calibrator differs") {
  auto data = small_dataset();
  auto config = small_config();
  config.models = {ModelKind::tree};
  auto result = run_experiment(config, &data, nullptr);
  std::vector<const FoldOutcome*> fold0;
  for (const auto& f : result.folds)
    if (f.fold == 0 && f.calibrator != CalibratorKind::none) fold0.push_back(&f);
  REQUIRE(fold0.size() == 3);
  for (std::size_t i = 0; i < fold0[0]->predictions.size(); ++i) {
    CHECK(fold0[0]->predictions[i].score == fold0[1]->predictions[i].score);
    CHECK(fold0[0]->predictions[i].score == fold0[2]->predictions[i].score);
  }
}

TEST_CASE("experiment: calibrator ablation and missing inputs") {
  auto data = small_dataset();
  auto config = small_config();
  config.calibrators = {CalibratorKind::none};
  auto result = run_experiment(config, &data, nullptr);
  CHECK(result.table.size() == 3);
  for (const auto& row : result.table) CHECK(row.calibrator == CalibratorKind::none);
  CHECK_THROWS(run_experiment(config, nullptr, nullptr));
  config.models = {ModelKind::external};
  CHECK_THROWS(run_experiment(config, &data, nullptr));
}

TEST_CASE("experiment: aggregate rows are the fold means of the written artifacts") {
  auto data = small_dataset();
  auto config = small_config();
  config.models = {ModelKind::forest};
  config.calibrators = {CalibratorKind::none, CalibratorKind::venn_abers};
  auto result = run_experiment(config, &data, nullptr);
  auto dir = scratch("audit");
  write_experiment_artifacts(result, config, dir);
  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "splits.json"));
  CHECK(fs::exists(dir / "reliability" / "forest_venn-abers_minority.csv"));
  for (const auto& row : result.table) {
    double accuracy = 0.0, ece_sum = 0.0;
    std::vector<Prediction> pooled;
    for (std::size_t f = 0; f < config.folds; ++f) {
      FoldOutcome probe{.repetition = 0, .fold = f, .model = row.model, .calibrator = row.calibrator};
      auto report = nlohmann::json::parse(slurp(dir / "folds" / (probe.artifact_stem() + ".json")));
      auto preds = read_predictions_csv(dir / "folds" / (probe.artifact_stem() + ".csv"));
      std::vector<double> p;
      std::vector<int> y;
      for (const auto& pr : preds) {
        p.push_back(pr.calibrated.point);
        y.push_back(pr.label);
      }
      // Recomputed from the written predictions, the fold metrics agree.
      CHECK(report["accuracy"].get<double>() == doctest::Approx(classification_metrics(p, y).accuracy).epsilon(1e-12));
      CHECK(report["ece"].get<double>() == doctest::Approx(ece(reliability_bins(p, y))).epsilon(1e-9));
      accuracy += report["accuracy"].get<double>();
      ece_sum += report["ece"].get<double>();
      pooled.insert(pooled.end(), preds.begin(), preds.end());
    }
    CHECK(row.accuracy == doctest::Approx(accuracy / 2.0).epsilon(1e-12));
    CHECK(row.ece == doctest::Approx(ece_sum / 2.0).epsilon(1e-12));
    CHECK(row.n_folds == 2);
    auto bins = pooled_reliability(pooled, ReliabilityScope::all);
    CHECK(bins.n == data.n_instances());
  }
  auto table = csv::read(dir / "aggregate.csv");
  CHECK(table.rows.size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("experiment: output does not depend on the thread count") {
  auto data = small_dataset();
  auto config = small_config();
  auto serial = run_experiment(config, &data, nullptr);
  config.threads = 2;
  config.forest.threads = 2;
  auto parallel = run_experiment(config, &data, nullptr);
  CHECK(aggregate_csv(serial.table) == aggregate_csv(parallel.table));
  config.seed = 10;
  auto reseeded = run_experiment(config, &data, nullptr);
  CHECK(aggregate_csv(serial.table) != aggregate_csv(reseeded.table));
}

TEST_CASE("calibrate_scores: worked example and error reporting") {
  auto table = parse_score_table(
      "instance_id,fold_id,partition,score,label\n"
      "a,0,calibration,0.1,0\nb,0,calibration,0.2,0\nc,0,calibration,0.3,1\n"
      "d,0,calibration,0.4,1\ne,0,calibration,0.6,1\nf,0,calibration,0.9,1\ng,0,test,0.8,0\n");
  auto out = calibrate_scores(table, CalibratorKind::venn_abers);
  REQUIRE(out.size() == 1);
  CHECK(out[0].instance_id == "g");
  CHECK(out[0].calibrated.p0 == 0.75);
  CHECK(out[0].calibrated.p1 == 1.0);
  CHECK(out[0].calibrated.point == 0.8);
  CHECK(calibrated_scores_csv(out).rfind("instance_id,fold_id,score,p0,p1,point\n", 0) == 0);

  auto single = parse_score_table(
      "instance_id,fold_id,partition,score,label\n"
      "a,3,calibration,0.1,1\nb,3,calibration,0.2,1\nc,3,test,0.3,0\n");
  try {
    calibrate_scores(single, CalibratorKind::platt);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("fold 3") != std::string::npos);
  }
  auto no_test = parse_score_table("instance_id,fold_id,partition,score,label\na,1,calibration,0.1,1\n");
  CHECK_THROWS_AS(calibrate_scores(no_test, CalibratorKind::isotonic), ValidationError);
}

TEST_CASE("experiment: external scores run through the calibrators") {
  std::string text = "instance_id,fold_id,partition,score,label\n";
  for (int fold = 0; fold < 2; ++fold) {
    for (int i = 0; i < 40; ++i) {
      const double s = (i + 0.5) / 40.0;
      const int y = (i * 7) % 10 < static_cast<int>(s * 10) ? 1 : 0;
      text += fmt::format("i{},{},{},{},{}\n", i, fold, i % 3 == 0 ? "test" : "calibration", s, y);
    }
  }
  auto table = parse_score_table(text);
  auto config = small_config();
  config.models = {ModelKind::external};
  auto result = run_experiment(config, nullptr, &table);
  CHECK(result.table.size() == 4);
  for (const auto& f : result.folds) CHECK(f.predictions.size() == 14);
}
