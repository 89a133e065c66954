// vacal: calibration experiments and tools for scoring classifiers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vacal/dataset.hpp"
#include "vacal/experiment.hpp"
#include "vacal/score_table.hpp"
#include "vacal/synthetic.hpp"
#include "vacal/venn_tree.hpp"

namespace fs = std::filesystem;
using namespace vacal;

namespace {

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  out << text;
}

Dataset load_dataset(const fs::path& path) {
  if (path.empty()) return reference_ai4i_dataset();
  return load_csv(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vacal: Venn-Abers, Platt and isotonic calibration for scoring classifiers"};
  app.require_subcommand(1);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Repeated cross-validated calibration experiment");
  std::string config_path, data_path, scores_path, out_dir = "vacal-out", bin_mode = "width";
  std::vector<std::string> models, calibrators;
  std::size_t folds = 10, repetitions = 10, bins = 10, threads = 1, trees = 100;
  double cal_fraction = kDefaultCalibrationFraction;
  std::uint64_t seed = 42;
  exp->add_option("--config", config_path, "JSON config file; explicit flags override it");
  auto* o_data = exp->add_option("--data", data_path, "AI4I-style CSV (default: regenerated reference table)");
  auto* o_scores = exp->add_option("--scores", scores_path, "Score table for the external model");
  auto* o_models = exp->add_option("--models", models, "tree,forest,logistic,external");
  auto* o_cals = exp->add_option("--calibrators", calibrators, "none,venn-abers,platt,isotonic");
  auto* o_folds = exp->add_option("--folds", folds, "k of k-fold");
  auto* o_reps = exp->add_option("--repetitions", repetitions, "Repetitions of k-fold");
  auto* o_frac = exp->add_option("--cal-fraction", cal_fraction, "Share of each training portion used for calibration");
  auto* o_seed = exp->add_option("--seed", seed, "Random seed");
  auto* o_out = exp->add_option("--out", out_dir, "Output directory");
  auto* o_bins = exp->add_option("--bins", bins, "Reliability bins");
  auto* o_mode = exp->add_option("--bin-mode", bin_mode, "width or frequency")->check(CLI::IsMember({"width", "frequency"}));
  auto* o_threads = exp->add_option("--threads", threads, "Fold-level worker threads");
  auto* o_trees = exp->add_option("--trees", trees, "Trees per random forest");

  // calibrate-scores
  auto* cal = app.add_subcommand("calibrate-scores", "Calibrate an external score table fold by fold");
  std::string cal_scores, cal_kind = "venn-abers", cal_out;
  cal->add_option("--scores", cal_scores, "Score table CSV")->required();
  cal->add_option("--calibrator", cal_kind, "venn-abers, platt, isotonic or none");
  cal->add_option("--out", cal_out, "Output CSV (default: stdout)");

  // reliability
  auto* rel = app.add_subcommand("reliability", "Pooled reliability bins from experiment predictions");
  std::string rel_in, rel_model = "forest", rel_cal = "none", rel_scope = "all", rel_out, rel_mode = "width";
  std::vector<std::string> rel_files;
  std::size_t rel_bins = 10;
  rel->add_option("--in", rel_in, "Experiment output directory");
  rel->add_option("--model", rel_model, "Model name used with --in");
  rel->add_option("--calibrator", rel_cal, "Calibrator name used with --in");
  rel->add_option("--predictions", rel_files, "Prediction CSV files (instead of --in)");
  rel->add_option("--scope", rel_scope, "all or minority")->check(CLI::IsMember({"all", "minority"}));
  rel->add_option("--bins", rel_bins, "Number of bins");
  rel->add_option("--bin-mode", rel_mode, "width or frequency")->check(CLI::IsMember({"width", "frequency"}));
  rel->add_option("--out", rel_out, "Output CSV (default: stdout)");

  // venn-tree
  auto* vt = app.add_subcommand("venn-tree", "Decision tree with Venn-Abers intervals in its leaves");
  std::string vt_data, vt_out = "venn-tree";
  int vt_depth = 5;
  int vt_display = -1;
  double vt_frac = kDefaultCalibrationFraction;
  std::uint64_t vt_seed = 42;
  vt->add_option("--data", vt_data, "AI4I-style CSV (default: regenerated reference table)");
  vt->add_option("--max-depth", vt_depth, "Maximum depth of the trained tree (<= 0: unlimited)");
  vt->add_option("--display-depth", vt_display, "Collapse the tree below this depth for display");
  vt->add_option("--cal-fraction", vt_frac, "Share of the data used for calibration");
  vt->add_option("--seed", vt_seed, "Random seed for the train/calibration split");
  vt->add_option("--out", vt_out, "Output directory");

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "Write the regenerated AI4I-style reference table");
  std::size_t gen_rows = 10000;
  std::uint64_t gen_seed = kReferenceAi4iSeed;
  std::string gen_out;
  gen->add_option("--rows", gen_rows, "Number of rows");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (exp->parsed()) {
      ExperimentConfig config;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error(fmt::format("cannot open config '{}'", config_path));
        config = ExperimentConfig::from_json(nlohmann::json::parse(in));
      }
      if (*o_data) config.data = data_path;
      if (*o_scores) config.scores = scores_path;
      if (*o_models) {
        config.models.clear();
        for (const auto& m : split_list(models)) config.models.push_back(parse_model_kind(m));
      }
      if (*o_cals) {
        config.calibrators.clear();
        for (const auto& c : split_list(calibrators)) config.calibrators.push_back(parse_calibrator_kind(c));
      }
      if (*o_folds) config.folds = folds;
      if (*o_reps) config.repetitions = repetitions;
      if (*o_frac) config.calibration_fraction = cal_fraction;
      if (*o_seed) config.seed = seed;
      if (*o_out || config.out.empty()) config.out = out_dir;
      if (*o_bins) config.bins = bins;
      if (*o_mode) config.bin_mode = parse_bin_mode(bin_mode);
      if (*o_threads) config.threads = threads;
      if (*o_trees) config.forest.n_trees = trees;
      config.validate();

      std::optional<Dataset> dataset;
      std::optional<ScoreTable> table;
      const bool internal = std::any_of(config.models.begin(), config.models.end(),
                                        [](ModelKind m) { return m != ModelKind::external; });
      if (internal) dataset = load_dataset(config.data);
      if (config.scores) table = load_score_table(*config.scores);
      auto result = run_experiment(config, dataset ? &*dataset : nullptr, table ? &*table : nullptr);
      write_experiment_artifacts(result, config, config.out);
      std::cout << aggregate_text(result.table);
    } else if (cal->parsed()) {
      auto rows = calibrate_scores(load_score_table(cal_scores), parse_calibrator_kind(cal_kind));
      write_text(cal_out, calibrated_scores_csv(rows));
    } else if (rel->parsed()) {
      std::vector<fs::path> files(rel_files.begin(), rel_files.end());
      if (!rel_in.empty()) {
        const std::string suffix = fmt::format("_{}_{}.csv", rel_model, rel_cal);
        for (const auto& entry : fs::directory_iterator(fs::path(rel_in) / "folds")) {
          const auto name = entry.path().filename().string();
          if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
            files.push_back(entry.path());
          }
        }
        std::sort(files.begin(), files.end());
      }
      if (files.empty()) throw std::runtime_error("reliability: no prediction files given or found");
      std::vector<Prediction> predictions;
      for (const auto& f : files) {
        auto part = read_predictions_csv(f);
        predictions.insert(predictions.end(), part.begin(), part.end());
      }
      auto bins_out = pooled_reliability(predictions, parse_reliability_scope(rel_scope), rel_bins,
                                         parse_bin_mode(rel_mode));
      write_text(rel_out, reliability_csv(bins_out));
    } else if (vt->parsed()) {
      Dataset ds = load_dataset(vt_data);
      auto holdout = stratified_holdout(ds.labels, vt_frac, vt_seed);
      TreeParams params;
      if (vt_depth > 0) params.max_depth = vt_depth;
      Dataset train = ds.subset(holdout.proper_train_ids);
      Dataset calset = ds.subset(holdout.calibration_ids);
      auto tree = DecisionTree::fit(train.features, train.labels, params);
      std::optional<int> display;
      if (vt_display >= 0) display = vt_display;
      auto venn = build_venn_tree(tree, calset.features, calset.labels, display);

      fs::create_directories(vt_out);
      write_text((fs::path(vt_out) / "tree_model.json").string(), tree.to_json().dump(2) + "\n");
      write_text((fs::path(vt_out) / "venn_tree.json").string(), venn.to_json(ds.feature_names).dump(2) + "\n");
      write_text((fs::path(vt_out) / "venn_tree.dot").string(), render_tree(venn, {.feature_names = ds.feature_names}));
      auto rules = extract_rules(venn);
      const auto text = format_rules(rules, {.feature_names = ds.feature_names});
      write_text((fs::path(vt_out) / "rules.txt").string(), text);
      std::cout << text;
    } else if (gen->parsed()) {
      auto table = generate_ai4i({.rows = gen_rows, .seed = gen_seed});
      write_text(gen_out, table.csv);
      std::cerr << fmt::format("rows={} failures={} (TWF={} HDF={} PWF={} OSF={} RNF={})\n", gen_rows,
                               table.counts.machine_failure, table.counts.twf, table.counts.hdf, table.counts.pwf,
                               table.counts.osf, table.counts.rnf);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
