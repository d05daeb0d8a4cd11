// Command-line front end.
//
//   shl synth    --out DIR [--windows N] [--classes K] [--seed S] [--no-mask] [--cache]
//   shl extract  --data DIR --out DIR [--config CFG]
//   shl train    --data DIR --out MODEL [--val DIR] [--config CFG] [--k 3] [--seed S]
//                [--iterations 1000] [--exclude-hand] [--include-validation]
//   shl predict  --model MODEL --data DIR --out LABELS [--sample-level]
//   shl evaluate --data DIR (--model MODEL | --pred LABELS) [--out DIR]
//   shl ablate   --data DIR --val DIR --out DIR [--config CFG]... [--grid]
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 internal error.

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shl/aggregation.hpp"
#include "shl/data_io.hpp"
#include "shl/metrics.hpp"
#include "shl/pipeline.hpp"
#include "shl/report.hpp"

namespace fs = std::filesystem;
using namespace shl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct CliConfig {
  std::string data;
  std::string val;
  std::string model;
  std::string pred;
  std::string out;
  std::vector<std::string> configs;
  bool grid = false;
  int k = 3;
  std::uint64_t seed = 0;
  int iterations = 1000;
  double learning_rate = 0.1;
  int max_depth = 6;
  int min_samples_leaf = 20;
  bool exclude_hand = false;
  bool include_validation = false;
  bool sample_level = false;
  std::size_t synth_windows = 600;
  int synth_classes = 3;
  bool no_mask = false;
  bool cache = false;
};

TrainOptions train_options(const CliConfig& c) {
  TrainOptions o;
  o.k = c.k;
  o.seed = c.seed;
  o.params.n_iterations = c.iterations;
  o.params.learning_rate = c.learning_rate;
  o.params.max_depth = c.max_depth;
  o.params.min_samples_leaf = c.min_samples_leaf;
  o.params.seed = c.seed;
  return o;
}

AblationConfig single_config(const CliConfig& c) {
  if (c.configs.size() > 1) throw ValidationError("this subcommand takes a single --config");
  return c.configs.empty() ? default_config() : parse_config(c.configs.front());
}

std::string mask_key(ModalityMask m) { return std::string(modality_name(m.missing)) + "=0"; }

int cmd_synth(const CliConfig& c) {
  SynthOptions o;
  o.n_windows = c.synth_windows;
  o.n_classes = c.synth_classes;
  o.seed = c.seed;
  o.mask_modality = !c.no_mask;
  const auto windows = synth_dataset(o);
  if (c.cache) {
    write_window_cache(c.out, windows);
  } else {
    write_dataset_dir(c.out, windows);
  }
  std::cout << "wrote " << windows.size() << " windows to " << c.out << '\n';
  return 0;
}

int cmd_extract(const CliConfig& c) {
  const AblationConfig config = single_config(c);
  const auto windows = load_dataset(c.data);
  FeatureOptions fo;
  fo.znorm = config.znorm;
  const auto prepared = prepare_windows(windows, fo);
  fs::create_directories(c.out);
  for (ModalityMask mask : kAllMasks) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < prepared.size(); ++i)
      if (trains_mask(prepared[i], mask)) rows.push_back(i);
    const FeatureSchema schema = feature_schema(config, mask);
    const FeatureMatrix x = build_matrix(prepared, rows, config, mask);
    std::vector<ClassId> labels;
    std::vector<std::int64_t> ids;
    for (auto r : rows) {
      labels.push_back(prepared[r].label);
      ids.push_back(prepared[r].window_id);
    }
    const std::string tag(modality_tag(mask.missing));
    write_feature_csv(fs::path(c.out) / ("features_missing_" + tag + ".csv"), schema, x, labels, ids);
    write_schema_file(fs::path(c.out) / ("schema_missing_" + tag + ".txt"), schema);
    std::cout << mask_key(mask) << ": " << x.rows << " windows x " << x.cols << " features\n";
  }
  return 0;
}

int cmd_train(const CliConfig& c) {
  const AblationConfig config = single_config(c);
  if (c.include_validation && c.val.empty())
    throw ValidationError("--include-validation requires --val");
  const auto train = load_dataset(c.data);
  const std::vector<RawWindow> val = c.val.empty() ? std::vector<RawWindow>{} : load_dataset(c.val);
  FinalModelFlags flags;
  flags.exclude_hand = c.exclude_hand;
  flags.include_validation = c.include_validation;
  const auto bundle = final_model(train, val, config, flags, train_options(c));
  bundle.save(fs::path(c.out));
  std::cout << "trained " << bundle.model_count() << " models (" << to_string(config) << ", "
            << config_length(config) << " features) -> " << c.out << '\n';
  return 0;
}

int cmd_predict(const CliConfig& c) {
  const auto bundle = ModelBundle::load(fs::path(c.model));
  FeatureOptions fo;
  fo.znorm = bundle.config.znorm;
  const auto prepared = prepare_windows(load_dataset(c.data), fo);
  const auto labels = majority_vote_predict(bundle, prepared);
  write_label_file(c.out, labels, c.sample_level ? kWindowLength : 1);
  std::cout << "predicted " << labels.size() << " windows -> " << c.out << '\n';
  return 0;
}

int cmd_evaluate(const CliConfig& c) {
  if (c.model.empty() == c.pred.empty()) throw ValidationError("evaluate needs exactly one of --model or --pred");
  const auto windows = load_dataset(c.data);
  std::vector<PreparedWindow> prepared;
  std::vector<ClassId> y_pred;
  std::vector<ClassId> classes;
  if (!c.model.empty()) {
    const auto bundle = ModelBundle::load(fs::path(c.model));
    FeatureOptions fo;
    fo.znorm = bundle.config.znorm;
    prepared = prepare_windows(windows, fo);
    y_pred = majority_vote_predict(bundle, prepared);
    classes = bundle.classes();
  } else {
    y_pred = read_label_file(c.pred);
    if (y_pred.size() != windows.size())
      throw ShapeError("prediction file has " + std::to_string(y_pred.size()) + " labels, data has " +
                       std::to_string(windows.size()) + " windows");
  }

  std::vector<ClassId> y_true(windows.size());
  std::vector<ModalityMask> masks(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    y_true[i] = windows[i].label;
    masks[i] = detect_missing_modality(windows[i]).value_or(kUnmaskedFallback);
  }
  std::set<ClassId> seen(classes.begin(), classes.end());
  seen.insert(y_true.begin(), y_true.end());
  seen.insert(y_pred.begin(), y_pred.end());
  classes.assign(seen.begin(), seen.end());

  std::map<std::string, ConfusionMatrix> matrices;
  matrices["overall"] = confusion_matrix(y_true, y_pred, classes);
  for (ModalityMask m : kAllMasks) {
    std::vector<ClassId> t, p;
    for (std::size_t i = 0; i < windows.size(); ++i)
      if (masks[i] == m) {
        t.push_back(y_true[i]);
        p.push_back(y_pred[i]);
      }
    if (!t.empty()) matrices[mask_key(m)] = confusion_matrix(t, p, classes);
  }
  const double f1 = macro_f1(y_true, y_pred, classes);
  std::cout << "macro_f1 " << f1 << '\n';
  for (const auto& [name, cm] : matrices) {
    if (name == "overall") continue;
    const auto pc = per_class_f1(cm);
    double mean = 0.0;
    for (double v : pc) mean += v;
    std::cout << "macro_f1[" << name << "] " << mean / static_cast<double>(pc.size()) << " (" << cm.total()
              << " windows)\n";
  }
  if (!c.out.empty()) write_confusion_json(fs::path(c.out) / "confusion.json", matrices);
  return 0;
}

int cmd_ablate(const CliConfig& c) {
  std::vector<AblationConfig> configs;
  if (c.grid) configs = paper_grid();
  for (const auto& s : c.configs) configs.push_back(parse_config(s));
  if (configs.empty()) throw ValidationError("ablate needs --grid or at least one --config");
  const auto train = load_dataset(c.data);
  const auto val = load_dataset(c.val);
  const auto report = run_ablation(train, val, configs, train_options(c));
  write_ablation_csv(fs::path(c.out) / "ablation.csv", report);
  write_ablation_json(fs::path(c.out) / "ablation.json", report);
  std::cout << format_ablation_table(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transportation-mode detection with missing sensor modalities"};
  app.require_subcommand(1);
  CliConfig c;

  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--k", c.k, "Number of CV folds")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--iterations", c.iterations, "Boosting iterations")->check(CLI::NonNegativeNumber);
    sub->add_option("--learning-rate", c.learning_rate, "Boosting learning rate")->check(CLI::PositiveNumber);
    sub->add_option("--max-depth", c.max_depth, "Maximum tree depth")->check(CLI::NonNegativeNumber);
    sub->add_option("--min-leaf", c.min_samples_leaf, "Minimum samples per leaf")->check(CLI::PositiveNumber);
  };

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--out", c.out, "Output directory (or cache file with --cache)")->required();
  synth->add_option("--windows", c.synth_windows, "Number of windows");
  synth->add_option("--classes", c.synth_classes, "Number of classes (1-8)")->check(CLI::Range(1, 8));
  synth->add_option("--seed", c.seed, "Random seed");
  synth->add_flag("--no-mask", c.no_mask, "Keep all three modalities");
  synth->add_flag("--cache", c.cache, "Write a binary window cache instead of text files");

  auto* extract = app.add_subcommand("extract", "Write per-mask feature matrices");
  extract->add_option("--data", c.data, "Dataset directory or cache")->required();
  extract->add_option("--config", c.configs, "Feature configuration");
  extract->add_option("--out", c.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model bundle");
  train->add_option("--data", c.data, "Training dataset")->required();
  train->add_option("--val", c.val, "Validation dataset");
  train->add_option("--config", c.configs, "Feature configuration");
  train->add_option("--out", c.out, "Model bundle file")->required();
  train->add_flag("--exclude-hand", c.exclude_hand, "Drop Hand-location training windows");
  train->add_flag("--include-validation", c.include_validation, "Also train on the validation windows");
  add_params(train);

  auto* predict = app.add_subcommand("predict", "Predict labels with fold majority voting");
  predict->add_option("--model", c.model, "Model bundle file")->required();
  predict->add_option("--data", c.data, "Dataset to label")->required();
  predict->add_option("--out", c.out, "Label file, one id per window")->required();
  predict->add_flag("--sample-level", c.sample_level, "Repeat each label for all 500 samples");

  auto* evaluate = app.add_subcommand("evaluate", "Macro F1 and confusion matrices");
  evaluate->add_option("--data", c.data, "Labelled dataset")->required();
  evaluate->add_option("--model", c.model, "Model bundle file");
  evaluate->add_option("--pred", c.pred, "Label file to score");
  evaluate->add_option("--out", c.out, "Output directory for confusion.json");

  auto* ablate = app.add_subcommand("ablate", "Run the feature-configuration ablation");
  ablate->add_option("--data", c.data, "Training dataset")->required();
  ablate->add_option("--val", c.val, "Validation dataset")->required();
  ablate->add_option("--config", c.configs, "Configuration (repeatable)");
  ablate->add_flag("--grid", c.grid, "Add the 18 published configurations");
  ablate->add_option("--out", c.out, "Output directory")->required();
  add_params(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(c);
    if (*extract) return cmd_extract(c);
    if (*train) return cmd_train(c);
    if (*predict) return cmd_predict(c);
    if (*evaluate) return cmd_evaluate(c);
    if (*ablate) return cmd_ablate(c);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
