#include "stance/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stance/corpus.hpp"
#include "stance/error.hpp"
#include "stance/eval.hpp"
#include "stance/features.hpp"
#include "stance/hyperopt.hpp"
#include "stance/rumoureval.hpp"
#include "stance/training.hpp"

#ifndef STANCE_DATA_DIR
#define STANCE_DATA_DIR "data"
#endif

namespace stance {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fixed run-directory file names.
constexpr const char* kConfigFile = "config.ini";
constexpr const char* kCheckpointFile = "checkpoint.json";
constexpr const char* kHistoryFile = "history.json";
constexpr const char* kTrialsFile = "trials.jsonl";
constexpr const char* kTimingFile = "trials_timing.jsonl";
constexpr const char* kBestConfigFile = "best_config.ini";
constexpr const char* kMetricsFile = "metrics.json";
constexpr const char* kReportFile = "report.txt";
constexpr const char* kPredictionsFile = "predictions.json";

struct RunConfig {
  std::string train, dev, test, embeddings, negation_lexicon, swear_lexicon, out;
  std::string checkpoint, predictions, input, split;
  std::vector<std::string> data_dirs;
  std::string train_labels, dev_labels, test_labels;
  TrainConfig model;
  std::optional<std::uint64_t> seed;
  bool with_dev = false;
  std::size_t trials = 100;
  std::size_t workers = 1;
  std::string strategy = "random";
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// key = value lines; '#' starts a comment line. Keys are long option names.
std::vector<std::string> config_file_args(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
  std::vector<std::string> args;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "with-dev") {
      if (value == "true" || value == "1") args.push_back("--with-dev");
      continue;
    }
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

// Config-file values go in front of the command-line ones, which therefore win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (!config) return args;
  // The subcommand name must stay first.
  std::vector<std::string> expanded{args.front()};
  for (auto& a : config_file_args(*config)) expanded.push_back(std::move(a));
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int precision = 1; precision <= 17; ++precision) {
    char shortest[64];
    std::snprintf(shortest, sizeof shortest, "%.*g", precision, v);
    if (std::strtod(shortest, nullptr) == v) return shortest;
  }
  return buf;
}

void model_lines(std::ostream& os, const TrainConfig& m) {
  os << "lstm-layers = " << m.num_lstm_layers << "\n"
     << "lstm-units = " << m.lstm_units << "\n"
     << "relu-layers = " << m.num_relu_layers << "\n"
     << "relu-units = " << m.relu_units << "\n"
     << "batch-size = " << m.batch_size << "\n"
     << "l2 = " << format_double(m.l2) << "\n"
     << "epochs = " << m.epochs << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
}

void write_resolved_config(const fs::path& dir, const std::string& command, const RunConfig& c) {
  std::ostringstream os;
  os << "# stance " << command << " (resolved)\n";
  auto path_line = [&](const char* key, const std::string& value) {
    if (!value.empty()) os << key << " = " << value << "\n";
  };
  path_line("train", c.train);
  path_line("dev", c.dev);
  path_line("test", c.test);
  path_line("split", c.split);
  path_line("input", c.input);
  path_line("checkpoint", c.checkpoint);
  path_line("predictions", c.predictions);
  path_line("embeddings", c.embeddings);
  path_line("negation-lexicon", c.negation_lexicon);
  path_line("swear-lexicon", c.swear_lexicon);
  path_line("out", c.out);
  if (c.seed) os << "seed = " << *c.seed << "\n";
  if (command == "train" || command == "search") {
    model_lines(os, c.model);
    os << "with-dev = " << (c.with_dev ? "true" : "false") << "\n";
  }
  if (command == "search") {
    os << "trials = " << c.trials << "\n"
       << "strategy = " << c.strategy << "\n"
       << "workers = " << c.workers << "\n";
  }
  write_text(dir / kConfigFile, os.str());
}

fs::path prepare_out(const RunConfig& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  fs::create_directories(c.out);
  return fs::path(c.out);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

std::uint64_t require_seed(const RunConfig& c) {
  if (!c.seed) throw UsageError("--seed is required");
  return *c.seed;
}

std::string default_lexicon(const char* name) {
  const fs::path p = fs::path(STANCE_DATA_DIR) / "lexicons" / name;
  return fs::exists(p) ? p.string() : std::string();
}

LexiconSet load_lexicons(RunConfig& c) {
  if (c.negation_lexicon.empty()) c.negation_lexicon = default_lexicon("negation.txt");
  if (c.swear_lexicon.empty()) c.swear_lexicon = default_lexicon("swear.txt");
  LexiconSet lex = LexiconSet::default_negation_only();
  if (!c.negation_lexicon.empty()) lex.negation_terms = LexiconSet::load_terms(c.negation_lexicon);
  if (!c.swear_lexicon.empty()) lex.swear_terms = LexiconSet::load_terms(c.swear_lexicon);
  return lex;
}

EmbeddingTable load_embeddings(const RunConfig& c) {
  require(c.embeddings, "--embeddings");
  return EmbeddingTable::load(c.embeddings);
}

std::vector<ConversationThread> load_required(const std::string& path, const char* flag) {
  require(path, flag);
  return load_threads(path);
}

// --- subcommands ------------------------------------------------------------------

int cmd_import(RunConfig& c, std::ostream& out) {
  if (c.data_dirs.empty()) throw UsageError("--data-dir is required");
  require(c.train_labels, "--train-labels");
  require(c.dev_labels, "--dev-labels");
  ImportOptions opts;
  for (const auto& d : c.data_dirs) opts.data_roots.emplace_back(d);
  opts.train_labels = c.train_labels;
  opts.dev_labels = c.dev_labels;
  opts.test_labels = c.test_labels;
  const ImportResult result = import_rumoureval(opts);
  const fs::path dir = prepare_out(c);
  save_threads(dir / "train.json", result.split.train);
  save_threads(dir / "dev.json", result.split.dev);
  save_threads(dir / "test.json", result.split.test);
  out << "imported " << result.split.train.size() << " train, " << result.split.dev.size()
      << " dev, " << result.split.test.size() << " test threads";
  if (result.skipped_threads) out << "; skipped " << result.skipped_threads << " unannotated";
  if (result.reattached_replies) {
    out << "; attached " << result.reattached_replies << " replies with missing parents to the source";
  }
  out << "\n";
  return kExitOk;
}

int cmd_stats(RunConfig& c, std::ostream& out) {
  if (c.train.empty() && c.dev.empty() && c.test.empty()) {
    throw UsageError("stats needs at least one of --train, --dev, --test");
  }
  DatasetSplit split;
  if (!c.train.empty()) split.train = load_threads(c.train);
  if (!c.dev.empty()) split.dev = load_threads(c.dev);
  if (!c.test.empty()) split.test = load_threads(c.test);
  validate_split(split);
  const DatasetStats s = dataset_stats(split);

  const std::vector<std::pair<const char*, const SplitStats*>> rows = {
      {"Development", &s.dev}, {"Testing", &s.test}, {"Training", &s.train}, {"Total", &s.total}};
  char buf[160];
  out << "             # threads  # branches  # tweets\n";
  for (const auto& [name, st] : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %-10zu %-11zu %zu\n", name, st->threads, st->branches,
                  st->posts);
    out << buf;
  }
  out << "\n             S      D      Q      C      unlabeled\n";
  for (const auto& [name, st] : rows) {
    const auto& k = st->label_counts;
    std::snprintf(buf, sizeof buf, "%-12s %-6zu %-6zu %-6zu %-6zu %zu\n", name,
                  k[index_of(StanceLabel::Support)], k[index_of(StanceLabel::Deny)],
                  k[index_of(StanceLabel::Query)], k[index_of(StanceLabel::Comment)], st->unlabeled);
    out << buf;
  }
  return kExitOk;
}

int cmd_train(RunConfig& c, std::ostream& out) {
  c.model.seed = require_seed(c);
  c.model.validate();
  auto threads = load_required(c.train, "--train");
  if (c.with_dev) {
    auto dev = load_required(c.dev, "--dev (needed by --with-dev)");
    validate_split(DatasetSplit{threads, dev, {}});
    for (auto& t : dev) threads.push_back(std::move(t));
  }
  const EmbeddingTable table = load_embeddings(c);
  const LexiconSet lexicons = load_lexicons(c);
  const fs::path dir = prepare_out(c);
  write_resolved_config(dir, "train", c);

  const FeaturizedDataset data = featurize_dataset(threads, table, lexicons);
  const TrainedModel model = train_model(data, c.model);
  save_checkpoint(dir / kCheckpointFile, model);
  write_text(dir / kHistoryFile, json{{"epoch_loss", model.training_history}}.dump(1) + "\n");
  out << "trained on " << threads.size() << " threads / " << data.branches.size()
      << " branches for " << c.model.epochs << " epochs; final loss "
      << format_double(model.training_history.back()) << "\n";
  return kExitOk;
}

int cmd_search(RunConfig& c, std::ostream& out) {
  const std::uint64_t seed = require_seed(c);
  const auto train = load_required(c.train, "--train");
  const auto dev = load_required(c.dev, "--dev");
  validate_split(DatasetSplit{train, dev, {}});
  const EmbeddingTable table = load_embeddings(c);
  const LexiconSet lexicons = load_lexicons(c);
  SearchOptions opts;
  opts.n_trials = c.trials;
  opts.strategy = parse_strategy(c.strategy);
  opts.master_seed = seed;
  opts.workers = c.workers;
  const fs::path dir = prepare_out(c);
  write_resolved_config(dir, "search", c);

  const FeaturizedDataset train_data = featurize_dataset(train, table, lexicons);
  const FeaturizedDataset dev_data = featurize_dataset(dev, table, lexicons);
  const SearchResult result =
      run_search(SearchSpace{}, dev_accuracy_objective(train_data, dev_data, dev), opts);

  std::string trials, timing;
  std::size_t failed = 0;
  for (const auto& t : result.trials) {
    trials += trial_record(t).dump() + "\n";
    timing += trial_timing_record(t).dump() + "\n";
    failed += t.error.empty() ? 0 : 1;
  }
  write_text(dir / kTrialsFile, trials);
  write_text(dir / kTimingFile, timing);
  std::ostringstream best;
  best << "# best of " << result.trials.size() << " trials: trial " << result.best().index
       << ", dev accuracy " << format_double(result.best().dev_accuracy) << "\n";
  model_lines(best, result.best().config);
  best << "seed = " << result.best().config.seed << "\n";
  write_text(dir / kBestConfigFile, best.str());

  out << "best trial " << result.best().index << ": dev accuracy "
      << format_double(result.best().dev_accuracy) << " (" << failed << " failed trials)\n";
  return kExitOk;
}

int cmd_eval(RunConfig& c, std::ostream& out) {
  const auto threads = load_required(c.split, "--split");
  std::vector<PostPrediction> predictions;
  if (!c.predictions.empty()) {
    std::ifstream in(c.predictions, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + c.predictions + "'");
    try {
      predictions = predictions_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedDocument, c.predictions + ": " + e.what());
    }
  } else {
    require(c.checkpoint, "--checkpoint or --predictions");
    const TrainedModel model = load_checkpoint(c.checkpoint);
    const EmbeddingTable table = load_embeddings(c);
    const LexiconSet lexicons = load_lexicons(c);
    predictions = predict_dataset(model, threads, table, lexicons);
  }
  const EvaluationReport report = evaluate(threads, predictions);
  const std::string text = format_report(report);
  out << text;
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c);
    write_resolved_config(dir, "eval", c);
    write_text(dir / kReportFile, text);
    write_text(dir / kMetricsFile, report_to_json(report).dump(1) + "\n");
  }
  return kExitOk;
}

int cmd_predict(RunConfig& c, std::ostream& out) {
  const auto threads = load_required(c.input, "--input");
  require(c.checkpoint, "--checkpoint");
  const TrainedModel model = load_checkpoint(c.checkpoint);
  const EmbeddingTable table = load_embeddings(c);
  const LexiconSet lexicons = load_lexicons(c);
  const fs::path dir = prepare_out(c);
  write_resolved_config(dir, "predict", c);
  const auto predictions = predict_dataset(model, threads, table, lexicons);
  write_text(dir / kPredictionsFile, predictions_to_json(predictions).dump(1) + "\n");
  out << "wrote " << predictions.size() << " predictions to "
      << (dir / kPredictionsFile).string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Branch-LSTM stance classification for conversation threads", "stance"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  RunConfig c;
  std::string config_path;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value file; command-line flags override it");
    sub->add_option("--out", c.out, "Output directory");
  };
  auto add_features = [&](CLI::App* sub) {
    sub->add_option("--embeddings", c.embeddings, "Word vector file")->check(CLI::ExistingFile);
    sub->add_option("--negation-lexicon", c.negation_lexicon, "Negation terms, one per line")
        ->check(CLI::ExistingFile);
    sub->add_option("--swear-lexicon", c.swear_lexicon, "Swear terms, one per line")
        ->check(CLI::ExistingFile);
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_value, "Master random seed (required)");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--lstm-layers", c.model.num_lstm_layers, "1 or 2");
    sub->add_option("--lstm-units", c.model.lstm_units, "100, 200 or 300");
    sub->add_option("--relu-layers", c.model.num_relu_layers, "1 to 4");
    sub->add_option("--relu-units", c.model.relu_units, "100, 200, 300, 400 or 500");
    sub->add_option("--batch-size", c.model.batch_size, "32 or 64");
    sub->add_option("--l2", c.model.l2, "0, 1e-4, 3e-4 or 1e-3");
    sub->add_option("--epochs", c.model.epochs, "30, 50, 70 or 100");
  };
  auto existing = [](CLI::Option* o) { o->check(CLI::ExistingFile); };

  CLI::App* import = app.add_subcommand("import", "Convert the RumourEval folder layout to split files");
  add_common(import);
  import->add_option("--data-dir", c.data_dirs, "Folder of event/thread directories (repeatable)")
      ->check(CLI::ExistingDirectory)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  existing(import->add_option("--train-labels", c.train_labels, "Training annotations (id -> label)"));
  existing(import->add_option("--dev-labels", c.dev_labels, "Development annotations"));
  existing(import->add_option("--test-labels", c.test_labels, "Test annotations"));

  CLI::App* stats = app.add_subcommand("stats", "Print thread, branch and label counts");
  add_common(stats);
  existing(stats->add_option("--train", c.train, "Training split file"));
  existing(stats->add_option("--dev", c.dev, "Development split file"));
  existing(stats->add_option("--test", c.test, "Test split file"));

  CLI::App* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train);
  add_features(train);
  add_seed(train);
  add_model(train);
  existing(train->add_option("--train", c.train, "Training split file"));
  existing(train->add_option("--dev", c.dev, "Development split file"));
  train->add_flag("--with-dev", c.with_dev, "Train on train + dev");

  CLI::App* search = app.add_subcommand("search", "Hyperparameter search on dev accuracy");
  add_common(search);
  add_features(search);
  add_seed(search);
  add_model(search);
  existing(search->add_option("--train", c.train, "Training split file"));
  existing(search->add_option("--dev", c.dev, "Development split file"));
  search->add_flag("--with-dev", c.with_dev, "Ignored by search");
  search->add_option("--trials", c.trials, "Number of trials")->check(CLI::PositiveNumber);
  search->add_option("--strategy", c.strategy, "random or tpe")
      ->check(CLI::IsMember({"random", "tpe"}));
  search->add_option("--workers", c.workers, "Parallel trial workers")->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("eval", "Score predictions against a labeled split");
  add_common(eval);
  add_features(eval);
  existing(eval->add_option("--split", c.split, "Labeled split file"));
  existing(eval->add_option("--checkpoint", c.checkpoint, "Model checkpoint"));
  existing(eval->add_option("--predictions", c.predictions, "Prediction file instead of a model"));

  CLI::App* predict = app.add_subcommand("predict", "Label every post of unlabeled threads");
  add_common(predict);
  add_features(predict);
  existing(predict->add_option("--input", c.input, "Thread split file"));
  existing(predict->add_option("--checkpoint", c.checkpoint, "Model checkpoint"));

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitValidation;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (const CLI::Option* o = chosen->get_option_no_throw("--seed"); o && o->count() > 0) {
    c.seed = seed_value;
  }
  const std::string name = chosen->get_name();

  try {
    if (name == "import") return cmd_import(c, out);
    if (name == "stats") return cmd_stats(c, out);
    if (name == "train") return cmd_train(c, out);
    if (name == "search") return cmd_search(c, out);
    if (name == "eval") return cmd_eval(c, out);
    if (name == "predict") return cmd_predict(c, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << chosen->help();
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::NonFiniteLoss ? kExitRuntime : kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace stance
