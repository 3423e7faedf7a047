// Copyright 2026 The gbm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gbm/commands.h"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "gbm/io.h"
#include "gbm/ir_module.h"
#include "gbm/metrics.h"
#include "gbm/pair_dataset.h"
#include "gbm/program_graph.h"
#include "gbm/status.h"
#include "gbm/synthetic_corpus.h"

namespace gbm {

namespace fs = std::filesystem;

namespace {

fs::path Absolute(const fs::path& p) { return fs::absolute(p).lexically_normal(); }

// `target` as stored in a file that lives in `dir`.
std::string StoredPath(const fs::path& target, const fs::path& dir) {
  return Absolute(target).lexically_relative(Absolute(dir)).generic_string();
}

fs::path Resolve(const std::string& stored, const fs::path& dir) {
  const fs::path p(stored);
  return p.is_absolute() ? p.lexically_normal() : (Absolute(dir) / p).lexically_normal();
}

std::string Canonical(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void WriteResolvedConfig(const fs::path& out_dir, const std::string& command,
                         const GlobalOptions& global, nlohmann::json options) {
  nlohmann::json j = {{"command", command}, {"global", global.ToJson()},
                      {"options", std::move(options)}};
  WriteFileBytes(out_dir / "resolved_config.json", Canonical(j));
}

// Manifest with graph paths made absolute.
CorpusManifest ReadManifest(const fs::path& path) {
  CorpusManifest manifest = ParseManifest(ReadFileBytes(path));
  for (ManifestRecord& r : manifest) {
    r.graph_path = Resolve(r.graph_path, path.parent_path()).string();
  }
  return manifest;
}

std::vector<PairSample> ReadPairs(const fs::path& path) {
  std::vector<PairSample> pairs = ParsePairs(ReadFileBytes(path));
  for (PairSample& p : pairs) {
    p.path_a = Resolve(p.path_a, path.parent_path()).string();
    p.path_b = Resolve(p.path_b, path.parent_path()).string();
  }
  return pairs;
}

void WritePairs(const fs::path& path, std::vector<PairSample> pairs) {
  for (PairSample& p : pairs) {
    p.path_a = StoredPath(p.path_a, path.parent_path());
    p.path_b = StoredPath(p.path_b, path.parent_path());
  }
  WriteFileBytes(path, SerializePairs(pairs));
}

SplitSpec DefaultSplit(std::uint64_t seed) {
  SplitSpec spec;
  spec.seed = seed;
  return spec;
}

struct BuildInput {
  fs::path file;
  std::string relative;  // generic, relative to the input root
  std::string task;
  std::string language;
  Origin origin = Origin::kSource;
  std::string label_error;
};

std::vector<BuildInput> LayoutInputs(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::kNoInputs, root.string() + " is not a directory");
  }
  std::vector<BuildInput> inputs;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ll") continue;
    BuildInput in;
    in.file = entry.path();
    in.relative = entry.path().lexically_relative(root).generic_string();
    std::vector<std::string> parts;
    for (const auto& part : entry.path().lexically_relative(root)) parts.push_back(part.string());
    if (parts.size() < 4) {
      in.label_error = "expected <task>/<origin>/<lang>/<file>.ll";
    } else {
      const std::size_t n = parts.size();
      in.task = parts[n - 4];
      in.language = parts[n - 2];
      try {
        in.origin = ParseOrigin(parts[n - 3]);
      } catch (const Error& e) {
        in.label_error = e.what();
      }
    }
    inputs.push_back(std::move(in));
  }
  std::sort(inputs.begin(), inputs.end(),
            [](const BuildInput& a, const BuildInput& b) { return a.relative < b.relative; });
  return inputs;
}

std::vector<BuildInput> MappingInputs(const fs::path& mapping) {
  std::vector<BuildInput> inputs;
  std::istringstream lines(ReadFileBytes(mapping));
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      BuildInput in;
      const std::string file = j.at("file").get<std::string>();
      in.file = Resolve(file, mapping.parent_path());
      in.relative = fs::path(file).lexically_normal().generic_string();
      in.task = j.at("task").get<std::string>();
      in.language = j.at("lang").get<std::string>();
      in.origin = ParseOrigin(j.at("origin").get<std::string>());
      inputs.push_back(std::move(in));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kCorruptPayload,
                  mapping.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  return inputs;
}

std::string GraphFileName(const std::string& relative) {
  fs::path p(relative);
  p.replace_extension(".pgraph");
  return (fs::path("graphs") / p).generic_string();
}

ProgramGraph LoadGraphOrIr(const fs::path& path, Origin origin) {
  const std::string bytes = ReadFileBytes(path);
  if (bytes.rfind("PGRAPH", 0) == 0) return DeserializeGraph(bytes);
  return BuildGraph(ParseModule(bytes, path.filename().string()), origin, "");
}

int ExitCodeFor(const Error& e) {
  return IsNumericError(e.code()) ? kExitNumericError : kExitDataError;
}

// Reads a JSON config file into CLI11 items. Top-level scalars set global
// flags; an object named after a subcommand sets that subcommand's flags.
// Keys may use underscores in place of dashes.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const std::exception& e) {
      throw CLI::ParseError(std::string("config: ") + e.what(), CLI::ExitCodes::ConversionError);
    }
    if (!j.is_object()) {
      throw CLI::ParseError("config: expected a JSON object", CLI::ExitCodes::ConversionError);
    }
    std::vector<CLI::ConfigItem> items;
    Collect(j, {}, items);
    return items;
  }

 private:
  static std::string Scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void Collect(const nlohmann::json& object, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : object.items()) {
      std::string name = key;
      std::replace(name.begin(), name.end(), '_', '-');
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(name);
        Collect(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = name;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(Scalar(v));
      } else {
        item.inputs.push_back(Scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

}  // namespace

nlohmann::json GlobalOptions::ToJson() const {
  return {{"seed", seed},
          {"workers", workers},
          {"feature_mode", std::string(FeatureModeName(feature_mode))},
          {"threshold", threshold}};
}

nlohmann::json BuildGraphsSummary::ToJson() const {
  return {{"inputs", inputs}, {"built", built}, {"failed", failures.size()},
          {"failures", failures}};
}

BuildGraphsSummary RunBuildGraphs(const BuildGraphsOptions& options,
                                  const GlobalOptions& global, std::ostream& log) {
  std::vector<BuildInput> inputs =
      options.mapping.empty() ? LayoutInputs(options.input_dir) : MappingInputs(options.mapping);
  if (inputs.empty()) throw Error(ErrorCode::kNoInputs, "no .ll files found");

  // Each worker fills only its own slots, so the output order is fixed.
  std::vector<std::optional<std::string>> serialized(inputs.size());
  std::vector<std::string> errors(inputs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      const BuildInput& in = inputs[i];
      if (!in.label_error.empty()) {
        errors[i] = in.label_error;
        continue;
      }
      try {
        IrModule module = ParseModule(ReadFileBytes(in.file), in.relative);
        serialized[i] = SerializeGraph(BuildGraph(module, in.origin, in.language));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(global.workers, inputs.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();

  BuildGraphsSummary summary;
  summary.inputs = inputs.size();
  CorpusManifest manifest;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!serialized[i]) {
      summary.failures.push_back(inputs[i].relative + ": " + errors[i]);
      log << "skipped " << summary.failures.back() << "\n";
      continue;
    }
    const std::string graph_file = GraphFileName(inputs[i].relative);
    WriteFileBytes(options.out_dir / graph_file, *serialized[i]);
    manifest.push_back({graph_file, inputs[i].task, inputs[i].language, inputs[i].origin});
    ++summary.built;
  }
  WriteResolvedConfig(options.out_dir, "build-graphs", global,
                      {{"input_dir", options.input_dir.empty()
                                         ? ""
                                         : StoredPath(options.input_dir, options.out_dir)},
                       {"mapping", options.mapping.empty()
                                       ? ""
                                       : StoredPath(options.mapping, options.out_dir)}});
  WriteFileBytes(options.out_dir / "summary.json", Canonical(summary.ToJson()));
  if (summary.built == 0) {
    throw Error(ErrorCode::kMalformedModule,
                "all " + std::to_string(inputs.size()) + " inputs failed");
  }
  WriteFileBytes(options.out_dir / "manifest.jsonl", SerializeManifest(manifest));
  log << "built " << summary.built << " graphs, " << summary.failures.size() << " failed\n";
  return summary;
}

TokenVocabulary RunTrainVocab(const TrainVocabOptions& options, const GlobalOptions& global,
                              std::ostream& log) {
  const CorpusManifest manifest = ReadManifest(options.manifest);
  const ManifestSplit split = SplitByTask(manifest, DefaultSplit(global.seed));
  std::vector<ProgramGraph> graphs;
  graphs.reserve(split.train.size());
  for (const ManifestRecord& r : split.train) {
    graphs.push_back(DeserializeGraph(ReadFileBytes(r.graph_path)));
  }
  std::vector<const ProgramGraph*> pointers;
  for (const ProgramGraph& g : graphs) pointers.push_back(&g);
  TokenVocabulary vocab = TrainVocabulary(pointers, options.vocab_size, global.feature_mode);
  WriteFileBytes(options.out_dir / "vocab.json", SerializeVocabulary(vocab));
  WriteResolvedConfig(options.out_dir, "train-vocab", global,
                      {{"manifest", StoredPath(options.manifest, options.out_dir)},
                       {"vocab_size", options.vocab_size}});
  log << "vocabulary: " << vocab.entries.size() << " entries from " << graphs.size()
      << " training graphs, truncation length " << vocab.truncation_length << "\n";
  return vocab;
}

nlohmann::json RunMakePairs(const MakePairsOptions& options, const GlobalOptions& global,
                            std::ostream& log) {
  const CorpusManifest manifest = ReadManifest(options.manifest);
  const ManifestSplit split = SplitByTask(manifest, DefaultSplit(global.seed));
  auto language = [](const std::string& lang) {
    return lang.empty() ? std::nullopt : std::optional<std::string>(lang);
  };
  const RecordFilter side_a = MakeSideFilter(Origin::kSource, language(options.source_language));
  const RecordFilter side_b = MakeSideFilter(Origin::kBinary, language(options.binary_language));

  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json tasks = nlohmann::json::object();
  const std::pair<const char*, const CorpusManifest*> parts[] = {
      {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& [name, records] = parts[k];
    const auto pairs = GeneratePairs(*records, side_a, side_b, DeriveSeed(global.seed, 100 + k));
    WritePairs(options.out_dir / (std::string(name) + "_pairs.jsonl"), pairs);
    counts[name] = pairs.size();
    std::set<std::string> ids;
    for (const ManifestRecord& r : *records) ids.insert(r.task_id);
    tasks[name] = ids;
    log << name << ": " << pairs.size() << " pairs over " << ids.size() << " tasks\n";
  }
  WriteFileBytes(options.out_dir / "split.json", Canonical({{"pairs", counts}, {"tasks", tasks}}));
  WriteResolvedConfig(options.out_dir, "make-pairs", global,
                      {{"manifest", StoredPath(options.manifest, options.out_dir)},
                       {"source_language", options.source_language},
                       {"binary_language", options.binary_language}});
  return counts;
}

TrainReport RunTrain(TrainOptions options, const GlobalOptions& global, std::ostream& log) {
  const TokenVocabulary vocab = DeserializeVocabulary(ReadFileBytes(options.vocabulary));
  if (global.feature_mode_given && global.feature_mode != vocab.feature_mode) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature_mode: vocabulary was trained with " +
                    std::string(FeatureModeName(vocab.feature_mode)));
  }
  options.model.feature_mode = vocab.feature_mode;
  options.train.seed = global.seed;
  options.train.threshold = global.threshold;
  options.model.Validate();
  options.train.Validate();

  const auto train_pairs = ReadPairs(options.train_pairs);
  const auto val_pairs = ReadPairs(options.val_pairs);
  GraphCache cache(vocab);
  TrainResult result = Train(train_pairs, val_pairs, cache, options.model, options.train,
                             [&log](const EpochRecord& e) {
                               char line[160];
                               std::snprintf(line, sizeof(line),
                                             "epoch %zu  train loss %.5f  f1 %.4f  |  val loss "
                                             "%.5f  f1 %.4f\n",
                                             e.epoch, e.train_loss, e.train.f1, e.val_loss,
                                             e.val.f1);
                               log << line << std::flush;
                             });
  SaveModel(options.out_dir / "model.ckpt", *result.model, vocab,
            {{"train", options.train.ToJson()}});
  result.report.checkpoint_path = "model.ckpt";
  WriteFileBytes(options.out_dir / "report.json", Canonical(result.report.ToJson()));
  WriteFileBytes(options.out_dir / "report.txt", result.report.ToText());
  nlohmann::json model_json = options.model.ToJson();
  WriteResolvedConfig(options.out_dir, "train", global,
                      {{"train_pairs", StoredPath(options.train_pairs, options.out_dir)},
                       {"val_pairs", StoredPath(options.val_pairs, options.out_dir)},
                       {"vocabulary", StoredPath(options.vocabulary, options.out_dir)},
                       {"model", model_json},
                       {"train", options.train.ToJson()}});
  log << "best epoch " << result.report.best_epoch << " with val f1 "
      << result.report.best_val_f1 << "\n";
  return result.report;
}

nlohmann::json RunEval(const EvalOptions& options, const GlobalOptions& global,
                       std::ostream& log) {
  LoadedModel loaded = LoadModel(options.checkpoint);
  const auto pairs = ReadPairs(options.pairs);
  GraphCache cache(loaded.vocabulary);
  const std::vector<double> scores = ScorePairsInference(*loaded.model, pairs, cache);
  const std::vector<int> labels = Labels(pairs);
  const MetricReport report = ComputeMetrics(scores, labels, global.threshold);
  const auto sweep = ThresholdSweep(scores, labels, DefaultSweepThresholds());

  std::vector<std::size_t> nodes_a, nodes_b;
  for (const PairSample& p : pairs) {
    nodes_a.push_back(cache.NodeCount(p.path_a));
    nodes_b.push_back(cache.NodeCount(p.path_b));
  }
  const SizeGapTable gaps = ErrorAnalysis(scores, labels, nodes_a, nodes_b, global.threshold);

  nlohmann::json sweep_json = nlohmann::json::array();
  for (const MetricReport& r : sweep) sweep_json.push_back(MetricReportToJson(r));
  nlohmann::json metrics = {{"pairs", pairs.size()},
                            {"metrics", MetricReportToJson(report)},
                            {"sweep", sweep_json}};
  std::string scored;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    scored += nlohmann::json{{"a", StoredPath(pairs[i].path_a, options.out_dir)},
                             {"b", StoredPath(pairs[i].path_b, options.out_dir)},
                             {"label", labels[i]},
                             {"score", scores[i]},
                             {"match", scores[i] >= global.threshold}}
                  .dump() +
              "\n";
  }
  WriteFileBytes(options.out_dir / "metrics.json", Canonical(metrics));
  WriteFileBytes(options.out_dir / "sweep.csv", SweepToCsv(sweep));
  WriteFileBytes(options.out_dir / "size_gap.csv", SizeGapToCsv(gaps));
  WriteFileBytes(options.out_dir / "scores.jsonl", scored);
  WriteResolvedConfig(options.out_dir, "eval", global,
                      {{"checkpoint", StoredPath(options.checkpoint, options.out_dir)},
                       {"pairs", StoredPath(options.pairs, options.out_dir)}});
  log << "precision " << report.precision << "  recall " << report.recall << "  f1 "
      << report.f1 << "\n";
  return metrics;
}

nlohmann::json RunPredict(const PredictOptions& options, const GlobalOptions& global) {
  LoadedModel loaded = LoadModel(options.checkpoint);
  Tokenizer tokenizer(loaded.vocabulary);
  ProgramGraph a = LoadGraphOrIr(options.source, Origin::kSource);
  ProgramGraph b = LoadGraphOrIr(options.binary, Origin::kBinary);
  tokenizer.EncodeGraph(a);
  tokenizer.EncodeGraph(b);
  const double score = ScorePair(*loaded.model, MakeGraphInput(a), MakeGraphInput(b));
  return {{"score", score}, {"match", score >= global.threshold}};
}

std::size_t RunMakeSyntheticCorpus(const SyntheticCorpusOptions& options,
                                   const GlobalOptions& global, std::ostream& log) {
  const std::size_t n = WriteSyntheticCorpus(options.out_dir, global.seed,
                                             options.variants_per_side);
  WriteResolvedConfig(options.out_dir, "make-synthetic-corpus", global,
                      {{"variants_per_side", options.variants_per_side}});
  log << "wrote " << n << " files\n";
  return n;
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Binary-to-source matching over LLVM IR program graphs", "gbm"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with flag values (flags on the command line win)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  GlobalOptions global;
  std::string feature_mode = "full_text";
  app.add_option("--seed", global.seed, "Seed for splits, pairs and training");
  app.add_option("--workers", global.workers, "Worker threads for graph building")
      ->check(CLI::PositiveNumber);
  auto* mode_option = app.add_option("--feature-mode", feature_mode, "Node text fed to the tokenizer")
                          ->check(CLI::IsMember({"full_text", "text"}));
  app.add_option("--threshold", global.threshold, "Decision threshold on the match score");

  BuildGraphsOptions build;
  auto* build_cmd = app.add_subcommand("build-graphs", "Extract program graphs from .ll files");
  build_cmd->add_option("--input", build.input_dir, "Directory laid out as <task>/<origin>/<lang>/*.ll");
  build_cmd->add_option("--mapping", build.mapping, "JSON Lines {file,task,lang,origin} records");
  build_cmd->add_option("--out-dir", build.out_dir, "Output directory")->required();

  TrainVocabOptions vocab;
  auto* vocab_cmd = app.add_subcommand("train-vocab", "Train the instruction tokenizer");
  vocab_cmd->add_option("--manifest", vocab.manifest, "Graph manifest")->required();
  vocab_cmd->add_option("--out-dir", vocab.out_dir, "Output directory")->required();
  vocab_cmd->add_option("--vocab-size", vocab.vocab_size, "Maximum vocabulary size");

  MakePairsOptions pairs;
  auto* pairs_cmd = app.add_subcommand("make-pairs", "Split by task and sample labelled pairs");
  pairs_cmd->add_option("--manifest", pairs.manifest, "Graph manifest")->required();
  pairs_cmd->add_option("--out-dir", pairs.out_dir, "Output directory")->required();
  pairs_cmd->add_option("--source-lang", pairs.source_language, "Language of the source side");
  pairs_cmd->add_option("--binary-lang", pairs.binary_language, "Language of the binary side");

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train the matching model");
  train_cmd->add_option("--train-pairs", train.train_pairs, "Training pairs")->required();
  train_cmd->add_option("--val-pairs", train.val_pairs, "Validation pairs")->required();
  train_cmd->add_option("--vocab", train.vocabulary, "Vocabulary file")->required();
  train_cmd->add_option("--out-dir", train.out_dir, "Output directory")->required();
  train_cmd->add_option("--learning-rate", train.train.learning_rate, "Adam learning rate");
  train_cmd->add_option("--batch-size", train.train.batch_size, "Pairs per batch");
  train_cmd->add_option("--max-epochs", train.train.max_epochs, "Epoch budget");
  train_cmd->add_option("--patience", train.train.patience,
                        "Epochs without validation improvement before stopping (0: never)");
  train_cmd->add_option("--dropout-p", train.train.dropout_p, "Dropout probability");
  train_cmd->add_option("--token-embed-dim", train.model.token_embed_dim, "Token embedding width");
  train_cmd->add_option("--hidden-dim", train.model.hidden_dim, "Node embedding width");
  train_cmd->add_option("--num-layers", train.model.num_layers, "Graph attention layers");
  train_cmd->add_option("--max-position", train.model.max_position, "Edge positions kept");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score pairs and report metrics");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--pairs", eval.pairs, "Pairs to evaluate")->required();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Output directory")->required();

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Score one source/binary pair");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Model checkpoint")->required();
  predict_cmd->add_option("source", predict.source, ".ll or graph file of the source side")
      ->required();
  predict_cmd->add_option("binary", predict.binary, ".ll or graph file of the binary side")
      ->required();

  SyntheticCorpusOptions synthetic;
  auto* synthetic_cmd =
      app.add_subcommand("make-synthetic-corpus", "Write the bundled 8-task IR corpus");
  synthetic_cmd->add_option("--out-dir", synthetic.out_dir, "Output directory")->required();
  synthetic_cmd->add_option("--variants", synthetic.variants_per_side, "Variants per side")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (build_cmd->parsed() && build.input_dir.empty() == build.mapping.empty()) {
    err << "error: build-graphs needs exactly one of --input and --mapping\n\n"
        << build_cmd->help();
    return kExitUsage;
  }
  global.feature_mode = ParseFeatureMode(feature_mode);
  global.feature_mode_given = mode_option->count() > 0;

  try {
    if (build_cmd->parsed()) {
      const BuildGraphsSummary summary = RunBuildGraphs(build, global, err);
      out << summary.ToJson().dump() << "\n";
    } else if (vocab_cmd->parsed()) {
      RunTrainVocab(vocab, global, err);
    } else if (pairs_cmd->parsed()) {
      out << RunMakePairs(pairs, global, err).dump() << "\n";
    } else if (train_cmd->parsed()) {
      const TrainReport report = RunTrain(train, global, err);
      out << report.ToText();
    } else if (eval_cmd->parsed()) {
      out << RunEval(eval, global, err).at("metrics").dump() << "\n";
    } else if (predict_cmd->parsed()) {
      out << RunPredict(predict, global).dump() << "\n";
    } else if (synthetic_cmd->parsed()) {
      RunMakeSyntheticCorpus(synthetic, global, err);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace gbm
