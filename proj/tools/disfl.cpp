// Copyright 2026 The disfl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// disfl: corpus generation, preprocessing, tree transforms, training,
// parsing, evaluation and the comparison experiments.
//
// Exit status: 0 success, 1 data error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "disfl/checkpoint.hpp"
#include "disfl/corpus_gen.hpp"
#include "disfl/experiments.hpp"
#include "disfl/metrics.hpp"
#include "disfl/run_config.hpp"
#include "disfl/trainer.hpp"
#include "disfl/transforms.hpp"
#include "disfl/tree.hpp"

namespace fs = std::filesystem;
using namespace disfl;

namespace {

constexpr int kDataError = 1;
constexpr int kUsageError = 2;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "-" is stdin / stdout.
class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") return;
    file_.open(path);
    if (!file_) throw DataError("cannot open " + path);
  }
  std::istream& get() { return file_.is_open() ? file_ : std::cin; }

 private:
  std::ifstream file_;
};

class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw DataError("cannot write " + path);
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }
  void close() {
    get().flush();
    if (!get()) throw DataError("error writing " + path_);
  }

 private:
  std::string path_;
  std::ofstream file_;
};

std::vector<Tree> read_trees_from(const std::string& path) {
  Input in(path);
  try {
    return read_trees(in.get());
  } catch (const TreeFileError& e) {
    throw DataError(path + ": " + e.what());
  }
}

RunConfig run_config_from(const std::string& path) {
  return path.empty() ? RunConfig::desk() : load_run_config(path);
}

/// Strips and transforms a corpus as the run config says.
std::vector<Tree> prepare(const std::vector<Tree>& trees, const RunConfig& rc, const std::string& what) {
  std::size_t dropped = 0;
  auto out = preprocess_corpus(trees, rc.preprocess, &dropped);
  if (dropped) std::cerr << "warning: " << dropped << " empty sentences dropped from " << what << '\n';
  for (Tree& t : out) t = apply_transform(rc.transform, t);
  return out;
}

void print_eval_line(const EvalRecord& r) {
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "step %zu epoch %zu loss %.4f lr %.3g F(S) %.4f F(S_E) %.4f F(W_E) %.4f F(W_EIP) %.4f%s\n", r.step,
                r.epoch, r.loss, r.learning_rate, r.dev.span.f1, r.dev.edited_span.f1, r.dev.edited_word.f1,
                r.dev.eip_word.f1, r.improved ? " *" : "");
  std::cerr << buf;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::string out;
};

int cmd_gen_corpus(const GenArgs& a) {
  GenConfig c;
  if (!a.config.empty()) from_json(read_json_file(a.config), c);
  c.validate();
  const Json manifest = write_corpus(c, a.out);
  const Json& n = manifest.at("counts");
  std::cout << "wrote " << n.at("train") << " train, " << n.at("dev") << " dev, " << n.at("test")
            << " test trees to " << a.out << '\n';
  return 0;
}

struct PreprocessArgs {
  std::string in = "-";
  std::string out = "-";
  bool keep_punct = false;
  bool keep_partial = false;
  std::vector<std::string> punct_tags;
};

int cmd_preprocess(const PreprocessArgs& a) {
  StripOptions opt;
  opt.drop_punct = !a.keep_punct;
  opt.drop_partial = !a.keep_partial;
  if (!a.punct_tags.empty()) opt.punct_tags = LabelSet(a.punct_tags.begin(), a.punct_tags.end());
  const auto trees = read_trees_from(a.in);
  std::size_t dropped = 0;
  const auto kept = preprocess_corpus(trees, opt, &dropped);
  Output out(a.out);
  write_trees(out.get(), kept);
  out.close();
  if (dropped) std::cerr << "warning: " << dropped << " sentences empty after stripping were dropped\n";
  return 0;
}

struct TransformArgs {
  std::string mode;
  std::string in = "-";
  std::string out = "-";
};

int cmd_transform(const TransformArgs& a) {
  const TransformMode mode = *parse_transform_mode(a.mode);
  const auto trees = read_trees_from(a.in);
  Output out(a.out);
  for (const Tree& t : trees) out.get() << serialize(apply_transform(mode, t)) << '\n';
  out.close();
  return 0;
}

struct TrainArgs {
  std::string train;
  std::string dev;
  std::string config;
  std::string out;
  std::size_t threads = 0;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  RunConfig rc = run_config_from(a.config);
  if (a.threads) rc.train.threads = a.threads;
  const auto tr = prepare(read_trees_from(a.train), rc, a.train);
  const auto dv = prepare(read_trees_from(a.dev), rc, a.dev);
  fs::create_directories(a.out);
  rc.train.checkpoint_dir = a.out;
  {
    std::ofstream cfg(fs::path(a.out) / "config.json");
    cfg << Json(rc).dump(2) << '\n';
  }
  const Json metadata{{"run_config", rc}, {"train_file", a.train}, {"dev_file", a.dev}};
  TrainObserver observer;
  if (!a.quiet) observer = print_eval_line;
  const TrainResult r = train(tr, dv, rc.model, rc.train, metadata, observer);
  if (r.train_skipped) std::cerr << "warning: " << r.train_skipped << " training sentences skipped\n";
  const EvalRecord* best = nullptr;
  for (const auto& rec : r.log)
    if (rec.step == r.best_step) best = &rec;
  std::cout << "best step " << r.best_step << " of " << r.steps << " -> " << (fs::path(a.out) / "best.bin").string()
            << '\n';
  if (best) print_report(std::cout, best->dev);
  return 0;
}

struct ParseArgs {
  std::string model;
  std::string in = "-";
  std::string out = "-";
  std::string format = "tagged";
  std::string words_out;
  std::string config;
  std::size_t threads = 1;
};

void check_against_config(const ModelConfig& ck, const ModelConfig& c) {
  auto field = [](const char* name, std::size_t have, std::size_t want) {
    if (have != want)
      throw DataError(std::string("checkpoint does not match config: ") + name + " is " + std::to_string(have) +
                      ", config says " + std::to_string(want));
  };
  field("model_dim", ck.model_dim, c.model_dim);
  field("ff_dim", ck.ff_dim, c.ff_dim);
  field("num_heads", ck.num_heads, c.num_heads);
  field("head_dim", ck.key_dim(), c.key_dim());
  field("num_layers", ck.num_layers, c.num_layers);
  field("label_hidden_dim", ck.label_hidden_dim, c.label_hidden_dim);
  field("max_length", ck.max_length, c.max_length);
  if (c.vocab_size) field("vocab_size", ck.vocab_size, c.vocab_size);
  if (c.num_labels) field("num_labels", ck.num_labels, c.num_labels);
}

// Raw words carry no tag; leaves of the output use this one.
constexpr const char* kRawTag = "X";

std::vector<std::vector<Token>> read_sentences(std::istream& in, const std::string& format,
                                               const std::string& path) {
  std::vector<std::vector<Token>> out;
  if (format == "tree") {
    try {
      for (const auto& nt : read_numbered_trees(in)) out.push_back(fringe(nt.tree));
    } catch (const TreeFileError& e) {
      throw DataError(path + ": " + e.what());
    }
    return out;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::vector<Token> tokens;
    std::string item;
    while (ss >> item) {
      if (format == "raw") {
        tokens.push_back({item, kRawTag});
        continue;
      }
      const auto slash = item.rfind('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == item.size())
        throw DataError(path + ": line " + std::to_string(line_no) + ": expected word/TAG, got '" + item + "'");
      tokens.push_back({item.substr(0, slash), item.substr(slash + 1)});
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

int cmd_parse(const ParseArgs& a) {
  Checkpoint ck;
  try {
    ck = load_checkpoint(a.model);
  } catch (const std::exception& e) {
    throw DataError(a.model + ": " + e.what());
  }
  if (!a.config.empty()) check_against_config(ck.params.config, load_run_config(a.config).model);

  Input in(a.in);
  const auto sentences = read_sentences(in.get(), a.format, a.in);
  std::vector<std::optional<Tree>> parsed(sentences.size());
  parallel_for(sentences.size(), a.threads, [&](std::size_t i) {
    parsed[i] = parse_tokens(sentences[i], ck.params, ck.words, ck.labels);
  });

  Output out(a.out);
  std::optional<Output> tags;
  if (!a.words_out.empty()) tags.emplace(a.words_out);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (parsed[i]) {
      out.get() << serialize(*parsed[i]);
      if (tags) {
        const auto t = disfluency_tags(*parsed[i]);
        for (std::size_t k = 0; k < t.size(); ++k) tags->get() << (k ? " " : "") << t[k];
      }
    } else if (!sentences[i].empty()) {
      ++skipped;
    }
    out.get() << '\n';
    if (tags) tags->get() << '\n';
  }
  out.close();
  if (tags) tags->close();
  if (skipped)
    std::cerr << "warning: " << skipped << " sentences longer than " << ck.params.config.max_length
              << " tokens were not parsed (blank output lines)\n";
  return 0;
}

struct EvalArgs {
  std::string gold;
  std::string pred;
  std::string labels = "all";
  bool json = false;
};

/// One prediction per line; a blank line is a sentence with no prediction.
std::vector<std::optional<Tree>> read_predictions(const std::string& path) {
  Input in(path);
  std::vector<std::optional<Tree>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in.get(), line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      out.emplace_back();
      continue;
    }
    try {
      out.emplace_back(parse_bracketed(line));
    } catch (const ParseError& e) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  const auto gold = read_trees_from(a.gold);
  const auto pred = read_predictions(a.pred);
  if (gold.size() != pred.size())
    throw DataError("gold has " + std::to_string(gold.size()) + " trees but prediction file has " +
                    std::to_string(pred.size()) + " lines");
  ReportAccumulator acc;
  std::size_t missing = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    try {
      if (pred[i]) {
        acc.add(gold[i], *pred[i]);
      } else {
        acc.add_missing(gold[i]);
        ++missing;
      }
    } catch (const FringeMismatch& e) {
      throw DataError("sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  const ReportRows rows =
      a.labels == "edited" ? ReportRows::kEdited : a.labels == "eip" ? ReportRows::kEip : ReportRows::kAll;
  const MetricReport report = acc.report();
  if (a.json) {
    Json j = report_json(report, rows);
    j["sentences"] = gold.size();
    j["missing"] = missing;
    std::cout << j.dump(2) << '\n';
  } else {
    print_report(std::cout, report, rows);
  }
  if (missing) std::cerr << "warning: " << missing << " sentences had no prediction\n";
  return 0;
}

struct ExperimentArgs {
  std::string train;
  std::string dev;
  std::string config;
  std::string json;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double margin = 0.01;
  std::size_t threads = 0;
};

int cmd_compare_weights(const ExperimentArgs& a) {
  RunConfig rc = run_config_from(a.config);
  if (a.threads) rc.train.threads = a.threads;
  const auto tr = prepare(read_trees_from(a.train), rc, a.train);
  const auto dv = prepare(read_trees_from(a.dev), rc, a.dev);
  const WeightComparison w = compare_weights(tr, dv, rc);
  print_weight_comparison(std::cout, w);
  if (!a.json.empty()) {
    Output out(a.json);
    out.get() << weight_comparison_json(w).dump(2) << '\n';
    out.close();
  }
  return 0;
}

int cmd_compare_transforms(const ExperimentArgs& a) {
  RunConfig rc = run_config_from(a.config);
  if (a.threads) rc.train.threads = a.threads;
  rc.transform = TransformMode::kNone;
  const auto tr = prepare(read_trees_from(a.train), rc, a.train);
  const auto dv = prepare(read_trees_from(a.dev), rc, a.dev);
  const TransformComparison t =
      compare_transforms(tr, dv, rc, a.seeds,
                         {TransformMode::kNone, TransformMode::kPosDisfl, TransformMode::kNoSyntax}, a.margin);
  print_transform_comparison(std::cout, t);
  if (!a.json.empty()) {
    Output out(a.json);
    out.get() << transform_comparison_json(t).dump(2) << '\n';
    out.close();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint constituency parsing and disfluency detection"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic disfluent treebank");
  gen_cmd->add_option("--config", gen.config, "Generator config JSON (defaults if omitted)")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen.out, "Output directory for train/dev/test.mrg and manifest.json")->required();

  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Drop punctuation and partial words from trees");
  pre_cmd->add_option("--in", pre.in, "Input trees ('-' for stdin)");
  pre_cmd->add_option("--out", pre.out, "Output trees ('-' for stdout)");
  pre_cmd->add_flag("--keep-punct", pre.keep_punct, "Keep punctuation leaves");
  pre_cmd->add_flag("--keep-partial", pre.keep_partial, "Keep partial words (XX tag or trailing '-')");
  pre_cmd->add_option("--punct-tags", pre.punct_tags, "Punctuation POS tags (replaces the default set)");

  TransformArgs tf;
  auto* tf_cmd = app.add_subcommand("transform", "Apply a disfluency tree transformation");
  tf_cmd->add_option("--mode", tf.mode, "Transformation")
      ->required()
      ->check(CLI::IsMember({"posdisfl", "nosyntax", "posdisfl-nosyntax", "topdisfl", "topdisfl-nosyntax"}));
  tf_cmd->add_option("--in", tf.in, "Input trees ('-' for stdin)");
  tf_cmd->add_option("--out", tf.out, "Output trees ('-' for stdout)");

  TrainArgs tr;
  auto* tr_cmd = app.add_subcommand("train", "Train a parser");
  tr_cmd->add_option("--train", tr.train, "Training trees")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--dev", tr.dev, "Development trees")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--config", tr.config, "Run config JSON (desk preset if omitted)")->check(CLI::ExistingFile);
  tr_cmd->add_option("--out", tr.out, "Output directory for log.jsonl and checkpoints")->required();
  tr_cmd->add_option("--threads", tr.threads, "Worker threads (overrides the config)");
  tr_cmd->add_flag("--quiet", tr.quiet, "Do not print evaluations");

  ParseArgs ps;
  auto* ps_cmd = app.add_subcommand("parse", "Parse sentences with a trained checkpoint");
  ps_cmd->add_option("--model", ps.model, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ps_cmd->add_option("--in", ps.in, "Input sentences ('-' for stdin)");
  ps_cmd->add_option("--out", ps.out, "Output trees, one per input sentence ('-' for stdout)");
  ps_cmd->add_option("--input-format", ps.format, "tagged: word/TAG tokens; raw: words; tree: bracketed trees")
      ->check(CLI::IsMember({"tagged", "raw", "tree"}));
  ps_cmd->add_option("--words-out", ps.words_out, "Also write per-token E/I/P/O tags to this file");
  ps_cmd->add_option("--config", ps.config, "Run config the checkpoint must match")->check(CLI::ExistingFile);
  ps_cmd->add_option("--threads", ps.threads, "Worker threads");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score predicted trees against gold trees");
  ev_cmd->add_option("--gold", ev.gold, "Gold trees")->required();
  ev_cmd->add_option("--pred", ev.pred, "Predicted trees, one per line; blank line = no prediction")->required();
  ev_cmd->add_option("--labels", ev.labels, "Disfluency rows to print")
      ->check(CLI::IsMember({"all", "edited", "eip"}));
  ev_cmd->add_flag("--json", ev.json, "Print a JSON report instead of the table");

  ExperimentArgs cw;
  auto* cw_cmd = app.add_subcommand("compare-weights", "Train with unit and configured label weights");
  ExperimentArgs ct;
  auto* ct_cmd = app.add_subcommand("compare-transforms", "Train on baseline, posdisfl and nosyntax trees");
  for (auto [cmd, args] : {std::pair{cw_cmd, &cw}, std::pair{ct_cmd, &ct}}) {
    cmd->add_option("--train", args->train, "Training trees")->required()->check(CLI::ExistingFile);
    cmd->add_option("--dev", args->dev, "Development trees")->required()->check(CLI::ExistingFile);
    cmd->add_option("--config", args->config, "Run config JSON")->check(CLI::ExistingFile);
    cmd->add_option("--json", args->json, "Write the comparison as JSON");
    cmd->add_option("--threads", args->threads, "Worker threads");
  }
  ct_cmd->add_option("--seeds", ct.seeds, "Seeds, one model per seed and mode")->delimiter(',');
  ct_cmd->add_option("--margin", ct.margin, "Allowed nosyntax-over-baseline F(W_E) margin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*gen_cmd) return cmd_gen_corpus(gen);
    if (*pre_cmd) return cmd_preprocess(pre);
    if (*tf_cmd) return cmd_transform(tf);
    if (*tr_cmd) return cmd_train(tr);
    if (*ps_cmd) return cmd_parse(ps);
    if (*ev_cmd) return cmd_eval(ev);
    if (*cw_cmd) return cmd_compare_weights(cw);
    if (*ct_cmd) return cmd_compare_transforms(ct);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
