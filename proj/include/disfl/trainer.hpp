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

// Mini-batch hinge-loss training with Adam, linear warmup and step decay
// driven by dev F(S_E), plus corpus evaluation.

#ifndef DISFL_TRAINER_HPP
#define DISFL_TRAINER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "disfl/chart.hpp"
#include "disfl/checkpoint.hpp"
#include "disfl/decoder.hpp"
#include "disfl/metrics.hpp"
#include "disfl/model.hpp"
#include "disfl/tree.hpp"

namespace disfl {

struct TrainConfig {
  double learning_rate = 0.0006;
  std::size_t warmup_steps = 110;
  double decay_factor = 0.52;
  std::size_t decay_patience = 2;
  double min_learning_rate = 1e-5;  // training stops once decay goes below this
  std::size_t batch_size = 16;
  std::size_t max_epochs = 30;
  LabelWeights weights{2.0, 0.7};
  std::size_t eval_every = 0;  // steps; 0 means once per epoch
  std::uint64_t seed = 1;
  std::string checkpoint_dir;  // empty: nothing is written
  bool keep_step_checkpoints = true;
  std::size_t threads = 1;  // 0: hardware concurrency
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw std::invalid_argument("learning rate must be > 0");
    if (!(decay_factor > 0.0 && decay_factor < 1.0)) throw std::invalid_argument("decay factor must be in (0, 1)");
    if (decay_patience == 0) throw std::invalid_argument("decay patience must be >= 1");
    if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
    if (max_epochs == 0) throw std::invalid_argument("max epochs must be >= 1");
    if (min_learning_rate < 0.0) throw std::invalid_argument("min learning rate must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_epsilon > 0.0))
      throw std::invalid_argument("bad Adam hyperparameters");
    weights.validate();
  }
};

/// Learning rate for 1-based update `step`: base * step / warmup during
/// warmup, then base, times the accumulated decay multiplier.
inline double scheduled_learning_rate(const TrainConfig& c, std::size_t step, double decay_multiplier = 1.0) {
  double lr = c.learning_rate;
  if (c.warmup_steps > 0 && step < c.warmup_steps) lr *= double(step) / double(c.warmup_steps);
  return lr * decay_multiplier;
}

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Data

struct Example {
  std::vector<Token> tokens;
  std::vector<std::size_t> ids;
  Tree gold;
};

/// Builds word and label vocabularies from training trees.
inline void build_vocabularies(const std::vector<Tree>& trees, WordVocab& words, LabelVocab& labels) {
  for (const Tree& t : trees) {
    for (const Token& tok : fringe(t)) words.add(tok.word);
    if (!t.is_leaf()) add_tree_labels(labels, t);
  }
}

inline Example make_example(const Tree& tree, const WordVocab& words) {
  Example e;
  e.tokens = fringe(tree);
  for (const Token& t : e.tokens) e.ids.push_back(words.id(t.word));
  e.gold = tree;
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalResult {
  MetricReport report;
  std::vector<std::optional<Tree>> predictions;  // nullopt where skipped
  std::size_t skipped = 0;
};

template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Predicted tree for one sentence, or nullopt if it exceeds max_length.
inline std::optional<Tree> parse_tokens(const std::vector<Token>& tokens, const ModelParams& params,
                                        const WordVocab& words, const LabelVocab& labels) {
  if (tokens.empty() || tokens.size() > params.config.max_length) return std::nullopt;
  std::vector<std::size_t> ids;
  for (const Token& t : tokens) ids.push_back(words.id(t.word));
  return decode_tree(score_sentence(ids, params), labels, tokens, LabelWeights::unit());
}

/// Decodes every gold sentence with unit weights and scores it. Overlength
/// sentences count as predicted with no spans.
inline EvalResult evaluate(const ModelParams& params, const WordVocab& words, const LabelVocab& labels,
                           const std::vector<Tree>& gold, std::size_t threads = 1) {
  EvalResult out;
  out.predictions.resize(gold.size());
  parallel_for(gold.size(), threads,
               [&](std::size_t i) { out.predictions[i] = parse_tokens(fringe(gold[i]), params, words, labels); });
  ReportAccumulator acc;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (out.predictions[i]) {
      acc.add(gold[i], *out.predictions[i]);
    } else {
      acc.add_missing(gold[i]);
      ++out.skipped;
    }
  }
  out.report = acc.report();
  return out;
}

// ---------------------------------------------------------------------------
// Gradients and optimizer

struct SentenceGradient {
  double loss = 0.0;
  bool active = false;  // loss > 0, so the gradient is nonzero
};

/// Hinge loss of one example with dropout masks drawn from `dropout_seed`;
/// accumulates its parameter gradient into `grads`.
inline SentenceGradient sentence_gradient(const Example& ex, const ModelParams& params, const LabelVocab& labels,
                                          const LabelWeights& weights, std::uint64_t dropout_seed,
                                          ModelParams& grads) {
  Rng rng(dropout_seed);
  ForwardCache cache;
  const SpanScoreTable table = forward(ex.ids, params, true, &rng, cache);
  const HingeResult h = hinge_loss(table, ex.gold, labels, weights);
  // max(0, NaN) is 0, so check the terms.
  const double raw = h.predicted_objective - h.gold_score;
  if (!std::isfinite(raw))
    throw TrainingError("non-finite loss " + std::to_string(raw) + " on sentence: " + serialize(ex.gold));
  SentenceGradient out{h.loss, h.loss > 0.0};
  if (out.active) backward(h.gradient, cache, params, grads);
  return out;
}

struct BatchGradient {
  ModelParams grads;
  double loss = 0.0;
};

/// Sum of per-sentence gradients, reduced in index order so the result does
/// not depend on the thread count.
inline BatchGradient batch_gradient(const std::vector<const Example*>& batch,
                                    const std::vector<std::uint64_t>& seeds, const ModelParams& params,
                                    const LabelVocab& labels, const LabelWeights& weights, std::size_t threads) {
  std::vector<ModelParams> parts(batch.size());
  std::vector<SentenceGradient> results(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    parts[i] = ModelParams::zeros(params.config);
    results[i] = sentence_gradient(*batch[i], params, labels, weights, seeds[i], parts[i]);
  });
  BatchGradient out{ModelParams::zeros(params.config), 0.0};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += results[i].loss;
    if (results[i].active) out.grads += parts[i];
  }
  return out;
}

class Adam {
 public:
  Adam(const ModelConfig& c, double beta1, double beta2, double epsilon)
      : m_(ModelParams::zeros(c)), v_(ModelParams::zeros(c)), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(ModelParams& params, const ModelParams& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, double(t_));
    const double c2 = 1.0 - std::pow(beta2_, double(t_));
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = m_.tensors();
    auto v = v_.tensors();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k]->array() = beta1_ * m[k]->array() + (1.0 - beta1_) * g[k]->array();
      v[k]->array() = beta2_ * v[k]->array() + (1.0 - beta2_) * g[k]->array().square();
      p[k]->array() -= lr * (m[k]->array() / c1) / ((v[k]->array() / c2).sqrt() + eps_);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  ModelParams m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Training loop

struct EvalRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;  // mean training hinge loss per sentence since the previous record
  double learning_rate = 0.0;
  MetricReport dev;
  std::size_t dev_skipped = 0;
  bool improved = false;
};

inline Json record_json(const EvalRecord& r) {
  return Json{{"step", r.step},
              {"epoch", r.epoch},
              {"loss", r.loss},
              {"lr", r.learning_rate},
              {"F_S", r.dev.span.f1},
              {"P_SE", r.dev.edited_span.precision},
              {"R_SE", r.dev.edited_span.recall},
              {"F_SE", r.dev.edited_span.f1},
              {"F_WE", r.dev.edited_word.f1},
              {"F_WEIP", r.dev.eip_word.f1},
              {"dev_skipped", r.dev_skipped},
              {"improved", r.improved}};
}

/// Model selection key: dev F(S_E), with F(S) breaking ties (early in
/// training F(S_E) is often stuck at 0 while parsing still improves).
using SelectionKey = std::pair<double, double>;

inline SelectionKey selection_key(const MetricReport& r) { return {r.edited_span.f1, r.span.f1}; }

/// Step with the best selection key in a log; ties go to the earliest record.
inline std::optional<std::size_t> select_best_step(const std::vector<Json>& log) {
  std::optional<std::size_t> best;
  SelectionKey best_key{-1.0, -1.0};
  for (const Json& r : log) {
    const SelectionKey key{r.at("F_SE").get<double>(), r.at("F_S").get<double>()};
    if (key > best_key) {
      best_key = key;
      best = r.at("step").get<std::size_t>();
    }
  }
  return best;
}

struct TrainResult {
  Checkpoint best;
  std::vector<EvalRecord> log;
  std::size_t best_step = 0;
  std::size_t steps = 0;
  std::size_t train_skipped = 0;  // overlength or single-token-root trees
  bool stopped_at_floor = false;
};

using TrainObserver = std::function<void(const EvalRecord&)>;

/// Trains on `train_trees` and selects by dev F(S_E). The model config's
/// vocab_size and num_labels are filled in from the training data.
inline TrainResult train(const std::vector<Tree>& train_trees, const std::vector<Tree>& dev_trees,
                         ModelConfig model_config, const TrainConfig& config, const Json& metadata = Json::object(),
                         const TrainObserver& observer = {}) {
  config.validate();
  if (train_trees.empty()) throw std::invalid_argument("training corpus is empty");
  if (dev_trees.empty()) throw std::invalid_argument("dev corpus is empty");

  TrainResult result;
  std::vector<Tree> usable;
  for (const Tree& t : train_trees) {
    if (t.is_leaf() || fringe_length(t) > model_config.max_length)
      ++result.train_skipped;
    else
      usable.push_back(t);
  }
  if (usable.empty()) throw std::invalid_argument("no training sentence fits within max_length");

  Checkpoint current;
  current.metadata = metadata;
  build_vocabularies(usable, current.words, current.labels);
  model_config.vocab_size = current.words.size();
  model_config.num_labels = current.labels.size();
  model_config.validate();
  current.params = ModelParams::initialize(model_config);

  std::vector<Example> examples;
  examples.reserve(usable.size());
  for (const Tree& t : usable) examples.push_back(make_example(t, current.words));

  const std::filesystem::path dir = config.checkpoint_dir;
  std::ofstream log_file;
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    log_file.open(dir / "log.jsonl", std::ios::trunc);
    if (!log_file) throw std::runtime_error("cannot write " + (dir / "log.jsonl").string());
  }

  const std::size_t steps_per_epoch = (examples.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t eval_every = config.eval_every ? config.eval_every : steps_per_epoch;

  Adam adam(model_config, config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  double decay = 1.0;
  SelectionKey best_key{-1.0, -1.0};
  std::size_t stale = 0;
  double window_loss = 0.0;
  std::size_t window_sentences = 0;
  std::size_t step = 0;
  result.best = current;

  auto run_eval = [&](std::size_t epoch) {
    EvalRecord rec;
    rec.step = step;
    rec.epoch = epoch;
    rec.loss = window_sentences ? window_loss / double(window_sentences) : 0.0;
    rec.learning_rate = scheduled_learning_rate(config, step + 1, decay);
    const EvalResult ev = evaluate(current.params, current.words, current.labels, dev_trees, config.threads);
    rec.dev = ev.report;
    rec.dev_skipped = ev.skipped;
    rec.improved = selection_key(rec.dev) > best_key;
    window_loss = 0.0;
    window_sentences = 0;

    if (rec.improved) {
      best_key = selection_key(rec.dev);
      stale = 0;
      result.best = current;
      result.best_step = step;
    } else if (++stale >= config.decay_patience) {
      decay *= config.decay_factor;
      stale = 0;
    }
    if (!dir.empty()) {
      if (config.keep_step_checkpoints) save_checkpoint((dir / ("step-" + std::to_string(step) + ".bin")).string(), current);
      if (rec.improved) save_checkpoint((dir / "best.bin").string(), current);
      log_file << record_json(rec).dump() << '\n';
      log_file.flush();
    }
    result.log.push_back(rec);
    if (observer) observer(rec);
  };

  std::vector<std::size_t> order(examples.size());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    // Fisher-Yates with the pinned generator, so the order is portable.
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle(mix_seed(config.seed, epoch, 0x5348));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      ++step;
      std::vector<const Example*> batch;
      std::vector<std::uint64_t> seeds;
      for (std::size_t k = b * config.batch_size; k < std::min(order.size(), (b + 1) * config.batch_size); ++k) {
        batch.push_back(&examples[order[k]]);
        seeds.push_back(mix_seed(config.seed, step, order[k]));
      }
      BatchGradient g = batch_gradient(batch, seeds, current.params, current.labels, config.weights, config.threads);
      if (!g.grads.all_finite()) throw TrainingError("non-finite gradient at step " + std::to_string(step));
      window_loss += g.loss;
      window_sentences += batch.size();
      adam.step(current.params, g.grads, scheduled_learning_rate(config, step, decay));

      if (step % eval_every == 0) {
        run_eval(epoch);
        if (config.learning_rate * decay < config.min_learning_rate) {
          result.stopped_at_floor = true;
          result.steps = step;
          return result;
        }
      }
    }
  }
  if (result.log.empty() || result.log.back().step != step) run_eval(config.max_epochs);
  result.steps = step;
  return result;
}

}  // namespace disfl

#endif  // DISFL_TRAINER_HPP
