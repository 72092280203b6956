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

// Top-level run configuration: model, training, preprocessing and the tree
// transformation applied to training data, read from one JSON object.

#ifndef DISFL_RUN_CONFIG_HPP
#define DISFL_RUN_CONFIG_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "disfl/checkpoint.hpp"
#include "disfl/json_util.hpp"
#include "disfl/trainer.hpp"
#include "disfl/transforms.hpp"
#include "disfl/tree.hpp"

namespace disfl {

/// Table 1 optimizer settings.
inline TrainConfig paper_train_config() { return TrainConfig{}; }

/// Settings for the small synthetic corpus: same label weights and decay
/// factor, higher step size, slower decay and a longer budget.
inline TrainConfig desk_train_config() {
  TrainConfig c;
  c.learning_rate = 0.001;
  c.batch_size = 32;
  c.decay_patience = 30;
  c.max_epochs = 200;
  return c;
}

inline void to_json(Json& j, const TrainConfig& c) {
  j = Json{{"learning_rate", c.learning_rate},
           {"warmup_steps", c.warmup_steps},
           {"decay_factor", c.decay_factor},
           {"decay_patience", c.decay_patience},
           {"min_learning_rate", c.min_learning_rate},
           {"batch_size", c.batch_size},
           {"max_epochs", c.max_epochs},
           {"edited_weight", c.weights.edited_weight},
           {"default_weight", c.weights.default_weight},
           {"eval_every", c.eval_every},
           {"seed", c.seed},
           {"keep_step_checkpoints", c.keep_step_checkpoints},
           {"threads", c.threads},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"adam_epsilon", c.adam_epsilon}};
}

/// Missing keys keep their current value. "preset" selects "desk" or
/// "paper" first. The checkpoint directory comes from the command line.
inline void from_json(const Json& j, TrainConfig& c) {
  detail::check_keys(j,
                     {"preset", "learning_rate", "warmup_steps", "decay_factor", "decay_patience",
                      "min_learning_rate", "batch_size", "max_epochs", "edited_weight", "default_weight",
                      "eval_every", "seed", "keep_step_checkpoints", "threads", "adam_beta1", "adam_beta2",
                      "adam_epsilon"},
                     "train config");
  if (j.contains("preset")) {
    const std::string p = j.at("preset").get<std::string>();
    if (p == "desk")
      c = desk_train_config();
    else if (p == "paper")
      c = paper_train_config();
    else
      throw ConfigError("unknown train preset '" + p + "'");
  }
  detail::read_field(j, "learning_rate", c.learning_rate);
  detail::read_field(j, "warmup_steps", c.warmup_steps);
  detail::read_field(j, "decay_factor", c.decay_factor);
  detail::read_field(j, "decay_patience", c.decay_patience);
  detail::read_field(j, "min_learning_rate", c.min_learning_rate);
  detail::read_field(j, "batch_size", c.batch_size);
  detail::read_field(j, "max_epochs", c.max_epochs);
  detail::read_field(j, "edited_weight", c.weights.edited_weight);
  detail::read_field(j, "default_weight", c.weights.default_weight);
  detail::read_field(j, "eval_every", c.eval_every);
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "keep_step_checkpoints", c.keep_step_checkpoints);
  detail::read_field(j, "threads", c.threads);
  detail::read_field(j, "adam_beta1", c.adam_beta1);
  detail::read_field(j, "adam_beta2", c.adam_beta2);
  detail::read_field(j, "adam_epsilon", c.adam_epsilon);
}

inline void to_json(Json& j, const StripOptions& o) {
  j = Json{{"drop_punct", o.drop_punct},
           {"drop_partial", o.drop_partial},
           {"punct_tags", std::vector<std::string>(o.punct_tags.begin(), o.punct_tags.end())}};
}

inline void from_json(const Json& j, StripOptions& o) {
  detail::check_keys(j, {"drop_punct", "drop_partial", "punct_tags"}, "preprocess config");
  detail::read_field(j, "drop_punct", o.drop_punct);
  detail::read_field(j, "drop_partial", o.drop_partial);
  if (j.contains("punct_tags")) {
    std::vector<std::string> tags;
    detail::read_field(j, "punct_tags", tags);
    o.punct_tags = LabelSet(tags.begin(), tags.end());
  }
}

struct RunConfig {
  ModelConfig model = ModelConfig::desk();
  TrainConfig train = desk_train_config();
  StripOptions preprocess;
  TransformMode transform = TransformMode::kNone;

  static RunConfig desk() { return {}; }
  static RunConfig paper() {
    RunConfig r;
    r.model = ModelConfig::paper();
    r.train = paper_train_config();
    return r;
  }

  void validate() const {
    // vocabulary and label counts are filled in from the training data
    ModelConfig m = model;
    if (m.vocab_size == 0) m.vocab_size = 3;
    if (m.num_labels == 0) m.num_labels = 2;
    try {
      m.validate();
      train.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

inline void to_json(Json& j, const RunConfig& r) {
  j = Json{{"model", r.model},
           {"train", r.train},
           {"preprocess", r.preprocess},
           {"transform", std::string(transform_mode_name(r.transform))}};
}

/// "preset" ("desk" or "paper") picks the starting point for all sections;
/// each section then overrides individual fields.
inline void from_json(const Json& j, RunConfig& r) {
  detail::check_keys(j, {"preset", "model", "train", "preprocess", "transform"}, "run config");
  if (j.contains("preset")) {
    const std::string p = j.at("preset").get<std::string>();
    if (p == "desk")
      r = RunConfig::desk();
    else if (p == "paper")
      r = RunConfig::paper();
    else
      throw ConfigError("unknown run preset '" + p + "'");
  }
  if (j.contains("model")) from_json(j.at("model"), r.model);
  if (j.contains("train")) from_json(j.at("train"), r.train);
  if (j.contains("preprocess")) from_json(j.at("preprocess"), r.preprocess);
  if (j.contains("transform")) {
    std::string name;
    detail::read_field(j, "transform", name);
    const auto mode = parse_transform_mode(name);
    if (!mode) throw ConfigError("unknown transform '" + name + "'");
    r.transform = *mode;
  }
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig r = RunConfig::desk();
  from_json(read_json_file(path), r);
  r.validate();
  return r;
}

}  // namespace disfl

#endif  // DISFL_RUN_CONFIG_HPP
