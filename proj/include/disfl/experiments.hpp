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

// Comparison harnesses: label-weighted vs unweighted loss, and training on
// transformed trees. Both train from scratch per variant and report dev
// metrics of the selected checkpoint.

#ifndef DISFL_EXPERIMENTS_HPP
#define DISFL_EXPERIMENTS_HPP

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "disfl/json_util.hpp"
#include "disfl/metrics.hpp"
#include "disfl/run_config.hpp"
#include "disfl/trainer.hpp"
#include "disfl/transforms.hpp"

namespace disfl {

inline Json prf_json(const PRF& p) {
  return Json{{"precision", p.precision}, {"recall", p.recall},          {"f1", p.f1},
              {"predicted", p.predicted_count}, {"gold", p.gold_count}, {"correct", p.correct_count}};
}

inline Json report_json(const MetricReport& r, ReportRows rows = ReportRows::kAll) {
  Json j{{"S", prf_json(r.span)}, {"S_E", prf_json(r.edited_span)}};
  if (rows != ReportRows::kEip) j["W_E"] = prf_json(r.edited_word);
  if (rows != ReportRows::kEdited) j["W_EIP"] = prf_json(r.eip_word);
  return j;
}

struct VariantResult {
  std::string name;
  std::uint64_t seed = 0;
  MetricReport dev;
  std::size_t best_step = 0;
  std::size_t steps = 0;
};

inline Json variant_json(const VariantResult& v) {
  return Json{{"name", v.name}, {"seed", v.seed}, {"best_step", v.best_step}, {"steps", v.steps},
              {"dev", report_json(v.dev)}};
}

namespace detail {

inline RunConfig with_seed(RunConfig c, std::uint64_t seed) {
  c.model.seed = seed;
  c.train.seed = seed;
  c.train.checkpoint_dir.clear();
  return c;
}

/// Trains on `train` and scores the selected checkpoint on `dev`.
inline VariantResult run_variant(const std::string& name, const std::vector<Tree>& train_trees,
                                 const std::vector<Tree>& dev_trees, const RunConfig& c) {
  const TrainResult r = disfl::train(train_trees, dev_trees, c.model, c.train);
  const EvalResult ev = evaluate(r.best.params, r.best.words, r.best.labels, dev_trees, c.train.threads);
  return {name, c.train.seed, ev.report, r.best_step, r.steps};
}

inline std::vector<Tree> transformed(TransformMode mode, const std::vector<Tree>& trees) {
  std::vector<Tree> out;
  out.reserve(trees.size());
  for (const Tree& t : trees) out.push_back(apply_transform(mode, t));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Weighted loss

struct WeightComparison {
  VariantResult unweighted;  // (1, 1)
  VariantResult weighted;    // the configured weights
};

/// Same data and seed, trained once with unit weights and once with
/// `c.train.weights`.
inline WeightComparison compare_weights(const std::vector<Tree>& train_trees, const std::vector<Tree>& dev_trees,
                                        const RunConfig& c) {
  RunConfig unit = detail::with_seed(c, c.train.seed);
  unit.train.weights = LabelWeights::unit();
  const RunConfig weighted = detail::with_seed(c, c.train.seed);
  WeightComparison out;
  out.unweighted = detail::run_variant("weights 1/1", train_trees, dev_trees, unit);
  char name[64];
  std::snprintf(name, sizeof name, "weights %g/%g", c.train.weights.edited_weight, c.train.weights.default_weight);
  out.weighted = detail::run_variant(name, train_trees, dev_trees, weighted);
  return out;
}

inline void print_weight_comparison(std::ostream& os, const WeightComparison& w) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s %8s\n", "run", "P(S_E)", "R(S_E)", "F(S_E)", "F(S)",
                "F(W_E)");
  os << buf;
  for (const VariantResult* v : {&w.unweighted, &w.weighted}) {
    std::snprintf(buf, sizeof buf, "%-16s %8.4f %8.4f %8.4f %8.4f %8.4f\n", v->name.c_str(),
                  v->dev.edited_span.precision, v->dev.edited_span.recall, v->dev.edited_span.f1, v->dev.span.f1,
                  v->dev.edited_word.f1);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-16s %+8.4f %+8.4f %+8.4f %+8.4f %+8.4f\n", "delta",
                w.weighted.dev.edited_span.precision - w.unweighted.dev.edited_span.precision,
                w.weighted.dev.edited_span.recall - w.unweighted.dev.edited_span.recall,
                w.weighted.dev.edited_span.f1 - w.unweighted.dev.edited_span.f1,
                w.weighted.dev.span.f1 - w.unweighted.dev.span.f1,
                w.weighted.dev.edited_word.f1 - w.unweighted.dev.edited_word.f1);
  os << buf;
}

inline Json weight_comparison_json(const WeightComparison& w) {
  return Json{{"experiment", "weights"},
              {"runs", Json::array({variant_json(w.unweighted), variant_json(w.weighted)})}};
}

// ---------------------------------------------------------------------------
// Tree transformations

struct TransformComparison {
  std::vector<TransformMode> modes;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<VariantResult>> runs;  // [mode][seed]
  double margin = 0.01;
  std::vector<std::string> warnings;
};

/// Trains one model per (mode, seed) on transformed training trees and
/// scores it on the identically transformed dev trees. Word-level scores
/// are comparable across modes since every transform keeps the EDITED word
/// set. Flags each seed where NoSyntax beats the baseline F(W_E) by more
/// than `margin`.
inline TransformComparison compare_transforms(const std::vector<Tree>& train_trees,
                                              const std::vector<Tree>& dev_trees, const RunConfig& c,
                                              const std::vector<std::uint64_t>& seeds,
                                              const std::vector<TransformMode>& modes =
                                                  {TransformMode::kNone, TransformMode::kPosDisfl,
                                                   TransformMode::kNoSyntax},
                                              double margin = 0.01) {
  TransformComparison out;
  out.modes = modes;
  out.seeds = seeds;
  out.margin = margin;
  for (TransformMode mode : modes) {
    const auto tr = detail::transformed(mode, train_trees);
    const auto dv = detail::transformed(mode, dev_trees);
    auto& row = out.runs.emplace_back();
    for (std::uint64_t seed : seeds) {
      RunConfig rc = detail::with_seed(c, seed);
      rc.transform = mode;
      row.push_back(detail::run_variant(std::string(transform_mode_name(mode)), tr, dv, rc));
    }
  }
  auto index_of = [&](TransformMode m) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < modes.size(); ++i)
      if (modes[i] == m) return std::ptrdiff_t(i);
    return -1;
  };
  const auto base = index_of(TransformMode::kNone);
  const auto flat = index_of(TransformMode::kNoSyntax);
  if (base >= 0 && flat >= 0) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const double b = out.runs[base][s].dev.edited_word.f1;
      const double f = out.runs[flat][s].dev.edited_word.f1;
      if (f > b + margin) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "seed %llu: nosyntax F(W_E) %.4f exceeds baseline %.4f by more than %.2f",
                      static_cast<unsigned long long>(seeds[s]), f, b, margin);
        out.warnings.emplace_back(buf);
      }
    }
  }
  return out;
}

inline void print_transform_comparison(std::ostream& os, const TransformComparison& t) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-20s", "mode");
  os << buf;
  for (auto seed : t.seeds) {
    std::snprintf(buf, sizeof buf, " %10s", ("seed " + std::to_string(seed)).c_str());
    os << buf;
  }
  os << "       mean\n";
  for (std::size_t m = 0; m < t.modes.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%-20s", std::string(transform_mode_name(t.modes[m])).c_str());
    os << buf;
    double sum = 0.0;
    for (const auto& v : t.runs[m]) {
      std::snprintf(buf, sizeof buf, " %10.4f", v.dev.edited_word.f1);
      os << buf;
      sum += v.dev.edited_word.f1;
    }
    std::snprintf(buf, sizeof buf, " %10.4f\n", t.runs[m].empty() ? 0.0 : sum / double(t.runs[m].size()));
    os << buf;
  }
  for (const auto& w : t.warnings) os << "warning: " << w << '\n';
}

inline Json transform_comparison_json(const TransformComparison& t) {
  Json runs = Json::array();
  for (const auto& row : t.runs)
    for (const auto& v : row) runs.push_back(variant_json(v));
  return Json{{"experiment", "transforms"}, {"metric", "F(W_E)"}, {"margin", t.margin},
              {"runs", runs},               {"warnings", t.warnings}};
}

}  // namespace disfl

#endif  // DISFL_EXPERIMENTS_HPP
