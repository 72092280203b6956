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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "disfl/checkpoint.hpp"
#include "test_support.hpp"

namespace disfl {
namespace {

Checkpoint sample_checkpoint(std::uint64_t seed = 3) {
  Checkpoint ck;
  for (const char* w : {"i", "mean", "uh", "the", "dog"}) ck.words.add(w);
  for (const char* l : {"S", "NP", "VP", "EDITED", "S+VP"}) ck.labels.add(l);
  ModelConfig c;
  c.vocab_size = ck.words.size();
  c.num_labels = ck.labels.size();
  c.model_dim = 8;
  c.ff_dim = 6;
  c.label_hidden_dim = 5;
  c.max_length = 12;
  c.seed = seed;
  ck.params = ModelParams::initialize(c);
  Rng rng(seed);
  testing::jitter(ck.params, rng);
  ck.metadata = {{"transform", "posdisfl"}, {"drop_punct", true}};
  return ck;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("disfl_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(p);
  return p;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint ck = sample_checkpoint();
  const std::string bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_TRUE(back == ck);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  auto a = ck.params.tensors();
  auto b = back.params.tensors();
  for (std::size_t t = 0; t < a.size(); ++t)
    EXPECT_EQ(std::memcmp(a[t]->data(), b[t]->data(), sizeof(double) * std::size_t(a[t]->size())), 0);
  EXPECT_EQ(back.params.config.seed, 3u);
}

TEST(Checkpoint, SpecialValuesSurvive) {
  Checkpoint ck = sample_checkpoint();
  ck.params.final_bias(0, 0) = -0.0;
  ck.params.final_bias(0, 1) = std::numeric_limits<double>::denorm_min();
  ck.params.final_bias(0, 2) = std::numeric_limits<double>::max();
  const Checkpoint back = decode_checkpoint(encode_checkpoint(ck));
  EXPECT_TRUE(std::signbit(back.params.final_bias(0, 0)));
  EXPECT_EQ(back.params.final_bias(0, 1), std::numeric_limits<double>::denorm_min());
  EXPECT_EQ(back.params.final_bias(0, 2), std::numeric_limits<double>::max());
}

TEST(Checkpoint, FileAndSidecar) {
  const auto dir = temp_dir("ckpt");
  const std::string path = (dir / "m.bin").string();
  const Checkpoint ck = sample_checkpoint();
  save_checkpoint(path, ck);
  EXPECT_TRUE(load_checkpoint(path) == ck);
  std::ifstream side(path + ".json");
  const Json j = Json::parse(side);
  EXPECT_EQ(j.at("model").at("model_dim"), 8);
  EXPECT_EQ(j.at("format_version"), kCheckpointVersion);
  EXPECT_EQ(j.at("metadata").at("transform"), "posdisfl");
  EXPECT_EQ(j.at("labels").size(), ck.labels.size());
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
}

TEST(Checkpoint, HeaderValidation) {
  const std::string good = encode_checkpoint(sample_checkpoint());
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), CheckpointError);
  bad = good;
  bad[8] = 2;  // version
  EXPECT_THROW(decode_checkpoint(bad), CheckpointError);
  bad = good;
  bad[12 + 8 * 2] ^= 1;  // model_dim changes, shapes no longer agree
  EXPECT_THROW(decode_checkpoint(bad), CheckpointError);
  EXPECT_THROW(decode_checkpoint(good + "x"), CheckpointError);
  for (std::size_t cut = 0; cut < good.size(); cut += 97)
    EXPECT_THROW(decode_checkpoint(good.substr(0, cut)), CheckpointError) << cut;
  EXPECT_THROW(decode_checkpoint(good.substr(0, good.size() - 1)), CheckpointError);
}

TEST(Checkpoint, RootLabelsRoundTrip) {
  Checkpoint ck = sample_checkpoint();
  ck.labels.mark_root(ck.labels.index("S"));
  ck.labels.mark_root(ck.labels.index("S+VP"));
  const std::string bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_TRUE(back == ck);
  EXPECT_EQ(back.labels.root_labels(), (std::vector<std::size_t>{1, 5}));
  EXPECT_EQ(checkpoint_sidecar(ck)["root_labels"], Json::array({"S", "S+VP"}));
  EXPECT_FALSE(decode_checkpoint(encode_checkpoint(sample_checkpoint())).labels.restricts_root());

  // The root list follows the last label string: count, then indices.
  const std::size_t at = bytes.find("S+VP") + 4;
  auto with_index = [&](std::uint8_t v) {
    std::string b = bytes;
    b[at + 8] = char(v);
    return b;
  };
  EXPECT_EQ(bytes[at], 2);
  EXPECT_NO_THROW(decode_checkpoint(with_index(2)));
  EXPECT_THROW(decode_checkpoint(with_index(0)), CheckpointError);
  EXPECT_THROW(decode_checkpoint(with_index(6)), CheckpointError);
  EXPECT_THROW(decode_checkpoint(with_index(5)), CheckpointError);  // duplicate
}

TEST(Checkpoint, VocabularyMustMatchConfig) {
  Checkpoint ck = sample_checkpoint();
  ck.words.add("extra");
  EXPECT_THROW(encode_checkpoint(ck), CheckpointError);
}

TEST(ModelConfigJson, RoundTripAndPresets) {
  ModelConfig c = ModelConfig::paper();
  c.vocab_size = 17;
  const Json j = c;
  ModelConfig back;
  from_json(j, back);
  EXPECT_TRUE(same_architecture(back, c));
  EXPECT_EQ(back.attention_dropout, c.attention_dropout);

  ModelConfig p;
  from_json(Json{{"preset", "paper"}, {"num_layers", 1}}, p);
  EXPECT_EQ(p.model_dim, 2048u);
  EXPECT_EQ(p.num_layers, 1u);

  EXPECT_THROW(from_json(Json{{"model_dimm", 3}}, p), ConfigError);
  EXPECT_THROW(from_json(Json{{"preset", "huge"}}, p), ConfigError);
  EXPECT_THROW(from_json(Json{{"model_dim", "big"}}, p), ConfigError);
  EXPECT_THROW(from_json(Json::array(), p), ConfigError);
}

}  // namespace
}  // namespace disfl
