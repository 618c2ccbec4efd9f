// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline configuration: one JSON file drives every stage. The schema is
// documented in README.md; serialization round-trips losslessly.

#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "umt/checkpoint.hpp"
#include "umt/model.hpp"
#include "umt/util.hpp"

namespace umt::pipe {

using nlohmann::json;

struct DataConfig {
  std::array<std::string, 2> mono{};        // tokenizable monolingual corpora
  std::array<std::string, 2> valid{};       // aligned validation pair
  std::array<std::string, 2> test{};        // aligned test pair
  std::array<std::string, 2> embeddings{};  // word embedding text files
  std::array<std::string, 2> prefix_files{};  // nonbreaking prefixes ("" = builtin)
};

struct SubwordConfig {
  int n_merges = 500;  // 32000 at full scale
  double dropout_p = 0.1;
  int oversample_factor = 10;
};

struct LexiconConfig {
  int k = 5;
  int beam = 4;
  double lambda = 0.5;
  int lm_order = 3;
  double lm_delta = 0.1;
  int min_seed_len = 2;
  std::array<std::string, 2> override_lexicons{};  // optional: skip induction
};

struct TrainerConfig {
  double base_lr = 1e-4;
  long warmup_steps = 200;
  int batch_size = 16;
  double mass_fraction = 0.5;
  double bt_sample_prob = 0.5;
  double bt_temperature = 0.95;
  long valid_every = 200;
  long mass_pretrain_steps = 1000;
  long mass_finetune_steps = 600;
  long unmt_steps = 600;
  long pseudo_finetune_steps = 800;
  long bpe_dropout_steps = 400;
  double bpe_dropout_lr = 0.0;  // 0: inherit base_lr; lower to fine-tune gently
  int curriculum_trials = 8;
  int curriculum_updates = 200;
  bool use_curriculum = false;
  long offline_bt_limit = 2000;  // sentences per direction (0 = all)
  long pseudo_limit = 0;         // cap pseudo-parallel pairs per direction
  long max_sentences = 0;        // cap corpus lines at preprocess (0 = all)
  std::vector<std::string> pseudo_sources = {"pseudo-smt"};
  std::string offline_bt_source = "finetune-pseudo";
  std::string bpe_dropout_source = "finetune-pseudo";
};

struct DecodeConfig {
  std::string mode = "beam";  // greedy | sample | beam
  int beam_size = 5;
  double temperature = 0.95;
  int max_len = 64;
  double length_penalty = 0.0;
  std::string source_stage = "auto";
};

struct PipelineConfig {
  uint64_t seed = 1;
  std::array<std::string, 2> langs = {"de", "hsb"};
  std::string workdir = "work";
  DataConfig data;
  SubwordConfig subword;
  model::ModelConfig model;  // vocab_size is set per stage
  TrainerConfig trainer;
  LexiconConfig lexicon;
  DecodeConfig decode;
  std::vector<std::string> ensemble;  // model stages for ensemble-translate
  std::string evaluate_source = "translate";

  json to_json() const {
    json j;
    j["seed"] = seed;
    j["langs"] = langs;
    j["workdir"] = workdir;
    j["data"] = {{"mono", data.mono},
                 {"valid", data.valid},
                 {"test", data.test},
                 {"embeddings", data.embeddings},
                 {"prefix_files", data.prefix_files}};
    j["subword"] = {{"n_merges", subword.n_merges},
                    {"dropout_p", subword.dropout_p},
                    {"oversample_factor", subword.oversample_factor}};
    j["model"] = checkpoint::config_to_json(model);
    j["trainer"] = {{"base_lr", trainer.base_lr},
                    {"warmup_steps", trainer.warmup_steps},
                    {"batch_size", trainer.batch_size},
                    {"mass_fraction", trainer.mass_fraction},
                    {"bt_sample_prob", trainer.bt_sample_prob},
                    {"bt_temperature", trainer.bt_temperature},
                    {"valid_every", trainer.valid_every},
                    {"mass_pretrain_steps", trainer.mass_pretrain_steps},
                    {"mass_finetune_steps", trainer.mass_finetune_steps},
                    {"unmt_steps", trainer.unmt_steps},
                    {"pseudo_finetune_steps", trainer.pseudo_finetune_steps},
                    {"bpe_dropout_steps", trainer.bpe_dropout_steps},
                    {"bpe_dropout_lr", trainer.bpe_dropout_lr},
                    {"curriculum_trials", trainer.curriculum_trials},
                    {"curriculum_updates", trainer.curriculum_updates},
                    {"use_curriculum", trainer.use_curriculum},
                    {"offline_bt_limit", trainer.offline_bt_limit},
                    {"pseudo_limit", trainer.pseudo_limit},
                    {"max_sentences", trainer.max_sentences},
                    {"pseudo_sources", trainer.pseudo_sources},
                    {"offline_bt_source", trainer.offline_bt_source},
                    {"bpe_dropout_source", trainer.bpe_dropout_source}};
    j["lexicon"] = {{"k", lexicon.k},
                    {"beam", lexicon.beam},
                    {"lambda", lexicon.lambda},
                    {"lm_order", lexicon.lm_order},
                    {"lm_delta", lexicon.lm_delta},
                    {"min_seed_len", lexicon.min_seed_len},
                    {"override_lexicons", lexicon.override_lexicons}};
    j["decode"] = {{"mode", decode.mode},
                   {"beam_size", decode.beam_size},
                   {"temperature", decode.temperature},
                   {"max_len", decode.max_len},
                   {"length_penalty", decode.length_penalty},
                   {"source_stage", decode.source_stage}};
    j["ensemble"] = ensemble;
    j["evaluate_source"] = evaluate_source;
    return j;
  }

  static PipelineConfig from_json(const json& j) {
    PipelineConfig c;
    c.seed = j.value("seed", 1ULL);
    if (j.contains("langs")) c.langs = j.at("langs").get<std::array<std::string, 2>>();
    c.workdir = j.value("workdir", "work");
    if (j.contains("data")) {
      const json& d = j.at("data");
      auto arr = [&](const char* key) {
        return d.contains(key) ? d.at(key).get<std::array<std::string, 2>>()
                               : std::array<std::string, 2>{};
      };
      c.data.mono = arr("mono");
      c.data.valid = arr("valid");
      c.data.test = arr("test");
      c.data.embeddings = arr("embeddings");
      c.data.prefix_files = arr("prefix_files");
    }
    if (j.contains("subword")) {
      const json& s = j.at("subword");
      c.subword.n_merges = s.value("n_merges", 500);
      c.subword.dropout_p = s.value("dropout_p", 0.1);
      c.subword.oversample_factor = s.value("oversample_factor", 10);
    }
    if (j.contains("model")) c.model = checkpoint::config_from_json(j.at("model"));
    if (j.contains("trainer")) {
      const json& t = j.at("trainer");
      TrainerConfig d;
      c.trainer.base_lr = t.value("base_lr", d.base_lr);
      c.trainer.warmup_steps = t.value("warmup_steps", d.warmup_steps);
      c.trainer.batch_size = t.value("batch_size", d.batch_size);
      c.trainer.mass_fraction = t.value("mass_fraction", d.mass_fraction);
      c.trainer.bt_sample_prob = t.value("bt_sample_prob", d.bt_sample_prob);
      c.trainer.bt_temperature = t.value("bt_temperature", d.bt_temperature);
      c.trainer.valid_every = t.value("valid_every", d.valid_every);
      c.trainer.mass_pretrain_steps = t.value("mass_pretrain_steps", d.mass_pretrain_steps);
      c.trainer.mass_finetune_steps = t.value("mass_finetune_steps", d.mass_finetune_steps);
      c.trainer.unmt_steps = t.value("unmt_steps", d.unmt_steps);
      c.trainer.pseudo_finetune_steps = t.value("pseudo_finetune_steps", d.pseudo_finetune_steps);
      c.trainer.bpe_dropout_steps = t.value("bpe_dropout_steps", d.bpe_dropout_steps);
      c.trainer.bpe_dropout_lr = t.value("bpe_dropout_lr", d.bpe_dropout_lr);
      c.trainer.curriculum_trials = t.value("curriculum_trials", d.curriculum_trials);
      c.trainer.curriculum_updates = t.value("curriculum_updates", d.curriculum_updates);
      c.trainer.use_curriculum = t.value("use_curriculum", d.use_curriculum);
      c.trainer.offline_bt_limit = t.value("offline_bt_limit", d.offline_bt_limit);
      c.trainer.pseudo_limit = t.value("pseudo_limit", d.pseudo_limit);
      c.trainer.max_sentences = t.value("max_sentences", d.max_sentences);
      c.trainer.pseudo_sources = t.value("pseudo_sources", d.pseudo_sources);
      c.trainer.offline_bt_source = t.value("offline_bt_source", d.offline_bt_source);
      c.trainer.bpe_dropout_source = t.value("bpe_dropout_source", d.bpe_dropout_source);
    }
    if (j.contains("lexicon")) {
      const json& l = j.at("lexicon");
      LexiconConfig d;
      c.lexicon.k = l.value("k", d.k);
      c.lexicon.beam = l.value("beam", d.beam);
      c.lexicon.lambda = l.value("lambda", d.lambda);
      c.lexicon.lm_order = l.value("lm_order", d.lm_order);
      c.lexicon.lm_delta = l.value("lm_delta", d.lm_delta);
      c.lexicon.min_seed_len = l.value("min_seed_len", d.min_seed_len);
      if (l.contains("override_lexicons")) {
        c.lexicon.override_lexicons = l.at("override_lexicons").get<std::array<std::string, 2>>();
      }
    }
    if (j.contains("decode")) {
      const json& dd = j.at("decode");
      DecodeConfig d;
      c.decode.mode = dd.value("mode", d.mode);
      c.decode.beam_size = dd.value("beam_size", d.beam_size);
      c.decode.temperature = dd.value("temperature", d.temperature);
      c.decode.max_len = dd.value("max_len", d.max_len);
      c.decode.length_penalty = dd.value("length_penalty", d.length_penalty);
      c.decode.source_stage = dd.value("source_stage", d.source_stage);
    }
    c.ensemble = j.value("ensemble", std::vector<std::string>{});
    c.evaluate_source = j.value("evaluate_source", "translate");
    return c;
  }

  void save(const std::string& path) const { write_file(path, to_json().dump(2) + "\n"); }

  static PipelineConfig load(const std::string& path) {
    return from_json(json::parse(read_file(path)));
  }
};

}  // namespace umt::pipe
