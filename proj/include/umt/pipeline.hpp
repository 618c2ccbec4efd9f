// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Stage-oriented orchestration. Each stage writes its artifacts under
// workdir/<stage>/ plus a manifest.json recording a signature over the
// config and the content hashes of its inputs; reruns with unchanged inputs
// are skipped. A lock file guards the workdir.

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "umt/bleu.hpp"
#include "umt/checkpoint.hpp"
#include "umt/config.hpp"
#include "umt/decode.hpp"
#include "umt/lexinduct.hpp"
#include "umt/model.hpp"
#include "umt/subword.hpp"
#include "umt/textnorm.hpp"
#include "umt/trainer.hpp"
#include "umt/util.hpp"

namespace umt::pipe {

using nlohmann::json;

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "preprocess",      "learn-bpe",       "extend-vocab",        "embed-map",
      "pseudo-smt",      "pretrain-mass",   "finetune-mass",       "train-unmt",
      "curriculum-search", "finetune-pseudo", "offline-bt",        "bpe-dropout-finetune",
      "translate",       "ensemble-translate", "evaluate",         "postprocess"};
  return names;
}

class WorkdirLock {
 public:
  explicit WorkdirLock(const std::string& workdir) : path_(workdir + "/.lock") {
    std::filesystem::create_directories(workdir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    require(fd_ >= 0, "workdir is locked (remove " + path_ + " if stale)");
  }
  ~WorkdirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {}

  const PipelineConfig& config() const { return cfg_; }

  std::string stage_dir(const std::string& stage) const { return cfg_.workdir + "/" + stage; }
  std::string art(const std::string& stage, const std::string& file) const {
    return stage_dir(stage) + "/" + file;
  }

  // Returns true if the stage executed, false if it was up to date.
  bool run_stage(const std::string& name) {
    WorkdirLock lock(cfg_.workdir);
    return run_stage_locked(name);
  }

  // Runs a stage and everything it depends on.
  void run_with_deps(const std::string& name) {
    WorkdirLock lock(cfg_.workdir);
    run_deps_recursive(name);
  }

 private:
  void run_deps_recursive(const std::string& name) {
    for (const auto& d : deps(name)) {
      if (!stage_done(d)) run_deps_recursive(d);
    }
    run_stage_locked(name);
  }

  bool stage_done(const std::string& stage) const {
    return file_exists(art(stage, "manifest.json"));
  }

  std::vector<std::string> deps(const std::string& name) const {
    if (name == "preprocess") return {};
    if (name == "learn-bpe") return {"preprocess"};
    if (name == "extend-vocab") return {"learn-bpe"};
    if (name == "embed-map") return {"preprocess"};
    if (name == "pseudo-smt") return {"preprocess", "embed-map"};
    if (name == "pretrain-mass") return {"learn-bpe"};
    if (name == "finetune-mass") return {"extend-vocab", "pretrain-mass"};
    if (name == "train-unmt") return {"finetune-mass"};
    if (name == "curriculum-search") return {"train-unmt", "pseudo-smt"};
    if (name == "finetune-pseudo") {
      std::vector<std::string> d = {"train-unmt"};
      for (const auto& s : cfg_.trainer.pseudo_sources) d.push_back(s);
      if (cfg_.trainer.use_curriculum) d.push_back("curriculum-search");
      return d;
    }
    if (name == "offline-bt") return {cfg_.trainer.offline_bt_source};
    if (name == "bpe-dropout-finetune") {
      return {cfg_.trainer.bpe_dropout_source, "pseudo-smt"};
    }
    if (name == "translate") return {resolve_model_stage(), "preprocess"};
    if (name == "ensemble-translate") {
      std::vector<std::string> d = cfg_.ensemble;
      d.push_back("preprocess");
      return d;
    }
    if (name == "evaluate") return {cfg_.evaluate_source, "preprocess"};
    if (name == "postprocess") return {"translate", "preprocess"};
    fail("unknown stage: " + name);
  }

  std::string resolve_model_stage() const {
    if (cfg_.decode.source_stage != "auto") return cfg_.decode.source_stage;
    for (const char* s : {"bpe-dropout-finetune", "finetune-pseudo", "train-unmt"}) {
      if (stage_done(s)) return s;
    }
    return "train-unmt";
  }

  bool run_stage_locked(const std::string& name) {
    auto dep_list = deps(name);
    for (const auto& d : dep_list) {
      if (!stage_done(d)) {
        fail("stage '" + name + "' is missing its dependency artifact: run stage '" + d +
             "' first");
      }
    }
    std::vector<std::string> inputs = stage_inputs(name);
    json input_hashes = json::object();
    for (const auto& f : inputs) {
      require(file_exists(f), "stage '" + name + "': missing input file " + f);
      input_hashes[f] = hash_file(f);
    }
    std::string signature =
        hash_string(stage_config_view(name).dump() + "\x01" + input_hashes.dump());

    std::string manifest_path = art(name, "manifest.json");
    if (file_exists(manifest_path)) {
      json old = json::parse(read_file(manifest_path));
      json old_outputs = old.value("outputs", json::object());
      bool outputs_ok = true;
      for (const auto& [f, h] : old_outputs.items()) {
        if (!file_exists(f)) outputs_ok = false;
      }
      if (outputs_ok && old.value("signature", "") == signature) {
        std::fprintf(stderr, "[%s] up-to-date\n", name.c_str());
        return false;
      }
    }

    std::filesystem::create_directories(stage_dir(name));
    std::fprintf(stderr, "[%s] running\n", name.c_str());
    std::vector<std::string> outputs = dispatch(name);

    json manifest;
    manifest["stage"] = name;
    manifest["signature"] = signature;
    manifest["inputs"] = input_hashes;
    json out_hashes = json::object();
    for (const auto& f : outputs) out_hashes[f] = hash_file(f);
    manifest["outputs"] = out_hashes;
    manifest["status"] = "ok";
    manifest["seed"] = cfg_.seed;
    write_file(manifest_path, manifest.dump(2) + "\n");
    return true;
  }

  // ------------------------------------------------------------------
  // The memoization signature covers only the config fields a stage actually
  // reads (its data inputs are hashed separately), so tuning one stage never
  // invalidates finished upstream work.

  json stage_config_view(const std::string& name) const {
    json full = cfg_.to_json();
    json v;
    v["seed"] = cfg_.seed;
    v["langs"] = cfg_.langs;
    const json& t = full.at("trainer");
    auto train_common = [&]() {
      for (const char* k : {"base_lr", "warmup_steps", "batch_size", "valid_every"}) {
        v[k] = t.at(k);
      }
      v["model"] = full.at("model");
    };
    if (name == "preprocess") {
      v["data"] = full.at("data");
      v["max_sentences"] = t.at("max_sentences");
    } else if (name == "learn-bpe") {
      v["n_merges"] = full.at("subword").at("n_merges");
    } else if (name == "embed-map") {
      for (const char* k : {"k", "min_seed_len", "override_lexicons"}) {
        v[k] = full.at("lexicon").at(k);
      }
    } else if (name == "pseudo-smt") {
      v["lexicon"] = full.at("lexicon");
      v["pseudo_limit"] = t.at("pseudo_limit");
    } else if (name == "pretrain-mass") {
      train_common();
      v["mass_fraction"] = t.at("mass_fraction");
      v["steps"] = t.at("mass_pretrain_steps");
    } else if (name == "finetune-mass") {
      train_common();
      v["mass_fraction"] = t.at("mass_fraction");
      v["steps"] = t.at("mass_finetune_steps");
    } else if (name == "train-unmt") {
      train_common();
      v["steps"] = t.at("unmt_steps");
      v["bt_sample_prob"] = t.at("bt_sample_prob");
      v["bt_temperature"] = t.at("bt_temperature");
    } else if (name == "curriculum-search") {
      train_common();
      v["trials"] = t.at("curriculum_trials");
      v["updates"] = t.at("curriculum_updates");
      v["pseudo_limit"] = t.at("pseudo_limit");
    } else if (name == "finetune-pseudo") {
      train_common();
      v["steps"] = t.at("pseudo_finetune_steps");
      v["bt_sample_prob"] = t.at("bt_sample_prob");
      v["bt_temperature"] = t.at("bt_temperature");
      v["pseudo_sources"] = t.at("pseudo_sources");
      v["use_curriculum"] = t.at("use_curriculum");
      v["pseudo_limit"] = t.at("pseudo_limit");
    } else if (name == "offline-bt") {
      v["limit"] = t.at("offline_bt_limit");
      v["source"] = t.at("offline_bt_source");
      v["max_len"] = full.at("decode").at("max_len");
    } else if (name == "bpe-dropout-finetune") {
      train_common();
      v["steps"] = t.at("bpe_dropout_steps");
      v["lr"] = t.at("bpe_dropout_lr");
      v["bt_sample_prob"] = t.at("bt_sample_prob");
      v["bt_temperature"] = t.at("bt_temperature");
      v["subword"] = full.at("subword");
      v["pseudo_limit"] = t.at("pseudo_limit");
      v["source"] = t.at("bpe_dropout_source");
    } else if (name == "translate" || name == "ensemble-translate") {
      v["decode"] = full.at("decode");
      v["ensemble"] = full.at("ensemble");
      v["model"] = full.at("model");  // max_len drives input truncation
    } else if (name == "evaluate") {
      v["evaluate_source"] = cfg_.evaluate_source;
    } else if (name == "postprocess") {
      v["test"] = full.at("data").at("test");
      v["prefix_files"] = full.at("data").at("prefix_files");
    }
    return v;
  }

  // ------------------------------------------------------------------
  // declared inputs per stage (existing artifact files + external data)

  std::vector<std::string> stage_inputs(const std::string& name) const {
    std::vector<std::string> in;
    auto add = [&](const std::string& f) {
      if (!f.empty()) in.push_back(f);
    };
    if (name == "preprocess") {
      for (int i = 0; i < 2; ++i) {
        add(cfg_.data.mono[i]);
        add(cfg_.data.valid[i]);
        add(cfg_.data.test[i]);
        add(cfg_.data.prefix_files[i]);
      }
    } else if (name == "learn-bpe") {
      add(art("preprocess", "mono.0.tok"));
      add(art("preprocess", "mono.1.tok"));
    } else if (name == "extend-vocab") {
      add(art("learn-bpe", "vocab.base.txt"));
      add(art("learn-bpe", "vocab.newside.txt"));
    } else if (name == "embed-map") {
      if (!cfg_.lexicon.override_lexicons[0].empty()) {
        add(cfg_.lexicon.override_lexicons[0]);
        add(cfg_.lexicon.override_lexicons[1]);
      } else {
        add(cfg_.data.embeddings[0]);
        add(cfg_.data.embeddings[1]);
        add(art("preprocess", "mono.0.tok"));
        add(art("preprocess", "mono.1.tok"));
      }
    } else if (name == "pseudo-smt") {
      add(art("embed-map", "lexicon.01.tsv"));
      add(art("embed-map", "lexicon.10.tsv"));
      add(art("preprocess", "mono.0.tok"));
      add(art("preprocess", "mono.1.tok"));
    } else if (name == "pretrain-mass") {
      add(art("learn-bpe", "bpe.base.codes"));
      add(art("learn-bpe", "vocab.base.txt"));
      add(art("preprocess", "mono.0.tok"));
      add(art("preprocess", "valid.0.tok"));
    } else if (name == "finetune-mass") {
      add(art("pretrain-mass", "checkpoint.bin"));
      add(art("learn-bpe", "bpe.base.codes"));
      add(art("learn-bpe", "bpe.joint.codes"));
      add(art("extend-vocab", "vocab.final.txt"));
      add(art("preprocess", "mono.0.tok"));
      add(art("preprocess", "mono.1.tok"));
    } else if (name == "train-unmt") {
      add(art("finetune-mass", "checkpoint.bin"));
      add(art("preprocess", "mono.0.tok"));
      add(art("preprocess", "mono.1.tok"));
      add(art("preprocess", "valid.0.tok"));
      add(art("preprocess", "valid.1.tok"));
    } else if (name == "curriculum-search") {
      add(art("train-unmt", "checkpoint.bin"));
      add(art("pseudo-smt", "pseudo_smt.01.src"));
      add(art("pseudo-smt", "pseudo_smt.10.src"));
      add(art("preprocess", "valid.0.tok"));
      add(art("preprocess", "valid.1.tok"));
    } else if (name == "finetune-pseudo") {
      add(art("train-unmt", "checkpoint.bin"));
      for (const auto& s : cfg_.trainer.pseudo_sources) {
        std::string base = s == "pseudo-smt" ? "pseudo_smt" : "pseudo_nmt";
        add(art(s, base + ".01.src"));
        add(art(s, base + ".10.src"));
      }
      if (cfg_.trainer.use_curriculum) add(art("curriculum-search", "weights.json"));
    } else if (name == "offline-bt") {
      add(art(cfg_.trainer.offline_bt_source, "checkpoint.bin"));
      add(art("preprocess", "mono.0.tok"));
      add(art("preprocess", "mono.1.tok"));
    } else if (name == "bpe-dropout-finetune") {
      add(art(cfg_.trainer.bpe_dropout_source, "checkpoint.bin"));
      add(art("pseudo-smt", "pseudo_smt.01.src"));
      add(art("pseudo-smt", "pseudo_smt.10.src"));
      add(art("preprocess", "mono.0.tok"));
      add(art("preprocess", "mono.1.tok"));
    } else if (name == "translate") {
      add(art(resolve_model_stage(), "checkpoint.bin"));
      add(art("preprocess", "test.0.tok"));
      add(art("preprocess", "test.1.tok"));
    } else if (name == "ensemble-translate") {
      for (const auto& s : cfg_.ensemble) add(art(s, "checkpoint.bin"));
      add(art("preprocess", "test.0.tok"));
      add(art("preprocess", "test.1.tok"));
    } else if (name == "evaluate") {
      add(art(cfg_.evaluate_source, "hyp.01.txt"));
      add(art(cfg_.evaluate_source, "hyp.10.txt"));
      add(art("preprocess", "test.0.tok"));
      add(art("preprocess", "test.1.tok"));
    } else if (name == "postprocess") {
      add(art("translate", "hyp.01.txt"));
      add(art("translate", "hyp.10.txt"));
      add(cfg_.data.test[0]);
      add(cfg_.data.test[1]);
      add(art("preprocess", "truecase.0.model"));
      add(art("preprocess", "truecase.1.model"));
    }
    return in;
  }

  // ------------------------------------------------------------------
  // shared loading helpers

  textnorm::LangRules rules_for(int lang) const {
    const std::string& lang_id = cfg_.langs[static_cast<size_t>(lang)];
    if (!cfg_.data.prefix_files[static_cast<size_t>(lang)].empty()) {
      return textnorm::LangRules::load(lang_id, cfg_.data.prefix_files[static_cast<size_t>(lang)]);
    }
    // Upper Sorbian uses the Czech rule set
    return textnorm::LangRules::builtin(lang_id == "hsb" ? "cs" : lang_id);
  }

  subword::MergeTable load_table(const std::string& which) const {
    return subword::MergeTable::load(art("learn-bpe", "bpe." + which + ".codes"));
  }

  subword::Vocabulary load_vocab(const std::string& name) const {
    if (name == "base") return subword::Vocabulary::load(art("learn-bpe", "vocab.base.txt"));
    if (name == "newside") return subword::Vocabulary::load(art("learn-bpe", "vocab.newside.txt"));
    return subword::Vocabulary::load(art("extend-vocab", "vocab.final.txt"));
  }

  int max_tokens() const { return cfg_.model.max_len - 2; }

  trainer::IdCorpus encode_corpus(const std::vector<std::string>& lines,
                                  const subword::MergeTable& table,
                                  const subword::Vocabulary& vocab) const {
    trainer::IdCorpus out;
    out.reserve(lines.size());
    for (const auto& l : lines) {
      auto ids = subword::encode_line(l, table, vocab);
      if (static_cast<int>(ids.size()) > max_tokens()) ids.resize(static_cast<size_t>(max_tokens()));
      out.push_back(std::move(ids));
    }
    return out;
  }

  std::vector<trainer::IdPair> make_valid_pairs(const subword::MergeTable& t0,
                                                const subword::MergeTable& t1,
                                                const subword::Vocabulary& vocab, int dir) const {
    auto v0 = read_lines(art("preprocess", "valid.0.tok"));
    auto v1 = read_lines(art("preprocess", "valid.1.tok"));
    require(v0.size() == v1.size(), "validation files are not aligned");
    auto ids0 = encode_corpus(v0, t0, vocab);
    auto ids1 = encode_corpus(v1, t1, vocab);
    std::vector<trainer::IdPair> pairs;
    for (size_t i = 0; i < ids0.size(); ++i) {
      if (ids0[i].empty() || ids1[i].empty()) continue;
      if (dir == 0) {
        pairs.push_back({ids0[i], ids1[i], 0, 1});
      } else {
        pairs.push_back({ids1[i], ids0[i], 1, 0});
      }
    }
    require(!pairs.empty(), "validation set is empty after preprocessing");
    return pairs;
  }

  // Pseudo bitext -> id pairs for training direction `dir` (0: lang0->lang1).
  std::vector<trainer::IdPair> load_pseudo_pairs(const std::string& stage,
                                                 const std::string& base, int dir,
                                                 const subword::MergeTable& t0,
                                                 const subword::MergeTable& t1,
                                                 const subword::Vocabulary& vocab) const {
    std::string prefix = art(stage, base + (dir == 0 ? ".01" : ".10"));
    Bitext bt = Bitext::load(prefix);
    std::vector<trainer::IdPair> pairs;
    long limit = cfg_.trainer.pseudo_limit;
    for (const auto& p : bt.pairs) {
      if (limit > 0 && static_cast<long>(pairs.size()) >= limit) break;
      const subword::MergeTable& ts = dir == 0 ? t0 : t1;
      const subword::MergeTable& tt = dir == 0 ? t1 : t0;
      auto src = subword::encode_line(p.src, ts, vocab);
      auto tgt = subword::encode_line(p.tgt, tt, vocab);
      if (src.empty() || tgt.empty()) continue;
      if (static_cast<int>(src.size()) > max_tokens()) src.resize(static_cast<size_t>(max_tokens()));
      if (static_cast<int>(tgt.size()) > max_tokens()) tgt.resize(static_cast<size_t>(max_tokens()));
      pairs.push_back({std::move(src), std::move(tgt), dir == 0 ? 0 : 1, dir == 0 ? 1 : 0});
    }
    return pairs;
  }

  trainer::EventSink log_sink(const std::string& stage, std::vector<std::string>& log_lines) const {
    return [&log_lines](const trainer::TrainEvent& ev) {
      if (ev.phase.rfind("valid", 0) != 0) return;
      json j = {{"step", ev.step}, {"direction", ev.phase}, {"loss", ev.loss},
                {"ppl", ev.ppl},   {"lr", ev.lr}};
      log_lines.push_back(j.dump());
    };
  }

  trainer::TrainHyper hyper() const {
    trainer::TrainHyper h;
    h.base_lr = cfg_.trainer.base_lr;
    h.warmup_steps = cfg_.trainer.warmup_steps;
    h.batch_size = cfg_.trainer.batch_size;
    h.mass_fraction = cfg_.trainer.mass_fraction;
    h.bt.sample_prob = cfg_.trainer.bt_sample_prob;
    h.bt.temperature = cfg_.trainer.bt_temperature;
    h.valid_every = cfg_.trainer.valid_every;
    return h;
  }

  decode::DecodeParams decode_params() const {
    decode::DecodeParams dp;
    if (cfg_.decode.mode == "greedy") {
      dp.mode = decode::DecodeParams::Mode::kGreedy;
    } else if (cfg_.decode.mode == "sample") {
      dp.mode = decode::DecodeParams::Mode::kSample;
    } else if (cfg_.decode.mode == "beam") {
      dp.mode = decode::DecodeParams::Mode::kBeam;
    } else {
      fail("unknown decode mode: " + cfg_.decode.mode);
    }
    dp.beam_size = cfg_.decode.beam_size;
    dp.temperature = cfg_.decode.temperature;
    dp.max_len = cfg_.decode.max_len;
    dp.length_penalty = cfg_.decode.length_penalty;
    return dp;
  }

  // ------------------------------------------------------------------
  // stage bodies (each returns its output files)

  std::vector<std::string> dispatch(const std::string& name) {
    if (name == "preprocess") return stage_preprocess();
    if (name == "learn-bpe") return stage_learn_bpe();
    if (name == "extend-vocab") return stage_extend_vocab();
    if (name == "embed-map") return stage_embed_map();
    if (name == "pseudo-smt") return stage_pseudo_smt();
    if (name == "pretrain-mass") return stage_pretrain_mass();
    if (name == "finetune-mass") return stage_finetune_mass();
    if (name == "train-unmt") return stage_train_unmt();
    if (name == "curriculum-search") return stage_curriculum_search();
    if (name == "finetune-pseudo") return stage_finetune_pseudo();
    if (name == "offline-bt") return stage_offline_bt();
    if (name == "bpe-dropout-finetune") return stage_bpe_dropout_finetune();
    if (name == "translate") return stage_translate(false);
    if (name == "ensemble-translate") return stage_translate(true);
    if (name == "evaluate") return stage_evaluate();
    if (name == "postprocess") return stage_postprocess();
    fail("unknown stage: " + name);
  }

  std::vector<std::string> stage_preprocess() {
    std::vector<std::string> outputs;
    for (int lang = 0; lang < 2; ++lang) {
      auto rules = rules_for(lang);
      auto raw = read_lines(cfg_.data.mono[static_cast<size_t>(lang)]);
      if (cfg_.trainer.max_sentences > 0 &&
          static_cast<long>(raw.size()) > cfg_.trainer.max_sentences) {
        raw.resize(static_cast<size_t>(cfg_.trainer.max_sentences));
      }
      std::vector<std::vector<std::string>> tokenized;
      tokenized.reserve(raw.size());
      for (const auto& line : raw) tokenized.push_back(textnorm::normalize_and_tokenize(line, rules));
      auto casing = textnorm::train_truecaser(tokenized);
      auto emit = [&](const std::vector<std::vector<std::string>>& toks) {
        std::vector<std::string> lines;
        lines.reserve(toks.size());
        for (const auto& t : toks) lines.push_back(join(textnorm::truecase(t, casing)));
        return lines;
      };
      std::string suffix = std::to_string(lang);
      write_lines(art("preprocess", "mono." + suffix + ".tok"), emit(tokenized));
      casing.save(art("preprocess", "truecase." + suffix + ".model"));
      outputs.push_back(art("preprocess", "mono." + suffix + ".tok"));
      outputs.push_back(art("preprocess", "truecase." + suffix + ".model"));
      for (const char* split : {"valid", "test"}) {
        const auto& path = std::string(split) == "valid"
                               ? cfg_.data.valid[static_cast<size_t>(lang)]
                               : cfg_.data.test[static_cast<size_t>(lang)];
        std::vector<std::vector<std::string>> toks;
        for (const auto& line : read_lines(path)) {
          toks.push_back(textnorm::normalize_and_tokenize(line, rules));
        }
        std::string out = art("preprocess", std::string(split) + "." + suffix + ".tok");
        write_lines(out, emit(toks));
        outputs.push_back(out);
      }
    }
    return outputs;
  }

  std::vector<std::string> stage_learn_bpe() {
    auto mono0 = read_lines(art("preprocess", "mono.0.tok"));
    auto mono1 = read_lines(art("preprocess", "mono.1.tok"));
    auto base = subword::learn_bpe_lines(mono0, cfg_.subword.n_merges);
    std::vector<std::string> joint_lines = mono0;
    joint_lines.insert(joint_lines.end(), mono1.begin(), mono1.end());
    auto joint = subword::learn_bpe_lines(joint_lines, cfg_.subword.n_merges);
    base.save(art("learn-bpe", "bpe.base.codes"));
    joint.save(art("learn-bpe", "bpe.joint.codes"));

    std::vector<std::string> seg0, seg1;
    seg0.reserve(mono0.size());
    for (const auto& l : mono0) seg0.push_back(subword::segment_line(l, base, 0.0, nullptr));
    for (const auto& l : mono1) seg1.push_back(subword::segment_line(l, joint, 0.0, nullptr));
    subword::build_vocab_lines(seg0).save(art("learn-bpe", "vocab.base.txt"));
    subword::build_vocab_lines(seg1).save(art("learn-bpe", "vocab.newside.txt"));
    return {art("learn-bpe", "bpe.base.codes"), art("learn-bpe", "bpe.joint.codes"),
            art("learn-bpe", "vocab.base.txt"), art("learn-bpe", "vocab.newside.txt")};
  }

  std::vector<std::string> stage_extend_vocab() {
    auto base = load_vocab("base");
    auto newside = load_vocab("newside");
    subword::ExtendReport report;
    auto final_vocab = subword::extend_vocab(base, newside, &report);
    final_vocab.save(art("extend-vocab", "vocab.final.txt"));
    std::vector<std::string> lines;
    lines.reserve(report.added.size());
    for (const auto& [tok, id] : report.added) lines.push_back(tok + "\t" + std::to_string(id));
    write_lines(art("extend-vocab", "extension_report.tsv"), lines);
    return {art("extend-vocab", "vocab.final.txt"), art("extend-vocab", "extension_report.tsv")};
  }

  std::vector<std::string> stage_embed_map() {
    std::string out01 = art("embed-map", "lexicon.01.tsv");
    std::string out10 = art("embed-map", "lexicon.10.tsv");
    if (!cfg_.lexicon.override_lexicons[0].empty()) {
      write_file(out01, read_file(cfg_.lexicon.override_lexicons[0]));
      write_file(out10, read_file(cfg_.lexicon.override_lexicons[1]));
      return {out01, out10};
    }
    auto x = lexinduct::EmbeddingTable::load(cfg_.data.embeddings[0]);
    auto y = lexinduct::EmbeddingTable::load(cfg_.data.embeddings[1]);

    auto word_vocab = [&](const std::string& file) {
      std::vector<std::vector<std::string>> toks;
      for (const auto& l : read_lines(art("preprocess", file))) toks.push_back(split_ws(l));
      return subword::build_vocab(toks);
    };
    auto v0 = word_vocab("mono.0.tok");
    auto v1 = word_vocab("mono.1.tok");
    auto seed = lexinduct::extract_identical_seed(v0, v1, cfg_.lexicon.min_seed_len);
    // keep only seed words covered by the embedding tables
    lexinduct::SeedDictionary covered;
    for (const auto& [a, b] : seed.pairs) {
      if (x.has(a) && y.has(b)) covered.pairs.emplace_back(a, b);
    }
    require(!covered.pairs.empty(), "seed dictionary empty after embedding coverage filter");
    lexinduct::Mat w = lexinduct::procrustes_map(x, y, covered);
    lexinduct::induce_lexicon(x.mapped(w), y, cfg_.lexicon.k).save(out01);
    lexinduct::induce_lexicon(y.mapped(w.transpose()), x, cfg_.lexicon.k).save(out10);
    return {out01, out10};
  }

  std::vector<std::string> stage_pseudo_smt() {
    auto mono0 = read_lines(art("preprocess", "mono.0.tok"));
    auto mono1 = read_lines(art("preprocess", "mono.1.tok"));
    long limit = cfg_.trainer.pseudo_limit;
    if (limit > 0) {
      if (static_cast<long>(mono0.size()) > limit) mono0.resize(static_cast<size_t>(limit));
      if (static_cast<long>(mono1.size()) > limit) mono1.resize(static_cast<size_t>(limit));
    }
    auto tok_corpus = [&](const std::vector<std::string>& lines) {
      std::vector<std::vector<std::string>> out;
      out.reserve(lines.size());
      for (const auto& l : lines) out.push_back(split_ws(l));
      return out;
    };
    auto lm0 = lexinduct::NGramLM::train(tok_corpus(mono0), cfg_.lexicon.lm_order,
                                         cfg_.lexicon.lm_delta);
    auto lm1 = lexinduct::NGramLM::train(tok_corpus(mono1), cfg_.lexicon.lm_order,
                                         cfg_.lexicon.lm_delta);
    auto lex01 = lexinduct::TranslationLexicon::load(art("embed-map", "lexicon.01.tsv"));
    auto lex10 = lexinduct::TranslationLexicon::load(art("embed-map", "lexicon.10.tsv"));
    lexinduct::WordTranslateParams wp;
    wp.beam = cfg_.lexicon.beam;
    wp.lambda = cfg_.lexicon.lambda;
    // training pairs for 0->1: synthetic lang0 from authentic lang1
    Bitext bt01 = lexinduct::backtranslate_corpus(mono1, lex10, lm0, wp);
    Bitext bt10 = lexinduct::backtranslate_corpus(mono0, lex01, lm1, wp);
    bt01.save(art("pseudo-smt", "pseudo_smt.01"));
    bt10.save(art("pseudo-smt", "pseudo_smt.10"));
    return {art("pseudo-smt", "pseudo_smt.01.src"), art("pseudo-smt", "pseudo_smt.01.tgt"),
            art("pseudo-smt", "pseudo_smt.01.prov"), art("pseudo-smt", "pseudo_smt.10.src"),
            art("pseudo-smt", "pseudo_smt.10.tgt"), art("pseudo-smt", "pseudo_smt.10.prov")};
  }

  std::vector<std::string> stage_pretrain_mass() {
    auto table = load_table("base");
    auto vocab = load_vocab("base");
    auto corpus = encode_corpus(read_lines(art("preprocess", "mono.0.tok")), table, vocab);
    auto valid = encode_corpus(read_lines(art("preprocess", "valid.0.tok")), table, vocab);
    model::ModelConfig mc = cfg_.model;
    mc.vocab_size = vocab.size();
    model::Parameters params = model::init_model(mc, cfg_.seed);
    std::vector<std::string> log_lines;
    trainer::train_mass(params, mc, {&corpus}, {0}, hyper(), cfg_.trainer.mass_pretrain_steps,
                        derive_seed(cfg_.seed, 11), {&valid}, log_sink("pretrain-mass", log_lines));
    checkpoint::save_checkpoint(art("pretrain-mass", "checkpoint.bin"), params, mc,
                                vocab.content_hash(), cfg_.trainer.mass_pretrain_steps);
    write_lines(art("pretrain-mass", "train_log.jsonl"), log_lines);
    return {art("pretrain-mass", "checkpoint.bin"), art("pretrain-mass", "train_log.jsonl")};
  }

  std::vector<std::string> stage_finetune_mass() {
    auto base_vocab = load_vocab("base");
    auto final_vocab = load_vocab("final");
    auto ck = checkpoint::load_checkpoint(art("pretrain-mass", "checkpoint.bin"),
                                          base_vocab.content_hash());
    model::ModelConfig mc = ck.config;
    model::Parameters params =
        model::extend_embeddings(ck.params, base_vocab, final_vocab, derive_seed(cfg_.seed, 21));
    mc.vocab_size = final_vocab.size();
    if (cfg_.model.adapters_enabled) {
      mc.adapters_enabled = true;
      mc.d_adapter = cfg_.model.d_adapter;
      mc.adapter_on_cross_attention = cfg_.model.adapter_on_cross_attention;
      model::insert_adapters(params, mc, derive_seed(cfg_.seed, 22));
    }
    auto t0 = load_table("base");
    auto t1 = load_table("joint");
    auto corpus0 = encode_corpus(read_lines(art("preprocess", "mono.0.tok")), t0, final_vocab);
    auto corpus1 = encode_corpus(read_lines(art("preprocess", "mono.1.tok")), t1, final_vocab);
    auto valid0 = encode_corpus(read_lines(art("preprocess", "valid.0.tok")), t0, final_vocab);
    auto valid1 = encode_corpus(read_lines(art("preprocess", "valid.1.tok")), t1, final_vocab);
    std::vector<std::string> log_lines;
    trainer::train_mass(params, mc, {&corpus0, &corpus1}, {0, 1}, hyper(),
                        cfg_.trainer.mass_finetune_steps, derive_seed(cfg_.seed, 23),
                        {&valid0, &valid1}, log_sink("finetune-mass", log_lines));
    checkpoint::save_checkpoint(art("finetune-mass", "checkpoint.bin"), params, mc,
                                final_vocab.content_hash(), cfg_.trainer.mass_finetune_steps);
    write_lines(art("finetune-mass", "train_log.jsonl"), log_lines);
    return {art("finetune-mass", "checkpoint.bin"), art("finetune-mass", "train_log.jsonl")};
  }

  std::vector<std::string> stage_train_unmt() {
    auto final_vocab = load_vocab("final");
    auto ck = checkpoint::load_checkpoint(art("finetune-mass", "checkpoint.bin"),
                                          final_vocab.content_hash());
    model::Parameters params = std::move(ck.params);
    model::clear_freeze(params);  // all layers trainable during UNMT
    model::ModelConfig mc = ck.config;
    auto t0 = load_table("base");
    auto t1 = load_table("joint");
    auto corpus0 = encode_corpus(read_lines(art("preprocess", "mono.0.tok")), t0, final_vocab);
    auto corpus1 = encode_corpus(read_lines(art("preprocess", "mono.1.tok")), t1, final_vocab);
    auto valid01 = make_valid_pairs(t0, t1, final_vocab, 0);
    auto valid10 = make_valid_pairs(t0, t1, final_vocab, 1);
    trainer::UnmtOptions opts;
    opts.steps = cfg_.trainer.unmt_steps;
    opts.use_pseudo = false;
    std::vector<std::string> log_lines;
    trainer::train_unmt(params, mc, corpus0, corpus1, {}, opts, hyper(),
                        derive_seed(cfg_.seed, 31), valid01, valid10,
                        log_sink("train-unmt", log_lines));
    checkpoint::save_checkpoint(art("train-unmt", "checkpoint.bin"), params, mc,
                                final_vocab.content_hash(), opts.steps);
    write_lines(art("train-unmt", "train_log.jsonl"), log_lines);
    return {art("train-unmt", "checkpoint.bin"), art("train-unmt", "train_log.jsonl")};
  }

  std::vector<std::string> stage_curriculum_search() {
    auto final_vocab = load_vocab("final");
    auto ck = checkpoint::load_checkpoint(art("train-unmt", "checkpoint.bin"),
                                          final_vocab.content_hash());
    auto t0 = load_table("base");
    auto t1 = load_table("joint");
    auto pairs01 = load_pseudo_pairs("pseudo-smt", "pseudo_smt", 0, t0, t1, final_vocab);
    auto pairs10 = load_pseudo_pairs("pseudo-smt", "pseudo_smt", 1, t0, t1, final_vocab);
    std::vector<trainer::IdPair> pairs = pairs01;
    pairs.insert(pairs.end(), pairs10.begin(), pairs10.end());
    auto scored = trainer::curriculum_score(ck.params, ck.config, pairs,
                                            cfg_.trainer.batch_size);
    auto valid01 = make_valid_pairs(t0, t1, final_vocab, 0);
    auto valid10 = make_valid_pairs(t0, t1, final_vocab, 1);
    std::vector<trainer::CurriculumTrial> trials;
    auto weights = trainer::curriculum_search(
        cfg_.trainer.curriculum_trials, cfg_.trainer.curriculum_updates, ck.params, ck.config,
        pairs, scored, valid01, valid10, hyper(), derive_seed(cfg_.seed, 41), nullptr, &trials);
    json wj = {{"w", weights.w}};
    write_file(art("curriculum-search", "weights.json"), wj.dump(2) + "\n");
    std::vector<std::string> lines;
    for (const auto& t : trials) {
      lines.push_back(json{{"trial", t.trial}, {"weights", t.weights.w},
                           {"objective", t.objective}}
                          .dump());
    }
    write_lines(art("curriculum-search", "trials.jsonl"), lines);
    return {art("curriculum-search", "weights.json"), art("curriculum-search", "trials.jsonl")};
  }

  std::vector<std::string> stage_finetune_pseudo() {
    auto final_vocab = load_vocab("final");
    auto ck = checkpoint::load_checkpoint(art("train-unmt", "checkpoint.bin"),
                                          final_vocab.content_hash());
    model::Parameters params = std::move(ck.params);
    model::ModelConfig mc = ck.config;
    auto t0 = load_table("base");
    auto t1 = load_table("joint");
    std::vector<trainer::IdPair> pairs;
    for (const auto& s : cfg_.trainer.pseudo_sources) {
      std::string base = s == "pseudo-smt" ? "pseudo_smt" : "pseudo_nmt";
      auto p01 = load_pseudo_pairs(s, base, 0, t0, t1, final_vocab);
      auto p10 = load_pseudo_pairs(s, base, 1, t0, t1, final_vocab);
      pairs.insert(pairs.end(), p01.begin(), p01.end());
      pairs.insert(pairs.end(), p10.begin(), p10.end());
    }
    require(!pairs.empty(), "finetune-pseudo: no pseudo-parallel pairs");
    trainer::UnmtOptions opts;
    opts.steps = cfg_.trainer.pseudo_finetune_steps;
    opts.use_pseudo = true;
    if (cfg_.trainer.use_curriculum) {
      json wj = json::parse(read_file(art("curriculum-search", "weights.json")));
      trainer::CurriculumWeights w;
      for (int i = 0; i < 4; ++i) w.w[static_cast<size_t>(i)] = wj.at("w")[static_cast<size_t>(i)].get<double>();
      auto scored = trainer::curriculum_score(params, mc, pairs, cfg_.trainer.batch_size);
      opts.pseudo_order = trainer::order_by(scored, w);
    }
    auto corpus0 = encode_corpus(read_lines(art("preprocess", "mono.0.tok")), t0, final_vocab);
    auto corpus1 = encode_corpus(read_lines(art("preprocess", "mono.1.tok")), t1, final_vocab);
    auto valid01 = make_valid_pairs(t0, t1, final_vocab, 0);
    auto valid10 = make_valid_pairs(t0, t1, final_vocab, 1);
    std::vector<std::string> log_lines;
    trainer::train_unmt(params, mc, corpus0, corpus1, pairs, opts, hyper(),
                        derive_seed(cfg_.seed, 51), valid01, valid10,
                        log_sink("finetune-pseudo", log_lines));
    checkpoint::save_checkpoint(art("finetune-pseudo", "checkpoint.bin"), params, mc,
                                final_vocab.content_hash(), opts.steps);
    write_lines(art("finetune-pseudo", "train_log.jsonl"), log_lines);
    return {art("finetune-pseudo", "checkpoint.bin"), art("finetune-pseudo", "train_log.jsonl")};
  }

  std::vector<std::string> stage_offline_bt() {
    auto final_vocab = load_vocab("final");
    auto ck = checkpoint::load_checkpoint(art(cfg_.trainer.offline_bt_source, "checkpoint.bin"),
                                          final_vocab.content_hash());
    auto t0 = load_table("base");
    auto t1 = load_table("joint");
    trainer::LangCodec c0{&t0, &final_vocab};
    trainer::LangCodec c1{&t1, &final_vocab};
    auto mono0 = read_lines(art("preprocess", "mono.0.tok"));
    auto mono1 = read_lines(art("preprocess", "mono.1.tok"));
    long limit = cfg_.trainer.offline_bt_limit;
    if (limit > 0) {
      if (static_cast<long>(mono0.size()) > limit) mono0.resize(static_cast<size_t>(limit));
      if (static_cast<long>(mono1.size()) > limit) mono1.resize(static_cast<size_t>(limit));
    }
    decode::DecodeParams dp;  // greedy for offline BT
    dp.mode = decode::DecodeParams::Mode::kGreedy;
    dp.max_len = cfg_.decode.max_len;
    // training pairs for 0->1 come from translating lang1 monolingual to lang0
    Bitext bt01 = trainer::offline_backtranslate(ck.params, ck.config, mono1, 1, 0, c1, c0, dp);
    Bitext bt10 = trainer::offline_backtranslate(ck.params, ck.config, mono0, 0, 1, c0, c1, dp);
    bt01.save(art("offline-bt", "pseudo_nmt.01"));
    bt10.save(art("offline-bt", "pseudo_nmt.10"));
    return {art("offline-bt", "pseudo_nmt.01.src"), art("offline-bt", "pseudo_nmt.01.tgt"),
            art("offline-bt", "pseudo_nmt.01.prov"), art("offline-bt", "pseudo_nmt.10.src"),
            art("offline-bt", "pseudo_nmt.10.tgt"), art("offline-bt", "pseudo_nmt.10.prov")};
  }

  std::vector<std::string> stage_bpe_dropout_finetune() {
    auto final_vocab = load_vocab("final");
    auto ck = checkpoint::load_checkpoint(art(cfg_.trainer.bpe_dropout_source, "checkpoint.bin"),
                                          final_vocab.content_hash());
    model::Parameters params = std::move(ck.params);
    model::ModelConfig mc = ck.config;
    auto t0 = load_table("base");
    auto t1 = load_table("joint");

    subword::DropoutParams drop{cfg_.subword.dropout_p, derive_seed(cfg_.seed, 61)};
    // oversampled lang1 monolingual data with dropout segmentation
    auto mono1_lines = read_lines(art("preprocess", "mono.1.tok"));
    auto seg1 = subword::oversample_with_dropout(mono1_lines, cfg_.subword.oversample_factor, t1,
                                                 drop);
    trainer::IdCorpus corpus1;
    corpus1.reserve(seg1.size());
    for (const auto& l : seg1) {
      auto ids = subword::ids_of_segmented(split_ws(l), final_vocab);
      if (static_cast<int>(ids.size()) > max_tokens()) ids.resize(static_cast<size_t>(max_tokens()));
      if (!ids.empty()) corpus1.push_back(std::move(ids));
    }
    auto corpus0 = encode_corpus(read_lines(art("preprocess", "mono.0.tok")), t0, final_vocab);

    // oversampled pseudo-parallel data; dropout only on the lang1 side
    std::vector<trainer::IdPair> pairs;
    for (int dir = 0; dir < 2; ++dir) {
      Bitext bt = Bitext::load(art("pseudo-smt", std::string("pseudo_smt.") +
                                                     (dir == 0 ? "01" : "10")));
      long limit = cfg_.trainer.pseudo_limit;
      if (limit > 0 && static_cast<long>(bt.pairs.size()) > limit) {
        bt.pairs.resize(static_cast<size_t>(limit));
      }
      const subword::MergeTable& ts = dir == 0 ? t0 : t1;
      const subword::MergeTable& tt = dir == 0 ? t1 : t0;
      auto side = dir == 0 ? subword::DropoutSide::kTgt : subword::DropoutSide::kSrc;
      subword::DropoutParams pdrop{cfg_.subword.dropout_p, derive_seed(cfg_.seed, 62 + dir)};
      Bitext seg = subword::oversample_with_dropout(bt, cfg_.subword.oversample_factor, ts, tt,
                                                    pdrop, side);
      for (const auto& p : seg.pairs) {
        auto src = subword::ids_of_segmented(split_ws(p.src), final_vocab);
        auto tgt = subword::ids_of_segmented(split_ws(p.tgt), final_vocab);
        if (src.empty() || tgt.empty()) continue;
        if (static_cast<int>(src.size()) > max_tokens()) src.resize(static_cast<size_t>(max_tokens()));
        if (static_cast<int>(tgt.size()) > max_tokens()) tgt.resize(static_cast<size_t>(max_tokens()));
        pairs.push_back({std::move(src), std::move(tgt), dir == 0 ? 0 : 1, dir == 0 ? 1 : 0});
      }
    }
    auto valid01 = make_valid_pairs(t0, t1, final_vocab, 0);
    auto valid10 = make_valid_pairs(t0, t1, final_vocab, 1);
    trainer::UnmtOptions opts;
    opts.steps = cfg_.trainer.bpe_dropout_steps;
    opts.use_pseudo = !pairs.empty();
    trainer::TrainHyper h = hyper();
    if (cfg_.trainer.bpe_dropout_lr > 0.0) h.base_lr = cfg_.trainer.bpe_dropout_lr;
    std::vector<std::string> log_lines;
    trainer::train_unmt(params, mc, corpus0, corpus1, pairs, opts, h,
                        derive_seed(cfg_.seed, 63), valid01, valid10,
                        log_sink("bpe-dropout-finetune", log_lines));
    checkpoint::save_checkpoint(art("bpe-dropout-finetune", "checkpoint.bin"), params, mc,
                                final_vocab.content_hash(), opts.steps);
    write_lines(art("bpe-dropout-finetune", "train_log.jsonl"), log_lines);
    return {art("bpe-dropout-finetune", "checkpoint.bin"),
            art("bpe-dropout-finetune", "train_log.jsonl")};
  }

  std::vector<std::string> stage_translate(bool ensemble) {
    auto final_vocab = load_vocab("final");
    std::vector<checkpoint::Checkpoint> cks;
    if (ensemble) {
      require(!cfg_.ensemble.empty(), "ensemble-translate: config lists no ensemble stages");
      for (const auto& s : cfg_.ensemble) {
        cks.push_back(checkpoint::load_checkpoint(art(s, "checkpoint.bin"),
                                                  final_vocab.content_hash()));
      }
    } else {
      cks.push_back(checkpoint::load_checkpoint(art(resolve_model_stage(), "checkpoint.bin"),
                                                final_vocab.content_hash()));
    }
    std::vector<const model::Parameters*> models;
    for (const auto& c : cks) models.push_back(&c.params);
    const model::ModelConfig& mc = cks[0].config;

    auto t0 = load_table("base");
    auto t1 = load_table("joint");
    trainer::LangCodec c0{&t0, &final_vocab};
    trainer::LangCodec c1{&t1, &final_vocab};
    decode::DecodeParams dp = decode_params();
    std::string stage = ensemble ? "ensemble-translate" : "translate";

    auto translate_file = [&](const std::string& in_file, int src_lang, int tgt_lang,
                              const trainer::LangCodec& cs, const trainer::LangCodec& ct,
                              const std::string& out_file) {
      std::vector<std::string> out;
      auto lines = read_lines(art("preprocess", in_file));
      for (size_t i = 0; i < lines.size(); ++i) {
        auto ids = cs.encode(lines[i]);
        if (static_cast<int>(ids.size()) > max_tokens()) ids.resize(static_cast<size_t>(max_tokens()));
        if (ids.empty()) {
          out.push_back("");
          continue;
        }
        Rng rng(derive_seed(cfg_.seed, 0xDEC0 + i));
        auto res = decode::decode(models, mc, ids, src_lang, tgt_lang, dp, &rng);
        out.push_back(ct.decode_text(res.ids));
      }
      write_lines(art(stage, out_file), out);
    };
    translate_file("test.0.tok", 0, 1, c0, c1, "hyp.01.txt");
    translate_file("test.1.tok", 1, 0, c1, c0, "hyp.10.txt");
    return {art(stage, "hyp.01.txt"), art(stage, "hyp.10.txt")};
  }

  std::vector<std::string> stage_evaluate() {
    auto hyp01 = read_lines(art(cfg_.evaluate_source, "hyp.01.txt"));
    auto hyp10 = read_lines(art(cfg_.evaluate_source, "hyp.10.txt"));
    auto ref1 = read_lines(art("preprocess", "test.1.tok"));
    auto ref0 = read_lines(art("preprocess", "test.0.tok"));
    auto r01 = bleu::bleu(hyp01, ref1);
    auto r10 = bleu::bleu(hyp10, ref0);
    auto rep = [](const bleu::BleuReport& r) {
      return json{{"score", r.score},
                  {"precisions", {r.precisions[0], r.precisions[1], r.precisions[2],
                                  r.precisions[3]}},
                  {"brevity_penalty", r.brevity_penalty},
                  {"hyp_len", r.hyp_len},
                  {"ref_len", r.ref_len}};
    };
    json j;
    j[cfg_.langs[0] + "-" + cfg_.langs[1]] = rep(r01);
    j[cfg_.langs[1] + "-" + cfg_.langs[0]] = rep(r10);
    write_file(art("evaluate", "bleu.json"), j.dump(2) + "\n");
    return {art("evaluate", "bleu.json")};
  }

  std::vector<std::string> stage_postprocess() {
    auto cm0 = textnorm::CasingModel::load(art("preprocess", "truecase.0.model"));
    auto cm1 = textnorm::CasingModel::load(art("preprocess", "truecase.1.model"));
    auto process = [&](const std::string& hyp_file, const std::string& src_file,
                       const textnorm::CasingModel& cm, int tgt_lang,
                       const std::string& out_file) {
      auto hyps = read_lines(art("translate", hyp_file));
      auto srcs = read_lines(src_file);
      require(hyps.size() == srcs.size(), "postprocess: hypothesis/source line counts differ");
      auto rules = rules_for(tgt_lang);
      std::vector<std::string> out;
      out.reserve(hyps.size());
      for (size_t i = 0; i < hyps.size(); ++i) {
        out.push_back(textnorm::postprocess(split_ws(hyps[i]), srcs[i], cm, rules));
      }
      write_lines(art("postprocess", out_file), out);
    };
    process("hyp.01.txt", cfg_.data.test[0], cm1, 1, "hyp.01.final.txt");
    process("hyp.10.txt", cfg_.data.test[1], cm0, 0, "hyp.10.final.txt");
    return {art("postprocess", "hyp.01.final.txt"), art("postprocess", "hyp.10.final.txt")};
  }

  PipelineConfig cfg_;
};

}  // namespace umt::pipe
