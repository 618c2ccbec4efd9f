// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0

#include "umt/pipeline.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>

#include "umt/demo.hpp"

using namespace umt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

model::ModelConfig tiny_config(int vocab) {
  model::ModelConfig cfg;
  cfg.n_layers_enc = 1;
  cfg.n_layers_dec = 1;
  cfg.d_model = 16;
  cfg.d_ffn = 32;
  cfg.n_heads = 2;
  cfg.vocab_size = vocab;
  cfg.max_len = 48;
  return cfg;
}

// Small demo-backed pipeline config for fast stage runs.
pipe::PipelineConfig demo_pipeline_config(const std::string& dir) {
  demo::DemoOptions opts;
  opts.lines = 300;
  opts.valid_lines = 30;
  opts.test_lines = 30;
  demo::generate(dir, opts);
  pipe::PipelineConfig cfg;
  cfg.seed = 5;
  cfg.workdir = dir + "/work";
  cfg.data.mono = {dir + "/mono.de.txt", dir + "/mono.hsb.txt"};
  cfg.data.valid = {dir + "/valid.de.txt", dir + "/valid.hsb.txt"};
  cfg.data.test = {dir + "/test.de.txt", dir + "/test.hsb.txt"};
  cfg.data.embeddings = {dir + "/emb.de.vec", dir + "/emb.hsb.vec"};
  cfg.subword.n_merges = 120;
  cfg.model = tiny_config(0);
  cfg.trainer.mass_pretrain_steps = 12;
  cfg.trainer.mass_finetune_steps = 8;
  cfg.trainer.unmt_steps = 8;
  cfg.trainer.pseudo_finetune_steps = 8;
  cfg.trainer.bpe_dropout_steps = 4;
  cfg.trainer.valid_every = 0;
  cfg.trainer.batch_size = 8;
  cfg.trainer.pseudo_limit = 100;
  cfg.trainer.offline_bt_limit = 20;
  cfg.trainer.curriculum_trials = 2;
  cfg.trainer.curriculum_updates = 4;
  cfg.decode.mode = "greedy";
  cfg.decode.max_len = 32;
  return cfg;
}

}  // namespace

TEST_CASE("checkpoint save/load round-trip is bitwise exact") {
  TempDir tmp("umt_ckpt_test");
  auto cfg = tiny_config(20);
  model::Parameters p = model::init_model(cfg, 3);
  p.freeze("enc.0.attn.wq");
  trainer::OptimState opt = trainer::OptimState::create(p, 2e-4, 50);
  opt.step = 7;
  Rng rng(4);
  for (auto& m : opt.m) model::detail::fill_uniform(m, 0.1, rng);
  for (auto& v : opt.v) model::detail::fill_uniform(v, 0.1, rng);

  std::string path = tmp.str() + "/ck.bin";
  checkpoint::save_checkpoint(path, p, cfg, "hash123", 42, &opt);
  auto ck = checkpoint::load_checkpoint(path, "hash123");
  CHECK(ck.step == 42);
  CHECK(ck.vocab_hash == "hash123");
  REQUIRE(ck.params.names() == p.names());
  for (const auto& n : p.names()) CHECK(ck.params.at(n) == p.at(n));
  CHECK(ck.params.freeze_mask() == p.freeze_mask());
  REQUIRE(ck.opt.has_value());
  CHECK(ck.opt->step == 7);
  CHECK(ck.opt->base_lr == 2e-4);
  REQUIRE(ck.opt->names == opt.names);
  for (size_t i = 0; i < opt.names.size(); ++i) {
    CHECK(ck.opt->m[i] == opt.m[i]);
    CHECK(ck.opt->v[i] == opt.v[i]);
  }
  CHECK(checkpoint::config_from_json(checkpoint::config_to_json(cfg)).d_model == cfg.d_model);

  SECTION("wrong vocabulary hash is vocabulary drift") {
    CHECK_THROWS_WITH(checkpoint::load_checkpoint(path, "other"),
                      Catch::Matchers::ContainsSubstring("vocabulary drift"));
  }
  SECTION("truncated file is rejected") {
    std::string blob = read_file(path);
    write_file(tmp.str() + "/trunc.bin", blob.substr(0, blob.size() / 2));
    CHECK_THROWS_WITH(checkpoint::load_checkpoint(tmp.str() + "/trunc.bin", ""),
                      Catch::Matchers::ContainsSubstring("truncated"));
  }
}

TEST_CASE("checkpoint resume equals uninterrupted training") {
  auto cfg = tiny_config(24);
  Rng rng(8);
  std::vector<trainer::IdPair> pairs;
  for (int i = 0; i < 30; ++i) {
    trainer::IdSentence s;
    for (int k = rng.uniform_int(3, 6); k > 0; --k) {
      s.push_back(rng.uniform_int(subword::kNumSpecials, 23));
    }
    pairs.push_back({s, s, 0, 1});
  }
  trainer::TrainHyper hyper;
  hyper.batch_size = 8;
  hyper.warmup_steps = 10;

  auto run_steps = [&](model::Parameters& p, trainer::OptimState& opt, int steps,
                       uint64_t batch_seed) {
    trainer::detail::IndexCycler cyc(pairs.size(), batch_seed);
    for (int s = 0; s < steps; ++s) {
      std::vector<trainer::IdPair> chunk;
      for (int k = 0; k < hyper.batch_size; ++k) chunk.push_back(pairs[cyc.next()]);
      auto res = trainer::supervised_step(p, cfg, trainer::make_pair_batch(chunk));
      trainer::optimizer_step(p, res.grads, opt);
    }
  };

  // uninterrupted: 10 steps
  model::Parameters p1 = model::init_model(cfg, 9);
  trainer::OptimState o1 = trainer::OptimState::create(p1, 1e-3, 10);
  run_steps(p1, o1, 5, 101);
  run_steps(p1, o1, 5, 102);

  // interrupted: 5 steps, checkpoint, load, 5 more with the same batch stream
  TempDir tmp("umt_resume_test");
  model::Parameters p2 = model::init_model(cfg, 9);
  trainer::OptimState o2 = trainer::OptimState::create(p2, 1e-3, 10);
  run_steps(p2, o2, 5, 101);
  checkpoint::save_checkpoint(tmp.str() + "/ck.bin", p2, cfg, "v", o2.step, &o2);
  auto ck = checkpoint::load_checkpoint(tmp.str() + "/ck.bin", "v");
  REQUIRE(ck.opt.has_value());
  model::Parameters p3 = std::move(ck.params);
  trainer::OptimState o3 = std::move(*ck.opt);
  run_steps(p3, o3, 5, 102);

  CHECK(p3.content_hash() == p1.content_hash());
  CHECK(o3.step == o1.step);
}

TEST_CASE("pipeline config round-trips losslessly") {
  pipe::PipelineConfig cfg;
  cfg.seed = 99;
  cfg.langs = {"de", "hsb"};
  cfg.data.mono = {"a.txt", "b.txt"};
  cfg.trainer.use_curriculum = true;
  cfg.ensemble = {"finetune-pseudo", "bpe-dropout-finetune"};
  cfg.lexicon.lambda = 0.25;
  auto j = cfg.to_json();
  auto back = pipe::PipelineConfig::from_json(j);
  CHECK(back.to_json() == j);

  TempDir tmp("umt_cfg_test");
  cfg.save(tmp.str() + "/c.json");
  auto loaded = pipe::PipelineConfig::load(tmp.str() + "/c.json");
  CHECK(loaded.to_json() == j);
}

TEST_CASE("stage dependencies, memoization and locking") {
  TempDir tmp("umt_pipe_test");
  auto cfg = demo_pipeline_config(tmp.str());
  pipe::Pipeline pl(cfg);

  SECTION("missing dependency names the stage to run") {
    CHECK_THROWS_WITH(pl.run_stage("learn-bpe"),
                      Catch::Matchers::ContainsSubstring("preprocess"));
  }
  SECTION("rerunning a completed stage is skipped as up-to-date") {
    CHECK(pl.run_stage("preprocess"));
    CHECK(!pl.run_stage("preprocess"));  // unchanged inputs: skipped
    // changing an input invalidates the signature
    auto lines = read_lines(cfg.data.mono[0]);
    lines.push_back("neue zeile .");
    write_lines(cfg.data.mono[0], lines);
    CHECK(pl.run_stage("preprocess"));
  }
  SECTION("workdir lock blocks concurrent use") {
    fs::create_directories(cfg.workdir);
    write_file(cfg.workdir + "/.lock", "");
    CHECK_THROWS_WITH(pl.run_stage("preprocess"),
                      Catch::Matchers::ContainsSubstring("locked"));
    fs::remove(cfg.workdir + "/.lock");
    CHECK_NOTHROW(pl.run_stage("preprocess"));
  }
}

TEST_CASE("evaluate stage reports BLEU 100 on identical files") {
  TempDir tmp("umt_eval_test");
  auto cfg = demo_pipeline_config(tmp.str());
  pipe::Pipeline pl(cfg);
  pl.run_stage("preprocess");
  // plant hypotheses identical to the references
  fs::create_directories(pl.stage_dir("translate"));
  write_file(pl.art("translate", "hyp.01.txt"),
             read_file(pl.art("preprocess", "test.1.tok")));
  write_file(pl.art("translate", "hyp.10.txt"),
             read_file(pl.art("preprocess", "test.0.tok")));
  // fabricate a manifest so the dependency check passes
  write_file(pl.art("translate", "manifest.json"), "{\"stage\":\"translate\"}");
  pl.run_stage("evaluate");
  auto j = nlohmann::json::parse(read_file(pl.art("evaluate", "bleu.json")));
  CHECK(j.at("de-hsb").at("score").get<double>() == 100.0);
  CHECK(j.at("hsb-de").at("score").get<double>() == 100.0);
}

TEST_CASE("early pipeline stages run end to end on the demo data") {
  TempDir tmp("umt_stages_test");
  auto cfg = demo_pipeline_config(tmp.str());
  pipe::Pipeline pl(cfg);
  for (const char* s : {"preprocess", "learn-bpe", "extend-vocab", "embed-map", "pseudo-smt"}) {
    CHECK(pl.run_stage(s));
  }
  // vocab extension kept base ids stable
  auto base = subword::Vocabulary::load(pl.art("learn-bpe", "vocab.base.txt"));
  auto final_vocab = subword::Vocabulary::load(pl.art("extend-vocab", "vocab.final.txt"));
  for (int i = 0; i < base.size(); ++i) {
    CHECK(final_vocab.token_of(i) == base.token_of(i));
  }
  // pseudo-smt targets are byte-identical to the preprocessed mono corpora
  auto bt01 = Bitext::load(pl.art("pseudo-smt", "pseudo_smt.01"));
  auto mono1 = read_lines(pl.art("preprocess", "mono.1.tok"));
  REQUIRE(bt01.size() == std::min<size_t>(mono1.size(), 100));
  for (size_t i = 0; i < bt01.size(); ++i) {
    CHECK(bt01.pairs[i].tgt == mono1[i]);
    CHECK(bt01.pairs[i].prov == Provenance::kPseudoSmt);
  }
}

TEST_CASE("training stages and translate/evaluate run at smoke scale") {
  TempDir tmp("umt_train_stages_test");
  auto cfg = demo_pipeline_config(tmp.str());
  pipe::Pipeline pl(cfg);
  for (const char* s : {"preprocess", "learn-bpe", "extend-vocab", "embed-map", "pseudo-smt",
                        "pretrain-mass", "finetune-mass", "train-unmt", "finetune-pseudo",
                        "translate", "evaluate", "postprocess"}) {
    INFO("stage " << s);
    CHECK_NOTHROW(pl.run_stage(s));
  }
  auto j = nlohmann::json::parse(read_file(pl.art("evaluate", "bleu.json")));
  CHECK(j.at("de-hsb").at("score").get<double>() >= 0.0);
  // hypotheses exist, aligned with the test set
  auto hyp = read_lines(pl.art("translate", "hyp.01.txt"));
  auto ref = read_lines(pl.art("preprocess", "test.1.tok"));
  CHECK(hyp.size() == ref.size());
  auto post = read_lines(pl.art("postprocess", "hyp.01.final.txt"));
  CHECK(post.size() == ref.size());

  SECTION("global seed determines artifacts: two runs hash identically") {
    TempDir tmp2("umt_det_test");
    auto cfg2 = demo_pipeline_config(tmp2.str());
    // same seed, fresh workdir; compare artifact hashes of a training stage
    pipe::Pipeline pl2(cfg2);
    for (const char* s : {"preprocess", "learn-bpe", "extend-vocab", "embed-map", "pseudo-smt",
                          "pretrain-mass"}) {
      pl2.run_stage(s);
    }
    CHECK(hash_file(pl2.art("pretrain-mass", "checkpoint.bin")) ==
          hash_file(pl.art("pretrain-mass", "checkpoint.bin")));
  }
}

TEST_CASE("adapter variant of finetune-mass keeps stacks frozen in checkpoint") {
  TempDir tmp("umt_adapter_stage_test");
  auto cfg = demo_pipeline_config(tmp.str());
  cfg.model.adapters_enabled = true;
  cfg.model.d_adapter = 8;
  pipe::Pipeline pl(cfg);
  for (const char* s : {"preprocess", "learn-bpe", "extend-vocab", "pretrain-mass",
                        "finetune-mass"}) {
    pl.run_stage(s);
  }
  auto final_vocab = subword::Vocabulary::load(pl.art("extend-vocab", "vocab.final.txt"));
  auto ck = checkpoint::load_checkpoint(pl.art("finetune-mass", "checkpoint.bin"),
                                        final_vocab.content_hash());
  CHECK(model::has_adapters(ck.params));
  CHECK(ck.params.is_frozen("enc.0.attn.wq"));
  CHECK(!ck.params.is_frozen("embed.tokens"));

  // pretrained encoder stack must be bit-identical in the fine-tuned model
  auto base_vocab = subword::Vocabulary::load(pl.art("learn-bpe", "vocab.base.txt"));
  auto ck0 = checkpoint::load_checkpoint(pl.art("pretrain-mass", "checkpoint.bin"),
                                         base_vocab.content_hash());
  CHECK(ck.params.at("enc.0.attn.wq") == ck0.params.at("enc.0.attn.wq"));
}
