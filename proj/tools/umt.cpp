// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Stage-oriented command line: `umt <stage> --config <file>` plus the demo
// dataset generator and a whole-recipe runner.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "umt/demo.hpp"
#include "umt/pipeline.hpp"

namespace {

umt::pipe::PipelineConfig load_config(const std::string& path, uint64_t seed_override,
                                      bool has_seed, const std::string& workdir_override) {
  auto cfg = umt::pipe::PipelineConfig::load(path);
  if (has_seed) cfg.seed = seed_override;
  if (!workdir_override.empty()) cfg.workdir = workdir_override;
  return cfg;
}

void write_demo_config(const std::string& out_dir, uint64_t seed) {
  umt::pipe::PipelineConfig cfg;
  cfg.seed = seed;
  cfg.langs = {"de", "hsb"};
  cfg.workdir = out_dir + "/work";
  cfg.data.mono = {out_dir + "/mono.de.txt", out_dir + "/mono.hsb.txt"};
  cfg.data.valid = {out_dir + "/valid.de.txt", out_dir + "/valid.hsb.txt"};
  cfg.data.test = {out_dir + "/test.de.txt", out_dir + "/test.hsb.txt"};
  cfg.data.embeddings = {out_dir + "/emb.de.vec", out_dir + "/emb.hsb.vec"};
  cfg.subword.n_merges = 500;
  cfg.subword.dropout_p = 0.1;
  cfg.subword.oversample_factor = 10;
  cfg.model.n_layers_enc = 2;
  cfg.model.n_layers_dec = 2;
  cfg.model.d_model = 64;
  cfg.model.d_ffn = 256;
  cfg.model.n_heads = 4;
  cfg.model.max_len = 64;
  cfg.trainer.base_lr = 7e-4;
  cfg.trainer.warmup_steps = 300;
  cfg.trainer.batch_size = 16;
  cfg.trainer.mass_pretrain_steps = 1000;
  cfg.trainer.mass_finetune_steps = 600;
  cfg.trainer.unmt_steps = 200;
  cfg.trainer.pseudo_finetune_steps = 16000;
  cfg.trainer.bpe_dropout_steps = 800;
  cfg.trainer.bpe_dropout_lr = 2e-4;
  cfg.trainer.pseudo_limit = 8000;
  cfg.trainer.offline_bt_limit = 1500;
  cfg.decode.mode = "beam";
  cfg.decode.beam_size = 5;
  cfg.decode.length_penalty = 1.0;
  cfg.save(out_dir + "/config.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"umtbench: desk-scale unsupervised machine translation workbench"};
  app.require_subcommand(1);

  std::string config_path, workdir_override;
  uint64_t seed_override = 0;
  bool has_seed = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "pipeline config JSON")->required();
    sub->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    sub->add_option("--workdir", workdir_override, "override the config workdir");
  };

  std::vector<CLI::App*> stage_subs;
  for (const auto& stage : umt::pipe::stage_names()) {
    CLI::App* sub = app.add_subcommand(stage, "run the '" + stage + "' stage");
    add_common(sub);
    stage_subs.push_back(sub);
  }

  CLI::App* run_all = app.add_subcommand("run-all", "run the full recipe in order");
  add_common(run_all);
  std::string stages_csv;
  run_all->add_option("--stages", stages_csv, "comma-separated stage list (default recipe)");

  CLI::App* make_demo = app.add_subcommand("make-demo", "generate the cipher demo dataset");
  std::string demo_out = "demo";
  umt::demo::DemoOptions demo_opts;
  make_demo->add_option("--out", demo_out, "output directory");
  make_demo->add_option("--lines", demo_opts.lines, "monolingual lines per side");
  make_demo->add_option("--valid-lines", demo_opts.valid_lines, "validation lines");
  make_demo->add_option("--test-lines", demo_opts.test_lines, "test lines");
  make_demo->add_option("--seed", demo_opts.seed, "generator seed");
  make_demo->add_option("--embed-noise", demo_opts.embed_noise, "embedding noise level");

  CLI11_PARSE(app, argc, argv);

  try {
    if (make_demo->parsed()) {
      std::filesystem::create_directories(demo_out);
      umt::demo::generate(demo_out, demo_opts);
      write_demo_config(demo_out, demo_opts.seed);
      std::fprintf(stderr, "demo dataset written to %s (config: %s/config.json)\n",
                   demo_out.c_str(), demo_out.c_str());
      return 0;
    }
    auto cfg = load_config(config_path, seed_override, has_seed, workdir_override);
    umt::pipe::Pipeline pipeline(cfg);
    if (run_all->parsed()) {
      std::vector<std::string> stages;
      if (!stages_csv.empty()) {
        size_t start = 0;
        while (start <= stages_csv.size()) {
          size_t comma = stages_csv.find(',', start);
          if (comma == std::string::npos) comma = stages_csv.size();
          if (comma > start) stages.push_back(stages_csv.substr(start, comma - start));
          start = comma + 1;
        }
      } else {
        stages = {"preprocess",    "learn-bpe",      "extend-vocab", "embed-map",
                  "pseudo-smt",    "pretrain-mass",  "finetune-mass", "train-unmt",
                  "finetune-pseudo", "translate",    "evaluate",     "postprocess"};
      }
      for (const auto& s : stages) pipeline.run_stage(s);
      return 0;
    }
    for (size_t i = 0; i < umt::pipe::stage_names().size(); ++i) {
      if (stage_subs[i]->parsed()) {
        pipeline.run_stage(umt::pipe::stage_names()[i]);
        return 0;
      }
    }
    std::fprintf(stderr, "no subcommand\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
