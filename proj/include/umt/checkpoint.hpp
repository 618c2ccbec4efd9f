// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-describing checkpoint container: magic, a JSON manifest (config,
// vocabulary hash, step, tensor directory, optimizer directory) and raw
// little-endian float64 payloads. Tensors are stored column-major as laid
// out in memory; files round-trip bit-exactly.

#pragma once

#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "umt/model.hpp"
#include "umt/trainer.hpp"
#include "umt/util.hpp"

namespace umt::checkpoint {

using nlohmann::json;

inline constexpr char kMagic[9] = "UMTCKPT1";
inline constexpr int kVersion = 1;

inline json config_to_json(const model::ModelConfig& c) {
  return json{{"n_layers_enc", c.n_layers_enc},
              {"n_layers_dec", c.n_layers_dec},
              {"d_model", c.d_model},
              {"d_ffn", c.d_ffn},
              {"n_heads", c.n_heads},
              {"vocab_size", c.vocab_size},
              {"max_len", c.max_len},
              {"adapters_enabled", c.adapters_enabled},
              {"d_adapter", c.d_adapter},
              {"use_lang_embeddings", c.use_lang_embeddings},
              {"n_langs", c.n_langs},
              {"label_smoothing", c.label_smoothing},
              {"tie_embeddings", c.tie_embeddings},
              {"adapter_on_cross_attention", c.adapter_on_cross_attention}};
}

inline model::ModelConfig config_from_json(const json& j) {
  model::ModelConfig c;
  c.n_layers_enc = j.at("n_layers_enc").get<int>();
  c.n_layers_dec = j.at("n_layers_dec").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.d_ffn = j.at("d_ffn").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.adapters_enabled = j.value("adapters_enabled", false);
  c.d_adapter = j.value("d_adapter", 16);
  c.use_lang_embeddings = j.value("use_lang_embeddings", true);
  c.n_langs = j.value("n_langs", 2);
  c.label_smoothing = j.value("label_smoothing", 0.1);
  c.tie_embeddings = j.value("tie_embeddings", false);
  c.adapter_on_cross_attention = j.value("adapter_on_cross_attention", false);
  return c;
}

struct Checkpoint {
  model::Parameters params;
  model::ModelConfig config;
  std::string vocab_hash;
  long step = 0;
  std::optional<trainer::OptimState> opt;
};

inline void save_checkpoint(const std::string& path, const model::Parameters& params,
                            const model::ModelConfig& cfg, const std::string& vocab_hash,
                            long step, const trainer::OptimState* opt = nullptr) {
  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = config_to_json(cfg);
  manifest["vocab_hash"] = vocab_hash;
  manifest["step"] = step;
  manifest["freeze"] = std::vector<std::string>(params.freeze_mask().begin(),
                                                params.freeze_mask().end());

  uint64_t offset = 0;
  json tensors = json::array();
  for (const auto& name : params.names()) {
    const model::Mat& t = params.at(name);
    tensors.push_back(json{{"name", name},
                           {"dtype", "f64"},
                           {"shape", {t.rows(), t.cols()}},
                           {"offset", offset}});
    offset += static_cast<uint64_t>(t.size()) * sizeof(double);
  }
  manifest["tensors"] = tensors;

  if (opt != nullptr) {
    json oj;
    oj["step"] = opt->step;
    oj["base_lr"] = opt->base_lr;
    oj["warmup_steps"] = opt->warmup_steps;
    oj["beta1"] = opt->beta1;
    oj["beta2"] = opt->beta2;
    oj["eps_adam"] = opt->eps_adam;
    json moments = json::array();
    for (size_t i = 0; i < opt->names.size(); ++i) {
      uint64_t m_off = offset;
      offset += static_cast<uint64_t>(opt->m[i].size()) * sizeof(double);
      uint64_t v_off = offset;
      offset += static_cast<uint64_t>(opt->v[i].size()) * sizeof(double);
      moments.push_back(json{{"name", opt->names[i]},
                             {"shape", {opt->m[i].rows(), opt->m[i].cols()}},
                             {"m_offset", m_off},
                             {"v_offset", v_off}});
    }
    oj["moments"] = moments;
    manifest["opt"] = oj;
  }

  std::string mstr = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  uint64_t mlen = mstr.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof mlen);
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  auto write_mat = [&out, &path](const model::Mat& t) {
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(static_cast<size_t>(t.size()) * sizeof(double)));
    if (!out) fail("checkpoint write failed: " + path);
  };
  for (const auto& name : params.names()) write_mat(params.at(name));
  if (opt != nullptr) {
    for (size_t i = 0; i < opt->names.size(); ++i) {
      write_mat(opt->m[i]);
      write_mat(opt->v[i]);
    }
  }
  if (!out) fail("checkpoint write failed: " + path);
}

// expected_vocab_hash, when nonempty, must match the recorded hash
// ("vocabulary drift" otherwise).
inline Checkpoint load_checkpoint(const std::string& path,
                                  const std::string& expected_vocab_hash = "") {
  std::string blob = read_file(path);
  require(blob.size() >= 16, "checkpoint truncated: " + path);
  require(std::memcmp(blob.data(), kMagic, 8) == 0, "not a checkpoint file: " + path);
  uint64_t mlen = 0;
  std::memcpy(&mlen, blob.data() + 8, sizeof mlen);
  require(blob.size() >= 16 + mlen, "checkpoint truncated: " + path);
  json manifest = json::parse(blob.substr(16, mlen));
  require(manifest.at("version").get<int>() == kVersion,
          "unsupported checkpoint version in " + path);

  Checkpoint ck;
  ck.config = config_from_json(manifest.at("config"));
  ck.vocab_hash = manifest.at("vocab_hash").get<std::string>();
  ck.step = manifest.at("step").get<long>();
  if (!expected_vocab_hash.empty() && expected_vocab_hash != ck.vocab_hash) {
    fail("vocabulary drift: checkpoint " + path + " was written for a different vocabulary");
  }

  const char* payload = blob.data() + 16 + mlen;
  const size_t payload_size = blob.size() - 16 - mlen;
  auto read_mat = [&](model::Mat& t, uint64_t off) {
    size_t bytes = static_cast<size_t>(t.size()) * sizeof(double);
    require(off + bytes <= payload_size, "checkpoint truncated: " + path);
    std::memcpy(t.data(), payload + off, bytes);
  };

  for (const auto& tj : manifest.at("tensors")) {
    long r = tj.at("shape")[0].get<long>();
    long c = tj.at("shape")[1].get<long>();
    require(tj.at("dtype").get<std::string>() == "f64", "unsupported dtype in " + path);
    model::Mat& t = ck.params.add(tj.at("name").get<std::string>(), r, c);
    read_mat(t, tj.at("offset").get<uint64_t>());
  }
  for (const auto& f : manifest.at("freeze")) ck.params.freeze(f.get<std::string>());

  if (manifest.contains("opt")) {
    const json& oj = manifest.at("opt");
    trainer::OptimState opt;
    opt.step = oj.at("step").get<long>();
    opt.base_lr = oj.at("base_lr").get<double>();
    opt.warmup_steps = oj.at("warmup_steps").get<long>();
    opt.beta1 = oj.at("beta1").get<double>();
    opt.beta2 = oj.at("beta2").get<double>();
    opt.eps_adam = oj.at("eps_adam").get<double>();
    for (const auto& mj : oj.at("moments")) {
      long r = mj.at("shape")[0].get<long>();
      long c = mj.at("shape")[1].get<long>();
      opt.names.push_back(mj.at("name").get<std::string>());
      opt.m.emplace_back(r, c);
      opt.v.emplace_back(r, c);
      read_mat(opt.m.back(), mj.at("m_offset").get<uint64_t>());
      read_mat(opt.v.back(), mj.at("v_offset").get<uint64_t>());
    }
    ck.opt = std::move(opt);
  }
  return ck;
}

}  // namespace umt::checkpoint
