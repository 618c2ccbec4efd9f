// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0

#include "umt/model.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

using namespace umt;
using namespace umt::model;

namespace {

ModelConfig tiny_config(int vocab = 11, bool adapters = false) {
  ModelConfig cfg;
  cfg.n_layers_enc = 1;
  cfg.n_layers_dec = 1;
  cfg.d_model = 8;
  cfg.d_ffn = 16;
  cfg.n_heads = 2;
  cfg.vocab_size = vocab;
  cfg.max_len = 32;
  cfg.label_smoothing = 0.0;
  cfg.adapters_enabled = adapters;
  cfg.d_adapter = 4;
  return cfg;
}

ModelConfig desk_config(int vocab = 100) {
  ModelConfig cfg;
  cfg.n_layers_enc = 2;
  cfg.n_layers_dec = 2;
  cfg.d_model = 64;
  cfg.d_ffn = 256;
  cfg.n_heads = 4;
  cfg.vocab_size = vocab;
  cfg.max_len = 64;
  cfg.use_lang_embeddings = true;
  return cfg;
}

Batch tiny_batch(Rng& rng, const ModelConfig& cfg, int n_sents = 2, int len = 5) {
  std::vector<std::vector<int>> src, tgt;
  for (int i = 0; i < n_sents; ++i) {
    std::vector<int> s, t;
    for (int k = 0; k < len; ++k) {
      s.push_back(rng.uniform_int(subword::kNumSpecials, cfg.vocab_size - 1));
      t.push_back(rng.uniform_int(subword::kNumSpecials, cfg.vocab_size - 1));
    }
    src.push_back(s);
    tgt.push_back(t);
  }
  return make_translation_batch(src, tgt, 0, 1);
}

// Central finite difference of the loss w.r.t. one parameter coordinate.
double numerical_grad(Parameters& params, const Batch& batch, const ModelConfig& cfg,
                      const std::string& name, long r, long c, double h = 1e-4) {
  Mat& t = params.at(name);
  double orig = t(r, c);
  t(r, c) = orig + h;
  double lp = forward_loss_backward(params, batch, cfg, false).loss;
  t(r, c) = orig - h;
  double lm = forward_loss_backward(params, batch, cfg, false).loss;
  t(r, c) = orig;
  return (lp - lm) / (2.0 * h);
}

// Samples coordinates across every trainable tensor and compares analytic
// vs numerical gradients with relative error.
double max_grad_rel_error(Parameters& params, const Batch& batch, const ModelConfig& cfg,
                          int n_samples, uint64_t seed) {
  auto res = forward_loss_backward(params, batch, cfg, true);
  Rng rng(seed);
  auto names = params.trainable_names();
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const std::string& name = names[rng.below(names.size())];
    const Mat& t = params.at(name);
    long r = static_cast<long>(rng.below(static_cast<uint64_t>(t.rows())));
    long c = static_cast<long>(rng.below(static_cast<uint64_t>(t.cols())));
    double g_a = res.grads.at(name)(r, c);
    double g_n = numerical_grad(params, batch, cfg, name, r, c);
    double denom = std::max({std::abs(g_a), std::abs(g_n), 1e-6});
    worst = std::max(worst, std::abs(g_a - g_n) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("init_model is deterministic given the seed") {
  auto cfg = tiny_config();
  Parameters a = init_model(cfg, 7);
  Parameters b = init_model(cfg, 7);
  REQUIRE(a.names() == b.names());
  for (const auto& n : a.names()) REQUIRE(a.at(n) == b.at(n));
  Parameters c = init_model(cfg, 8);
  bool any_diff = false;
  for (const auto& n : a.names()) {
    if (a.at(n) != c.at(n)) any_diff = true;
  }
  REQUIRE(any_diff);
}

TEST_CASE("init_model rejects indivisible head count") {
  ModelConfig cfg = desk_config();
  cfg.n_heads = 5;  // 64 % 5 != 0
  REQUIRE_THROWS_AS(init_model(cfg, 1), Error);
}

TEST_CASE("parameter count matches the closed form") {
  auto cfg = desk_config(100);
  cfg.use_lang_embeddings = true;
  Parameters p = init_model(cfg, 3);
  // independent closed-form count
  long d = cfg.d_model, f = cfg.d_ffn, v = cfg.vocab_size;
  long embed = v * d + cfg.max_len * d + cfg.n_langs * d;
  long attn = 4 * (d * d + d);
  long ln = 2 * d;
  long ffn = d * f + f + f * d + d;
  long enc_layer = attn + ln + ffn + ln;
  long dec_layer = attn + ln + attn + ln + ffn + ln;
  long out = v * d + v;
  long expected = embed + cfg.n_layers_enc * enc_layer + cfg.n_layers_dec * dec_layer + out;
  REQUIRE(static_cast<long>(p.scalar_count()) == expected);
}

TEST_CASE("uniform-logit model loses ln(vocab) and softmax rows sum to 1") {
  auto cfg = tiny_config(11);
  Parameters p = init_model(cfg, 5);
  // zero everything that feeds the logits: output projection and bias
  p.at("out.weight").setZero();
  p.at("out.bias").setZero();
  Rng rng(1);
  Batch batch = tiny_batch(rng, cfg);
  auto res = forward_loss_backward(p, batch, cfg, false);
  REQUIRE(std::abs(res.loss - std::log(11.0)) < 1e-3);

  // softmax normalization via token log-probs of an arbitrary model
  Parameters q = init_model(cfg, 17);
  EncodedSentence enc = encode_sentence(q, cfg, {5, 6, 7, subword::kEosId}, 0);
  Vec logits = next_token_logits(q, cfg, enc, {subword::kBosId, 5}, 1);
  double m = logits.maxCoeff();
  Eigen::ArrayXd ex = (logits.array() - m).exp();
  Eigen::ArrayXd probs = ex / ex.sum();
  REQUIRE(std::abs(probs.sum() - 1.0) < 1e-6);
}

TEST_CASE("analytic gradients match central finite differences") {
  SECTION("without adapters") {
    auto cfg = tiny_config(11);
    Parameters p = init_model(cfg, 11);
    Rng rng(2);
    Batch batch = tiny_batch(rng, cfg);
    REQUIRE(max_grad_rel_error(p, batch, cfg, 200, 99) < 1e-4);
  }
  SECTION("with adapters and freeze mask") {
    auto cfg = tiny_config(11, true);
    Parameters p = init_model(cfg, 11);
    insert_adapters(p, cfg, 12);
    // make adapters non-trivial so their gradients are exercised
    Rng nz(3);
    detail::fill_uniform(p.at("enc.0.adapter.wup"), 0.1, nz);
    detail::fill_uniform(p.at("dec.0.adapter.wup"), 0.1, nz);
    Rng rng(2);
    Batch batch = tiny_batch(rng, cfg);
    REQUIRE(max_grad_rel_error(p, batch, cfg, 200, 100) < 1e-4);
  }
  SECTION("with label smoothing and mass-style position offset") {
    auto cfg = tiny_config(11);
    cfg.label_smoothing = 0.1;
    Parameters p = init_model(cfg, 13);
    Rng rng(4);
    Batch batch = tiny_batch(rng, cfg);
    batch.pos_offset[0] = 3;
    REQUIRE(max_grad_rel_error(p, batch, cfg, 120, 101) < 1e-4);
  }
}

TEST_CASE("padding invariance: appended pad tokens change nothing") {
  auto cfg = tiny_config(11);
  Parameters p = init_model(cfg, 21);
  Rng rng(6);
  Batch batch = tiny_batch(rng, cfg, 2, 4);
  auto base = forward_loss_backward(p, batch, cfg, false);

  Batch padded = batch;
  for (size_t b = 0; b < padded.size(); ++b) {
    padded.src[b].push_back(subword::kPadId);
    padded.src_mask[b].push_back(0);
    padded.dec_in[b].push_back(subword::kPadId);
    padded.labels[b].push_back(subword::kPadId);
    padded.tgt_mask[b].push_back(0);
  }
  auto res = forward_loss_backward(p, padded, cfg, false);
  REQUIRE(std::abs(res.loss - base.loss) < 1e-6);
  for (size_t b = 0; b < batch.size(); ++b) {
    for (size_t t = 0; t < batch.labels[b].size(); ++t) {
      REQUIRE(res.token_logprobs[b][t] == Catch::Approx(base.token_logprobs[b][t]).margin(1e-9));
    }
  }
}

TEST_CASE("forward is bit-deterministic") {
  auto cfg = tiny_config(11);
  Parameters p = init_model(cfg, 31);
  Rng rng(7);
  Batch batch = tiny_batch(rng, cfg);
  auto a = forward_loss_backward(p, batch, cfg, true);
  auto b = forward_loss_backward(p, batch, cfg, true);
  REQUIRE(a.loss == b.loss);
  for (const auto& n : a.grads.names()) REQUIRE(a.grads.at(n) == b.grads.at(n));
}

TEST_CASE("extend_embeddings keeps old rows and old logits") {
  auto cfg = tiny_config(20);
  cfg.tie_embeddings = false;

  subword::Vocabulary old_vocab;
  for (int i = 0; i < 15; ++i) old_vocab.push("tok" + std::to_string(i), 10 - i / 2);
  subword::Vocabulary joint = old_vocab;
  for (int i = 0; i < 30; ++i) joint.push("new" + std::to_string(i), 3);

  cfg.vocab_size = old_vocab.size();
  Parameters p = init_model(cfg, 41);

  SECTION("identical vocab is a no-op") {
    Parameters q = extend_embeddings(p, old_vocab, old_vocab, 5);
    for (const auto& n : p.names()) REQUIRE(p.at(n) == q.at(n));
  }

  SECTION("extension copies old rows bit-exactly") {
    subword::ExtendReport report;
    auto newv = subword::extend_vocab(old_vocab, joint, &report);
    Parameters q = extend_embeddings(p, old_vocab, newv, 5);
    REQUIRE(q.at("embed.tokens").rows() == newv.size());
    REQUIRE(q.at("embed.tokens").topRows(old_vocab.size()) == p.at("embed.tokens"));
    REQUIRE(q.at("out.weight").topRows(old_vocab.size()) == p.at("out.weight"));
    REQUIRE(q.at("out.bias").leftCols(old_vocab.size()) == p.at("out.bias"));

    // logits over old ids identical on old-vocab-only input
    ModelConfig big = cfg;
    big.vocab_size = newv.size();
    std::vector<int> src = {6, 7, 8, subword::kEosId};
    EncodedSentence e_old = encode_sentence(p, cfg, src, 0);
    EncodedSentence e_new = encode_sentence(q, big, src, 0);
    Vec l_old = next_token_logits(p, cfg, e_old, {subword::kBosId, 6}, 1);
    Vec l_new = next_token_logits(q, big, e_new, {subword::kBosId, 6}, 1);
    for (int i = 0; i < cfg.vocab_size; ++i) REQUIRE(l_old(i) == l_new(i));
  }

  SECTION("mismatched vocab is rejected") {
    subword::Vocabulary other;
    other.push("zzz", 1);
    REQUIRE_THROWS_AS(extend_embeddings(p, old_vocab, other, 5), Error);
  }
}

TEST_CASE("adapter insertion is function-preserving and freezes the stacks") {
  auto cfg = tiny_config(11, true);
  Parameters p = init_model(cfg, 51);
  Rng rng(8);
  Batch batch = tiny_batch(rng, cfg);
  auto before = forward_loss_backward(p, batch, cfg, false);

  insert_adapters(p, cfg, 52);
  auto after = forward_loss_backward(p, batch, cfg, false);
  REQUIRE(before.loss == after.loss);  // zero-init up-projection: exact identity
  for (size_t b = 0; b < batch.size(); ++b) {
    REQUIRE(before.token_logprobs[b] == after.token_logprobs[b]);
  }

  // every self-attention and FFN weight is frozen
  for (const auto& n : p.names()) {
    bool stack = (n.find(".attn.") != std::string::npos ||
                  n.find(".ffn.") != std::string::npos) &&
                 n.find("adapter") == std::string::npos;
    if (stack) REQUIRE(p.is_frozen(n));
  }
  // cross attention, embeddings, output and adapters stay trainable
  REQUIRE(!p.is_frozen("dec.0.xattn.wq"));
  REQUIRE(!p.is_frozen("embed.tokens"));
  REQUIRE(!p.is_frozen("out.weight"));
  REQUIRE(!p.is_frozen("enc.0.adapter.wdown"));

  // frozen tensors never appear in gradients
  auto res = forward_loss_backward(p, batch, cfg, true);
  REQUIRE(!res.grads.has("enc.0.attn.wq"));
  REQUIRE(res.grads.has("dec.0.xattn.wq"));

  REQUIRE_THROWS_AS(insert_adapters(p, cfg, 53), Error);

  clear_freeze(p);
  REQUIRE(p.freeze_mask().empty());
}

TEST_CASE("rejected variant: adapter atop frozen cross attention") {
  auto cfg = tiny_config(11, true);
  cfg.adapter_on_cross_attention = true;
  Parameters p = init_model(cfg, 61);
  Rng rng(9);
  Batch batch = tiny_batch(rng, cfg);
  auto before = forward_loss_backward(p, batch, cfg, false);
  insert_adapters(p, cfg, 62);
  auto after = forward_loss_backward(p, batch, cfg, false);
  REQUIRE(before.loss == after.loss);
  REQUIRE(p.is_frozen("dec.0.xattn.wq"));
  REQUIRE(p.has("dec.0.xadapter.wdown"));
  // gradient check still holds with the extra adapter in the graph
  Rng nz(10);
  detail::fill_uniform(p.at("dec.0.xadapter.wup"), 0.1, nz);
  REQUIRE(max_grad_rel_error(p, batch, cfg, 80, 102) < 1e-4);
}

TEST_CASE("id out of range is rejected") {
  auto cfg = tiny_config(11);
  Parameters p = init_model(cfg, 71);
  Batch b = make_translation_batch({{5, 11}}, {{6}}, 0, 1);  // 11 == vocab_size
  REQUIRE_THROWS_AS(forward_loss_backward(p, b, cfg, false), Error);
}
