// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0

#include "umt/bleu.hpp"
#include "umt/decode.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

using namespace umt;
using namespace umt::decode;

namespace {

model::ModelConfig tiny_config(int vocab = 12) {
  model::ModelConfig cfg;
  cfg.n_layers_enc = 1;
  cfg.n_layers_dec = 1;
  cfg.d_model = 16;
  cfg.d_ffn = 32;
  cfg.n_heads = 2;
  cfg.vocab_size = vocab;
  cfg.max_len = 32;
  cfg.label_smoothing = 0.0;
  return cfg;
}

std::vector<int> random_input(Rng& rng, int vocab, int lo = 2, int hi = 6) {
  std::vector<int> s;
  for (int k = rng.uniform_int(lo, hi); k > 0; --k) {
    s.push_back(rng.uniform_int(subword::kNumSpecials, vocab - 1));
  }
  return s;
}

// A "model" with position-independent next-token logits: the decoder output
// bias fully determines the distribution when everything else is zeroed.
model::Parameters fixed_logit_model(const model::ModelConfig& cfg,
                                    const std::vector<double>& bias) {
  model::Parameters p = model::init_model(cfg, 1);
  for (const auto& n : p.names()) p.at(n).setZero();
  for (const auto& n : p.names()) {
    if (n.find("gamma") != std::string::npos) p.at(n).setOnes();
  }
  model::Mat& b = p.at("out.bias");
  for (int i = 0; i < cfg.vocab_size; ++i) b(0, i) = bias[static_cast<size_t>(i)];
  return p;
}

}  // namespace

TEST_CASE("greedy, beam-1 and low-temperature sampling agree") {
  auto cfg = tiny_config();
  model::Parameters p = model::init_model(cfg, 5);
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    auto src = random_input(rng, cfg.vocab_size);
    DecodeParams greedy;
    greedy.mode = DecodeParams::Mode::kGreedy;
    greedy.max_len = 12;
    auto g = decode::decode(p, cfg, src, 0, 1, greedy);

    DecodeParams beam1 = greedy;
    beam1.mode = DecodeParams::Mode::kBeam;
    beam1.beam_size = 1;
    auto b = decode::decode(p, cfg, src, 0, 1, beam1);
    CHECK(g.ids == b.ids);

    DecodeParams cold = greedy;
    cold.mode = DecodeParams::Mode::kSample;
    cold.temperature = 1e-6;
    Rng srng(trial);
    auto s = decode::decode(p, cfg, src, 0, 1, cold, &srng);
    CHECK(g.ids == s.ids);

    // determinism of greedy decoding
    auto g2 = decode::decode(p, cfg, src, 0, 1, greedy);
    CHECK(g.ids == g2.ids);
  }
}

TEST_CASE("beam search matches exhaustive enumeration on a fixed-logit model") {
  auto cfg = tiny_config(9);
  std::vector<double> bias = {0.0, 0.1, 0.0, 1.2, 0.0, 0.9, 1.1, 0.4, 1.3};
  model::Parameters p = fixed_logit_model(cfg, bias);

  // enumerate all sequences of length <= 2 (tokens from the generable set),
  // scoring exactly like the decoder: sum of log softmax probabilities
  Eigen::ArrayXd logits(9);
  for (int i = 0; i < 9; ++i) logits(i) = bias[static_cast<size_t>(i)];
  Eigen::ArrayXd probs = (logits - logits.maxCoeff()).exp();
  probs /= probs.sum();
  auto generable = [&](int id) {
    return id != subword::kPadId && id != subword::kBosId && id != subword::kMaskId;
  };
  struct Seq {
    std::vector<int> ids;
    double logp;
    bool finished;
  };
  std::vector<Seq> all;
  for (int a = 0; a < 9; ++a) {
    if (!generable(a)) continue;
    if (a == subword::kEosId) {
      all.push_back({{}, std::log(probs(a)), true});
      continue;
    }
    for (int b = 0; b < 9; ++b) {
      if (!generable(b)) continue;
      double lp = std::log(probs(a)) + std::log(probs(b));
      if (b == subword::kEosId) {
        all.push_back({{a}, lp, true});
      } else {
        all.push_back({{a, b}, lp, false});  // truncated at max_len
      }
    }
  }
  double best_finished = -1e300;
  std::vector<int> best_ids;
  for (const auto& s : all) {
    if (s.finished && s.logp > best_finished) {
      best_finished = s.logp;
      best_ids = s.ids;
    }
  }

  DecodeParams dp;
  dp.mode = DecodeParams::Mode::kBeam;
  dp.beam_size = 2;
  dp.max_len = 2;
  auto res = decode::decode(p, cfg, {5, 6}, 0, 1, dp);
  // beam 2 must find the best finished hypothesis here: the top-2 first
  // tokens by probability are kept, and EOS continuations are scored exactly
  CHECK(res.ids == best_ids);
  CHECK(res.score == Catch::Approx(best_finished).margin(1e-9));

  // with a large beam the search is exhaustive over the kept width
  dp.beam_size = 8;
  auto wide = decode::decode(p, cfg, {5, 6}, 0, 1, dp);
  CHECK(wide.score == Catch::Approx(best_finished).margin(1e-9));
}

TEST_CASE("beam monotonicity with zero length penalty") {
  auto cfg = tiny_config();
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    model::Parameters p = model::init_model(cfg, 100 + trial);
    auto src = random_input(rng, cfg.vocab_size);
    double prev = -1e300;
    for (int beam = 1; beam <= 5; ++beam) {
      DecodeParams dp;
      dp.mode = DecodeParams::Mode::kBeam;
      dp.beam_size = beam;
      dp.max_len = 10;
      dp.length_penalty = 0.0;
      auto res = decode::decode(p, cfg, src, 0, 1, dp);
      if (!res.truncated) {
        CHECK(res.score >= prev - 1e-12);
        prev = std::max(prev, res.score);
      }
    }
  }
}

TEST_CASE("truncation is flagged when max_len is reached") {
  auto cfg = tiny_config(9);
  // EOS gets a strongly negative bias: generation never stops on its own
  std::vector<double> bias(9, 0.0);
  bias[subword::kEosId] = -50.0;
  bias[7] = 2.0;
  model::Parameters p = fixed_logit_model(cfg, bias);
  DecodeParams dp;
  dp.max_len = 4;
  auto res = decode::decode(p, cfg, {5}, 0, 1, dp);
  CHECK(res.truncated);
  CHECK(res.ids.size() == 4);
}

TEST_CASE("ensemble decoding") {
  auto cfg = tiny_config();
  model::Parameters p = model::init_model(cfg, 21);
  Rng rng(22);

  SECTION("k copies decode token-identically to the single model") {
    for (int trial = 0; trial < 20; ++trial) {
      auto src = random_input(rng, cfg.vocab_size);
      DecodeParams dp;
      dp.max_len = 10;
      auto single = decode::decode(p, cfg, src, 0, 1, dp);
      for (int k = 2; k <= 4; ++k) {
        std::vector<const model::Parameters*> models(static_cast<size_t>(k), &p);
        auto ens = ensemble_decode(models, cfg, src, 0, 1, dp);
        CHECK(ens.ids == single.ids);
      }
    }
  }
  SECTION("model + uniform model: stepwise mean-distribution oracle") {
    std::vector<double> zero_bias(static_cast<size_t>(cfg.vocab_size), 0.0);
    model::Parameters uniform = fixed_logit_model(cfg, zero_bias);
    auto src = random_input(rng, cfg.vocab_size);
    std::vector<const model::Parameters*> models = {&p, &uniform};
    DecodeParams dp;
    dp.max_len = 8;
    auto res = ensemble_decode(models, cfg, src, 0, 1, dp);

    // oracle: walk the generation stepwise and recompute the mean of the two
    // softmax distributions from raw logits
    std::vector<int> src_eos = src;
    src_eos.push_back(subword::kEosId);
    auto enc_a = model::encode_sentence(p, cfg, src_eos, 0);
    auto enc_u = model::encode_sentence(uniform, cfg, src_eos, 0);
    std::vector<int> prefix = {subword::kBosId};
    std::vector<int> expect;
    for (int step = 0; step < dp.max_len; ++step) {
      auto softmax = [](const model::Vec& v) -> model::Vec {
        Eigen::ArrayXd e = (v.array() - v.maxCoeff()).exp();
        return (e / e.sum()).matrix();
      };
      model::Vec pa = softmax(model::next_token_logits(p, cfg, enc_a, prefix, 1));
      model::Vec pu = softmax(model::next_token_logits(uniform, cfg, enc_u, prefix, 1));
      model::Vec mean = (pa + pu) / 2.0;
      CHECK(mean.sum() == Catch::Approx(1.0).margin(1e-6));
      int arg = -1;
      double best = -1;
      for (int i = 0; i < cfg.vocab_size; ++i) {
        if (i == subword::kPadId || i == subword::kBosId || i == subword::kMaskId) continue;
        if (mean(i) > best) {
          best = mean(i);
          arg = i;
        }
      }
      if (arg == subword::kEosId) break;
      expect.push_back(arg);
      prefix.push_back(arg);
    }
    CHECK(res.ids == expect);
  }
  SECTION("vocabulary mismatch is rejected") {
    auto cfg_small = tiny_config(10);
    model::Parameters q = model::init_model(cfg_small, 23);
    std::vector<const model::Parameters*> models = {&p, &q};
    DecodeParams dp;
    CHECK_THROWS(ensemble_decode(models, cfg, {5, 6}, 0, 1, dp));
  }
}

TEST_CASE("13a tokenization matches frozen reference outputs") {
  using bleu::tokenize_13a;
  CHECK(join(tokenize_13a("Hello, world!")) == "Hello , world !");
  CHECK(join(tokenize_13a("The 3.5-inch drive costs $10.99 (new).")) ==
        "The 3.5 - inch drive costs $ 10.99 ( new ) .");
  CHECK(join(tokenize_13a("a..b, 1,000.5 x 2-3 &amp; &quot;q&quot;")) ==
        "a . . b , 1,000.5 x 2 - 3 & \" q \"");
  CHECK(join(tokenize_13a("Dr. Smith's co-op is 100% #1!")) ==
        "Dr . Smith's co-op is 100 % # 1 !");
  // non-ASCII passes through untouched
  CHECK(join(tokenize_13a("„Anführungszeichen“ und – Gedankenstrich…")) ==
        "„Anführungszeichen“ und – Gedankenstrich…");
}

TEST_CASE("BLEU") {
  SECTION("identical corpora score exactly 100") {
    std::vector<std::string> ref = {"the cat sat on the mat today", "a b c d e f g"};
    auto rep = bleu::bleu(ref, ref);
    CHECK(rep.score == 100.0);
    CHECK(rep.brevity_penalty == 1.0);
  }
  SECTION("empty hypotheses score 0") {
    auto rep = bleu::bleu({"", ""}, {"a b c", "d e f"});
    CHECK(rep.score == 0.0);
  }
  SECTION("hand-computed smoothed single-sentence example") {
    // hyp "the the the the" vs ref "the cat sat down":
    //   p1 = 1/4 (clipped), higher orders have zero matches and fall back to
    //   exponential smoothing: 1/(2*3), 1/(4*2), 1/(8*1); BP = 1
    auto rep = bleu::bleu({"the the the the"}, {"the cat sat down"});
    double expect = 100.0 * std::exp((std::log(1.0 / 4.0) + std::log(1.0 / 6.0) +
                                      std::log(1.0 / 8.0) + std::log(1.0 / 8.0)) /
                                     4.0);
    CHECK(rep.score == Catch::Approx(expect).margin(1e-4));
    CHECK(rep.precisions[0] == Catch::Approx(25.0));
    CHECK(rep.precisions[1] == Catch::Approx(100.0 / 6.0));
    CHECK(rep.precisions[2] == Catch::Approx(12.5));
    CHECK(rep.precisions[3] == Catch::Approx(12.5));
    CHECK(rep.brevity_penalty == 1.0);
  }
  SECTION("score stays in [0, 100] under fuzzing and is consistent with parts") {
    Rng rng(31);
    std::vector<std::string> pool = {"a", "bb", "ccc", ",", ".", "12", "x-y", "\"", "Wort"};
    for (int trial = 0; trial < 200; ++trial) {
      auto mk = [&]() {
        std::string s;
        for (int k = rng.uniform_int(0, 9); k > 0; --k) {
          if (!s.empty()) s += " ";
          s += pool[rng.below(pool.size())];
        }
        return s;
      };
      std::vector<std::string> hyp, ref;
      for (int i = 0; i < 3; ++i) {
        hyp.push_back(mk());
        ref.push_back(mk());
      }
      auto rep = bleu::bleu(hyp, ref);
      CHECK(rep.score >= 0.0);
      CHECK(rep.score <= 100.0 + 1e-9);
      if (rep.score > 0.0) {
        double recomputed = rep.brevity_penalty * 100.0 *
                            std::exp((std::log(rep.precisions[0] / 100) +
                                      std::log(rep.precisions[1] / 100) +
                                      std::log(rep.precisions[2] / 100) +
                                      std::log(rep.precisions[3] / 100)) /
                                     4.0);
        CHECK(rep.score == Catch::Approx(recomputed).margin(1e-9));
      }
    }
  }
  SECTION("brevity penalty") {
    auto rep = bleu::bleu({"a b"}, {"a b c d"});
    CHECK(rep.hyp_len == 2);
    CHECK(rep.ref_len == 4);
    CHECK(rep.brevity_penalty == Catch::Approx(std::exp(1.0 - 2.0)).margin(1e-12));
  }
  SECTION("line count mismatch is an error") {
    CHECK_THROWS(bleu::bleu({"a"}, {"a", "b"}));
  }
}
