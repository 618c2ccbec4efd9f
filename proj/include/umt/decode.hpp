// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Greedy, sampling and beam decoding; multi-model ensemble decoding.
// Ensembles average per-model softmax distributions (probability space), so
// an ensemble of k copies of one model decodes exactly like the single model.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "umt/model.hpp"
#include "umt/util.hpp"

namespace umt::decode {

using model::Mat;
using model::ModelConfig;
using model::Parameters;
using model::Vec;

struct DecodeParams {
  enum class Mode { kGreedy, kSample, kBeam };
  Mode mode = Mode::kGreedy;
  double temperature = 0.95;
  int beam_size = 5;
  int max_len = 64;            // output budget, excluding BOS
  double length_penalty = 0.0;  // 0: pure log-prob

  void validate() const {
    require(temperature > 0.0, "DecodeParams: temperature must be positive");
    require(beam_size >= 1, "DecodeParams: beam_size must be >= 1");
    require(max_len >= 1, "DecodeParams: max_len must be >= 1");
  }
};

struct DecodeResult {
  std::vector<int> ids;    // generated tokens, BOS/EOS stripped
  bool truncated = false;  // max_len reached before EOS
  double score = 0.0;      // accumulated log-prob (length-penalized for beam)
  bool used_sampling = false;
};

namespace detail {

// Mean of per-model next-token distributions. Temperature (if != 1) divides
// each model's logits before its softmax.
inline Vec ensemble_next_probs(const std::vector<const Parameters*>& models,
                               const ModelConfig& cfg,
                               const std::vector<model::EncodedSentence>& encs,
                               const std::vector<int>& prefix, int tgt_lang, double temperature) {
  Vec acc = Vec::Zero(cfg.vocab_size);
  for (size_t m = 0; m < models.size(); ++m) {
    Vec logits = model::next_token_logits(*models[m], cfg, encs[m], prefix, tgt_lang);
    if (temperature != 1.0) logits /= temperature;
    double mx = logits.maxCoeff();
    Eigen::ArrayXd ex = (logits.array() - mx).exp();
    acc += (ex / ex.sum()).matrix();
  }
  return acc / static_cast<double>(models.size());
}

// Generation never emits pad/bos/mask.
inline bool generable(int id) {
  return id != subword::kPadId && id != subword::kBosId && id != subword::kMaskId;
}

inline int argmax_generable(const Vec& probs) {
  int best = subword::kEosId;
  double best_p = -1.0;
  for (int i = 0; i < probs.size(); ++i) {
    if (!generable(i)) continue;
    if (probs(i) > best_p) {  // strict: ties keep the lowest id
      best_p = probs(i);
      best = i;
    }
  }
  return best;
}

inline int sample_generable(const Vec& probs, Rng& rng) {
  double total = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    if (generable(i)) total += probs(i);
  }
  double u = rng.uniform() * total;
  double cum = 0.0;
  int last = subword::kEosId;
  for (int i = 0; i < probs.size(); ++i) {
    if (!generable(i)) continue;
    cum += probs(i);
    last = i;
    if (u < cum) return i;
  }
  return last;
}

inline void check_models(const std::vector<const Parameters*>& models, const ModelConfig& cfg) {
  require(!models.empty(), "decode: no models");
  for (const Parameters* p : models) {
    require(p->at("embed.tokens").rows() == cfg.vocab_size,
            "decode: model vocabulary does not match config");
  }
}

}  // namespace detail

// Autoregressive generation until EOS or max_len. `models` may hold one model
// or an ensemble sharing one vocabulary. `src_ids` is the raw sentence; EOS
// is appended here.
inline DecodeResult decode(const std::vector<const Parameters*>& models, const ModelConfig& cfg,
                           const std::vector<int>& src_ids, int src_lang, int tgt_lang,
                           const DecodeParams& dp, Rng* rng = nullptr) {
  dp.validate();
  detail::check_models(models, cfg);
  const int budget = std::min(dp.max_len, cfg.max_len - 1);

  std::vector<int> src = src_ids;
  src.push_back(subword::kEosId);
  std::vector<model::EncodedSentence> encs;
  encs.reserve(models.size());
  for (const Parameters* p : models) encs.push_back(model::encode_sentence(*p, cfg, src, src_lang));

  if (dp.mode != DecodeParams::Mode::kBeam) {
    const bool sampling = dp.mode == DecodeParams::Mode::kSample;
    require(!sampling || rng != nullptr, "decode: sampling requires an RNG");
    DecodeResult res;
    res.used_sampling = sampling;
    std::vector<int> prefix = {subword::kBosId};
    for (int step = 0; step < budget; ++step) {
      Vec probs = detail::ensemble_next_probs(models, cfg, encs, prefix, tgt_lang,
                                              sampling ? dp.temperature : 1.0);
      int next = sampling ? detail::sample_generable(probs, *rng)
                          : detail::argmax_generable(probs);
      res.score += std::log(std::max(probs(next), 1e-300));
      if (next == subword::kEosId) return res;
      res.ids.push_back(next);
      prefix.push_back(next);
    }
    res.truncated = true;
    return res;
  }

  // beam search
  struct Hyp {
    std::vector<int> prefix;  // starts with BOS
    double logp = 0.0;
  };
  auto penalized = [&](double logp, size_t gen_len) {
    if (dp.length_penalty == 0.0) return logp;
    return logp / std::pow(static_cast<double>(std::max<size_t>(gen_len, 1)), dp.length_penalty);
  };

  std::vector<Hyp> live = {Hyp{{subword::kBosId}, 0.0}};
  std::vector<Hyp> finished;  // prefix excludes EOS; logp includes the EOS term
  for (int step = 0; step < budget && !live.empty(); ++step) {
    struct Cand {
      size_t parent;
      int id;
      double logp;
    };
    std::vector<Cand> cands;
    for (size_t h = 0; h < live.size(); ++h) {
      Vec probs = detail::ensemble_next_probs(models, cfg, encs, live[h].prefix, tgt_lang, 1.0);
      std::vector<int> ids;
      ids.reserve(static_cast<size_t>(cfg.vocab_size));
      for (int i = 0; i < cfg.vocab_size; ++i) {
        if (detail::generable(i)) ids.push_back(i);
      }
      int take = std::min<int>(dp.beam_size, static_cast<int>(ids.size()));
      std::partial_sort(ids.begin(), ids.begin() + take, ids.end(), [&](int a, int b) {
        if (probs(a) != probs(b)) return probs(a) > probs(b);
        return a < b;
      });
      for (int j = 0; j < take; ++j) {
        int id = ids[static_cast<size_t>(j)];
        double logp = live[h].logp + std::log(std::max(probs(id), 1e-300));
        if (id == subword::kEosId) {
          // EOS within a hypothesis's own top-k finishes it; finished
          // hypotheses are exempt from the global prune below
          finished.push_back({live[h].prefix, logp});
        } else {
          cands.push_back({h, id, logp});
        }
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return a.id < b.id;
    });
    if (static_cast<int>(cands.size()) > dp.beam_size) cands.resize(static_cast<size_t>(dp.beam_size));
    std::vector<Hyp> next_live;
    for (const auto& c : cands) {
      Hyp h = live[c.parent];
      h.prefix.push_back(c.id);
      h.logp = c.logp;
      next_live.push_back(std::move(h));
    }
    live = std::move(next_live);
  }

  DecodeResult res;
  const Hyp* best = nullptr;
  bool best_truncated = false;
  for (const auto& h : finished) {
    double s = penalized(h.logp, h.prefix.size());  // gen len + EOS == prefix size
    if (best == nullptr || s > penalized(best->logp, best->prefix.size())) best = &h;
  }
  if (best == nullptr) {
    for (const auto& h : live) {
      double s = penalized(h.logp, h.prefix.size() - 1);
      if (best == nullptr || s > penalized(best->logp, best->prefix.size() - 1)) best = &h;
    }
    best_truncated = true;
  }
  require(best != nullptr, "decode: no hypothesis");
  res.ids.assign(best->prefix.begin() + 1, best->prefix.end());
  res.truncated = best_truncated;
  res.score = penalized(best->logp, best->prefix.size() - (best_truncated ? 1 : 0));
  return res;
}

inline DecodeResult decode(const Parameters& params, const ModelConfig& cfg,
                           const std::vector<int>& src_ids, int src_lang, int tgt_lang,
                           const DecodeParams& dp, Rng* rng = nullptr) {
  return decode(std::vector<const Parameters*>{&params}, cfg, src_ids, src_lang, tgt_lang, dp,
                rng);
}

// Ensemble entry point (kept distinct so call sites read like the pipeline).
inline DecodeResult ensemble_decode(const std::vector<const Parameters*>& models,
                                    const ModelConfig& cfg, const std::vector<int>& src_ids,
                                    int src_lang, int tgt_lang, const DecodeParams& dp,
                                    Rng* rng = nullptr) {
  return decode(models, cfg, src_ids, src_lang, tgt_lang, dp, rng);
}

}  // namespace umt::decode
