// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives and loops: MASS masking, Adam with inverse-sqrt
// schedule, online backtranslation with a greedy/sampling mix, pseudo-parallel
// supervised steps, curriculum scoring and search, offline backtranslation
// and validation perplexity.

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "umt/bitext.hpp"
#include "umt/decode.hpp"
#include "umt/model.hpp"
#include "umt/subword.hpp"
#include "umt/util.hpp"

namespace umt::trainer {

using model::Batch;
using model::Gradients;
using model::Mat;
using model::ModelConfig;
using model::Parameters;

using IdSentence = std::vector<int>;
using IdCorpus = std::vector<IdSentence>;

// A numericalized sentence pair with its translation direction.
struct IdPair {
  IdSentence src, tgt;
  int src_lang = 0, tgt_lang = 1;
};

// --------------------------------------------------------------------------
// MASS masking

struct MassExample {
  IdSentence enc_in;     // sentence with the span replaced by <mask>
  IdSentence fragment;   // the original span
  int span_start = 0;
};

// Masks a contiguous span of length max(1, round(fraction*len)), start drawn
// uniformly. Sentences shorter than 2 tokens are skipped (nullopt).
inline std::optional<MassExample> mass_mask(const IdSentence& ids, double fraction, Rng& rng) {
  require(fraction > 0.0 && fraction < 1.0, "mass_mask: fraction must be in (0,1)");
  const long len = static_cast<long>(ids.size());
  if (len < 2) return std::nullopt;
  long span = std::max<long>(1, std::llround(fraction * static_cast<double>(len)));
  long start = static_cast<long>(rng.below(static_cast<uint64_t>(len - span + 1)));
  MassExample ex;
  ex.enc_in = ids;
  ex.span_start = static_cast<int>(start);
  for (long i = start; i < start + span; ++i) {
    ex.fragment.push_back(ids[static_cast<size_t>(i)]);
    ex.enc_in[static_cast<size_t>(i)] = subword::kMaskId;
  }
  return ex;
}

// Batches MASS examples. EOS is appended to each sentence, then a span is
// masked; the decoder sees the span shifted right by one (the token before
// the span, or BOS at the sentence start) at the span's absolute positions.
inline Batch make_mass_batch(const std::vector<IdSentence>& sentences, double fraction, int lang,
                             Rng& rng, int* skipped = nullptr) {
  Batch b;
  size_t ts = 0, tt = 0;
  std::vector<MassExample> exs;
  std::vector<IdSentence> kept;
  for (const auto& raw : sentences) {
    IdSentence ids = raw;
    ids.push_back(subword::kEosId);
    auto ex = mass_mask(ids, fraction, rng);
    if (!ex) {
      if (skipped != nullptr) ++*skipped;
      continue;
    }
    ts = std::max(ts, ids.size());
    tt = std::max(tt, ex->fragment.size());
    exs.push_back(std::move(*ex));
    kept.push_back(std::move(ids));
  }
  require(!exs.empty(), "make_mass_batch: no usable sentences (all shorter than 2 tokens)");
  for (size_t i = 0; i < exs.size(); ++i) {
    auto& ex = exs[i];
    const auto& orig = kept[i];
    std::vector<uint8_t> sm(ts, 0);
    std::fill(sm.begin(), sm.begin() + static_cast<long>(ex.enc_in.size()), 1);
    ex.enc_in.resize(ts, subword::kPadId);

    IdSentence din;
    din.push_back(ex.span_start > 0 ? orig[static_cast<size_t>(ex.span_start - 1)]
                                    : subword::kBosId);
    for (size_t k = 0; k + 1 < ex.fragment.size(); ++k) din.push_back(ex.fragment[k]);
    IdSentence lab = ex.fragment;
    std::vector<uint8_t> tm(tt, 0);
    std::fill(tm.begin(), tm.begin() + static_cast<long>(lab.size()), 1);
    din.resize(tt, subword::kPadId);
    lab.resize(tt, subword::kPadId);

    b.src.push_back(std::move(ex.enc_in));
    b.src_mask.push_back(std::move(sm));
    b.dec_in.push_back(std::move(din));
    b.labels.push_back(std::move(lab));
    b.tgt_mask.push_back(std::move(tm));
    b.src_lang.push_back(lang);
    b.tgt_lang.push_back(lang);
    b.pos_offset.push_back(ex.span_start);
  }
  return b;
}

// Batch over mixed-direction pairs (source gets EOS, decoder BOS-shifted).
inline Batch make_pair_batch(const std::vector<IdPair>& pairs) {
  require(!pairs.empty(), "make_pair_batch: empty batch");
  Batch b;
  size_t ts = 0, tt = 0;
  for (const auto& p : pairs) {
    ts = std::max(ts, p.src.size() + 1);
    tt = std::max(tt, p.tgt.size() + 1);
  }
  for (const auto& p : pairs) {
    IdSentence s = p.src;
    s.push_back(subword::kEosId);
    std::vector<uint8_t> sm(ts, 0);
    std::fill(sm.begin(), sm.begin() + static_cast<long>(s.size()), 1);
    s.resize(ts, subword::kPadId);
    IdSentence din;
    din.push_back(subword::kBosId);
    for (int id : p.tgt) din.push_back(id);
    IdSentence lab = p.tgt;
    lab.push_back(subword::kEosId);
    std::vector<uint8_t> tm(tt, 0);
    std::fill(tm.begin(), tm.begin() + static_cast<long>(lab.size()), 1);
    din.resize(tt, subword::kPadId);
    lab.resize(tt, subword::kPadId);
    b.src.push_back(std::move(s));
    b.src_mask.push_back(std::move(sm));
    b.dec_in.push_back(std::move(din));
    b.labels.push_back(std::move(lab));
    b.tgt_mask.push_back(std::move(tm));
    b.src_lang.push_back(p.src_lang);
    b.tgt_lang.push_back(p.tgt_lang);
    b.pos_offset.push_back(0);
  }
  return b;
}

// --------------------------------------------------------------------------
// Optimizer

struct OptimState {
  long step = 0;
  double base_lr = 1e-4;
  long warmup_steps = 200;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps_adam = 1e-8;

  std::vector<std::string> names;
  std::vector<Mat> m, v;

  static OptimState create(const Parameters& params, double base_lr, long warmup) {
    require(warmup >= 1, "OptimState: warmup must be >= 1");
    OptimState s;
    s.base_lr = base_lr;
    s.warmup_steps = warmup;
    for (const auto& n : params.trainable_names()) {
      const Mat& t = params.at(n);
      s.names.push_back(n);
      s.m.push_back(Mat::Zero(t.rows(), t.cols()));
      s.v.push_back(Mat::Zero(t.rows(), t.cols()));
    }
    return s;
  }

  // lr(s) = base_lr * min(s/warmup, sqrt(warmup/s)); both branches meet at
  // base_lr when s == warmup.
  double lr_at(long s) const {
    require(s >= 1, "lr_at: step must be >= 1");
    double w = static_cast<double>(warmup_steps);
    double ds = static_cast<double>(s);
    return base_lr * std::min(ds / w, std::sqrt(w / ds));
  }
};

// Adam with bias correction on the inverse-sqrt schedule. Frozen tensors are
// untouched (they have no gradients and no moments).
inline void optimizer_step(Parameters& params, const Gradients& grads, OptimState& opt) {
  require(grads.names() == opt.names,
          "optimizer_step: gradient/optimizer tensor sets differ (freeze mask changed?)");
  const long s = opt.step + 1;
  const double lr = opt.lr_at(s);
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(s));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(s));
  for (size_t i = 0; i < opt.names.size(); ++i) {
    const Mat& g = grads.at(opt.names[i]);
    Mat& t = params.at(opt.names[i]);
    require(g.rows() == t.rows() && g.cols() == t.cols(),
            "optimizer_step: shape mismatch for " + opt.names[i]);
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
    opt.v[i] = opt.beta2 * opt.v[i].array().matrix() +
               (1.0 - opt.beta2) * g.array().square().matrix();
    t.array() -= lr * (opt.m[i].array() / bc1) /
                 ((opt.v[i].array() / bc2).sqrt() + opt.eps_adam);
  }
  opt.step = s;
}

// --------------------------------------------------------------------------
// Supervised and online-backtranslation steps

struct BTParams {
  double sample_prob = 0.5;   // probability a batch is backtranslated by sampling
  double temperature = 0.95;  // softmax temperature for the sampling path

  void validate() const {
    require(sample_prob >= 0.0 && sample_prob <= 1.0, "BTParams: sample_prob must be in [0,1]");
    require(temperature > 0.0, "BTParams: temperature must be positive");
  }
};

struct StepResult {
  double loss = 0.0;
  Gradients grads;
};

inline StepResult supervised_step(const Parameters& params, const ModelConfig& cfg,
                                  const Batch& batch) {
  auto res = model::forward_loss_backward(params, batch, cfg, true);
  return {res.loss, std::move(res.grads)};
}

struct BtStepResult {
  double loss = 0.0;
  Gradients grads;
  std::vector<IdSentence> generated;  // synthetic side, one per input sentence
  bool used_sampling = false;
  Batch batch;  // the supervised pair batch (generated -> original)
};

// One online-backtranslation update on a monolingual batch: translate with
// the current model (greedy or sampling, chosen once per batch), then a
// supervised pass on (generated -> original). Generation carries no
// gradients; denoising auto-encoding is never used.
inline BtStepResult online_bt_step(const Parameters& params, const ModelConfig& cfg,
                                   const std::vector<IdSentence>& mono_batch, int mono_lang,
                                   int other_lang, const BTParams& bt, Rng& rng,
                                   int gen_max_len = 0) {
  bt.validate();
  require(!mono_batch.empty(), "online_bt_step: empty batch");
  BtStepResult out;
  out.used_sampling = rng.bernoulli(bt.sample_prob);
  decode::DecodeParams dp;
  dp.mode = out.used_sampling ? decode::DecodeParams::Mode::kSample
                              : decode::DecodeParams::Mode::kGreedy;
  dp.temperature = bt.temperature;
  for (const auto& ids : mono_batch) {
    int cap = gen_max_len > 0 ? gen_max_len
                              : std::min<int>(cfg.max_len - 2, static_cast<int>(ids.size()) + 8);
    dp.max_len = std::max(1, cap);
    auto res = decode::decode(params, cfg, ids, mono_lang, other_lang, dp, &rng);
    if (res.ids.empty()) res.ids.push_back(subword::kUnkId);  // keep the pair non-degenerate
    out.generated.push_back(std::move(res.ids));
  }
  out.batch = model::make_translation_batch(out.generated, mono_batch, other_lang, mono_lang);
  auto res = model::forward_loss_backward(params, out.batch, cfg, true);
  out.loss = res.loss;
  out.grads = std::move(res.grads);
  return out;
}

// --------------------------------------------------------------------------
// Validation perplexity

// exp(total NLL / total non-pad target tokens); NLL is unsmoothed.
inline double validate_ppl(const Parameters& params, const ModelConfig& cfg,
                           const std::vector<IdPair>& valid, int batch_size = 16) {
  require(!valid.empty(), "validate_ppl: empty validation set");
  double nll = 0.0;
  long tokens = 0;
  for (size_t i = 0; i < valid.size(); i += static_cast<size_t>(batch_size)) {
    std::vector<IdPair> chunk(valid.begin() + static_cast<long>(i),
                              valid.begin() + static_cast<long>(std::min(
                                                  valid.size(), i + static_cast<size_t>(batch_size))));
    auto res = model::forward_loss_backward(params, make_pair_batch(chunk), cfg, false);
    for (size_t b = 0; b < chunk.size(); ++b) {
      for (size_t t = 0; t < res.token_logprobs[b].size(); ++t) {
        nll -= res.token_logprobs[b][t];  // zero at pads
      }
    }
    tokens += res.label_tokens;
  }
  return std::exp(nll / static_cast<double>(tokens));
}

// MASS validation: deterministic masking from a fixed seed so checkpoints
// are comparable.
inline double validate_mass_ppl(const Parameters& params, const ModelConfig& cfg,
                                const IdCorpus& valid, int lang, double fraction, uint64_t seed,
                                int batch_size = 16) {
  require(!valid.empty(), "validate_mass_ppl: empty validation set");
  double nll = 0.0;
  long tokens = 0;
  for (size_t i = 0; i < valid.size(); i += static_cast<size_t>(batch_size)) {
    std::vector<IdSentence> chunk(valid.begin() + static_cast<long>(i),
                                  valid.begin() + static_cast<long>(std::min(
                                                      valid.size(),
                                                      i + static_cast<size_t>(batch_size))));
    Rng rng(derive_seed(seed, i));
    int skipped = 0;
    Batch b = make_mass_batch(chunk, fraction, lang, rng, &skipped);
    auto res = model::forward_loss_backward(params, b, cfg, false);
    for (const auto& row : res.token_logprobs) {
      for (double lp : row) nll -= lp;
    }
    tokens += res.label_tokens;
  }
  return std::exp(nll / static_cast<double>(tokens));
}

// --------------------------------------------------------------------------
// Curriculum learning

struct ScoredPair {
  size_t index = 0;
  int src_lang = 0, tgt_lang = 1;
  double s_fwd = 0.0;  // length-normalized log-prob, original direction
  double s_rev = 0.0;  // reverse direction
};

// 4 scalars in [-1,1]: (lang0->lang1 fwd, lang0->lang1 rev, lang1->lang0 fwd,
// lang1->lang0 rev).
struct CurriculumWeights {
  std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};

  void validate() const {
    for (double x : w) require(x >= -1.0 && x <= 1.0, "CurriculumWeights: out of [-1,1]");
  }
};

inline std::vector<ScoredPair> curriculum_score(const Parameters& params, const ModelConfig& cfg,
                                                const std::vector<IdPair>& pairs,
                                                int batch_size = 16) {
  std::vector<ScoredPair> out(pairs.size());
  auto score_chunk = [&](size_t begin, size_t end, bool reverse) {
    std::vector<IdPair> chunk;
    chunk.reserve(end - begin);
    for (size_t i = begin; i < end; ++i) {
      IdPair p = pairs[i];
      if (reverse) {
        std::swap(p.src, p.tgt);
        std::swap(p.src_lang, p.tgt_lang);
      }
      chunk.push_back(std::move(p));
    }
    auto res = model::forward_loss_backward(params, make_pair_batch(chunk), cfg, false);
    for (size_t b = 0; b < chunk.size(); ++b) {
      double sum = 0.0;
      long n = 0;
      for (double lp : res.token_logprobs[b]) {
        if (lp != 0.0) ++n;
        sum += lp;
      }
      n = std::max<long>(n, 1);
      double s = sum / static_cast<double>(n);
      if (reverse) {
        out[begin + b].s_rev = s;
      } else {
        out[begin + b].s_fwd = s;
      }
    }
  };
  for (size_t i = 0; i < pairs.size(); i += static_cast<size_t>(batch_size)) {
    size_t end = std::min(pairs.size(), i + static_cast<size_t>(batch_size));
    score_chunk(i, end, false);
    score_chunk(i, end, true);
    for (size_t k = i; k < end; ++k) {
      out[k].index = k;
      out[k].src_lang = pairs[k].src_lang;
      out[k].tgt_lang = pairs[k].tgt_lang;
    }
  }
  return out;
}

// Permutation sorting by descending composite score; stable on ties, so
// all-zero weights give the identity permutation.
inline std::vector<size_t> order_by(const std::vector<ScoredPair>& scored,
                                    const CurriculumWeights& weights) {
  weights.validate();
  std::vector<size_t> perm(scored.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  auto composite = [&](const ScoredPair& p) {
    if (p.src_lang == 0) return weights.w[0] * p.s_fwd + weights.w[1] * p.s_rev;
    return weights.w[2] * p.s_fwd + weights.w[3] * p.s_rev;
  };
  std::stable_sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
    return composite(scored[a]) > composite(scored[b]);
  });
  return perm;
}

class SearchStrategy {
 public:
  virtual ~SearchStrategy() = default;
  virtual CurriculumWeights suggest(int trial, Rng& rng) = 0;
  virtual void observe(const CurriculumWeights& weights, double objective) {
    (void)weights;
    (void)objective;
  }
};

class RandomSearch : public SearchStrategy {
 public:
  CurriculumWeights suggest(int /*trial*/, Rng& rng) override {
    CurriculumWeights w;
    for (auto& x : w.w) x = 2.0 * rng.uniform() - 1.0;
    return w;
  }
};

struct CurriculumTrial {
  int trial = 0;
  CurriculumWeights weights;
  double objective = 0.0;
};

struct TrainHyper {
  double base_lr = 1e-4;
  long warmup_steps = 200;
  int batch_size = 16;
  double mass_fraction = 0.5;
  BTParams bt;
  long valid_every = 200;  // 0: only at the end
};

// Declared below (used by curriculum trials).
inline void train_supervised(Parameters& params, const ModelConfig& cfg,
                             const std::vector<IdPair>& pairs,
                             const std::vector<size_t>& order, const TrainHyper& hyper,
                             long steps, uint64_t seed,
                             const std::function<void(long, double, double)>& on_step = nullptr);

// For each trial: sample weights, order the pseudo-parallel data, fine-tune a
// fresh copy of the base model with supervised steps only (no online
// backtranslation), and record the summed validation perplexity of both
// directions. Returns the argmin weights.
inline CurriculumWeights curriculum_search(int trial_budget, int updates_per_trial,
                                           const Parameters& base, const ModelConfig& cfg,
                                           const std::vector<IdPair>& pairs,
                                           const std::vector<ScoredPair>& scored,
                                           const std::vector<IdPair>& valid01,
                                           const std::vector<IdPair>& valid10,
                                           const TrainHyper& hyper, uint64_t seed,
                                           SearchStrategy* strategy = nullptr,
                                           std::vector<CurriculumTrial>* trials = nullptr) {
  require(trial_budget >= 1, "curriculum_search: trial budget must be >= 1");
  require(updates_per_trial >= 1, "curriculum_search: updates_per_trial must be >= 1");
  require(scored.size() == pairs.size(), "curriculum_search: scores do not match pairs");
  RandomSearch default_strategy;
  if (strategy == nullptr) strategy = &default_strategy;

  CurriculumWeights best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trial_budget; ++t) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
    CurriculumWeights w = strategy->suggest(t, rng);
    w.validate();
    auto perm = order_by(scored, w);
    Parameters params = base;
    train_supervised(params, cfg, pairs, perm, hyper, updates_per_trial,
                     derive_seed(seed, 1000003ULL + static_cast<uint64_t>(t)));
    double obj = validate_ppl(params, cfg, valid01, hyper.batch_size) +
                 validate_ppl(params, cfg, valid10, hyper.batch_size);
    strategy->observe(w, obj);
    if (trials != nullptr) trials->push_back({t, w, obj});
    if (obj < best_obj) {
      best_obj = obj;
      best = w;
    }
  }
  return best;
}

// --------------------------------------------------------------------------
// Offline backtranslation

struct LangCodec {
  const subword::MergeTable* table = nullptr;
  const subword::Vocabulary* vocab = nullptr;

  IdSentence encode(const std::string& line) const {
    return subword::encode_line(line, *table, *vocab);
  }
  std::string decode_text(const IdSentence& ids) const {
    return subword::text_of_ids(ids, *vocab);
  }
};

// Decodes a whole corpus with a trained model; pairs are synthetic->authentic
// and tagged pseudo-NMT.
inline Bitext offline_backtranslate(const Parameters& params, const ModelConfig& cfg,
                                    const std::vector<std::string>& corpus, int mono_lang,
                                    int other_lang, const LangCodec& mono_codec,
                                    const LangCodec& other_codec,
                                    const decode::DecodeParams& dp) {
  Bitext out;
  out.pairs.reserve(corpus.size());
  for (const auto& line : corpus) {
    IdSentence ids = mono_codec.encode(line);
    std::string syneth;
    if (!ids.empty()) {
      auto res = decode::decode(params, cfg, ids, mono_lang, other_lang, dp, nullptr);
      syneth = other_codec.decode_text(res.ids);
    }
    out.pairs.push_back({std::move(syneth), line, Provenance::kPseudoNmt});
  }
  return out;
}

// --------------------------------------------------------------------------
// Training loops

struct TrainEvent {
  long step = 0;
  std::string phase;      // e.g. "mass:de", "bt:0->1", "sup:1->0", "valid:0->1"
  double loss = 0.0;
  double ppl = 0.0;
  double lr = 0.0;
};

using EventSink = std::function<void(const TrainEvent&)>;

namespace detail {

// Deterministic shuffled epochs over [0, n). Optionally consumes a given
// order for the first pass, then reshuffles per epoch.
class IndexCycler {
 public:
  IndexCycler(size_t n, uint64_t seed, std::vector<size_t> first_order = {})
      : rng_(seed) {
    require(n > 0, "IndexCycler: empty corpus");
    if (!first_order.empty()) {
      require(first_order.size() == n, "IndexCycler: order size mismatch");
      order_ = std::move(first_order);
    } else {
      order_.resize(n);
      for (size_t i = 0; i < n; ++i) order_[i] = i;
      rng_.shuffle(order_);
    }
  }

  size_t next() {
    if (pos_ >= order_.size()) {
      pos_ = 0;
      rng_.shuffle(order_);
    }
    return order_[pos_++];
  }

 private:
  std::vector<size_t> order_;
  size_t pos_ = 0;
  Rng rng_;
};

}  // namespace detail

inline void train_supervised(Parameters& params, const ModelConfig& cfg,
                             const std::vector<IdPair>& pairs, const std::vector<size_t>& order,
                             const TrainHyper& hyper, long steps, uint64_t seed,
                             const std::function<void(long, double, double)>& on_step) {
  require(!pairs.empty(), "train_supervised: no pairs");
  OptimState opt = OptimState::create(params, hyper.base_lr, hyper.warmup_steps);
  detail::IndexCycler cycler(pairs.size(), derive_seed(seed, 17), order);
  for (long s = 0; s < steps; ++s) {
    std::vector<IdPair> chunk;
    chunk.reserve(static_cast<size_t>(hyper.batch_size));
    for (int k = 0; k < hyper.batch_size; ++k) chunk.push_back(pairs[cycler.next()]);
    auto res = supervised_step(params, cfg, make_pair_batch(chunk));
    optimizer_step(params, res.grads, opt);
    if (on_step) on_step(opt.step, res.loss, opt.lr_at(opt.step));
  }
}

// MASS pretraining / fine-tuning over one or more monolingual corpora,
// alternating languages per step. Sentences carry EOS already.
inline void train_mass(Parameters& params, const ModelConfig& cfg,
                       const std::vector<const IdCorpus*>& corpora,
                       const std::vector<int>& langs, const TrainHyper& hyper, long steps,
                       uint64_t seed, const std::vector<const IdCorpus*>& valid,
                       const EventSink& sink = nullptr) {
  require(!corpora.empty() && corpora.size() == langs.size(), "train_mass: bad corpora");
  OptimState opt = OptimState::create(params, hyper.base_lr, hyper.warmup_steps);
  std::vector<detail::IndexCycler> cyclers;
  for (size_t c = 0; c < corpora.size(); ++c) {
    cyclers.emplace_back(corpora[c]->size(), derive_seed(seed, 100 + c));
  }
  auto do_valid = [&](long step) {
    if (valid.empty() || sink == nullptr) return;
    for (size_t c = 0; c < valid.size(); ++c) {
      if (valid[c] == nullptr || valid[c]->empty()) continue;
      double ppl = validate_mass_ppl(params, cfg, *valid[c], langs[c], hyper.mass_fraction,
                                     derive_seed(seed, 777 + c), hyper.batch_size);
      sink(TrainEvent{step, "valid:mass:lang" + std::to_string(langs[c]), 0.0, ppl,
                      step > 0 ? opt.lr_at(step) : 0.0});
    }
  };
  do_valid(0);
  for (long s = 0; s < steps; ++s) {
    size_t c = static_cast<size_t>(s) % corpora.size();
    std::vector<IdSentence> sents;
    int budget = hyper.batch_size * 4;  // tolerate short-sentence skips
    Rng rng(derive_seed(seed, 5000 + static_cast<uint64_t>(s)));
    while (static_cast<int>(sents.size()) < hyper.batch_size && budget-- > 0) {
      const IdSentence& cand = (*corpora[c])[cyclers[c].next()];
      if (!cand.empty()) sents.push_back(cand);  // EOS is appended by the batcher
    }
    require(!sents.empty(), "train_mass: corpus has no nonempty sentences");
    Batch b = make_mass_batch(sents, hyper.mass_fraction, langs[c], rng);
    auto res = model::forward_loss_backward(params, b, cfg, true);
    optimizer_step(params, res.grads, opt);
    if (sink != nullptr) {
      sink(TrainEvent{opt.step, "mass:lang" + std::to_string(langs[c]), res.loss, 0.0,
                      opt.lr_at(opt.step)});
    }
    if (hyper.valid_every > 0 && opt.step % hyper.valid_every == 0) do_valid(opt.step);
  }
  do_valid(opt.step);
}

struct UnmtOptions {
  long steps = 1000;            // optimizer updates
  bool use_pseudo = false;      // alternate supervised pseudo-parallel batches
  std::vector<size_t> pseudo_order;  // optional curriculum permutation
  int gen_max_len = 0;          // 0: auto (src len + 8)
};

// Online backtranslation in both directions, optionally alternated with one
// supervised pseudo-parallel batch per direction (schedule:
// [sup 0->1][bt 0->1][sup 1->0][bt 1->0], or [bt 0->1][bt 1->0]).
inline void train_unmt(Parameters& params, const ModelConfig& cfg, const IdCorpus& mono0,
                       const IdCorpus& mono1, const std::vector<IdPair>& pseudo,
                       const UnmtOptions& opts, const TrainHyper& hyper, uint64_t seed,
                       const std::vector<IdPair>& valid01, const std::vector<IdPair>& valid10,
                       const EventSink& sink = nullptr) {
  require(!mono0.empty() && !mono1.empty(), "train_unmt: empty monolingual corpus");
  hyper.bt.validate();
  OptimState opt = OptimState::create(params, hyper.base_lr, hyper.warmup_steps);
  detail::IndexCycler cyc0(mono0.size(), derive_seed(seed, 201));
  detail::IndexCycler cyc1(mono1.size(), derive_seed(seed, 202));

  std::vector<IdPair> pseudo01, pseudo10;
  if (opts.use_pseudo) {
    if (!opts.pseudo_order.empty()) {
      // the permutation addresses the full pseudo set; split it per direction
      require(opts.pseudo_order.size() == pseudo.size(), "train_unmt: bad pseudo_order");
      for (size_t idx : opts.pseudo_order) {
        const auto& p = pseudo[idx];
        (p.src_lang == 0 ? pseudo01 : pseudo10).push_back(p);
      }
    } else {
      for (const auto& p : pseudo) (p.src_lang == 0 ? pseudo01 : pseudo10).push_back(p);
    }
  }
  std::optional<detail::IndexCycler> sup01, sup10;
  std::vector<size_t> identity01(pseudo01.size()), identity10(pseudo10.size());
  for (size_t i = 0; i < identity01.size(); ++i) identity01[i] = i;
  for (size_t i = 0; i < identity10.size(); ++i) identity10[i] = i;
  if (!pseudo01.empty()) sup01.emplace(pseudo01.size(), derive_seed(seed, 203), identity01);
  if (!pseudo10.empty()) sup10.emplace(pseudo10.size(), derive_seed(seed, 204), identity10);

  auto do_valid = [&](long step) {
    if (sink == nullptr) return;
    if (!valid01.empty()) {
      sink(TrainEvent{step, "valid:0->1", 0.0, validate_ppl(params, cfg, valid01, hyper.batch_size),
                      step > 0 ? opt.lr_at(step) : 0.0});
    }
    if (!valid10.empty()) {
      sink(TrainEvent{step, "valid:1->0", 0.0, validate_ppl(params, cfg, valid10, hyper.batch_size),
                      step > 0 ? opt.lr_at(step) : 0.0});
    }
  };

  struct Task {
    enum Kind { kSup, kBt } kind;
    int dir;  // 0: 0->1, 1: 1->0
  };
  std::vector<Task> schedule;
  if (sup01 || sup10) {
    if (sup01) schedule.push_back({Task::kSup, 0});
    schedule.push_back({Task::kBt, 0});
    if (sup10) schedule.push_back({Task::kSup, 1});
    schedule.push_back({Task::kBt, 1});
  } else {
    schedule.push_back({Task::kBt, 0});
    schedule.push_back({Task::kBt, 1});
  }

  for (long s = 0; s < opts.steps; ++s) {
    const Task& task = schedule[static_cast<size_t>(s) % schedule.size()];
    Rng rng(derive_seed(seed, 9000 + static_cast<uint64_t>(s)));
    double loss = 0.0;
    std::string phase;
    if (task.kind == Task::kSup) {
      auto& pool = task.dir == 0 ? pseudo01 : pseudo10;
      auto& cyc = task.dir == 0 ? *sup01 : *sup10;
      std::vector<IdPair> chunk;
      for (int k = 0; k < hyper.batch_size; ++k) chunk.push_back(pool[cyc.next()]);
      auto res = supervised_step(params, cfg, make_pair_batch(chunk));
      optimizer_step(params, res.grads, opt);
      loss = res.loss;
      phase = task.dir == 0 ? "sup:0->1" : "sup:1->0";
    } else {
      // direction d trains d_src -> d_tgt on monolingual d_tgt data
      int mono_lang = task.dir == 0 ? 1 : 0;
      int other_lang = 1 - mono_lang;
      auto& cyc = mono_lang == 0 ? cyc0 : cyc1;
      const IdCorpus& mono = mono_lang == 0 ? mono0 : mono1;
      std::vector<IdSentence> chunk;
      int budget = hyper.batch_size * 4;
      while (static_cast<int>(chunk.size()) < hyper.batch_size && budget-- > 0) {
        const IdSentence& cand = mono[cyc.next()];
        if (!cand.empty()) chunk.push_back(cand);
      }
      require(!chunk.empty(), "train_unmt: no usable monolingual sentences");
      auto res = online_bt_step(params, cfg, chunk, mono_lang, other_lang, hyper.bt, rng,
                                opts.gen_max_len);
      optimizer_step(params, res.grads, opt);
      loss = res.loss;
      phase = std::string("bt:") + (task.dir == 0 ? "0->1" : "1->0") +
              (res.used_sampling ? ":sample" : ":greedy");
    }
    if (sink != nullptr) sink(TrainEvent{opt.step, phase, loss, 0.0, opt.lr_at(opt.step)});
    if (hyper.valid_every > 0 && opt.step % hyper.valid_every == 0) do_valid(opt.step);
  }
  do_valid(opt.step);
}

}  // namespace umt::trainer
