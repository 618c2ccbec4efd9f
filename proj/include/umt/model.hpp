// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// A small encoder-decoder transformer with explicit forward/backward passes,
// extendable embeddings, optional residual adapters and per-tensor freeze
// masks. Post-norm layers, ReLU feed-forward, learned positional embeddings.
//
// Layer layout per encoder layer i (prefix "enc.<i>."):
//   attn.{wq,bq,wk,bk,wv,bv,wo,bo}  ln1.{gamma,beta}
//   ffn.{w1,b1,w2,b2}               ln2.{gamma,beta}
//   adapter.{wdown,bdown,wup,bup}   (after insert_adapters)
// Decoder layers add xattn.* / lnx.* (cross attention) and, with the
// rejected-variant flag, xadapter.* after the cross-attention sublayer.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "umt/subword.hpp"
#include "umt/tensor.hpp"
#include "umt/util.hpp"

namespace umt::model {

struct ModelConfig {
  int n_layers_enc = 2;
  int n_layers_dec = 2;
  int d_model = 64;
  int d_ffn = 256;
  int n_heads = 4;
  int vocab_size = 0;
  int max_len = 256;
  bool adapters_enabled = false;
  int d_adapter = 16;
  bool use_lang_embeddings = true;
  int n_langs = 2;
  double label_smoothing = 0.1;
  bool tie_embeddings = false;
  bool adapter_on_cross_attention = false;  // variant that also freezes cross
                                            // attention; off by default

  void validate() const {
    require(n_layers_enc >= 1 && n_layers_dec >= 1, "ModelConfig: need at least 1 layer");
    require(d_model >= 2 && d_ffn >= 1 && n_heads >= 1, "ModelConfig: bad dims");
    require(d_model % n_heads == 0, "ModelConfig: d_model must be divisible by n_heads");
    require(vocab_size > subword::kNumSpecials, "ModelConfig: vocab_size too small");
    require(max_len >= 2, "ModelConfig: max_len must be >= 2");
    if (adapters_enabled) {
      require(d_adapter >= 1 && d_adapter < d_model,
              "ModelConfig: d_adapter must be in [1, d_model)");
    }
    require(label_smoothing >= 0.0 && label_smoothing < 1.0,
            "ModelConfig: label_smoothing must be in [0,1)");
    require(n_langs >= 1, "ModelConfig: n_langs must be >= 1");
  }
};

// --------------------------------------------------------------------------
// Initialization

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

inline bool contains(const std::string& s, const std::string& sub) {
  return s.find(sub) != std::string::npos;
}

inline void fill_uniform(Mat& t, double a, Rng& rng) {
  for (long r = 0; r < t.rows(); ++r) {
    for (long c = 0; c < t.cols(); ++c) t(r, c) = (2.0 * rng.uniform() - 1.0) * a;
  }
}

inline void fill_normal(Mat& t, double std, Rng& rng) {
  for (long r = 0; r < t.rows(); ++r) {
    for (long c = 0; c < t.cols(); ++c) t(r, c) = rng.normal() * std;
  }
}

// Scaled uniform for linear maps, normal(0, d_model^-1/2) for embeddings,
// ones/zeros for norms and biases. Adapter up-projections start at zero so
// insertion is function-preserving.
inline void init_tensor(const std::string& name, Mat& t, const ModelConfig& cfg, Rng& rng) {
  if (contains(name, "embed.")) {
    fill_normal(t, 1.0 / std::sqrt(static_cast<double>(cfg.d_model)), rng);
  } else if (ends_with(name, ".gamma")) {
    t.setOnes();
  } else if (contains(name, "adapter.wup")) {
    t.setZero();
  } else if (contains(name, ".w") && !ends_with(name, ".beta") &&
             (contains(name, "attn.") || contains(name, "ffn.") || contains(name, "adapter.") ||
              name == "out.weight")) {
    double a = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    fill_uniform(t, a, rng);
  } else {
    t.setZero();  // biases, betas
  }
}

inline void add_attention(Parameters& p, const std::string& prefix, int d) {
  p.add(prefix + "wq", d, d);
  p.add(prefix + "bq", 1, d);
  p.add(prefix + "wk", d, d);
  p.add(prefix + "bk", 1, d);
  p.add(prefix + "wv", d, d);
  p.add(prefix + "bv", 1, d);
  p.add(prefix + "wo", d, d);
  p.add(prefix + "bo", 1, d);
}

inline void add_ln(Parameters& p, const std::string& prefix, int d) {
  p.add(prefix + "gamma", 1, d);
  p.add(prefix + "beta", 1, d);
}

inline void add_ffn(Parameters& p, const std::string& prefix, int d, int f) {
  p.add(prefix + "w1", d, f);
  p.add(prefix + "b1", 1, f);
  p.add(prefix + "w2", f, d);
  p.add(prefix + "b2", 1, d);
}

inline void add_adapter(Parameters& p, const std::string& prefix, int d, int a) {
  p.add(prefix + "wdown", d, a);
  p.add(prefix + "bdown", 1, a);
  p.add(prefix + "wup", a, d);
  p.add(prefix + "bup", 1, d);
}

}  // namespace detail

inline Parameters init_model(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Parameters p;
  p.add("embed.tokens", cfg.vocab_size, cfg.d_model);
  p.add("embed.positions", cfg.max_len, cfg.d_model);
  if (cfg.use_lang_embeddings) p.add("embed.lang", cfg.n_langs, cfg.d_model);
  for (int i = 0; i < cfg.n_layers_enc; ++i) {
    std::string pre = "enc." + std::to_string(i) + ".";
    detail::add_attention(p, pre + "attn.", cfg.d_model);
    detail::add_ln(p, pre + "ln1.", cfg.d_model);
    detail::add_ffn(p, pre + "ffn.", cfg.d_model, cfg.d_ffn);
    detail::add_ln(p, pre + "ln2.", cfg.d_model);
  }
  for (int i = 0; i < cfg.n_layers_dec; ++i) {
    std::string pre = "dec." + std::to_string(i) + ".";
    detail::add_attention(p, pre + "attn.", cfg.d_model);
    detail::add_ln(p, pre + "ln1.", cfg.d_model);
    detail::add_attention(p, pre + "xattn.", cfg.d_model);
    detail::add_ln(p, pre + "lnx.", cfg.d_model);
    detail::add_ffn(p, pre + "ffn.", cfg.d_model, cfg.d_ffn);
    detail::add_ln(p, pre + "ln2.", cfg.d_model);
  }
  if (!cfg.tie_embeddings) p.add("out.weight", cfg.vocab_size, cfg.d_model);
  p.add("out.bias", 1, cfg.vocab_size);

  Rng rng(seed);
  for (const auto& name : p.names()) detail::init_tensor(name, p.at(name), cfg, rng);
  return p;
}

inline bool has_adapters(const Parameters& p) { return p.has("enc.0.adapter.wdown"); }

// --------------------------------------------------------------------------
// Vocabulary extension: rows for old ids are copied bit-exactly, new rows are
// freshly initialized, the output projection is extended consistently.

inline Parameters extend_embeddings(const Parameters& params, const subword::Vocabulary& old_vocab,
                                    const subword::Vocabulary& new_vocab, uint64_t seed) {
  require(new_vocab.size() >= old_vocab.size(), "extend_embeddings: new vocabulary is smaller");
  for (int i = 0; i < old_vocab.size(); ++i) {
    require(new_vocab.token_of(i) == old_vocab.token_of(i),
            "extend_embeddings: vocabulary mismatch at id " + std::to_string(i));
  }
  const long old_v = old_vocab.size();
  const long new_v = new_vocab.size();
  const long extra = new_v - old_v;

  Parameters out;
  Rng rng(seed);
  for (const auto& name : params.names()) {
    const Mat& src = params.at(name);
    if (extra > 0 && (name == "embed.tokens" || name == "out.weight")) {
      require(src.rows() == old_v, "extend_embeddings: " + name + " does not match old vocab");
      Mat& t = out.add(name, new_v, src.cols());
      Mat fresh(new_v, src.cols());
      if (name == "embed.tokens") {
        detail::fill_normal(fresh, 1.0 / std::sqrt(static_cast<double>(src.cols())), rng);
      } else {
        detail::fill_uniform(fresh, std::sqrt(6.0 / static_cast<double>(new_v + src.cols())), rng);
      }
      t = fresh;
      t.topRows(old_v) = src;
    } else if (extra > 0 && name == "out.bias") {
      require(src.cols() == old_v, "extend_embeddings: out.bias does not match old vocab");
      Mat& t = out.add(name, 1, new_v);
      t.setZero();
      t.leftCols(old_v) = src;
    } else {
      out.add(name, src.rows(), src.cols()) = src;
    }
  }
  for (const auto& name : params.freeze_mask()) out.freeze(name);
  return out;
}

// --------------------------------------------------------------------------
// Adapters

// Inserts a zero-initialized bottleneck block after every layer's FFN
// sublayer (and after the decoder cross-attention sublayer under the
// variant flag). Freezes everything except the output layer, the
// embeddings, the decoder's attention to the encoder and the adapters.
inline void insert_adapters(Parameters& p, const ModelConfig& cfg, uint64_t seed) {
  require(!has_adapters(p), "insert_adapters: adapters already present");
  require(cfg.d_adapter >= 1 && cfg.d_adapter < cfg.d_model,
          "insert_adapters: d_adapter must be in [1, d_model)");
  std::vector<std::string> new_names;
  for (int i = 0; i < cfg.n_layers_enc; ++i) {
    std::string pre = "enc." + std::to_string(i) + ".adapter.";
    detail::add_adapter(p, pre, cfg.d_model, cfg.d_adapter);
    new_names.push_back(pre);
  }
  for (int i = 0; i < cfg.n_layers_dec; ++i) {
    std::string pre = "dec." + std::to_string(i) + ".";
    detail::add_adapter(p, pre + "adapter.", cfg.d_model, cfg.d_adapter);
    new_names.push_back(pre + "adapter.");
    if (cfg.adapter_on_cross_attention) {
      detail::add_adapter(p, pre + "xadapter.", cfg.d_model, cfg.d_adapter);
      new_names.push_back(pre + "xadapter.");
    }
  }
  Rng rng(seed);
  for (const auto& pre : new_names) {
    for (const char* leaf : {"wdown", "bdown", "wup", "bup"}) {
      detail::init_tensor(pre + leaf, p.at(pre + leaf), cfg, rng);
    }
  }
  // Freeze mask: encoder/decoder self-attention and FFN stacks (with their
  // norms) stay fixed; cross attention stays trainable unless the variant
  // freezes it behind its own adapter.
  for (const auto& name : p.names()) {
    bool adapter = detail::contains(name, "adapter.");
    bool embed = detail::contains(name, "embed.");
    bool output = name == "out.weight" || name == "out.bias";
    bool cross = detail::contains(name, ".xattn.") || detail::contains(name, ".lnx.");
    if (adapter || embed || output) continue;
    if (cross && !cfg.adapter_on_cross_attention) continue;
    p.freeze(name);
  }
}

// All layers become trainable (used when switching to unsupervised NMT).
inline void clear_freeze(Parameters& p) { p.unfreeze_all(); }

// --------------------------------------------------------------------------
// Batches

struct Batch {
  std::vector<std::vector<int>> src;             // B x Ts, padded
  std::vector<std::vector<int>> dec_in;          // B x Tt
  std::vector<std::vector<int>> labels;          // B x Tt
  std::vector<std::vector<uint8_t>> src_mask;    // 1 = real token
  std::vector<std::vector<uint8_t>> tgt_mask;    // applies to dec_in/labels
  std::vector<int> src_lang, tgt_lang;           // per sentence
  std::vector<int> pos_offset;                   // decoder position offsets

  size_t size() const { return src.size(); }
};

// Teacher-forcing batch: encoder reads src + EOS, decoder reads BOS + tgt and
// predicts tgt + EOS.
inline Batch make_translation_batch(const std::vector<std::vector<int>>& src_sents,
                                    const std::vector<std::vector<int>>& tgt_sents, int src_lang,
                                    int tgt_lang) {
  require(src_sents.size() == tgt_sents.size(), "make_translation_batch: size mismatch");
  require(!src_sents.empty(), "make_translation_batch: empty batch");
  Batch b;
  size_t ts = 0, tt = 0;
  for (const auto& s : src_sents) ts = std::max(ts, s.size() + 1);
  for (const auto& t : tgt_sents) tt = std::max(tt, t.size() + 1);
  for (size_t i = 0; i < src_sents.size(); ++i) {
    std::vector<int> s = src_sents[i];
    s.push_back(subword::kEosId);
    std::vector<uint8_t> sm(ts, 0);
    std::fill(sm.begin(), sm.begin() + static_cast<long>(s.size()), 1);
    s.resize(ts, subword::kPadId);

    std::vector<int> din, lab;
    din.push_back(subword::kBosId);
    for (int id : tgt_sents[i]) din.push_back(id);
    lab = tgt_sents[i];
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
    b.src_lang.push_back(src_lang);
    b.tgt_lang.push_back(tgt_lang);
    b.pos_offset.push_back(0);
  }
  return b;
}

// --------------------------------------------------------------------------
// Forward / backward engine

namespace detail {

inline constexpr double kLnEps = 1e-5;
inline constexpr double kMaskedScore = -1e30;

inline void softmax_rows_inplace(Mat& s) {
  for (long i = 0; i < s.rows(); ++i) {
    double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

inline Mat softmax_rows_bwd(const Mat& p, const Mat& dp) {
  Mat ds(p.rows(), p.cols());
  for (long i = 0; i < p.rows(); ++i) {
    double dot = p.row(i).dot(dp.row(i));
    ds.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
  }
  return ds;
}

struct LnCache {
  Mat xhat;
  Eigen::ArrayXd inv_std;
};

inline Mat layer_norm_fwd(const Mat& x, const Mat& gamma, const Mat& beta, LnCache* c) {
  const long t = x.rows(), d = x.cols();
  c->xhat.resize(t, d);
  c->inv_std.resize(t);
  Mat y(t, d);
  for (long i = 0; i < t; ++i) {
    double mu = x.row(i).mean();
    double var = (x.row(i).array() - mu).square().sum() / static_cast<double>(d);
    double is = 1.0 / std::sqrt(var + kLnEps);
    c->inv_std(i) = is;
    c->xhat.row(i) = (x.row(i).array() - mu) * is;
    y.row(i) =
        (c->xhat.row(i).array() * gamma.row(0).array() + beta.row(0).array()).matrix();
  }
  return y;
}

inline Mat layer_norm_bwd(const Mat& dy, const LnCache& c, const Mat& gamma, Mat* dgamma,
                          Mat* dbeta) {
  if (dgamma != nullptr) dgamma->row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  if (dbeta != nullptr) dbeta->row(0) += dy.colwise().sum();
  const long t = dy.rows(), d = dy.cols();
  Mat dx(t, d);
  for (long i = 0; i < t; ++i) {
    Eigen::ArrayXXd dxhat = dy.row(i).array() * gamma.row(0).array();
    double m1 = dxhat.sum() / static_cast<double>(d);
    double m2 = (dxhat * c.xhat.row(i).array()).sum() / static_cast<double>(d);
    dx.row(i) = (c.inv_std(i) * (dxhat - m1 - c.xhat.row(i).array() * m2)).matrix();
  }
  return dx;
}

struct AttnCache {
  Mat q_in, kv_in;
  Mat q, k, v, concat;
  std::vector<Mat> probs;  // per head, Tq x Tk
};

// mask: Tq x Tk additive (0 or kMaskedScore).
inline Mat attention_fwd(const Parameters& p, const std::string& pre, const Mat& q_in,
                         const Mat& kv_in, const Mat& mask, int n_heads, AttnCache* c) {
  const Mat& wq = p.at(pre + "wq");
  const long d = wq.cols();
  const long dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c->q_in = q_in;
  c->kv_in = kv_in;
  c->q = q_in * wq;
  c->q.rowwise() += p.at(pre + "bq").row(0);
  c->k = kv_in * p.at(pre + "wk");
  c->k.rowwise() += p.at(pre + "bk").row(0);
  c->v = kv_in * p.at(pre + "wv");
  c->v.rowwise() += p.at(pre + "bv").row(0);
  c->probs.assign(static_cast<size_t>(n_heads), Mat());
  c->concat.resize(q_in.rows(), d);
  for (int h = 0; h < n_heads; ++h) {
    Mat s = (c->q.middleCols(h * dh, dh) * c->k.middleCols(h * dh, dh).transpose()) * scale;
    s += mask;
    softmax_rows_inplace(s);
    c->concat.middleCols(h * dh, dh) = s * c->v.middleCols(h * dh, dh);
    c->probs[static_cast<size_t>(h)] = std::move(s);
  }
  Mat out = c->concat * p.at(pre + "wo");
  out.rowwise() += p.at(pre + "bo").row(0);
  return out;
}

// Accumulates parameter gradients and adds input gradients into dq_in/dkv_in.
inline void attention_bwd(const Parameters& p, const std::string& pre, const Mat& d_out,
                          const AttnCache& c, int n_heads, Gradients& g, Mat* dq_in,
                          Mat* dkv_in) {
  const Mat& wq = p.at(pre + "wq");
  const long d = wq.cols();
  const long dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  if (Mat* gw = g.find(pre + "wo")) *gw += c.concat.transpose() * d_out;
  if (Mat* gb = g.find(pre + "bo")) gb->row(0) += d_out.colwise().sum();
  Mat dconcat = d_out * p.at(pre + "wo").transpose();

  Mat dq = Mat::Zero(c.q.rows(), d);
  Mat dk = Mat::Zero(c.k.rows(), d);
  Mat dv = Mat::Zero(c.v.rows(), d);
  for (int h = 0; h < n_heads; ++h) {
    const Mat& probs = c.probs[static_cast<size_t>(h)];
    auto d_ctx = dconcat.middleCols(h * dh, dh);
    Mat dp = d_ctx * c.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh) = probs.transpose() * d_ctx;
    Mat ds = softmax_rows_bwd(probs, dp);
    dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh) * scale;
    dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh) * scale;
  }
  if (Mat* gw = g.find(pre + "wq")) *gw += c.q_in.transpose() * dq;
  if (Mat* gb = g.find(pre + "bq")) gb->row(0) += dq.colwise().sum();
  if (Mat* gw = g.find(pre + "wk")) *gw += c.kv_in.transpose() * dk;
  if (Mat* gb = g.find(pre + "bk")) gb->row(0) += dk.colwise().sum();
  if (Mat* gw = g.find(pre + "wv")) *gw += c.kv_in.transpose() * dv;
  if (Mat* gb = g.find(pre + "bv")) gb->row(0) += dv.colwise().sum();
  *dq_in += dq * wq.transpose();
  *dkv_in += dk * p.at(pre + "wk").transpose() + dv * p.at(pre + "wv").transpose();
}

struct FfnCache {
  Mat x, pre_act, act;
};

inline Mat ffn_fwd(const Parameters& p, const std::string& pre, const Mat& x, FfnCache* c) {
  c->x = x;
  c->pre_act = x * p.at(pre + "w1");
  c->pre_act.rowwise() += p.at(pre + "b1").row(0);
  c->act = c->pre_act.cwiseMax(0.0);
  Mat out = c->act * p.at(pre + "w2");
  out.rowwise() += p.at(pre + "b2").row(0);
  return out;
}

inline Mat ffn_bwd(const Parameters& p, const std::string& pre, const Mat& dy, const FfnCache& c,
                   Gradients& g) {
  if (Mat* gw = g.find(pre + "w2")) *gw += c.act.transpose() * dy;
  if (Mat* gb = g.find(pre + "b2")) gb->row(0) += dy.colwise().sum();
  Mat dact = dy * p.at(pre + "w2").transpose();
  Mat dpre = ((c.pre_act.array() > 0.0).cast<double>() * dact.array()).matrix();
  if (Mat* gw = g.find(pre + "w1")) *gw += c.x.transpose() * dpre;
  if (Mat* gb = g.find(pre + "b1")) gb->row(0) += dpre.colwise().sum();
  return dpre * p.at(pre + "w1").transpose();
}

struct AdapterCache {
  Mat x, pre_act, act;
};

// x + up(relu(down(x))): function-preserving at insertion (wup = bup = 0).
inline Mat adapter_fwd(const Parameters& p, const std::string& pre, const Mat& x,
                       AdapterCache* c) {
  c->x = x;
  c->pre_act = x * p.at(pre + "wdown");
  c->pre_act.rowwise() += p.at(pre + "bdown").row(0);
  c->act = c->pre_act.cwiseMax(0.0);
  Mat out = c->act * p.at(pre + "wup");
  out.rowwise() += p.at(pre + "bup").row(0);
  return x + out;
}

inline Mat adapter_bwd(const Parameters& p, const std::string& pre, const Mat& dy,
                       const AdapterCache& c, Gradients& g) {
  if (Mat* gw = g.find(pre + "wup")) *gw += c.act.transpose() * dy;
  if (Mat* gb = g.find(pre + "bup")) gb->row(0) += dy.colwise().sum();
  Mat dact = dy * p.at(pre + "wup").transpose();
  Mat dpre = ((c.pre_act.array() > 0.0).cast<double>() * dact.array()).matrix();
  if (Mat* gw = g.find(pre + "wdown")) *gw += c.x.transpose() * dpre;
  if (Mat* gb = g.find(pre + "bdown")) gb->row(0) += dpre.colwise().sum();
  return dy + dpre * p.at(pre + "wdown").transpose();  // residual passthrough
}

inline Mat embed_fwd(const Parameters& p, const ModelConfig& cfg, const std::vector<int>& ids,
                     int lang, int pos_offset) {
  const Mat& tok = p.at("embed.tokens");
  const Mat& pos = p.at("embed.positions");
  const long t_len = static_cast<long>(ids.size());
  require(pos_offset >= 0 && pos_offset + t_len <= cfg.max_len,
          "sequence exceeds max_len (" + std::to_string(pos_offset + t_len) + " > " +
              std::to_string(cfg.max_len) + ")");
  Mat x(t_len, cfg.d_model);
  for (long t = 0; t < t_len; ++t) {
    int id = ids[static_cast<size_t>(t)];
    require(id >= 0 && id < cfg.vocab_size, "token id out of range: " + std::to_string(id));
    x.row(t) = tok.row(id) + pos.row(pos_offset + t);
  }
  if (cfg.use_lang_embeddings) {
    require(lang >= 0 && lang < cfg.n_langs, "language id out of range");
    x.rowwise() += p.at("embed.lang").row(lang);
  }
  return x;
}

inline void embed_bwd(const ModelConfig& cfg, const std::vector<int>& ids, int lang,
                      int pos_offset, const Mat& dx, Gradients& g) {
  Mat* gtok = g.find("embed.tokens");
  Mat* gpos = g.find("embed.positions");
  for (long t = 0; t < dx.rows(); ++t) {
    if (gtok != nullptr) gtok->row(ids[static_cast<size_t>(t)]) += dx.row(t);
    if (gpos != nullptr) gpos->row(pos_offset + t) += dx.row(t);
  }
  if (cfg.use_lang_embeddings) {
    if (Mat* gl = g.find("embed.lang")) gl->row(lang) += dx.colwise().sum();
  }
}

// Additive attention masks.
inline Mat key_mask(long t_q, const std::vector<uint8_t>& key_real) {
  Mat m = Mat::Zero(t_q, static_cast<long>(key_real.size()));
  for (long j = 0; j < m.cols(); ++j) {
    if (!key_real[static_cast<size_t>(j)]) m.col(j).setConstant(kMaskedScore);
  }
  return m;
}

inline Mat causal_key_mask(const std::vector<uint8_t>& key_real) {
  const long t = static_cast<long>(key_real.size());
  Mat m = Mat::Zero(t, t);
  for (long i = 0; i < t; ++i) {
    for (long j = 0; j < t; ++j) {
      if (j > i || !key_real[static_cast<size_t>(j)]) m(i, j) = kMaskedScore;
    }
  }
  return m;
}

struct EncLayerCache {
  AttnCache attn;
  LnCache ln1;
  FfnCache ffn;
  LnCache ln2;
  AdapterCache ad;
};

struct DecLayerCache {
  AttnCache self;
  LnCache ln1;
  AttnCache cross;
  LnCache lnx;
  AdapterCache xad;
  FfnCache ffn;
  LnCache ln2;
  AdapterCache ad;
};

inline Mat encoder_stack_fwd(const Parameters& p, const ModelConfig& cfg, const Mat& x0,
                             const Mat& self_mask, std::vector<EncLayerCache>* caches) {
  const bool adapters = has_adapters(p);
  caches->assign(static_cast<size_t>(cfg.n_layers_enc), EncLayerCache{});
  Mat x = x0;
  for (int i = 0; i < cfg.n_layers_enc; ++i) {
    EncLayerCache& c = (*caches)[static_cast<size_t>(i)];
    std::string pre = "enc." + std::to_string(i) + ".";
    Mat a = attention_fwd(p, pre + "attn.", x, x, self_mask, cfg.n_heads, &c.attn);
    Mat x1 = layer_norm_fwd(x + a, p.at(pre + "ln1.gamma"), p.at(pre + "ln1.beta"), &c.ln1);
    Mat f = ffn_fwd(p, pre + "ffn.", x1, &c.ffn);
    Mat x2 = layer_norm_fwd(x1 + f, p.at(pre + "ln2.gamma"), p.at(pre + "ln2.beta"), &c.ln2);
    x = adapters ? adapter_fwd(p, pre + "adapter.", x2, &c.ad) : std::move(x2);
  }
  return x;
}

// Returns gradient w.r.t. x0.
inline Mat encoder_stack_bwd(const Parameters& p, const ModelConfig& cfg, const Mat& d_out,
                             std::vector<EncLayerCache>& caches, Gradients& g) {
  const bool adapters = has_adapters(p);
  Mat dx = d_out;
  for (int i = cfg.n_layers_enc - 1; i >= 0; --i) {
    EncLayerCache& c = caches[static_cast<size_t>(i)];
    std::string pre = "enc." + std::to_string(i) + ".";
    if (adapters) dx = adapter_bwd(p, pre + "adapter.", dx, c.ad, g);
    Mat dsum2 = layer_norm_bwd(dx, c.ln2, p.at(pre + "ln2.gamma"), g.find(pre + "ln2.gamma"),
                               g.find(pre + "ln2.beta"));
    Mat dx1 = dsum2 + ffn_bwd(p, pre + "ffn.", dsum2, c.ffn, g);
    Mat dsum1 = layer_norm_bwd(dx1, c.ln1, p.at(pre + "ln1.gamma"), g.find(pre + "ln1.gamma"),
                               g.find(pre + "ln1.beta"));
    Mat dxa = Mat::Zero(dsum1.rows(), dsum1.cols());
    attention_bwd(p, pre + "attn.", dsum1, c.attn, cfg.n_heads, g, &dxa, &dxa);
    dx = dsum1 + dxa;
  }
  return dx;
}

inline Mat decoder_stack_fwd(const Parameters& p, const ModelConfig& cfg, const Mat& y0,
                             const Mat& enc_out, const Mat& self_mask, const Mat& cross_mask,
                             std::vector<DecLayerCache>* caches) {
  const bool adapters = has_adapters(p);
  caches->assign(static_cast<size_t>(cfg.n_layers_dec), DecLayerCache{});
  Mat y = y0;
  for (int i = 0; i < cfg.n_layers_dec; ++i) {
    DecLayerCache& c = (*caches)[static_cast<size_t>(i)];
    std::string pre = "dec." + std::to_string(i) + ".";
    Mat a = attention_fwd(p, pre + "attn.", y, y, self_mask, cfg.n_heads, &c.self);
    Mat y1 = layer_norm_fwd(y + a, p.at(pre + "ln1.gamma"), p.at(pre + "ln1.beta"), &c.ln1);
    Mat x = attention_fwd(p, pre + "xattn.", y1, enc_out, cross_mask, cfg.n_heads, &c.cross);
    Mat yx = layer_norm_fwd(y1 + x, p.at(pre + "lnx.gamma"), p.at(pre + "lnx.beta"), &c.lnx);
    if (adapters && p.has(pre + "xadapter.wdown")) {
      yx = adapter_fwd(p, pre + "xadapter.", yx, &c.xad);
    }
    Mat f = ffn_fwd(p, pre + "ffn.", yx, &c.ffn);
    Mat y2 = layer_norm_fwd(yx + f, p.at(pre + "ln2.gamma"), p.at(pre + "ln2.beta"), &c.ln2);
    y = adapters ? adapter_fwd(p, pre + "adapter.", y2, &c.ad) : std::move(y2);
  }
  return y;
}

// Returns gradient w.r.t. y0; accumulates the encoder-output gradient.
inline Mat decoder_stack_bwd(const Parameters& p, const ModelConfig& cfg, const Mat& d_out,
                             std::vector<DecLayerCache>& caches, Gradients& g, Mat* d_enc_out) {
  const bool adapters = has_adapters(p);
  Mat dy = d_out;
  for (int i = cfg.n_layers_dec - 1; i >= 0; --i) {
    DecLayerCache& c = caches[static_cast<size_t>(i)];
    std::string pre = "dec." + std::to_string(i) + ".";
    if (adapters) dy = adapter_bwd(p, pre + "adapter.", dy, c.ad, g);
    Mat dsum2 = layer_norm_bwd(dy, c.ln2, p.at(pre + "ln2.gamma"), g.find(pre + "ln2.gamma"),
                               g.find(pre + "ln2.beta"));
    Mat dyx = dsum2 + ffn_bwd(p, pre + "ffn.", dsum2, c.ffn, g);
    if (adapters && p.has(pre + "xadapter.wdown")) {
      dyx = adapter_bwd(p, pre + "xadapter.", dyx, c.xad, g);
    }
    Mat dsumx = layer_norm_bwd(dyx, c.lnx, p.at(pre + "lnx.gamma"), g.find(pre + "lnx.gamma"),
                               g.find(pre + "lnx.beta"));
    Mat dy1 = dsumx;
    attention_bwd(p, pre + "xattn.", dsumx, c.cross, cfg.n_heads, g, &dy1, d_enc_out);
    Mat dsum1 = layer_norm_bwd(dy1, c.ln1, p.at(pre + "ln1.gamma"), g.find(pre + "ln1.gamma"),
                               g.find(pre + "ln1.beta"));
    Mat dya = Mat::Zero(dsum1.rows(), dsum1.cols());
    attention_bwd(p, pre + "attn.", dsum1, c.self, cfg.n_heads, g, &dya, &dya);
    dy = dsum1 + dya;
  }
  return dy;
}

// Logits are computed per position as W * h (a column-major GEMV): every
// output element accumulates over d in a fixed order, so extending the
// vocabulary (more rows in W) cannot perturb logits of existing ids even at
// the last bit.
inline Mat output_logits(const Parameters& p, const ModelConfig& cfg, const Mat& dec_out) {
  const Mat& w = cfg.tie_embeddings ? p.at("embed.tokens") : p.at("out.weight");
  Mat logits(dec_out.rows(), w.rows());
  for (long t = 0; t < dec_out.rows(); ++t) {
    logits.row(t) = (w * dec_out.row(t).transpose()).transpose();
  }
  logits.rowwise() += p.at("out.bias").row(0);
  return logits;
}

}  // namespace detail

struct ForwardBackwardResult {
  double loss = 0.0;                                // smoothed CE over non-pad tokens
  Gradients grads;                                  // empty when compute_grads = false
  std::vector<std::vector<double>> token_logprobs;  // unsmoothed log p(label), 0 at pads
  long label_tokens = 0;
};

inline ForwardBackwardResult forward_loss_backward(const Parameters& params, const Batch& batch,
                                                   const ModelConfig& cfg,
                                                   bool compute_grads = true) {
  cfg.validate();
  require(batch.size() > 0, "forward_loss_backward: empty batch");
  long total_tokens = 0;
  for (const auto& m : batch.tgt_mask) {
    for (uint8_t v : m) total_tokens += v;
  }
  require(total_tokens > 0, "forward_loss_backward: batch has no target tokens");

  ForwardBackwardResult res;
  res.label_tokens = total_tokens;
  if (compute_grads) res.grads = Gradients(params);
  res.token_logprobs.resize(batch.size());

  const double w_tok = 1.0 / static_cast<double>(total_tokens);
  const double eps = cfg.label_smoothing;
  const long v = cfg.vocab_size;
  double loss_sum = 0.0;

  for (size_t b = 0; b < batch.size(); ++b) {
    const auto& src = batch.src[b];
    const auto& smask = batch.src_mask[b];
    const auto& din = batch.dec_in[b];
    const auto& lab = batch.labels[b];
    const auto& tmask = batch.tgt_mask[b];
    require(src.size() == smask.size() && din.size() == lab.size() &&
                din.size() == tmask.size(),
            "forward_loss_backward: ragged batch entry");
    const long ts = static_cast<long>(src.size());
    const long tt = static_cast<long>(din.size());
    require(ts > 0 && tt > 0, "forward_loss_backward: empty sentence");

    Mat x0 = detail::embed_fwd(params, cfg, src, batch.src_lang[b], 0);
    Mat enc_self = detail::key_mask(ts, smask);
    std::vector<detail::EncLayerCache> enc_caches;
    Mat enc_out = detail::encoder_stack_fwd(params, cfg, x0, enc_self, &enc_caches);

    Mat y0 = detail::embed_fwd(params, cfg, din, batch.tgt_lang[b], batch.pos_offset[b]);
    Mat dec_self = detail::causal_key_mask(tmask);
    Mat cross = detail::key_mask(tt, smask);
    std::vector<detail::DecLayerCache> dec_caches;
    Mat dec_out = detail::decoder_stack_fwd(params, cfg, y0, enc_out, dec_self, cross,
                                            &dec_caches);

    Mat logits = detail::output_logits(params, cfg, dec_out);

    auto& tok_lp = res.token_logprobs[b];
    tok_lp.assign(static_cast<size_t>(tt), 0.0);
    Mat dlogits;
    if (compute_grads) dlogits = Mat::Zero(tt, v);
    for (long t = 0; t < tt; ++t) {
      if (!tmask[static_cast<size_t>(t)]) continue;
      int y = lab[static_cast<size_t>(t)];
      require(y >= 0 && y < v, "label id out of range: " + std::to_string(y));
      double m = logits.row(t).maxCoeff();
      Eigen::ArrayXd ex = (logits.row(t).array() - m).exp();
      double z = ex.sum();
      double log_z = m + std::log(z);
      double logp_y = logits(t, y) - log_z;
      tok_lp[static_cast<size_t>(t)] = logp_y;
      double sum_logp = logits.row(t).sum() - static_cast<double>(v) * log_z;
      loss_sum += -(1.0 - eps) * logp_y - (eps / static_cast<double>(v)) * sum_logp;
      if (compute_grads) {
        dlogits.row(t) = (ex / z).matrix() * w_tok;
        dlogits(t, y) -= w_tok * (1.0 - eps);
        dlogits.row(t).array() -= w_tok * eps / static_cast<double>(v);
      }
    }

    if (!compute_grads) continue;
    Gradients& g = res.grads;
    const Mat& w_out = cfg.tie_embeddings ? params.at("embed.tokens") : params.at("out.weight");
    if (Mat* gw = g.find(cfg.tie_embeddings ? "embed.tokens" : "out.weight")) {
      *gw += dlogits.transpose() * dec_out;
    }
    if (Mat* gb = g.find("out.bias")) gb->row(0) += dlogits.colwise().sum();
    Mat d_dec_out = dlogits * w_out;

    Mat d_enc_out = Mat::Zero(ts, cfg.d_model);
    Mat dy0 = detail::decoder_stack_bwd(params, cfg, d_dec_out, dec_caches, g, &d_enc_out);
    detail::embed_bwd(cfg, din, batch.tgt_lang[b], batch.pos_offset[b], dy0, g);
    Mat dx0 = detail::encoder_stack_bwd(params, cfg, d_enc_out, enc_caches, g);
    detail::embed_bwd(cfg, src, batch.src_lang[b], 0, dx0, g);
  }

  res.loss = loss_sum / static_cast<double>(total_tokens);
  return res;
}

// --------------------------------------------------------------------------
// Incremental use for decoding (no gradients; the prefix is re-run per step,
// which is fine at desk scale)

struct EncodedSentence {
  Mat enc_out;
  std::vector<uint8_t> mask;
  int src_lang = 0;
};

inline EncodedSentence encode_sentence(const Parameters& params, const ModelConfig& cfg,
                                       const std::vector<int>& src_ids, int src_lang) {
  require(!src_ids.empty(), "encode_sentence: empty input");
  EncodedSentence e;
  e.mask.assign(src_ids.size(), 1);
  e.src_lang = src_lang;
  Mat x0 = detail::embed_fwd(params, cfg, src_ids, src_lang, 0);
  Mat self_mask = detail::key_mask(static_cast<long>(src_ids.size()), e.mask);
  std::vector<detail::EncLayerCache> caches;
  e.enc_out = detail::encoder_stack_fwd(params, cfg, x0, self_mask, &caches);
  return e;
}

// Logits over the next token given the decoder prefix (prefix[0] is BOS).
inline Vec next_token_logits(const Parameters& params, const ModelConfig& cfg,
                             const EncodedSentence& enc, const std::vector<int>& prefix,
                             int tgt_lang, int pos_offset = 0) {
  require(!prefix.empty(), "next_token_logits: empty prefix");
  Mat y0 = detail::embed_fwd(params, cfg, prefix, tgt_lang, pos_offset);
  std::vector<uint8_t> tmask(prefix.size(), 1);
  Mat self_mask = detail::causal_key_mask(tmask);
  Mat cross = detail::key_mask(static_cast<long>(prefix.size()), enc.mask);
  std::vector<detail::DecLayerCache> caches;
  Mat dec_out = detail::decoder_stack_fwd(params, cfg, y0, enc.enc_out, self_mask, cross,
                                          &caches);
  Mat logits = detail::output_logits(params, cfg, dec_out);
  return logits.row(logits.rows() - 1).transpose();
}

}  // namespace umt::model
