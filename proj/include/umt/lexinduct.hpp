// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale stand-in for the unsupervised SMT system: identical-word seed
// dictionary, orthogonal embedding mapping, cosine translation lexicon,
// n-gram language model and word-by-word backtranslation.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "umt/bitext.hpp"
#include "umt/subword.hpp"
#include "umt/util.hpp"

namespace umt::lexinduct {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// --------------------------------------------------------------------------
// Embeddings

class EmbeddingTable {
 public:
  static EmbeddingTable from_data(std::vector<std::string> words, Mat matrix) {
    EmbeddingTable t;
    require(static_cast<Eigen::Index>(words.size()) == matrix.rows(),
            "EmbeddingTable: row count must equal word count");
    t.words_ = std::move(words);
    t.matrix_ = std::move(matrix);
    for (size_t i = 0; i < t.words_.size(); ++i) {
      require(t.index_.emplace(t.words_[i], static_cast<int>(i)).second,
              "EmbeddingTable: duplicate word " + t.words_[i]);
    }
    t.normalize_rows();
    return t;
  }

  // Text format: first line "count dim", then "word v1 ... vd" per line.
  static EmbeddingTable load(const std::string& path) {
    auto lines = read_lines(path);
    require(!lines.empty(), "EmbeddingTable: empty file " + path);
    auto header = split_ws(lines[0]);
    require(header.size() == 2, "EmbeddingTable: malformed header in " + path);
    const long count = std::stol(header[0]);
    const long dim = std::stol(header[1]);
    require(count >= 1 && dim >= 1, "EmbeddingTable: bad header in " + path);
    require(static_cast<long>(lines.size()) >= count + 1,
            "EmbeddingTable: truncated file " + path);
    std::vector<std::string> words;
    Mat m(count, dim);
    for (long i = 0; i < count; ++i) {
      auto parts = split_ws(lines[static_cast<size_t>(i + 1)]);
      require(static_cast<long>(parts.size()) == dim + 1,
              "EmbeddingTable: malformed row " + std::to_string(i + 2) + " in " + path);
      words.push_back(parts[0]);
      for (long j = 0; j < dim; ++j) m(i, j) = std::stod(parts[static_cast<size_t>(j + 1)]);
    }
    return from_data(std::move(words), std::move(m));
  }

  void save(const std::string& path) const {
    std::vector<std::string> lines;
    lines.push_back(std::to_string(words_.size()) + " " + std::to_string(dim()));
    for (size_t i = 0; i < words_.size(); ++i) {
      std::string row = words_[i];
      for (long j = 0; j < dim(); ++j) {
        char buf[32];
        snprintf(buf, sizeof buf, " %.8g", matrix_(static_cast<long>(i), j));
        row += buf;
      }
      lines.push_back(std::move(row));
    }
    write_lines(path, lines);
  }

  long dim() const { return matrix_.cols(); }
  long size() const { return matrix_.rows(); }
  const std::vector<std::string>& words() const { return words_; }
  const Mat& matrix() const { return matrix_; }

  bool has(const std::string& w) const { return index_.count(w) > 0; }
  int row_of(const std::string& w) const {
    auto it = index_.find(w);
    require(it != index_.end(), "embedding missing for word: " + w);
    return it->second;
  }

  // Applies a linear map to every row (rows re-normalized).
  EmbeddingTable mapped(const Mat& w) const {
    require(w.rows() == dim(), "mapped: dimension mismatch");
    return from_data(words_, matrix_ * w);
  }

 private:
  void normalize_rows() {
    for (long i = 0; i < matrix_.rows(); ++i) {
      double n = matrix_.row(i).norm();
      require(n > 0.0, "EmbeddingTable: zero vector for word " + words_[static_cast<size_t>(i)]);
      matrix_.row(i) /= n;
    }
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  Mat matrix_;
};

// --------------------------------------------------------------------------
// Seed dictionary

struct SeedDictionary {
  std::vector<std::pair<std::string, std::string>> pairs;
};

// Pairs (w, w) for every token string of length >= min_len (in codepoints)
// present in both vocabularies; specials excluded.
inline SeedDictionary extract_identical_seed(const subword::Vocabulary& vocab_a,
                                             const subword::Vocabulary& vocab_b,
                                             int min_len = 2) {
  SeedDictionary seed;
  for (int i = subword::kNumSpecials; i < vocab_a.size(); ++i) {
    const std::string& w = vocab_a.token_of(i);
    if (static_cast<int>(utf8_length(w)) < min_len) continue;
    if (!vocab_b.has(w)) continue;
    if (vocab_b.id_of(w) < subword::kNumSpecials) continue;
    seed.pairs.emplace_back(w, w);
  }
  require(!seed.pairs.empty(), "seed dictionary empty");
  return seed;
}

// --------------------------------------------------------------------------
// Orthogonal Procrustes mapping

// W = argmin over orthogonal matrices of ||X_s W - Y_s||_F, from the SVD of
// X_s^T Y_s.
inline Mat procrustes_map(const EmbeddingTable& x, const EmbeddingTable& y,
                          const SeedDictionary& seed) {
  require(x.dim() == y.dim(), "procrustes_map: dimension mismatch");
  require(!seed.pairs.empty(), "procrustes_map: empty seed");
  const long d = x.dim();
  Mat xs(static_cast<long>(seed.pairs.size()), d);
  Mat ys(static_cast<long>(seed.pairs.size()), d);
  for (size_t i = 0; i < seed.pairs.size(); ++i) {
    xs.row(static_cast<long>(i)) = x.matrix().row(x.row_of(seed.pairs[i].first));
    ys.row(static_cast<long>(i)) = y.matrix().row(y.row_of(seed.pairs[i].second));
  }
  Mat m = xs.transpose() * ys;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

// --------------------------------------------------------------------------
// Translation lexicon

struct TranslationLexicon {
  struct Candidate {
    std::string tgt;
    double score;  // cosine, in [-1, 1]
  };
  std::unordered_map<std::string, std::vector<Candidate>> entries;

  const std::vector<Candidate>* find(const std::string& src) const {
    auto it = entries.find(src);
    return it == entries.end() ? nullptr : &it->second;
  }

  // "src<TAB>tgt<TAB>score" lines.
  void save(const std::string& path) const {
    std::vector<std::string> keys;
    keys.reserve(entries.size());
    for (const auto& [k, v] : entries) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::vector<std::string> lines;
    for (const auto& k : keys) {
      for (const auto& c : entries.at(k)) {
        char buf[32];
        snprintf(buf, sizeof buf, "%.8g", c.score);
        lines.push_back(k + "\t" + c.tgt + "\t" + buf);
      }
    }
    write_lines(path, lines);
  }

  static TranslationLexicon load(const std::string& path) {
    TranslationLexicon lex;
    for (const auto& line : read_lines(path)) {
      if (line.empty()) continue;
      size_t t1 = line.find('\t');
      size_t t2 = line.find('\t', t1 + 1);
      require(t1 != std::string::npos && t2 != std::string::npos,
              "TranslationLexicon: malformed line in " + path);
      lex.entries[line.substr(0, t1)].push_back(
          {line.substr(t1 + 1, t2 - t1 - 1), std::stod(line.substr(t2 + 1))});
    }
    return lex;
  }
};

// For each source word, the k nearest target words by cosine over unit rows;
// ties break by target id.
inline TranslationLexicon induce_lexicon(const EmbeddingTable& x_mapped,
                                         const EmbeddingTable& y, int k) {
  require(x_mapped.dim() == y.dim(), "induce_lexicon: dimension mismatch");
  require(k >= 1, "induce_lexicon: k must be >= 1");
  const long m = y.size();
  const int kk = static_cast<int>(std::min<long>(k, m));
  TranslationLexicon lex;
  for (long i = 0; i < x_mapped.size(); ++i) {
    Vec scores = y.matrix() * x_mapped.matrix().row(i).transpose();
    std::vector<int> idx(static_cast<size_t>(m));
    for (long j = 0; j < m; ++j) idx[static_cast<size_t>(j)] = static_cast<int>(j);
    std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), [&](int a, int b) {
      if (scores(a) != scores(b)) return scores(a) > scores(b);
      return a < b;
    });
    std::vector<TranslationLexicon::Candidate> cands;
    cands.reserve(static_cast<size_t>(kk));
    for (int j = 0; j < kk; ++j) {
      cands.push_back({y.words()[static_cast<size_t>(idx[static_cast<size_t>(j)])],
                       scores(idx[static_cast<size_t>(j)])});
    }
    lex.entries[x_mapped.words()[static_cast<size_t>(i)]] = std::move(cands);
  }
  return lex;
}

// --------------------------------------------------------------------------
// N-gram language model
//
// Generative story per position: with probability P_stop(h) the sentence
// ends, otherwise a word is emitted from the additively smoothed conditional
// P(w | h) over vocabulary + unk. Histories are padded with BOS. This keeps
// word conditionals normalized over vocabulary + unk while still scoring an
// end-of-sentence term.

class NGramLM {
 public:
  NGramLM() = default;

  static NGramLM train(const std::vector<std::vector<std::string>>& corpus, int order,
                       double delta) {
    require(!corpus.empty(), "NGramLM: empty corpus");
    require(order >= 1, "NGramLM: order must be >= 1");
    require(delta > 0.0, "NGramLM: delta must be positive");
    NGramLM lm;
    lm.order_ = order;
    lm.delta_ = delta;
    lm.ngram_counts_.resize(static_cast<size_t>(order));
    for (const auto& sent : corpus) {
      for (const auto& w : sent) lm.vocab_.insert(w);
    }
    for (const auto& sent : corpus) {
      std::vector<std::string> padded(static_cast<size_t>(order - 1), kBos);
      padded.insert(padded.end(), sent.begin(), sent.end());
      const size_t n = padded.size();
      for (size_t i = static_cast<size_t>(order - 1); i <= n; ++i) {
        std::string hist = lm.history_key(padded, i);
        lm.history_count_[hist] += 1;
        if (i < n) {
          // counts for every order <= n are kept; the top order drives scoring
          for (int o = 1; o <= order; ++o) {
            lm.ngram_counts_[static_cast<size_t>(o - 1)]
                            [lm.ngram_key(padded, i, o)] += 1;
          }
          lm.word_given_hist_[hist + "\x1F" + padded[i]] += 1;
          lm.continue_count_[hist] += 1;
        } else {
          lm.stop_count_[hist] += 1;
        }
      }
    }
    return lm;
  }

  int order() const { return order_; }
  double delta() const { return delta_; }
  const std::unordered_set<std::string>& vocab() const { return vocab_; }

  // P(w | h), normalized over vocabulary + unk. Unknown w maps to unk.
  double cond_prob(const std::vector<std::string>& history, const std::string& word) const {
    std::string hist = make_history(history);
    double k = static_cast<double>(vocab_.size()) + 1.0;  // + unk
    double denom = get(continue_count_, hist) + delta_ * k;
    std::string w = vocab_.count(word) ? word : std::string(kUnk);
    // all unknown words share the unk event; their joint count is whatever
    // landed on unk during training (zero unless the corpus contains it)
    double num = get(word_given_hist_, hist + "\x1F" + w) + delta_;
    return num / denom;
  }

  double stop_prob(const std::vector<std::string>& history) const {
    std::string hist = make_history(history);
    double denom = get(history_count_, hist) + 2.0 * delta_;
    return (get(stop_count_, hist) + delta_) / denom;
  }

  // log P(sentence) = sum_i [log(1 - P_stop) + log P(w_i | h_i)] + log P_stop(h_end)
  double sentence_logprob(const std::vector<std::string>& sent) const {
    std::vector<std::string> hist;
    double lp = 0.0;
    for (const auto& w : sent) {
      lp += std::log1p(-stop_prob(hist)) + std::log(cond_prob(hist, w));
      hist.push_back(vocab_.count(w) ? w : std::string(kUnk));
    }
    lp += std::log(stop_prob(hist));
    return lp;
  }

  static constexpr const char* kBos = "<s>";
  static constexpr const char* kUnk = "<unk>";

 private:
  static double get(const std::unordered_map<std::string, long>& m, const std::string& k) {
    auto it = m.find(k);
    return it == m.end() ? 0.0 : static_cast<double>(it->second);
  }

  // history = last (order-1) items, BOS-padded on the left, unk-mapped
  std::string make_history(const std::vector<std::string>& history) const {
    std::vector<std::string> h;
    for (int j = order_ - 1; j >= 1; --j) {
      long idx = static_cast<long>(history.size()) - j;
      if (idx < 0) {
        h.push_back(kBos);
      } else {
        const std::string& w = history[static_cast<size_t>(idx)];
        h.push_back(vocab_.count(w) ? w : std::string(kUnk));
      }
    }
    return join_key(h);
  }

  std::string history_key(const std::vector<std::string>& padded, size_t i) const {
    std::vector<std::string> h(padded.begin() + static_cast<long>(i) - (order_ - 1),
                               padded.begin() + static_cast<long>(i));
    return join_key(h);
  }

  std::string ngram_key(const std::vector<std::string>& padded, size_t i, int o) const {
    std::vector<std::string> h(padded.begin() + static_cast<long>(i) - (o - 1),
                               padded.begin() + static_cast<long>(i) + 1);
    return join_key(h);
  }

  static std::string join_key(const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += '\x1F';
      s += v[i];
    }
    return s;
  }

  int order_ = 1;
  double delta_ = 1.0;
  std::unordered_set<std::string> vocab_;
  std::vector<std::unordered_map<std::string, long>> ngram_counts_;
  std::unordered_map<std::string, long> word_given_hist_;
  std::unordered_map<std::string, long> continue_count_;
  std::unordered_map<std::string, long> history_count_;
  std::unordered_map<std::string, long> stop_count_;
};

// --------------------------------------------------------------------------
// Word-by-word translation

struct WordTranslateParams {
  int beam = 4;
  double lambda = 0.5;  // weight on cosine vs LM log-prob
};

// Monotone word-for-word translation: each source word is replaced by one of
// its lexicon candidates (or copied verbatim when absent), chosen by beam
// search maximizing lambda*cosine + (1-lambda)*LM log-prob. Output length
// equals input length.
inline std::vector<std::string> word_translate(const std::vector<std::string>& sentence,
                                               const TranslationLexicon& lexicon,
                                               const NGramLM& lm,
                                               const WordTranslateParams& params = {}) {
  require(params.beam >= 1, "word_translate: beam must be >= 1");
  struct Hyp {
    std::vector<std::string> out;
    double score = 0.0;
  };
  std::vector<Hyp> beam_set = {Hyp{}};
  for (const auto& src : sentence) {
    const auto* cands = lexicon.find(src);
    std::vector<TranslationLexicon::Candidate> copy_fallback;
    if (cands == nullptr || cands->empty()) {
      copy_fallback.push_back({src, 0.0});
      cands = &copy_fallback;
    }
    std::vector<Hyp> next;
    next.reserve(beam_set.size() * cands->size());
    for (const auto& hyp : beam_set) {
      double cont = std::log1p(-lm.stop_prob(hyp.out));
      for (const auto& cand : *cands) {
        Hyp h = hyp;
        h.score += params.lambda * cand.score +
                   (1.0 - params.lambda) * (cont + std::log(lm.cond_prob(hyp.out, cand.tgt)));
        h.out.push_back(cand.tgt);
        next.push_back(std::move(h));
      }
    }
    std::stable_sort(next.begin(), next.end(),
                     [](const Hyp& a, const Hyp& b) { return a.score > b.score; });
    if (static_cast<int>(next.size()) > params.beam) {
      next.resize(static_cast<size_t>(params.beam));
    }
    beam_set = std::move(next);
  }
  for (auto& hyp : beam_set) {
    hyp.score += (1.0 - params.lambda) * std::log(lm.stop_prob(hyp.out));
  }
  const Hyp* best = &beam_set[0];
  for (const auto& h : beam_set) {
    if (h.score > best->score) best = &h;
  }
  return best->out;
}

// Backtranslates a monolingual corpus: pairs are (translated -> original),
// i.e. synthetic source, authentic target, tagged pseudo-SMT.
inline Bitext backtranslate_corpus(const std::vector<std::string>& corpus,
                                   const TranslationLexicon& lexicon, const NGramLM& lm,
                                   const WordTranslateParams& params = {}) {
  Bitext out;
  out.pairs.reserve(corpus.size());
  for (const auto& line : corpus) {
    auto translated = word_translate(split_ws(line), lexicon, lm, params);
    out.pairs.push_back({join(translated), line, Provenance::kPseudoSmt});
  }
  return out;
}

}  // namespace umt::lexinduct
