// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// BPE learning, deterministic and dropout segmentation, vocabulary
// construction and union-extension of a base vocabulary with a joint-corpus
// vocabulary.
//
// Conventions: the end-of-word marker "</w>" is a suffix on a word's final
// subword. Segmentation is per word token; tokens never span whitespace.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "umt/bitext.hpp"
#include "umt/util.hpp"

namespace umt::subword {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecials = 5;

inline const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials = {"<pad>", "<unk>", "<s>", "</s>", "<mask>"};
  return specials;
}

inline constexpr std::string_view kEndOfWord = "</w>";

// --------------------------------------------------------------------------
// MergeTable

class MergeTable {
 public:
  using Pair = std::pair<std::string, std::string>;

  void add(const std::string& left, const std::string& right) {
    require(rank_.find(key(left, right)) == rank_.end(),
            "MergeTable: duplicate pair " + left + " " + right);
    rank_[key(left, right)] = static_cast<int>(merges_.size());
    merges_.emplace_back(left, right);
  }

  int size() const { return static_cast<int>(merges_.size()); }
  const std::vector<Pair>& merges() const { return merges_; }

  int rank_of(const std::string& left, const std::string& right) const {
    auto it = rank_.find(key(left, right));
    return it == rank_.end() ? -1 : it->second;
  }

  // subword-nmt compatible: "#version" header, then "left right" per rank.
  void save(const std::string& path) const {
    std::vector<std::string> lines;
    lines.reserve(merges_.size() + 1);
    lines.push_back("#version: 0.2");
    for (const auto& [l, r] : merges_) lines.push_back(l + " " + r);
    write_lines(path, lines);
  }

  static MergeTable load(const std::string& path) {
    MergeTable t;
    auto lines = read_lines(path);
    size_t start = 0;
    if (!lines.empty() && lines[0].rfind("#version", 0) == 0) start = 1;
    for (size_t i = start; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto parts = split_ws(lines[i]);
      require(parts.size() == 2, "MergeTable: malformed line " + std::to_string(i + 1) +
                                     " in " + path);
      t.add(parts[0], parts[1]);
    }
    return t;
  }

 private:
  static std::string key(const std::string& l, const std::string& r) { return l + "\x01" + r; }

  std::vector<Pair> merges_;
  std::unordered_map<std::string, int> rank_;
};

struct DropoutParams {
  double p = 0.0;
  uint64_t seed = 0;
};

// --------------------------------------------------------------------------
// Segmentation

namespace detail {

inline std::vector<std::string> initial_symbols(const std::string& word) {
  std::vector<std::string> syms;
  for (uint32_t cp : utf8_codepoints(word)) {
    std::string s;
    utf8_append(s, cp);
    syms.push_back(std::move(s));
  }
  require(!syms.empty(), "segment: word must be nonempty");
  syms.back() += kEndOfWord;
  return syms;
}

// One left-to-right pass of a single merge rule. `drop` may be null
// (deterministic). Returns true if anything merged.
inline bool apply_merge(std::vector<std::string>& syms, const std::string& left,
                        const std::string& right, double p, Rng* rng) {
  bool merged_any = false;
  size_t i = 0;
  while (i + 1 < syms.size()) {
    if (syms[i] == left && syms[i + 1] == right) {
      if (p > 0.0 && rng != nullptr && rng->bernoulli(p)) {
        ++i;  // merge site dropped
        continue;
      }
      syms[i] = left + right;
      syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      merged_any = true;
    }
    ++i;
  }
  return merged_any;
}

}  // namespace detail

// Splits a word into subwords. Merges are applied in rank order; with p > 0
// each applicable merge site is skipped independently with probability p.
// p = 0 reproduces deterministic BPE; p = 1 yields character segmentation.
inline std::vector<std::string> segment(const std::string& word, const MergeTable& table,
                                        double p, Rng* rng) {
  auto syms = detail::initial_symbols(word);
  if (p >= 1.0) return syms;
  for (const auto& [l, r] : table.merges()) {
    if (syms.size() < 2) break;
    detail::apply_merge(syms, l, r, p, rng);
  }
  return syms;
}

inline std::vector<std::string> segment(const std::string& word, const MergeTable& table,
                                        const DropoutParams& drop) {
  Rng rng(drop.seed);
  return segment(word, table, drop.p, drop.p > 0.0 ? &rng : nullptr);
}

// Segments a whitespace-tokenized line; subwords space-separated on output.
inline std::vector<std::string> segment_tokens(const std::vector<std::string>& tokens,
                                               const MergeTable& table, double p, Rng* rng) {
  std::vector<std::string> out;
  for (const auto& w : tokens) {
    auto syms = segment(w, table, p, rng);
    out.insert(out.end(), syms.begin(), syms.end());
  }
  return out;
}

inline std::string segment_line(const std::string& line, const MergeTable& table, double p,
                                Rng* rng) {
  return join(segment_tokens(split_ws(line), table, p, rng));
}

// Strips markers: concatenates subwords and re-splits at end-of-word markers.
inline std::string desegment(std::string_view segmented) {
  std::string joined;
  for (const auto& t : split_ws(segmented)) joined += t;
  std::string out;
  size_t i = 0;
  while (i < joined.size()) {
    size_t m = joined.find(kEndOfWord, i);
    if (m == std::string::npos) {
      out += joined.substr(i);
      break;
    }
    out += joined.substr(i, m - i);
    i = m + kEndOfWord.size();
    if (i < joined.size()) out.push_back(' ');
  }
  return out;
}

// --------------------------------------------------------------------------
// BPE learning

// Greedy highest-frequency pair merging over a word-frequency dictionary.
// Stops early once no pair occurs at least twice; ties break on the
// lexicographically smallest (left, right).
inline MergeTable learn_bpe(const std::vector<std::string>& words, int n_merges) {
  require(!words.empty(), "learn_bpe: empty corpus");
  require(n_merges >= 0, "learn_bpe: n_merges must be >= 0");

  std::unordered_map<std::string, long> freq;
  for (const auto& w : words) {
    if (!w.empty()) freq[w] += 1;
  }
  require(!freq.empty(), "learn_bpe: empty corpus");

  std::vector<std::vector<std::string>> seqs;
  std::vector<long> counts;
  seqs.reserve(freq.size());
  for (const auto& [w, c] : freq) {
    seqs.push_back(detail::initial_symbols(w));
    counts.push_back(c);
  }

  MergeTable table;
  for (int step = 0; step < n_merges; ++step) {
    std::map<MergeTable::Pair, long> pair_freq;  // ordered: lexicographic tie-break
    for (size_t s = 0; s < seqs.size(); ++s) {
      const auto& syms = seqs[s];
      for (size_t i = 0; i + 1 < syms.size(); ++i) {
        pair_freq[{syms[i], syms[i + 1]}] += counts[s];
      }
    }
    long best = 0;
    const MergeTable::Pair* best_pair = nullptr;
    for (const auto& [pr, c] : pair_freq) {
      if (c > best) {  // strict: first (smallest) pair wins ties
        best = c;
        best_pair = &pr;
      }
    }
    if (best_pair == nullptr || best < 2) break;
    table.add(best_pair->first, best_pair->second);
    for (auto& syms : seqs) {
      if (syms.size() >= 2) {
        detail::apply_merge(syms, best_pair->first, best_pair->second, 0.0, nullptr);
      }
    }
  }
  return table;
}

// Convenience: learn over tokenized lines.
inline MergeTable learn_bpe_lines(const std::vector<std::string>& lines, int n_merges) {
  std::vector<std::string> words;
  for (const auto& line : lines) {
    for (auto& w : split_ws(line)) words.push_back(std::move(w));
  }
  return learn_bpe(words, n_merges);
}

// --------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  Vocabulary() {
    for (const auto& s : special_tokens()) push(s, 0);
  }

  int size() const { return static_cast<int>(entries_.size()); }
  bool has(const std::string& token) const { return index_.count(token) > 0; }

  int id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnkId : it->second;
  }

  const std::string& token_of(int id) const {
    require(id >= 0 && id < size(), "Vocabulary: id out of range");
    return entries_[static_cast<size_t>(id)].first;
  }

  long count_of(int id) const { return entries_[static_cast<size_t>(id)].second; }
  const std::vector<std::pair<std::string, long>>& entries() const { return entries_; }

  void push(const std::string& token, long count) {
    require(index_.find(token) == index_.end(), "Vocabulary: duplicate token " + token);
    index_[token] = static_cast<int>(entries_.size());
    entries_.emplace_back(token, count);
  }

  std::string content_hash() const {
    Fnv1a h;
    for (const auto& [t, c] : entries_) {
      h.update(t);
      h.update("\x01");
    }
    return h.hex();
  }

  // "token count" per line, in id order (specials included).
  void save(const std::string& path) const {
    std::vector<std::string> lines;
    lines.reserve(entries_.size());
    for (const auto& [t, c] : entries_) lines.push_back(t + " " + std::to_string(c));
    write_lines(path, lines);
  }

  static Vocabulary load(const std::string& path) {
    Vocabulary v;
    v.entries_.clear();
    v.index_.clear();
    for (const auto& line : read_lines(path)) {
      if (line.empty()) continue;
      auto parts = split_ws(line);
      require(parts.size() == 2, "Vocabulary: malformed line in " + path);
      v.push(parts[0], std::stol(parts[1]));
    }
    require(v.size() >= kNumSpecials, "Vocabulary: missing specials in " + path);
    for (int i = 0; i < kNumSpecials; ++i) {
      require(v.entries_[static_cast<size_t>(i)].first == special_tokens()[static_cast<size_t>(i)],
              "Vocabulary: specials must occupy ids 0..4 in " + path);
    }
    return v;
  }

 private:
  std::vector<std::pair<std::string, long>> entries_;
  std::unordered_map<std::string, int> index_;
};

// Tokens ordered by descending count, then lexicographic; specials prepended.
inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& segmented) {
  std::unordered_map<std::string, long> counts;
  for (const auto& line : segmented) {
    for (const auto& t : line) counts[t] += 1;
  }
  std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [t, c] : items) v.push(t, c);
  return v;
}

inline Vocabulary build_vocab_lines(const std::vector<std::string>& segmented_lines) {
  std::vector<std::vector<std::string>> toks;
  toks.reserve(segmented_lines.size());
  for (const auto& l : segmented_lines) toks.push_back(split_ws(l));
  return build_vocab(toks);
}

struct ExtendReport {
  std::vector<std::pair<std::string, int>> added;  // (new token, new id)
};

// Union-extension: every base token keeps its id; joint tokens not in base
// are appended in joint order.
inline Vocabulary extend_vocab(const Vocabulary& base, const Vocabulary& joint,
                               ExtendReport* report = nullptr) {
  for (int i = 0; i < kNumSpecials; ++i) {
    require(base.token_of(i) == joint.token_of(i),
            "extend_vocab: conflicting specials at id " + std::to_string(i));
  }
  Vocabulary out = base;
  for (int i = kNumSpecials; i < joint.size(); ++i) {
    const std::string& t = joint.token_of(i);
    if (out.has(t)) continue;
    int new_id = out.size();
    out.push(t, joint.count_of(i));
    if (report != nullptr) report->added.emplace_back(t, new_id);
  }
  return out;
}

// --------------------------------------------------------------------------
// Numericalization

inline std::vector<int> ids_of_segmented(const std::vector<std::string>& subwords,
                                         const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(subwords.size());
  for (const auto& t : subwords) ids.push_back(vocab.id_of(t));
  return ids;
}

// Deterministic segmentation (p = 0) of a tokenized line straight to ids.
inline std::vector<int> encode_line(const std::string& line, const MergeTable& table,
                                    const Vocabulary& vocab) {
  return ids_of_segmented(segment_tokens(split_ws(line), table, 0.0, nullptr), vocab);
}

// Ids back to plain text (markers stripped).
inline std::string text_of_ids(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::vector<std::string> subwords;
  subwords.reserve(ids.size());
  for (int id : ids) subwords.push_back(vocab.token_of(id));
  return desegment(join(subwords));
}

// --------------------------------------------------------------------------
// Oversampling with BPE-Dropout

// Each input line is emitted `factor` times, segmented with dropout p and
// fresh randomness per copy (derived from drop.seed, the line index and the
// copy index, so corpus-level work can parallelize deterministically).
inline std::vector<std::string> oversample_with_dropout(const std::vector<std::string>& lines,
                                                        int factor, const MergeTable& table,
                                                        const DropoutParams& drop) {
  require(factor >= 1, "oversample_with_dropout: factor must be >= 1");
  std::vector<std::string> out;
  out.reserve(lines.size() * static_cast<size_t>(factor));
  for (size_t i = 0; i < lines.size(); ++i) {
    for (int c = 0; c < factor; ++c) {
      Rng rng(derive_seed(drop.seed, i * static_cast<size_t>(factor) + static_cast<size_t>(c)));
      out.push_back(segment_line(lines[i], table, drop.p, &rng));
    }
  }
  return out;
}

// Bitext variant: only the flagged side is segmented with dropout; the other
// side uses deterministic BPE (p = 0) and so is identical across copies.
enum class DropoutSide { kSrc, kTgt };

inline Bitext oversample_with_dropout(const Bitext& bitext, int factor,
                                      const MergeTable& src_table, const MergeTable& tgt_table,
                                      const DropoutParams& drop, DropoutSide side) {
  require(factor >= 1, "oversample_with_dropout: factor must be >= 1");
  Bitext out;
  out.pairs.reserve(bitext.size() * static_cast<size_t>(factor));
  for (size_t i = 0; i < bitext.size(); ++i) {
    const auto& p = bitext.pairs[i];
    std::string src_det = segment_line(p.src, src_table, 0.0, nullptr);
    std::string tgt_det = segment_line(p.tgt, tgt_table, 0.0, nullptr);
    for (int c = 0; c < factor; ++c) {
      Rng rng(derive_seed(drop.seed, i * static_cast<size_t>(factor) + static_cast<size_t>(c)));
      BitextPair q = p;
      if (side == DropoutSide::kSrc) {
        q.src = segment_line(p.src, src_table, drop.p, &rng);
        q.tgt = tgt_det;
      } else {
        q.src = src_det;
        q.tgt = segment_line(p.tgt, tgt_table, drop.p, &rng);
      }
      out.pairs.push_back(std::move(q));
    }
  }
  return out;
}

}  // namespace umt::subword
