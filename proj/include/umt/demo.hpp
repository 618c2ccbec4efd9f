// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic demo dataset: a word-substitution "cipher" language pair
// built from a small public-domain German text (Grimm). The second language
// applies a fixed letter permutation per word; numbers, punctuation and a
// deterministic subset of word types stay identical across both sides (they
// play the role of shared names/numerals). Synthetic embeddings are emitted
// such that the cipher pair geometry is an orthogonal rotation plus noise,
// and the exact word-level lexicon ships alongside as ground truth.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "umt/util.hpp"

namespace umt::demo {

namespace detail {

// Public-domain excerpt (Grimm, "Die Sterntaler" / "Frau Holle"), lowercased.
inline const char* kSeedText =
    "es war einmal ein kleines mädchen dem war vater und mutter gestorben\n"
    "und es war so arm dass es kein kämmerchen mehr hatte darin zu wohnen\n"
    "und kein bettchen mehr hatte darin zu schlafen\n"
    "und endlich gar nichts mehr als die kleider auf dem leib\n"
    "und ein stückchen brot in der hand das ihm ein mitleidiges herz geschenkt hatte\n"
    "es war aber gut und fromm\n"
    "und weil es so von aller welt verlassen war\n"
    "ging es im vertrauen auf den lieben gott hinaus ins feld\n"
    "da begegnete ihm ein armer mann der sprach\n"
    "ach gib mir etwas zu essen ich bin so hungrig\n"
    "es reichte ihm das ganze stückchen brot und sagte\n"
    "gott segne dir es und ging weiter\n"
    "da kam ein kind das jammerte und sprach\n"
    "es friert mich so an meinem kopfe schenk mir etwas das ich darum binde\n"
    "da tat es seine mütze ab und gab sie ihm\n"
    "und als es noch eine weile gegangen war\n"
    "kam wieder ein kind und hatte kein leibchen an und fror\n"
    "da gab es ihm seins\n"
    "und noch weiter da bat eins um ein röcklein\n"
    "das gab es auch von sich hin\n"
    "endlich gelangte es in einen wald\n"
    "und es war schon dunkel geworden\n"
    "da kam noch eins und bat um ein hemdlein\n"
    "und das fromme mädchen dachte\n"
    "es ist dunkle nacht da sieht dich niemand\n"
    "du kannst wohl dein hemd weggeben und zog das hemd ab und gab es auch noch hin\n"
    "und wie es so stand und gar nichts mehr hatte\n"
    "fielen auf einmal die sterne vom himmel\n"
    "und waren lauter harte blanke taler\n"
    "und ob es gleich sein hemdlein weggegeben\n"
    "so hatte es ein neues an und das war vom allerfeinsten linnen\n"
    "da sammelte es sich die taler hinein und war reich für sein lebtag\n"
    "eine witwe hatte zwei töchter davon war die eine schön und fleißig\n"
    "die andere hässlich und faul\n"
    "sie hatte aber die hässliche und faule weil sie ihre rechte tochter war viel lieber\n"
    "und die andere musste alle arbeit tun und der aschenputtel im hause sein\n"
    "das arme mädchen musste sich täglich auf die große straße bei einem brunnen setzen\n"
    "und musste so viel spinnen dass ihm das blut aus den fingern sprang\n"
    "nun trug es sich zu dass die spule einmal ganz blutig war\n"
    "da bückte es sich damit in den brunnen und wollte sie abwaschen\n"
    "sie sprang ihm aber aus der hand und fiel hinab\n"
    "es weinte lief zur stiefmutter und erzählte ihr das unglück\n"
    "sie schalt es aber so heftig und war so unbarmherzig\n"
    "dass sie sprach hast du die spule hinunterfallen lassen so hol sie auch wieder herauf\n"
    "da ging das mädchen zu dem brunnen zurück und wusste nicht was es anfangen sollte\n";

inline const std::vector<std::string>& number_tokens() {
  static const std::vector<std::string> nums = {"3", "7", "12", "100", "1812", "1857"};
  return nums;
}

inline bool has_digit(const std::string& w) {
  for (char c : w) {
    if (c >= '0' && c <= '9') return true;
  }
  return false;
}

}  // namespace detail

struct DemoOptions {
  int lines = 10000;  // per monolingual side
  int valid_lines = 400;
  int test_lines = 400;
  uint64_t seed = 17;
  int embed_dim = 16;            // keep below the identical-word seed size
  double embed_noise = 1.0;      // noise-to-signal norm ratio; degrades the lexicon
  double identity_fraction = 0.15;  // word types kept identical (shared "names")
};

class CipherWorld {
 public:
  explicit CipherWorld(const DemoOptions& opts) : opts_(opts) {
    build_chain();
    build_cipher();
  }

  const DemoOptions& opts() const { return opts_; }
  const std::vector<std::string>& vocab() const { return vocab_; }

  std::string cipher_word(const std::string& w) const {
    if (identity_.count(w)) return w;
    bool alpha = true;
    std::string out;
    size_t i = 0;
    while (i < w.size()) {
      uint32_t cp = utf8_next(w, i);
      auto it = letter_map_.find(cp);
      if (it == letter_map_.end()) {
        alpha = false;
        utf8_append(out, cp);
      } else {
        utf8_append(out, it->second);
      }
    }
    return alpha ? out : w;  // tokens with non-letters stay identical
  }

  std::string cipher_line(const std::string& line) const {
    std::vector<std::string> out;
    for (const auto& w : split_ws(line)) out.push_back(cipher_word(w));
    return join(out);
  }

  // One synthetic sentence: a bigram walk over the seed text.
  std::string sample_line(Rng& rng) const {
    int len = rng.uniform_int(4, 12);
    std::vector<std::string> words;
    std::string cur = starts_[rng.below(starts_.size())];
    words.push_back(cur);
    while (static_cast<int>(words.size()) < len) {
      auto it = chain_.find(cur);
      if (it == chain_.end() || it->second.empty()) {
        cur = starts_[rng.below(starts_.size())];
      } else {
        cur = it->second[rng.below(it->second.size())];
      }
      words.push_back(cur);
    }
    if (rng.bernoulli(0.10)) {
      const auto& nums = detail::number_tokens();
      words.insert(words.begin() + static_cast<long>(rng.below(words.size())),
                   nums[rng.below(nums.size())]);
    }
    double u = rng.uniform();
    words.push_back(u < 0.8 ? "." : (u < 0.9 ? "!" : "?"));
    return join(words);
  }

  std::vector<std::string> sample_corpus(int n, uint64_t stream_seed) const {
    std::vector<std::string> lines;
    lines.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(stream_seed, static_cast<uint64_t>(i)));
      lines.push_back(sample_line(rng));
    }
    return lines;
  }

  // Embedding pair: X random unit vectors per word, Y[cipher(w)] a fixed
  // orthogonal rotation of X[w] plus noise. Identical words are consistent
  // across the two tables, so the identical-word seed carries real signal.
  void write_embeddings(const std::string& path_x, const std::string& path_y) const {
    const int d = opts_.embed_dim;
    Eigen::MatrixXd gauss(d, d);
    Rng rrng(derive_seed(opts_.seed, 0xA0));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) gauss(i, j) = rrng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd rot = qr.householderQ();

    auto base_vec = [&](const std::string& w) {
      Rng rng(derive_seed(opts_.seed ^ 0x5eedULL, hash_word(w)));
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v(i) = rng.normal();
      v.normalize();
      return v;
    };

    std::vector<std::string> xs_lines, ys_lines;
    auto fmt_row = [&](const std::string& w, const Eigen::VectorXd& v) {
      std::string row = w;
      for (int i = 0; i < d; ++i) {
        char buf[32];
        snprintf(buf, sizeof buf, " %.8g", v(i));
        row += buf;
      }
      return row;
    };
    for (const auto& w : vocab_) {
      Eigen::VectorXd x = base_vec(w);
      xs_lines.push_back(fmt_row(w, x));
      Rng nrng(derive_seed(opts_.seed ^ 0x4015eULL, hash_word(w)));
      Eigen::VectorXd y = rot.transpose() * x;
      double sigma = opts_.embed_noise / std::sqrt(static_cast<double>(d));
      for (int i = 0; i < d; ++i) y(i) += sigma * nrng.normal();
      y.normalize();
      ys_lines.push_back(fmt_row(cipher_word(w), y));
    }
    std::vector<std::string> xf = {std::to_string(vocab_.size()) + " " + std::to_string(d)};
    xf.insert(xf.end(), xs_lines.begin(), xs_lines.end());
    write_lines(path_x, xf);
    std::vector<std::string> yf = {std::to_string(vocab_.size()) + " " + std::to_string(d)};
    yf.insert(yf.end(), ys_lines.begin(), ys_lines.end());
    write_lines(path_y, yf);
  }

  void write_true_lexicons(const std::string& path_fwd, const std::string& path_rev) const {
    std::vector<std::string> fwd, rev;
    for (const auto& w : vocab_) {
      std::string c = cipher_word(w);
      fwd.push_back(w + "\t" + c + "\t1");
      rev.push_back(c + "\t" + w + "\t1");
    }
    write_lines(path_fwd, fwd);
    write_lines(path_rev, rev);
  }

 private:
  static uint64_t hash_word(const std::string& w) {
    Fnv1a h;
    h.update(w);
    return h.value();
  }

  void build_chain() {
    std::set<std::string> types;
    for (const auto& line : split_lines(detail::kSeedText)) {
      auto words = split_ws(line);
      if (words.empty()) continue;
      starts_.push_back(words[0]);
      for (size_t i = 0; i < words.size(); ++i) {
        types.insert(words[i]);
        if (i + 1 < words.size()) chain_[words[i]].push_back(words[i + 1]);
      }
    }
    for (const auto& n : detail::number_tokens()) types.insert(n);
    types.insert(".");
    types.insert("!");
    types.insert("?");
    vocab_.assign(types.begin(), types.end());
  }

  void build_cipher() {
    // letter permutation over the German lowercase alphabet
    std::vector<uint32_t> alphabet;
    for (char c = 'a'; c <= 'z'; ++c) alphabet.push_back(static_cast<uint32_t>(c));
    alphabet.push_back(0xE4);  // ä
    alphabet.push_back(0xF6);  // ö
    alphabet.push_back(0xFC);  // ü
    alphabet.push_back(0xDF);  // ß
    std::vector<uint32_t> image = alphabet;
    Rng rng(derive_seed(opts_.seed, 0xC1F));
    rng.shuffle(image);
    for (size_t i = 0; i < alphabet.size(); ++i) letter_map_[alphabet[i]] = image[i];

    // identity set: digits/punctuation plus a deterministic slice of types
    for (const auto& w : vocab_) {
      if (detail::has_digit(w) || !is_alpha_word(w)) {
        identity_.insert(w);
      } else if ((hash_word(w) % 1000) <
                 static_cast<uint64_t>(opts_.identity_fraction * 1000.0)) {
        identity_.insert(w);
      }
    }
    // injectivity: a permuted word must not collide with an identity word
    bool changed = true;
    while (changed) {
      changed = false;
      std::set<std::string> images;
      for (const auto& w : vocab_) {
        if (identity_.count(w)) continue;
        images.insert(cipher_word(w));
      }
      for (auto it = identity_.begin(); it != identity_.end();) {
        if (!detail::has_digit(*it) && is_alpha_word(*it) && images.count(*it)) {
          it = identity_.erase(it);
          changed = true;
        } else {
          ++it;
        }
      }
    }
  }

  static bool is_alpha_word(const std::string& w) {
    size_t i = 0;
    while (i < w.size()) {
      if (!cp_isalpha(utf8_next(w, i))) return false;
    }
    return !w.empty();
  }

  static std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < text.size()) {
      size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      if (end > start) lines.push_back(text.substr(start, end - start));
      start = end + 1;
    }
    return lines;
  }

  DemoOptions opts_;
  std::vector<std::string> vocab_;
  std::vector<std::string> starts_;
  std::map<std::string, std::vector<std::string>> chain_;
  std::map<uint32_t, uint32_t> letter_map_;
  std::set<std::string> identity_;
};

// Writes the full demo dataset under out_dir:
//   mono.de.txt mono.hsb.txt valid.de.txt valid.hsb.txt test.de.txt
//   test.hsb.txt emb.de.vec emb.hsb.vec lexicon.true.de-hsb.tsv
//   lexicon.true.hsb-de.tsv
// The two monolingual sides come from disjoint generator streams; valid/test
// are truly parallel via the cipher.
inline void generate(const std::string& out_dir, const DemoOptions& opts) {
  CipherWorld world(opts);
  auto mono_de = world.sample_corpus(opts.lines, derive_seed(opts.seed, 1001));
  auto mono_src_for_hsb = world.sample_corpus(opts.lines, derive_seed(opts.seed, 2002));
  std::vector<std::string> mono_hsb;
  mono_hsb.reserve(mono_src_for_hsb.size());
  for (const auto& l : mono_src_for_hsb) mono_hsb.push_back(world.cipher_line(l));

  auto valid_de = world.sample_corpus(opts.valid_lines, derive_seed(opts.seed, 3003));
  auto test_de = world.sample_corpus(opts.test_lines, derive_seed(opts.seed, 4004));
  std::vector<std::string> valid_hsb, test_hsb;
  for (const auto& l : valid_de) valid_hsb.push_back(world.cipher_line(l));
  for (const auto& l : test_de) test_hsb.push_back(world.cipher_line(l));

  write_lines(out_dir + "/mono.de.txt", mono_de);
  write_lines(out_dir + "/mono.hsb.txt", mono_hsb);
  write_lines(out_dir + "/valid.de.txt", valid_de);
  write_lines(out_dir + "/valid.hsb.txt", valid_hsb);
  write_lines(out_dir + "/test.de.txt", test_de);
  write_lines(out_dir + "/test.hsb.txt", test_hsb);
  world.write_embeddings(out_dir + "/emb.de.vec", out_dir + "/emb.hsb.vec");
  world.write_true_lexicons(out_dir + "/lexicon.true.de-hsb.tsv",
                            out_dir + "/lexicon.true.hsb-de.tsv");
}

}  // namespace umt::demo
