// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0

#include "umt/lexinduct.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <map>

using namespace umt;
using namespace umt::lexinduct;

namespace {

EmbeddingTable random_table(int n, int d, uint64_t seed, const std::string& prefix = "w") {
  Rng rng(seed);
  std::vector<std::string> words;
  Mat m(n, d);
  for (int i = 0; i < n; ++i) {
    words.push_back(prefix + std::to_string(i));
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return EmbeddingTable::from_data(words, m);
}

Mat random_orthogonal(int d, uint64_t seed) {
  Rng rng(seed);
  Mat g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ();
}

subword::Vocabulary vocab_of(const std::vector<std::string>& words) {
  subword::Vocabulary v;
  for (const auto& w : words) v.push(w, 1);
  return v;
}

}  // namespace

TEST_CASE("extract_identical_seed") {
  SECTION("set intersection") {
    auto a = vocab_of({"tag", "haus"});
    auto b = vocab_of({"tag", "dom"});
    auto seed = extract_identical_seed(a, b, 2);
    REQUIRE(seed.pairs.size() == 1);
    CHECK(seed.pairs[0] == std::pair<std::string, std::string>{"tag", "tag"});
  }
  SECTION("disjoint vocabularies are an error") {
    auto a = vocab_of({"eins"});
    auto b = vocab_of({"zwei"});
    CHECK_THROWS_WITH(extract_identical_seed(a, b, 2),
                      Catch::Matchers::ContainsSubstring("seed dictionary empty"));
  }
  SECTION("min_len filters short tokens; specials excluded") {
    // both vocabularies already share the special tokens at ids 0..4; none
    // of them may leak into the seed even though e.g. "<s>" has length >= 2
    auto a = vocab_of({"a", "ab"});
    auto b = vocab_of({"a", "ab"});
    auto seed = extract_identical_seed(a, b, 2);
    REQUIRE(seed.pairs.size() == 1);
    CHECK(seed.pairs[0].first == "ab");
  }
  SECTION("matches a brute-force string intersection on toy corpora") {
    std::vector<std::string> wa = {"haus", "1984", "anna", "tag", "und"};
    std::vector<std::string> wb = {"dom", "1984", "anna", "dźeń", "und"};
    auto seed = extract_identical_seed(vocab_of(wa), vocab_of(wb), 2);
    std::set<std::string> expect;
    std::set<std::string> sb(wb.begin(), wb.end());
    for (const auto& w : wa) {
      if (sb.count(w) && utf8_length(w) >= 2) expect.insert(w);
    }
    std::set<std::string> got;
    for (const auto& [s, t] : seed.pairs) got.insert(s);
    CHECK(got == expect);
  }
}

TEST_CASE("procrustes_map") {
  SECTION("identity recovery") {
    auto x = random_table(40, 8, 1);
    SeedDictionary seed;
    for (const auto& w : x.words()) seed.pairs.emplace_back(w, w);
    Mat w = procrustes_map(x, x, seed);
    CHECK((w - Mat::Identity(8, 8)).norm() < 1e-8);
  }
  SECTION("recovers a planted rotation") {
    const int d = 32;
    auto x = random_table(500, d, 2);
    Mat r = random_orthogonal(d, 3);
    EmbeddingTable y = EmbeddingTable::from_data(x.words(), x.matrix() * r);
    SeedDictionary seed;
    for (const auto& w : x.words()) seed.pairs.emplace_back(w, w);
    Mat w = procrustes_map(x, y, seed);
    CHECK((w - r).norm() < 1e-6);
    CHECK((w.transpose() * w - Mat::Identity(d, d)).norm() < 1e-8);
  }
  SECTION("underdetermined seed still yields an orthogonal map") {
    auto x = random_table(4, 2, 4);
    auto y = random_table(4, 2, 5, "v");
    SeedDictionary seed;
    seed.pairs.emplace_back(x.words()[0], y.words()[0]);
    Mat w = procrustes_map(x, y, seed);
    CHECK((w.transpose() * w - Mat::Identity(2, 2)).norm() < 1e-8);
  }
  SECTION("missing seed word names the word") {
    auto x = random_table(4, 2, 6);
    auto y = random_table(4, 2, 7, "v");
    SeedDictionary seed;
    seed.pairs.emplace_back("nichtda", "v0");
    CHECK_THROWS_WITH(procrustes_map(x, y, seed),
                      Catch::Matchers::ContainsSubstring("nichtda"));
  }
}

TEST_CASE("induce_lexicon") {
  SECTION("self map with k=1") {
    auto x = random_table(30, 8, 11);
    auto lex = induce_lexicon(x, x, 1);
    for (const auto& w : x.words()) {
      const auto* cands = lex.find(w);
      REQUIRE(cands != nullptr);
      REQUIRE(cands->size() == 1);
      CHECK((*cands)[0].tgt == w);
      CHECK((*cands)[0].score == Catch::Approx(1.0).margin(1e-6));
    }
  }
  SECTION("matches the exhaustive nearest-neighbor oracle") {
    auto x = random_table(50, 8, 12);
    auto y = random_table(50, 8, 13, "v");
    auto lex = induce_lexicon(x, y, 5);
    for (long i = 0; i < x.size(); ++i) {
      // brute-force cosine scan
      std::vector<std::pair<double, int>> scored;
      for (long j = 0; j < y.size(); ++j) {
        scored.push_back({x.matrix().row(i).dot(y.matrix().row(j)), static_cast<int>(j)});
      }
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      const auto* cands = lex.find(x.words()[static_cast<size_t>(i)]);
      REQUIRE(cands != nullptr);
      REQUIRE(cands->size() == 5);
      for (int k = 0; k < 5; ++k) {
        CHECK((*cands)[static_cast<size_t>(k)].tgt ==
              y.words()[static_cast<size_t>(scored[static_cast<size_t>(k)].second)]);
        CHECK((*cands)[static_cast<size_t>(k)].score ==
              Catch::Approx(scored[static_cast<size_t>(k)].first).margin(1e-12));
      }
      // scores are non-increasing and within [-1, 1]
      for (size_t k = 1; k < cands->size(); ++k) {
        CHECK((*cands)[k - 1].score >= (*cands)[k].score);
        CHECK(std::abs((*cands)[k].score) <= 1.0 + 1e-9);
      }
    }
  }
  SECTION("k larger than |Y| clamps") {
    auto x = random_table(5, 4, 14);
    auto y = random_table(3, 4, 15, "v");
    auto lex = induce_lexicon(x, y, 10);
    CHECK(lex.find("w0")->size() == 3);
  }
}

TEST_CASE("n-gram language model") {
  SECTION("unigram count ratios in the small-delta limit") {
    auto lm = NGramLM::train({{"a", "a", "b"}}, 1, 1e-9);
    CHECK(lm.cond_prob({}, "a") == Catch::Approx(2.0 / 3.0).margin(1e-6));
    CHECK(lm.cond_prob({}, "b") == Catch::Approx(1.0 / 3.0).margin(1e-6));
  }
  SECTION("conditionals sum to 1 over vocabulary + unk") {
    Rng rng(21);
    std::vector<std::vector<std::string>> corpus;
    std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f"};
    for (int i = 0; i < 60; ++i) {
      std::vector<std::string> sent;
      for (int k = rng.uniform_int(1, 9); k > 0; --k) sent.push_back(pool[rng.below(pool.size())]);
      corpus.push_back(sent);
    }
    auto lm = NGramLM::train(corpus, 3, 0.25);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::string> hist;
      for (int k = rng.uniform_int(0, 4); k > 0; --k) {
        hist.push_back(rng.bernoulli(0.2) ? "OOV" : pool[rng.below(pool.size())]);
      }
      double total = 0.0;
      for (const auto& w : pool) total += lm.cond_prob(hist, w);
      total += lm.cond_prob(hist, "<unk>");
      CHECK(total == Catch::Approx(1.0).margin(1e-9));
    }
  }
  SECTION("bigram sentence log-probs match a dictionary-count oracle") {
    Rng rng(22);
    std::vector<std::vector<std::string>> corpus;
    std::vector<std::string> pool = {"x", "y", "z", "w"};
    for (int i = 0; i < 100; ++i) {
      std::vector<std::string> sent;
      for (int k = rng.uniform_int(1, 6); k > 0; --k) sent.push_back(pool[rng.below(pool.size())]);
      corpus.push_back(sent);
    }
    const double delta = 0.5;
    auto lm = NGramLM::train(corpus, 2, delta);

    // oracle: independent dictionary counts over (history word -> next)
    std::map<std::string, long> cont, histc, stopc;
    std::map<std::pair<std::string, std::string>, long> wordc;
    std::set<std::string> vocab;
    for (const auto& s : corpus) {
      for (const auto& w : s) vocab.insert(w);
    }
    for (const auto& s : corpus) {
      std::string h = "<s>";
      for (const auto& w : s) {
        histc[h]++;
        cont[h]++;
        wordc[{h, w}]++;
        h = w;
      }
      histc[h]++;
      stopc[h]++;
    }
    const double k_events = static_cast<double>(vocab.size()) + 1.0;
    auto oracle_lp = [&](const std::vector<std::string>& s) {
      double lp = 0.0;
      std::string h = "<s>";
      for (const auto& w : s) {
        double p_stop = (stopc[h] + delta) / (histc[h] + 2 * delta);
        double p_w = (wordc[{h, w}] + delta) / (cont[h] + delta * k_events);
        lp += std::log1p(-p_stop) + std::log(p_w);
        h = w;
      }
      lp += std::log((stopc[h] + delta) / (histc[h] + 2 * delta));
      return lp;
    };
    for (int i = 0; i < 100; ++i) {
      const auto& s = corpus[static_cast<size_t>(i)];
      CHECK(lm.sentence_logprob(s) == Catch::Approx(oracle_lp(s)).margin(1e-9));
    }
  }
}

TEST_CASE("word_translate") {
  auto lm = NGramLM::train({{"v0", "v1"}, {"v1", "v2"}}, 2, 0.5);
  SECTION("empty sentence") {
    TranslationLexicon lex;
    CHECK(word_translate({}, lex, lm).empty());
  }
  SECTION("copy fallback when nothing is in the lexicon") {
    TranslationLexicon lex;
    auto out = word_translate({"gar", "nicht", "da"}, lex, lm);
    CHECK(out == std::vector<std::string>{"gar", "nicht", "da"});
  }
  SECTION("cipher language with the true lexicon reproduces the cipher map") {
    // target = deterministic word substitution of source
    std::map<std::string, std::string> cipher = {
        {"ich", "qa"}, {"sehe", "wb"}, {"den", "ec"}, {"wald", "rd"}, {"heute", "te"}};
    TranslationLexicon lex;
    std::vector<std::vector<std::string>> tgt_corpus;
    for (const auto& [s, t] : cipher) lex.entries[s] = {{t, 1.0}};
    tgt_corpus.push_back({"qa", "wb", "ec", "rd", "te"});
    auto tlm = NGramLM::train(tgt_corpus, 2, 0.5);
    std::vector<std::string> src = {"ich", "sehe", "den", "wald", "heute"};
    auto out = word_translate(src, lex, tlm, {4, 0.5});
    std::vector<std::string> expect;
    for (const auto& w : src) expect.push_back(cipher.at(w));
    CHECK(out == expect);
    CHECK(out.size() == src.size());
  }
  SECTION("output length always equals input length") {
    Rng rng(31);
    TranslationLexicon lex;
    lex.entries["a"] = {{"x", 0.9}, {"y", 0.5}};
    lex.entries["b"] = {{"y", 0.8}};
    std::vector<std::vector<std::string>> tgt = {{"x", "y"}, {"y", "x"}};
    auto tlm = NGramLM::train(tgt, 2, 0.5);
    for (int i = 0; i < 50; ++i) {
      std::vector<std::string> src;
      for (int k = rng.uniform_int(0, 7); k > 0; --k) {
        src.push_back(rng.bernoulli(0.5) ? "a" : (rng.bernoulli(0.5) ? "b" : "zzz"));
      }
      CHECK(word_translate(src, lex, tlm).size() == src.size());
    }
  }
}

TEST_CASE("backtranslate_corpus") {
  TranslationLexicon lex;
  lex.entries["qa"] = {{"ich", 1.0}};
  auto lm = NGramLM::train({{"ich", "du"}}, 2, 0.5);
  SECTION("empty corpus") {
    CHECK(backtranslate_corpus({}, lex, lm).empty());
  }
  SECTION("target side is byte-identical to the input; provenance tagged") {
    std::vector<std::string> corpus = {"qa qa", "qa", "unbekannt wort"};
    auto bt = backtranslate_corpus(corpus, lex, lm);
    REQUIRE(bt.size() == 3);
    for (size_t i = 0; i < corpus.size(); ++i) {
      CHECK(bt.pairs[i].tgt == corpus[i]);
      CHECK(bt.pairs[i].prov == Provenance::kPseudoSmt);
    }
    CHECK(bt.pairs[0].src == "ich ich");
    CHECK(bt.pairs[2].src == "unbekannt wort");
  }
}

TEST_CASE("embedding table IO and lexicon IO round-trip") {
  auto x = random_table(12, 6, 51);
  x.save("/tmp/umt_emb_test.vec");
  auto loaded = EmbeddingTable::load("/tmp/umt_emb_test.vec");
  REQUIRE(loaded.size() == x.size());
  REQUIRE(loaded.dim() == x.dim());
  for (long i = 0; i < x.size(); ++i) {
    CHECK(loaded.words()[static_cast<size_t>(i)] == x.words()[static_cast<size_t>(i)]);
    CHECK((loaded.matrix().row(i) - x.matrix().row(i)).norm() < 1e-6);
    CHECK(loaded.matrix().row(i).norm() == Catch::Approx(1.0).margin(1e-6));
  }
  auto lex = induce_lexicon(x, x, 3);
  lex.save("/tmp/umt_lex_test.tsv");
  auto lloaded = TranslationLexicon::load("/tmp/umt_lex_test.tsv");
  REQUIRE(lloaded.entries.size() == lex.entries.size());
  for (const auto& [k, v] : lex.entries) {
    const auto* got = lloaded.find(k);
    REQUIRE(got != nullptr);
    REQUIRE(got->size() == v.size());
    for (size_t i = 0; i < v.size(); ++i) {
      CHECK((*got)[i].tgt == v[i].tgt);
      CHECK((*got)[i].score == Catch::Approx(v[i].score).margin(1e-6));
    }
  }
}
