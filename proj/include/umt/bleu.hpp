// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Corpus-level BLEU with 13a-style tokenization, modified n-gram precisions
// up to 4, exponential smoothing for zero counts and a multiplicative
// brevity penalty. Scoring is mixed-case (no lowercasing).

#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "umt/util.hpp"

namespace umt::bleu {

namespace detail {

inline bool in_13a_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  // { - ~, [ - `, space - &, ( - +, : - @, /
  return (u >= 0x7B && u <= 0x7E) || (u >= 0x5B && u <= 0x60) || (u >= 0x20 && u <= 0x26) ||
         (u >= 0x28 && u <= 0x2B) || (u >= 0x3A && u <= 0x40) || u == '/';
}

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace detail

// The published 13a rule list, applied as ordered left-to-right substitution
// passes over " line ".
inline std::vector<std::string> tokenize_13a(std::string_view line) {
  std::string s(line);
  detail::replace_all(s, "<skipped>", "");
  detail::replace_all(s, "-\n", "");
  detail::replace_all(s, "\n", " ");
  if (s.find('&') != std::string::npos) {
    detail::replace_all(s, "&quot;", "\"");
    detail::replace_all(s, "&amp;", "&");
    detail::replace_all(s, "&lt;", "<");
    detail::replace_all(s, "&gt;", ">");
  }
  s = " " + s + " ";

  // pass 1: pad language-independent punctuation
  std::string a;
  a.reserve(s.size() * 2);
  for (char c : s) {
    if (detail::in_13a_punct(c)) {
      a.push_back(' ');
      a.push_back(c);
      a.push_back(' ');
    } else {
      a.push_back(c);
    }
  }
  // pass 2: ([^0-9])([.,]) -> "\1 \2 "
  std::string b;
  b.reserve(a.size() * 2);
  for (size_t i = 0; i < a.size();) {
    if (i + 1 < a.size() && !detail::is_ascii_digit(a[i]) && (a[i + 1] == '.' || a[i + 1] == ',')) {
      b.push_back(a[i]);
      b.push_back(' ');
      b.push_back(a[i + 1]);
      b.push_back(' ');
      i += 2;
    } else {
      b.push_back(a[i]);
      i += 1;
    }
  }
  // pass 3: ([.,])([^0-9]) -> " \1 \2"
  std::string c;
  c.reserve(b.size() * 2);
  for (size_t i = 0; i < b.size();) {
    if (i + 1 < b.size() && (b[i] == '.' || b[i] == ',') && !detail::is_ascii_digit(b[i + 1])) {
      c.push_back(' ');
      c.push_back(b[i]);
      c.push_back(' ');
      c.push_back(b[i + 1]);
      i += 2;
    } else {
      c.push_back(b[i]);
      i += 1;
    }
  }
  // pass 4: ([0-9])(-) -> "\1 \2 "
  std::string d;
  d.reserve(c.size() * 2);
  for (size_t i = 0; i < c.size();) {
    if (i + 1 < c.size() && detail::is_ascii_digit(c[i]) && c[i + 1] == '-') {
      d.push_back(c[i]);
      d.push_back(' ');
      d.push_back('-');
      d.push_back(' ');
      i += 2;
    } else {
      d.push_back(c[i]);
      i += 1;
    }
  }
  return split_ws(d);
}

struct BleuReport {
  double score = 0.0;             // in [0, 100]
  double precisions[4] = {0, 0, 0, 0};  // percentages
  double brevity_penalty = 1.0;
  long hyp_len = 0;
  long ref_len = 0;
};

inline BleuReport bleu(const std::vector<std::string>& hypotheses,
                       const std::vector<std::string>& references) {
  require(hypotheses.size() == references.size(), "bleu: line counts differ");
  long correct[4] = {0, 0, 0, 0};
  long total[4] = {0, 0, 0, 0};
  BleuReport rep;

  for (size_t i = 0; i < hypotheses.size(); ++i) {
    auto hyp = tokenize_13a(hypotheses[i]);
    auto ref = tokenize_13a(references[i]);
    rep.hyp_len += static_cast<long>(hyp.size());
    rep.ref_len += static_cast<long>(ref.size());
    for (int n = 1; n <= 4; ++n) {
      if (static_cast<long>(hyp.size()) < n) continue;
      std::unordered_map<std::string, long> ref_counts;
      for (size_t j = 0; j + n <= ref.size(); ++j) {
        std::string key;
        for (int k = 0; k < n; ++k) {
          key += ref[j + static_cast<size_t>(k)];
          key += '\x01';
        }
        ref_counts[key] += 1;
      }
      std::unordered_map<std::string, long> hyp_counts;
      for (size_t j = 0; j + n <= hyp.size(); ++j) {
        std::string key;
        for (int k = 0; k < n; ++k) {
          key += hyp[j + static_cast<size_t>(k)];
          key += '\x01';
        }
        hyp_counts[key] += 1;
      }
      long tot = static_cast<long>(hyp.size()) - n + 1;
      total[n - 1] += tot;
      for (const auto& [key, cnt] : hyp_counts) {
        auto it = ref_counts.find(key);
        if (it != ref_counts.end()) correct[n - 1] += std::min(cnt, it->second);
      }
    }
  }

  // exponential smoothing: each zero-match order halves the substitute
  double smooth = 1.0;
  bool any_zero_total = false;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) {
      any_zero_total = true;
      rep.precisions[n] = 0.0;
      continue;
    }
    if (correct[n] == 0) {
      smooth *= 2.0;
      rep.precisions[n] = 100.0 / (smooth * static_cast<double>(total[n]));
    } else {
      rep.precisions[n] = 100.0 * static_cast<double>(correct[n]) / static_cast<double>(total[n]);
    }
  }

  if (rep.hyp_len == 0) {
    rep.brevity_penalty = 0.0;
    rep.score = 0.0;
    return rep;
  }
  rep.brevity_penalty =
      rep.hyp_len >= rep.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(rep.ref_len) / static_cast<double>(rep.hyp_len));
  if (any_zero_total) {
    rep.score = 0.0;
    return rep;
  }
  // geometric mean via sum of log(p/100): exact 100.0 when every p is 100
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) log_sum += std::log(rep.precisions[n] / 100.0);
  rep.score = rep.brevity_penalty * 100.0 * std::exp(log_sum / 4.0);
  return rep;
}

}  // namespace umt::bleu
