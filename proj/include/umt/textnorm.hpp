// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Moses-style pre/post-processing: punctuation normalization, rule-based
// tokenization, truecasing, recasing, detokenization and source-conditioned
// quote fixing.
//
// The normalization table is fixed:
//   NBSP/thin spaces        -> ' '
//   curly/angled double quotes ( „ “ ” « » ) -> '"'
//   curly single quotes / accents ( ‚ ‘ ’ ‹ › ´ ) -> '\''
//   dash variants ( – — ‒ ‑ ‐ − ) -> '-'
//   ellipsis …              -> "..."
// followed by whitespace squeezing. Normalization is idempotent.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "umt/util.hpp"

namespace umt::textnorm {

// --------------------------------------------------------------------------
// Language rules

struct LangRules {
  std::string lang_id;
  std::set<std::string> nonbreaking_prefixes;
  uint32_t quote_open = 0x201E;   // „
  uint32_t quote_close = 0x201C;  // “

  // Prefix file: one prefix per line, '#' starts a comment line.
  static LangRules load(const std::string& lang_id, const std::string& path) {
    require(!lang_id.empty(), "LangRules: lang_id must be nonempty");
    LangRules r = defaults(lang_id);
    for (const auto& raw : read_lines(path)) {
      std::string line = strip(raw);
      if (line.empty() || line[0] == '#') continue;
      r.nonbreaking_prefixes.insert(line);
    }
    return r;
  }

  // Built-in rules; "hsb" maps to the Czech rule set (no Hsb rules exist).
  static LangRules builtin(const std::string& lang_id) {
    require(!lang_id.empty(), "LangRules: lang_id must be nonempty");
    LangRules r = defaults(lang_id);
    const char* de[] = {"bzw", "bspw", "bsp", "ca",  "dh",  "dr",  "etc", "evtl", "ggf", "inkl",
                        "mio", "mrd",  "nr",  "prof", "st",  "tel", "usw", "vgl",  "z",   "zb"};
    const char* cs[] = {"atd", "apod", "č",  "čj", "ing", "např", "p", "ph", "str",
                        "sv",  "tj",   "tzv", "tzn", "res", "mudr", "judr"};
    auto add_single_letters = [&r]() {
      for (char c = 'a'; c <= 'z'; ++c) {
        r.nonbreaking_prefixes.insert(std::string(1, c));
        r.nonbreaking_prefixes.insert(std::string(1, static_cast<char>(c - 32)));
      }
    };
    add_single_letters();
    if (lang_id == "de") {
      for (const char* p : de) {
        r.nonbreaking_prefixes.insert(p);
        std::string cap = p;
        cap[0] = static_cast<char>(::toupper(static_cast<unsigned char>(cap[0])));
        r.nonbreaking_prefixes.insert(cap);
      }
    } else {  // cs / hsb and anything else: Czech-flavoured abbreviations
      for (const char* p : cs) {
        r.nonbreaking_prefixes.insert(p);
        std::string cap = umt::uppercase_first(p);
        r.nonbreaking_prefixes.insert(cap);
      }
    }
    return r;
  }

 private:
  static LangRules defaults(const std::string& lang_id) {
    LangRules r;
    r.lang_id = lang_id;
    r.quote_open = 0x201E;
    r.quote_close = 0x201C;
    return r;
  }
};

// --------------------------------------------------------------------------
// Normalization

inline std::string normalize(std::string_view text) {
  std::string mapped;
  mapped.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    uint32_t cp = utf8_next(text, i);
    switch (cp) {
      case 0x00A0:
      case 0x2007:
      case 0x2009:
      case 0x202F:
        mapped.push_back(' ');
        break;
      case 0x201E:
      case 0x201C:
      case 0x201D:
      case 0x201F:
      case 0x00AB:
      case 0x00BB:
        mapped.push_back('"');
        break;
      case 0x201A:
      case 0x2018:
      case 0x2019:
      case 0x2039:
      case 0x203A:
      case 0x00B4:
      case 0x0060:
        mapped.push_back('\'');
        break;
      case 0x2010:
      case 0x2011:
      case 0x2012:
      case 0x2013:
      case 0x2014:
      case 0x2212:
        mapped.push_back('-');
        break;
      case 0x2026:
        mapped += "...";
        break;
      default:
        utf8_append(mapped, cp);
    }
  }
  // squeeze whitespace
  std::string out;
  out.reserve(mapped.size());
  bool in_space = true;  // also strips leading space
  for (size_t k = 0; k < mapped.size(); ++k) {
    char c = mapped[k];
    if (c == ' ' || c == '\t') {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// --------------------------------------------------------------------------
// Tokenization

namespace detail {

inline bool is_word_cp(uint32_t c) { return cp_isalnum(c); }

// Tokenizes one whitespace-delimited chunk. `last_chunk` controls the
// nonbreaking-prefix rule: a chunk-final period is never kept on the last
// chunk of a line (sentence-final periods always split).
inline void tokenize_chunk(const std::vector<uint32_t>& cps, bool last_chunk,
                           const LangRules& rules, std::vector<std::string>& out) {
  const size_t n = cps.size();
  std::string cur;
  size_t cur_start = 0;
  auto flush = [&]() {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  size_t k = 0;
  while (k < n) {
    uint32_t c = cps[k];
    if (is_word_cp(c)) {
      if (cur.empty()) cur_start = k;
      utf8_append(cur, c);
      ++k;
      continue;
    }
    uint32_t prev = (k > 0) ? cps[k - 1] : 0;
    uint32_t next = (k + 1 < n) ? cps[k + 1] : 0;
    if (c == '.') {
      size_t dots = 1;
      while (k + dots < n && cps[k + dots] == '.') ++dots;
      if (dots >= 2) {  // multidot token ("...", "..")
        flush();
        out.push_back(std::string(dots, '.'));
        k += dots;
        continue;
      }
      if (cp_isdigit(prev) && cp_isdigit(next)) {  // 3.14
        utf8_append(cur, c);
        ++k;
        continue;
      }
      if (is_word_cp(next)) {  // intra-word period: z.B., e.g.
        utf8_append(cur, c);
        ++k;
        continue;
      }
      // chunk-final (or pre-punctuation) period
      bool keep = !last_chunk && k + 1 == n && !cur.empty() &&
                  rules.nonbreaking_prefixes.count(cur) > 0;
      if (keep) {
        cur.push_back('.');
        ++k;
        continue;
      }
      flush();
      out.push_back(".");
      ++k;
      continue;
    }
    if (c == ',' && cp_isdigit(prev) && cp_isdigit(next)) {  // 1,000
      utf8_append(cur, c);
      ++k;
      continue;
    }
    if ((c == '-' || c == '\'') && is_word_cp(prev) && is_word_cp(next)) {
      utf8_append(cur, c);  // intra-word hyphen/apostrophe
      ++k;
      continue;
    }
    // any other separator: standalone token
    flush();
    std::string t;
    utf8_append(t, c);
    out.push_back(t);
    ++k;
  }
  flush();
  (void)cur_start;
}

}  // namespace detail

inline std::vector<std::string> normalize_and_tokenize(std::string_view text,
                                                       const LangRules& rules) {
  std::string norm = normalize(text);
  std::vector<std::string> tokens;
  std::vector<std::vector<uint32_t>> chunks;
  for (const auto& chunk : split_ws(norm)) chunks.push_back(utf8_codepoints(chunk));
  for (size_t ci = 0; ci < chunks.size(); ++ci) {
    detail::tokenize_chunk(chunks[ci], ci + 1 == chunks.size(), rules, tokens);
  }
  return tokens;
}

// --------------------------------------------------------------------------
// Detokenization (inverse of the attachment decisions above)

inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool no_space_before_next = true;  // start of line
  int ascii_dquote_parity = 0;
  int ascii_squote_parity = 0;
  int german_open_pending = 0;

  auto is_attach_left = [&](const std::string& t) {
    // tokens made entirely of closing punctuation attach to the left
    auto cps = utf8_codepoints(t);
    if (cps.empty()) return false;
    for (uint32_t c : cps) {
      switch (c) {
        case '.':
        case ',':
        case '!':
        case '?':
        case ';':
        case ':':
        case '%':
        case ')':
        case ']':
        case '}':
        case 0x00BB:  // »
        case 0x201D:  // ”
          continue;
        default:
          return false;
      }
    }
    return true;
  };
  auto is_attach_right = [&](const std::string& t) {
    auto cps = utf8_codepoints(t);
    if (cps.size() != 1) return false;
    switch (cps[0]) {
      case '(':
      case '[':
      case '{':
      case 0x00AB:  // «
      case 0x00BF:  // ¿
      case 0x00A1:  // ¡
      case 0x201E:  // „
        return true;
      default:
        return false;
    }
  };

  for (const auto& t : tokens) {
    bool attach_left = false;
    bool attach_right = false;
    if (t == "\"") {
      if (ascii_dquote_parity % 2 == 0) {
        attach_right = true;  // opening
      } else {
        attach_left = true;  // closing
      }
      ++ascii_dquote_parity;
    } else if (t == "'") {
      if (ascii_squote_parity % 2 == 0) {
        attach_right = true;
      } else {
        attach_left = true;
      }
      ++ascii_squote_parity;
    } else if (t == "“") {  // “ closes a pending „, otherwise opens
      if (german_open_pending > 0) {
        attach_left = true;
        --german_open_pending;
      } else {
        attach_right = true;
      }
    } else if (is_attach_right(t)) {
      attach_right = true;
      if (t == "„") ++german_open_pending;
    } else if (is_attach_left(t)) {
      attach_left = true;
    }

    if (!out.empty() && !attach_left && !no_space_before_next) out.push_back(' ');
    out += t;
    no_space_before_next = attach_right;
  }
  return out;
}

// --------------------------------------------------------------------------
// Truecasing

struct CasingModel {
  struct Entry {
    std::string surface;
    long count = 0;
  };
  std::unordered_map<std::string, Entry> table;  // key: lowercased token
  long total_tokens = 0;

  bool trained() const { return !table.empty(); }

  std::optional<std::string> lookup(const std::string& token) const {
    auto it = table.find(lowercase(token));
    if (it == table.end()) return std::nullopt;
    return it->second.surface;
  }

  // "surface<TAB>count" lines, sorted by key.
  void save(const std::string& path) const {
    std::vector<std::pair<std::string, const Entry*>> items;
    items.reserve(table.size());
    for (const auto& [k, e] : table) items.emplace_back(k, &e);
    std::sort(items.begin(), items.end());
    std::vector<std::string> lines;
    lines.reserve(items.size());
    for (const auto& [k, e] : items) lines.push_back(e->surface + "\t" + std::to_string(e->count));
    write_lines(path, lines);
  }

  static CasingModel load(const std::string& path) {
    CasingModel m;
    for (const auto& line : read_lines(path)) {
      if (line.empty()) continue;
      size_t tab = line.find('\t');
      require(tab != std::string::npos, "CasingModel: malformed line: " + line);
      Entry e;
      e.surface = line.substr(0, tab);
      e.count = std::stol(line.substr(tab + 1));
      m.table[lowercase(e.surface)] = e;
      m.total_tokens += e.count;
    }
    return m;
  }
};

// Statistics exclude sentence-initial tokens (their casing is uninformative).
// Ties between surface forms break lexicographically (code-point order).
inline CasingModel train_truecaser(const std::vector<std::vector<std::string>>& corpus) {
  require(!corpus.empty(), "empty training data");
  std::unordered_map<std::string, std::map<std::string, long>> counts;
  long total = 0;
  for (const auto& sent : corpus) {
    for (size_t i = 1; i < sent.size(); ++i) {
      const std::string& tok = sent[i];
      bool has_alpha = false;
      for (uint32_t cp : utf8_codepoints(tok)) {
        if (cp_isalpha(cp)) {
          has_alpha = true;
          break;
        }
      }
      if (!has_alpha) continue;
      counts[lowercase(tok)][tok] += 1;
      ++total;
    }
  }
  CasingModel model;
  model.total_tokens = total;
  for (const auto& [key, surfaces] : counts) {
    CasingModel::Entry best;
    for (const auto& [surface, count] : surfaces) {  // std::map: lexicographic order
      if (count > best.count) {
        best.surface = surface;
        best.count = count;
      }
    }
    model.table[key] = best;
  }
  return model;
}

// Only the sentence-initial token is rewritten; a miss leaves it unchanged.
inline std::vector<std::string> truecase(std::vector<std::string> tokens,
                                         const CasingModel& model) {
  if (tokens.empty()) return tokens;
  if (auto surface = model.lookup(tokens[0])) tokens[0] = *surface;
  return tokens;
}

// --------------------------------------------------------------------------
// Post-processing

namespace detail {

struct QuoteStyle {
  uint32_t open, close;
};

inline QuoteStyle detect_quote_style(std::string_view src, const LangRules& rules) {
  bool low9 = false, ldq = false, rdq = false, laq = false, raq = false, ascii = false;
  size_t i = 0;
  while (i < src.size()) {
    switch (utf8_next(src, i)) {
      case 0x201E: low9 = true; break;
      case 0x201C: ldq = true; break;
      case 0x201D: rdq = true; break;
      case 0x00AB: laq = true; break;
      case 0x00BB: raq = true; break;
      case '"': ascii = true; break;
      default: break;
    }
  }
  if (low9) return {0x201E, 0x201C};            // „…“
  if (laq || raq) return {0x00AB, 0x00BB};      // «…»
  if (ldq || rdq) return {0x201C, 0x201D};      // “…”
  if (ascii) return {'"', '"'};
  return {rules.quote_open, rules.quote_close};
}

}  // namespace detail

// Recasing, quote fixing against the source sentence, detokenization and
// sentence-initial uppercasing, in that order at token level.
inline std::string postprocess(const std::vector<std::string>& hyp_tokens,
                               std::string_view src_text, const CasingModel& model,
                               const LangRules& rules) {
  std::vector<std::string> tokens = hyp_tokens;
  for (auto& t : tokens) {
    if (auto surface = model.lookup(t)) t = *surface;
  }
  // Paired ASCII quotes -> source style, alternating open/close left to
  // right; an unpaired trailing quote maps to the close mark.
  size_t n_quotes = 0;
  for (const auto& t : tokens) {
    if (t == "\"") ++n_quotes;
  }
  if (n_quotes > 0) {
    detail::QuoteStyle style = detail::detect_quote_style(src_text, rules);
    size_t j = 0;
    for (auto& t : tokens) {
      if (t != "\"") continue;
      bool open = (j % 2 == 0);
      if (j + 1 == n_quotes && n_quotes % 2 == 1) open = false;
      std::string mark;
      utf8_append(mark, open ? style.open : style.close);
      t = mark;
      ++j;
    }
  }
  return uppercase_first(detokenize(tokens));
}

}  // namespace umt::textnorm
