// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared plumbing: deterministic RNG, UTF-8 handling, content hashing,
// line-oriented file IO.

#pragma once

#include <cstdint>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace umt {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

// ---------------------------------------------------------------------------
// RNG. All stochastic code takes an explicit Rng so runs are reproducible
// from a single global seed. Distributions are hand-rolled on top of
// mt19937_64: the standard <random> distributions are not pinned by the
// standard and we want stable streams.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-item stream: seed = global seed ^ item index, mixed.
inline uint64_t derive_seed(uint64_t global_seed, uint64_t index) {
  return splitmix64(global_seed ^ index);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n).
  uint64_t below(uint64_t n) {
    require(n > 0, "Rng::below: n must be positive");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // [0, 1)
  double uniform() { return (gen_() >> 11) * (1.0 / 9007199254740992.0); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// UTF-8

// Decodes the codepoint starting at byte offset i; advances i past it.
// Malformed bytes are consumed one at a time and returned verbatim so that
// processing never throws on dirty corpus data.
inline uint32_t utf8_next(std::string_view s, size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) {
    ++i;
    return c;
  }
  int extra = 0;
  uint32_t cp = 0;
  if ((c & 0xE0) == 0xC0) {
    cp = c & 0x1F;
    extra = 1;
  } else if ((c & 0xF0) == 0xE0) {
    cp = c & 0x0F;
    extra = 2;
  } else if ((c & 0xF8) == 0xF0) {
    cp = c & 0x07;
    extra = 3;
  } else {
    ++i;
    return c;
  }
  if (i + static_cast<size_t>(extra) >= s.size()) {  // truncated sequence
    ++i;
    return c;
  }
  for (int k = 1; k <= extra; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += 1 + extra;
  return cp;
}

inline void utf8_append(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::vector<uint32_t> utf8_codepoints(std::string_view s) {
  std::vector<uint32_t> cps;
  size_t i = 0;
  while (i < s.size()) cps.push_back(utf8_next(s, i));
  return cps;
}

inline std::string utf8_encode(const std::vector<uint32_t>& cps) {
  std::string out;
  for (uint32_t cp : cps) utf8_append(out, cp);
  return out;
}

inline size_t utf8_length(std::string_view s) {
  size_t n = 0, i = 0;
  while (i < s.size()) {
    utf8_next(s, i);
    ++n;
  }
  return n;
}

// Case maps cover ASCII, Latin-1 Supplement and Latin Extended-A, which is
// enough for German, Czech and Upper Sorbian orthography.
inline uint32_t cp_tolower(uint32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c == 0x178) return 0xFF;  // Y umlaut
  if (c >= 0x100 && c <= 0x177) {
    if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
    if (c == 0x138) return c;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
  return c;
}

inline uint32_t cp_toupper(uint32_t c) {
  if (c >= 'a' && c <= 'z') return c - 32;
  if (c >= 0xE0 && c <= 0xFE && c != 0xF7) return c - 32;
  if (c == 0xFF) return 0x178;
  if (c >= 0x100 && c <= 0x177) {
    if (c >= 0x139 && c <= 0x148) return (c % 2 == 0) ? c - 1 : c;
    if (c == 0x138) return c;
    return (c % 2 == 1) ? c - 1 : c;
  }
  if (c >= 0x179 && c <= 0x17E) return (c % 2 == 0) ? c - 1 : c;
  return c;
}

inline bool cp_isalpha(uint32_t c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return true;
  if (c >= 0xC0 && c <= 0xFF && c != 0xD7 && c != 0xF7) return true;
  if (c >= 0x100 && c <= 0x17F) return true;
  return false;
}

inline bool cp_isdigit(uint32_t c) { return c >= '0' && c <= '9'; }
inline bool cp_isalnum(uint32_t c) { return cp_isalpha(c) || cp_isdigit(c); }

inline std::string lowercase(std::string_view s) {
  std::string out;
  size_t i = 0;
  while (i < s.size()) utf8_append(out, cp_tolower(utf8_next(s, i)));
  return out;
}

inline std::string uppercase_first(std::string_view s) {
  std::string out;
  size_t i = 0;
  bool done = false;
  while (i < s.size()) {
    uint32_t cp = utf8_next(s, i);
    if (!done && cp_isalpha(cp)) {
      cp = cp_toupper(cp);
      done = true;
    }
    utf8_append(out, cp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strings

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& v, std::string_view sep = " ") {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

inline std::string strip(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r' || s[a] == '\n')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r' || s[b - 1] == '\n')) --b;
  return std::string(s.substr(a, b - a));
}

// ---------------------------------------------------------------------------
// Content hashing (FNV-1a 64). Used for stage memoization and artifact
// comparison, not for security.

class Fnv1a {
 public:
  void update(std::string_view data) {
    for (unsigned char c : data) {
      h_ ^= c;
      h_ *= 0x100000001b3ULL;
    }
  }
  uint64_t value() const { return h_; }
  std::string hex() const {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    uint64_t v = h_;
    for (int i = 15; i >= 0; --i) {
      s[i] = d[v & 0xF];
      v >>= 4;
    }
    return s;
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hash_string(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.hex();
}

// ---------------------------------------------------------------------------
// Line IO. Corpora are line-oriented UTF-8, one sentence per line.

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write file: " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) fail("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail("write failed: " + path);
}

inline bool file_exists(const std::string& path) {
  std::ifstream in(path);
  return in.good();
}

inline std::string hash_file(const std::string& path) { return hash_string(read_file(path)); }

}  // namespace umt
