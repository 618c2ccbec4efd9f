// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "umt/util.hpp"

namespace umt {

// Where a pseudo-parallel pair came from.
enum class Provenance { kPseudoSmt, kPseudoNmt, kOnlineBt };

inline std::string provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kPseudoSmt: return "pseudo-smt";
    case Provenance::kPseudoNmt: return "pseudo-nmt";
    case Provenance::kOnlineBt: return "online-bt";
  }
  return "?";
}

inline Provenance provenance_from_name(const std::string& s) {
  if (s == "pseudo-smt") return Provenance::kPseudoSmt;
  if (s == "pseudo-nmt") return Provenance::kPseudoNmt;
  if (s == "online-bt") return Provenance::kOnlineBt;
  fail("unknown provenance: " + s);
}

struct BitextPair {
  std::string src;  // synthetic side for backtranslated data
  std::string tgt;  // authentic side
  Provenance prov = Provenance::kPseudoSmt;
};

// Aligned sentence-pair corpus. On disk: two aligned line files plus a
// provenance sidecar, one tag per line.
struct Bitext {
  std::vector<BitextPair> pairs;

  size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }

  void save(const std::string& prefix) const {
    std::vector<std::string> src, tgt, prov;
    src.reserve(pairs.size());
    for (const auto& p : pairs) {
      src.push_back(p.src);
      tgt.push_back(p.tgt);
      prov.push_back(provenance_name(p.prov));
    }
    write_lines(prefix + ".src", src);
    write_lines(prefix + ".tgt", tgt);
    write_lines(prefix + ".prov", prov);
  }

  static Bitext load(const std::string& prefix) {
    auto src = read_lines(prefix + ".src");
    auto tgt = read_lines(prefix + ".tgt");
    auto prov = read_lines(prefix + ".prov");
    require(src.size() == tgt.size() && src.size() == prov.size(),
            "bitext files are not aligned: " + prefix);
    Bitext b;
    b.pairs.resize(src.size());
    for (size_t i = 0; i < src.size(); ++i) {
      b.pairs[i] = {std::move(src[i]), std::move(tgt[i]), provenance_from_name(prov[i])};
    }
    return b;
  }
};

}  // namespace umt
