#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "relent/common.hpp"
#include "relent/factor_map.hpp"
#include "relent/sft.hpp"

namespace relent {

struct GalleryEntry {
  std::string name;
  std::string note;
  FactorCode code;
};

struct CheckResult {
  std::string name;
  bool ok = true;
  std::string detail;
};

namespace detail {

inline FactorCode make_code(Sft domain, Sft codomain,
                            const std::vector<std::pair<std::string, std::string>>& pairs) {
  FactorCode c;
  c.domain = std::move(domain);
  c.codomain = std::move(codomain);
  c.map.assign(c.domain.size(), -1);
  for (auto& [x, y] : pairs) {
    int i = c.domain.symbol_index(x), j = c.codomain.symbol_index(y);
    if (i < 0 || j < 0) throw validation_error("gallery code uses unknown symbol");
    c.map[i] = j;
  }
  for (int v : c.map)
    if (v < 0) throw validation_error("gallery code leaves a symbol unmapped");
  return c;
}

inline FactorCode identity_code(const Sft& s) {
  FactorCode c;
  c.domain = s;
  c.codomain = s;
  c.map.resize(s.size());
  for (int i = 0; i < s.size(); ++i) c.map[i] = i;
  return c;
}

}  // namespace detail

inline std::vector<GalleryEntry> gallery() {
  std::vector<GalleryEntry> out;

  Sft golden = make_sft({"0", "1"}, {{"0", "0"}, {"0", "1"}, {"1", "0"}});
  out.push_back({"GOLDEN", "two-symbol shift with 11 forbidden; identity code",
                 detail::identity_code(golden)});

  out.push_back({"FULL2", "unconstrained two-symbol shift; identity code",
                 detail::identity_code(full_shift({"0", "1"}))});

  {
    // pair presentation of the two-symbol full shift; a pair maps to the sum
    // of its bits mod 2, so the two lifts of any image word are bitwise
    // complementary
    Sft x = make_sft({"00", "01", "10", "11"},
                     {{"00", "00"},
                      {"00", "01"},
                      {"01", "10"},
                      {"01", "11"},
                      {"10", "00"},
                      {"10", "01"},
                      {"11", "10"},
                      {"11", "11"}});
    Sft y = full_shift({"0", "1"});
    out.push_back({"XOR",
                   "pair presentation of the full 2-shift mapped by bit sum mod 2; every image "
                   "word has exactly two lifts, complementary in every coordinate",
                   detail::make_code(x, y, {{"00", "0"}, {"01", "1"}, {"10", "1"}, {"11", "0"}})});
  }

  {
    Sft x = make_sft({"a", "b1", "b2"}, {{"a", "b1"},
                                         {"b1", "a"},
                                         {"a", "b2"},
                                         {"b2", "a"},
                                         {"b1", "b1"},
                                         {"b2", "b2"},
                                         {"b1", "b2"}});
    Sft y = make_sft({"a", "b"}, {{"a", "b"}, {"b", "a"}, {"b", "b"}});
    out.push_back({"ABK",
                   "symbol a has a unique preimage; inside a b-run the lift may switch b1 -> b2 "
                   "once and never back, so a b-run of length k lifts in k+1 ways",
                   detail::make_code(x, y, {{"a", "a"}, {"b1", "b"}, {"b2", "b"}})});
  }

  {
    Sft x = make_sft({"a1", "a2", "b1", "b2"}, {{"a1", "a1"},
                                                {"a2", "a2"},
                                                {"a1", "a2"},
                                                {"a2", "a1"},
                                                {"a1", "b1"},
                                                {"b1", "a1"},
                                                {"a2", "b2"},
                                                {"b2", "a2"}});
    Sft y = make_sft({"a", "b"}, {{"a", "a"}, {"a", "b"}, {"b", "a"}});
    out.push_back({"HOMC",
                   "swapping a1<->a2 and b1<->b2 is a fixed-point-free cover symmetry, so every "
                   "image block has an even preimage count and no order has a singleton block",
                   detail::make_code(x, y,
                                     {{"a1", "a"}, {"a2", "a"}, {"b1", "b"}, {"b2", "b"}})});
  }

  {
    Sft x = make_sft({"a1", "a2", "b1", "b2"}, {{"a1", "a1"},
                                                {"a2", "a2"},
                                                {"a1", "a2"},
                                                {"a2", "a1"},
                                                {"a1", "b1"},
                                                {"b1", "a1"},
                                                {"a2", "b2"},
                                                {"b2", "a2"},
                                                {"b1", "b1"}});
    Sft y = full_shift({"a", "b"});
    out.push_back({"HOMCPLUS",
                   "adding b1 -> b1 breaks the swap symmetry: bb lifts only to b1b1, giving "
                   "singleton image blocks from order 2 on (bb, and later abba)",
                   detail::make_code(x, y,
                                     {{"a1", "a"}, {"a2", "a"}, {"b1", "b"}, {"b2", "b"}})});
  }

  {
    Sft x = make_sft({"a1", "b1", "a2", "b2"}, {{"a1", "a1"},
                                                {"a1", "b1"},
                                                {"b1", "a1"},
                                                {"b1", "b1"},
                                                {"b1", "b2"},
                                                {"a2", "a2"},
                                                {"a2", "a1"},
                                                {"a2", "b2"},
                                                {"b2", "a2"},
                                                {"b2", "b2"}});
    Sft y = full_shift({"a", "b"});
    out.push_back({"EX5",
                   "irreducible four-symbol cover of the full 2-shift; every image block tested "
                   "keeps at least two lifts (certified up to the tested order only)",
                   detail::make_code(x, y,
                                     {{"a1", "a"}, {"a2", "a"}, {"b1", "b"}, {"b2", "b"}})});
  }

  return out;
}

inline GalleryEntry gallery_load(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (auto& e : gallery())
    if (e.name == up) return e;
  throw validation_error("unknown gallery system '" + name + "'");
}

// Re-derives the documented facts for one entry. Every fact a note states is
// checked here rather than trusted.
inline std::vector<CheckResult> self_check(const GalleryEntry& e) {
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name, bool ok, const std::string& detail = "") {
    out.push_back({name, ok, detail});
  };

  auto dv = validate(e.code.domain);
  add("domain validates", dv.ok, join(dv.messages, "; "));
  auto cv = validate(e.code.codomain);
  add("codomain validates", cv.ok, join(cv.messages, "; "));
  auto kv = validate_code(e.code);
  add("code validates", kv.ok,
      kv.ok ? "" : "edge violations or uncovered symbols present");
  auto img = image_subshift_check(e.code, 8);
  add("image words covered to length 8", img.ok,
      img.ok ? "" : std::to_string(img.missing.size()) + " words missing preimages");

  if (e.name == "GOLDEN") {
    add("89 words of length 9", count_words(e.code.domain, 9) == 89);
  } else if (e.name == "FULL2") {
    add("2^n words", count_words(e.code.domain, 9) == 512);
  } else if (e.name == "XOR") {
    bool ok = true;
    for (int n = 1; n <= 8 && ok; ++n)
      for (auto& y : enumerate_words(e.code.codomain, n))
        if (count_preimages(e.code, y) != 2) {
          ok = false;
          break;
        }
    add("every image word of length <= 8 has exactly 2 lifts", ok);
  } else if (e.name == "ABK") {
    add("fiber of a is a singleton", e.code.fiber(e.code.codomain.symbol_index("a")).size() == 1);
    bool ok = true;
    int a = e.code.codomain.symbol_index("a"), b = e.code.codomain.symbol_index("b");
    for (int k = 1; k <= 10 && ok; ++k) {
      Word y{a};
      for (int i = 0; i < k; ++i) y.push_back(b);
      y.push_back(a);
      ok = count_preimages(e.code, y) == k + 1;
    }
    add("a b^k a has k+1 lifts for k <= 10", ok);
  } else if (e.name == "HOMC") {
    auto rep = clump_analysis(e.code, 4);
    bool ok = true;
    for (auto& lvl : rep.levels) ok = ok && lvl.min_count >= 2 && lvl.singletons.empty();
    add("no singleton blocks up to order 4", ok);
    bool even = true;
    for (auto& y : enumerate_words(e.code.codomain, 4))
      if (count_preimages(e.code, y) % 2 != 0) even = false;
    add("length-4 image blocks have even preimage counts", even);
  } else if (e.name == "HOMCPLUS") {
    auto rep = clump_analysis(e.code, 4);
    add("no singleton at order 1", rep.levels[0].singletons.empty());
    Word bb{e.code.codomain.symbol_index("b"), e.code.codomain.symbol_index("b")};
    bool found_bb = false;
    for (auto& [y, x] : rep.levels[1].singletons) found_bb = found_bb || y == bb;
    add("bb is a singleton at order 2", found_bb);
    int a = e.code.codomain.symbol_index("a"), b = e.code.codomain.symbol_index("b");
    Word abba{a, b, b, a};
    bool found_abba = false;
    for (auto& [y, x] : rep.levels[3].singletons) found_abba = found_abba || y == abba;
    add("abba is a singleton at order 4", found_abba);
  } else if (e.name == "EX5") {
    add("domain irreducible", is_irreducible(e.code.domain));
    auto rep = clump_analysis(e.code, 6);
    bool ok = true;
    for (auto& lvl : rep.levels) ok = ok && lvl.singletons.empty();
    add("no singleton blocks up to order 6", ok);
  }
  return out;
}

}  // namespace relent
