#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "relent/common.hpp"
#include "relent/linalg.hpp"

namespace relent {

// Finite word over symbol indices of some Sft.
using Word = std::vector<int>;

// 1-step subshift of finite type: named symbols plus a 0/1 adjacency matrix
// (adj[i][j] = 1 means symbol j may follow symbol i).
struct Sft {
  std::vector<std::string> symbols;
  std::vector<std::vector<uint8_t>> adj;

  int size() const { return static_cast<int>(symbols.size()); }
  bool edge(int i, int j) const { return adj[i][j] != 0; }

  int symbol_index(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (symbols[i] == name) return i;
    return -1;
  }
};

inline Sft make_sft(std::vector<std::string> symbols,
                    const std::vector<std::pair<std::string, std::string>>& edges) {
  Sft s;
  s.symbols = std::move(symbols);
  s.adj.assign(s.size(), std::vector<uint8_t>(s.size(), 0));
  for (auto& [a, b] : edges) {
    int i = s.symbol_index(a), j = s.symbol_index(b);
    if (i < 0 || j < 0) throw validation_error("edge uses unknown symbol: " + a + " -> " + b);
    s.adj[i][j] = 1;
  }
  return s;
}

inline Sft full_shift(std::vector<std::string> symbols) {
  Sft s;
  s.symbols = std::move(symbols);
  s.adj.assign(s.size(), std::vector<uint8_t>(s.size(), 1));
  return s;
}

// --- text format ------------------------------------------------------------
//
//   # comment
//   alphabet: a b1 b2
//   a -> b1
//   b1 -> b1
//
// The printer emits the canonical form (alphabet line, then edges in symbol
// order); parse(print(s)) reproduces s and print is a fixed point, so files
// round-trip byte-stably once comments are stripped.

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  std::string s = pos == std::string::npos ? line : line.substr(0, pos);
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline Sft parse_sft(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> alphabet;
  std::vector<std::pair<std::string, std::string>> edges;
  bool have_alphabet = false;
  while (std::getline(is, line)) {
    std::string s = strip_comment(line);
    if (s.empty()) continue;
    if (!have_alphabet) {
      if (s.rfind("alphabet:", 0) != 0)
        throw validation_error("system file must begin with an 'alphabet:' line");
      alphabet = split_ws(s.substr(9));
      if (alphabet.empty()) throw validation_error("empty alphabet");
      std::set<std::string> seen(alphabet.begin(), alphabet.end());
      if (seen.size() != alphabet.size()) throw validation_error("duplicate symbols in alphabet");
      have_alphabet = true;
      continue;
    }
    auto arrow = s.find("->");
    if (arrow == std::string::npos) throw validation_error("bad edge line: '" + s + "'");
    auto from = split_ws(s.substr(0, arrow));
    auto to = split_ws(s.substr(arrow + 2));
    if (from.size() != 1 || to.size() != 1) throw validation_error("bad edge line: '" + s + "'");
    edges.emplace_back(from[0], to[0]);
  }
  if (!have_alphabet) throw validation_error("system file has no 'alphabet:' line");
  return make_sft(alphabet, edges);
}

inline std::string print_sft(const Sft& s) {
  std::ostringstream os;
  os << "alphabet: " << join(s.symbols, " ") << "\n";
  for (int i = 0; i < s.size(); ++i)
    for (int j = 0; j < s.size(); ++j)
      if (s.edge(i, j)) os << s.symbols[i] << " -> " << s.symbols[j] << "\n";
  return os.str();
}

// --- validation and trimming ------------------------------------------------

struct SftValidation {
  bool ok = true;
  std::vector<std::string> stranded;  // symbols with no outgoing or no incoming edge
  std::vector<std::string> messages;
};

inline SftValidation validate(const Sft& s) {
  SftValidation r;
  if (s.size() == 0) {
    r.ok = false;
    r.messages.push_back("empty alphabet");
    return r;
  }
  for (int i = 0; i < s.size(); ++i) {
    int outd = 0, ind = 0;
    for (int j = 0; j < s.size(); ++j) {
      outd += s.edge(i, j);
      ind += s.edge(j, i);
    }
    if (outd == 0 || ind == 0) {
      r.ok = false;
      r.stranded.push_back(s.symbols[i]);
    }
  }
  if (!r.stranded.empty())
    r.messages.push_back("stranded symbols (missing in- or out-edges): " + join(r.stranded, " "));
  return r;
}

struct TrimResult {
  Sft sft;
  std::vector<int> kept;  // original indices of surviving symbols
};

// Repeatedly drops symbols with no in- or out-edge until none remain.
inline TrimResult trim(const Sft& s) {
  std::vector<int> alive(s.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < s.size(); ++i) {
      if (!alive[i]) continue;
      int outd = 0, ind = 0;
      for (int j = 0; j < s.size(); ++j) {
        if (!alive[j]) continue;
        outd += s.edge(i, j);
        ind += s.edge(j, i);
      }
      if (outd == 0 || ind == 0) {
        alive[i] = 0;
        changed = true;
      }
    }
  }
  TrimResult out;
  for (int i = 0; i < s.size(); ++i)
    if (alive[i]) out.kept.push_back(i);
  out.sft.symbols.reserve(out.kept.size());
  for (int i : out.kept) out.sft.symbols.push_back(s.symbols[i]);
  out.sft.adj.assign(out.kept.size(), std::vector<uint8_t>(out.kept.size(), 0));
  for (size_t a = 0; a < out.kept.size(); ++a)
    for (size_t b = 0; b < out.kept.size(); ++b)
      out.sft.adj[a][b] = s.adj[out.kept[a]][out.kept[b]];
  return out;
}

// --- strongly connected components (Kosaraju) --------------------------------

struct SccComponent {
  std::vector<int> vertices;  // sorted symbol indices
  bool trivial = false;       // single vertex without a self-loop
};

inline std::vector<SccComponent> scc(const Sft& s) {
  const int n = s.size();
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (int root = 0; root < n; ++root) {
    if (seen[root]) continue;
    // iterative DFS, pushing vertices in finish order
    std::vector<std::pair<int, int>> stack{{root, 0}};
    seen[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      bool advanced = false;
      for (int j = next; j < n; ++j) {
        if (s.edge(v, j) && !seen[j]) {
          next = j + 1;
          seen[j] = 1;
          stack.emplace_back(j, 0);
          advanced = true;
          break;
        }
      }
      if (!advanced) {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (int idx = n - 1; idx >= 0; --idx) {
    int root = order[idx];
    if (comp[root] >= 0) continue;
    std::vector<int> stack{root};
    comp[root] = ncomp;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j)
        if (s.edge(j, v) && comp[j] < 0) {
          comp[j] = ncomp;
          stack.push_back(j);
        }
    }
    ++ncomp;
  }
  std::vector<SccComponent> out(ncomp);
  for (int v = 0; v < n; ++v) out[comp[v]].vertices.push_back(v);
  for (auto& c : out) {
    std::sort(c.vertices.begin(), c.vertices.end());
    c.trivial = c.vertices.size() == 1 && !s.edge(c.vertices[0], c.vertices[0]);
  }
  return out;
}

inline bool is_irreducible(const Sft& s) {
  if (s.size() == 0) return false;
  auto comps = scc(s);
  return comps.size() == 1 && !comps[0].trivial;
}

// --- words ------------------------------------------------------------------

inline bool word_allowed(const Sft& s, const Word& w) {
  for (int x : w)
    if (x < 0 || x >= s.size()) return false;
  for (size_t i = 0; i + 1 < w.size(); ++i)
    if (!s.edge(w[i], w[i + 1])) return false;
  return !w.empty();
}

inline BigInt count_words(const Sft& s, int n) {
  if (n <= 0) throw validation_error("word length must be positive");
  std::vector<BigInt> v(s.size(), 1);
  for (int step = 1; step < n; ++step) {
    std::vector<BigInt> nv(s.size(), 0);
    for (int i = 0; i < s.size(); ++i) {
      BigInt acc = 0;
      for (int j = 0; j < s.size(); ++j)
        if (s.edge(i, j)) acc += v[j];
      nv[i] = acc;
    }
    v.swap(nv);
  }
  BigInt total = 0;
  for (auto& x : v) total += x;
  return total;
}

// All allowed words of length n in lexicographic symbol-index order.
// Guarded: refuses (before allocating) when the exact count exceeds cap.
inline std::vector<Word> enumerate_words(const Sft& s, int n, uint64_t cap = 1000000) {
  BigInt c = count_words(s, n);
  if (c > BigInt(cap))
    throw cap_error("word enumeration would produce " + c.str() +
                    " words, above cap " + std::to_string(cap));
  std::vector<Word> out;
  out.reserve(static_cast<size_t>(c));
  Word w;
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == n) {
      out.push_back(w);
      return;
    }
    for (int j = 0; j < s.size(); ++j) {
      if (depth > 0 && !s.edge(w.back(), j)) continue;
      w.push_back(j);
      self(self, depth + 1);
      w.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

inline std::string format_word(const Sft& s, const Word& w) {
  bool compact = true;
  for (auto& name : s.symbols) compact = compact && name.size() == 1;
  std::string sep = compact ? "" : " ";
  std::string out;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) out += sep;
    out += s.symbols[w[i]];
  }
  return out;
}

// Accepts either space-separated symbol names or, when every symbol name is a
// single character, a compact string like "abba".
inline Word parse_word(const Sft& s, const std::string& text) {
  Word w;
  auto toks = split_ws(text);
  bool compact = true;
  for (auto& name : s.symbols) compact = compact && name.size() == 1;
  if (toks.size() == 1 && compact && s.symbol_index(toks[0]) < 0) {
    for (char c : toks[0]) {
      int idx = s.symbol_index(std::string(1, c));
      if (idx < 0) throw validation_error("unknown symbol '" + std::string(1, c) + "' in word");
      w.push_back(idx);
    }
    return w;
  }
  for (auto& t : toks) {
    int idx = s.symbol_index(t);
    if (idx < 0) throw validation_error("unknown symbol '" + t + "' in word");
    w.push_back(idx);
  }
  return w;
}

// --- higher-block presentation ----------------------------------------------

struct HigherBlock {
  Sft sft;                  // symbols are the allowed k-blocks
  std::vector<Word> blocks; // new symbol index -> original k-block
  int k = 1;
};

// k-block recoding: symbols are allowed k-words, w -> w' is an edge whenever
// the (k-1)-overlap matches. For a 1-step SFT the overlap condition already
// certifies the concatenated (k+1)-block.
inline HigherBlock higher_block(const Sft& s, int k, uint64_t cap = 1000000) {
  if (k < 1) throw validation_error("block length must be >= 1");
  HigherBlock hb;
  hb.k = k;
  hb.blocks = enumerate_words(s, k, cap);
  hb.sft.symbols.reserve(hb.blocks.size());
  for (auto& b : hb.blocks) {
    std::string name = s.symbols[b[0]];
    for (size_t i = 1; i < b.size(); ++i) name += "." + s.symbols[b[i]];
    hb.sft.symbols.push_back(name);
  }
  int m = static_cast<int>(hb.blocks.size());
  hb.sft.adj.assign(m, std::vector<uint8_t>(m, 0));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      bool ok = k == 1 ? s.edge(hb.blocks[a][0], hb.blocks[b][0])
                       : std::equal(hb.blocks[a].begin() + 1, hb.blocks[a].end(),
                                    hb.blocks[b].begin());
      hb.sft.adj[a][b] = ok ? 1 : 0;
    }
  return hb;
}

// --- periodic orbits ----------------------------------------------------------

// A periodic point of period p, stored as one period block (cyclically
// allowed, primitive, lexicographically least rotation).
struct PeriodicOrbit {
  Word block;
  int period() const { return static_cast<int>(block.size()); }
};

inline bool orbit_block_primitive(const Word& w) {
  int p = static_cast<int>(w.size());
  for (int d = 1; d < p; ++d) {
    if (p % d != 0) continue;
    bool periodic = true;
    for (int i = 0; i < p && periodic; ++i) periodic = w[i] == w[(i + d) % p];
    if (periodic) return false;
  }
  return true;
}

inline Word canonical_rotation(const Word& w) {
  Word best = w;
  Word cur = w;
  for (size_t r = 1; r < w.size(); ++r) {
    std::rotate(cur.begin(), cur.begin() + 1, cur.end());
    if (cur < best) best = cur;
  }
  return best;
}

inline PeriodicOrbit make_orbit(const Sft& s, const Word& block) {
  if (block.empty()) throw validation_error("empty orbit block");
  if (!word_allowed(s, block) || !s.edge(block.back(), block.front()))
    throw validation_error("orbit block is not cyclically allowed");
  if (!orbit_block_primitive(block))
    throw validation_error("orbit block is not primitive (has a smaller period)");
  return PeriodicOrbit{canonical_rotation(block)};
}

// One representative (least rotation) per primitive orbit of period <= max_period.
inline std::vector<PeriodicOrbit> periodic_orbits(const Sft& s, int max_period) {
  if (max_period < 1 || max_period > 12)
    throw cap_error("periodic orbit enumeration capped at period 12");
  std::vector<PeriodicOrbit> out;
  for (int p = 1; p <= max_period; ++p) {
    for (auto& w : enumerate_words(s, p)) {
      if (!s.edge(w.back(), w.front())) continue;
      if (!orbit_block_primitive(w)) continue;
      if (canonical_rotation(w) != w) continue;
      out.push_back(PeriodicOrbit{w});
    }
  }
  return out;
}

}  // namespace relent
