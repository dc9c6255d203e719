#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relent/common.hpp"
#include "relent/measure.hpp"
#include "relent/rng.hpp"
#include "relent/sft.hpp"

namespace relent {

// 1-block factor code between SFTs: a per-symbol map that must send allowed
// edges to allowed edges.
struct FactorCode {
  Sft domain;    // X
  Sft codomain;  // Y
  std::vector<int> map;  // domain symbol -> codomain symbol

  int apply(int x) const { return map[x]; }
  Word apply(const Word& w) const {
    Word out(w.size());
    for (size_t i = 0; i < w.size(); ++i) out[i] = map[w[i]];
    return out;
  }
  std::vector<int> fiber(int y) const {
    std::vector<int> out;
    for (int i = 0; i < domain.size(); ++i)
      if (map[i] == y) out.push_back(i);
    return out;
  }
};

struct CodeValidation {
  bool ok = true;
  std::vector<std::string> edge_violations;   // X-edges whose image is not allowed
  std::vector<std::string> uncovered_symbols; // Y-symbols with empty fiber
};

inline CodeValidation validate_code(const FactorCode& c) {
  CodeValidation r;
  if (static_cast<int>(c.map.size()) != c.domain.size())
    throw validation_error("code map does not cover the whole domain alphabet");
  for (int i = 0; i < c.domain.size(); ++i)
    if (c.map[i] < 0 || c.map[i] >= c.codomain.size())
      throw validation_error("code maps " + c.domain.symbols[i] + " outside the codomain");
  for (int i = 0; i < c.domain.size(); ++i)
    for (int j = 0; j < c.domain.size(); ++j)
      if (c.domain.edge(i, j) && !c.codomain.edge(c.map[i], c.map[j])) {
        r.ok = false;
        r.edge_violations.push_back(c.domain.symbols[i] + " -> " + c.domain.symbols[j] +
                                    " maps to forbidden " + c.codomain.symbols[c.map[i]] +
                                    " -> " + c.codomain.symbols[c.map[j]]);
      }
  for (int y = 0; y < c.codomain.size(); ++y)
    if (c.fiber(y).empty()) {
      r.ok = false;
      r.uncovered_symbols.push_back(c.codomain.symbols[y]);
    }
  return r;
}

// --- code text format ---------------------------------------------------------
//
//   map:
//   a -> a
//   b1 -> b
//   b2 -> b

inline FactorCode parse_code(const std::string& text, const Sft& domain, const Sft& codomain) {
  FactorCode c;
  c.domain = domain;
  c.codomain = codomain;
  c.map.assign(domain.size(), -1);
  std::istringstream is(text);
  std::string line;
  bool have_head = false;
  while (std::getline(is, line)) {
    std::string s = strip_comment(line);
    if (s.empty()) continue;
    if (!have_head) {
      if (s != "map:") throw validation_error("code file must begin with 'map:'");
      have_head = true;
      continue;
    }
    auto arrow = s.find("->");
    if (arrow == std::string::npos) throw validation_error("bad map line: '" + s + "'");
    auto from = split_ws(s.substr(0, arrow));
    auto to = split_ws(s.substr(arrow + 2));
    if (from.size() != 1 || to.size() != 1) throw validation_error("bad map line: '" + s + "'");
    int x = domain.symbol_index(from[0]);
    int y = codomain.symbol_index(to[0]);
    if (x < 0) throw validation_error("unknown domain symbol '" + from[0] + "'");
    if (y < 0) throw validation_error("unknown codomain symbol '" + to[0] + "'");
    if (c.map[x] >= 0) throw validation_error("symbol '" + from[0] + "' mapped twice");
    c.map[x] = y;
  }
  if (!have_head) throw validation_error("code file has no 'map:' line");
  for (int i = 0; i < domain.size(); ++i)
    if (c.map[i] < 0)
      throw validation_error("symbol '" + domain.symbols[i] + "' has no image");
  return c;
}

inline std::string print_code(const FactorCode& c) {
  std::ostringstream os;
  os << "map:\n";
  for (int i = 0; i < c.domain.size(); ++i)
    os << c.domain.symbols[i] << " -> " << c.codomain.symbols[c.map[i]] << "\n";
  return os.str();
}

// --- preimage counting -----------------------------------------------------------

/// Family of fiber-restricted transfer matrices: the count of preimages of
// y_0..y_{n-1} is the total mass after threading a ones-vector through the
// adjacency of X restricted to consecutive fibers. Counts are exact integers.
struct TransferFamily {
  const FactorCode* code;
  std::vector<std::vector<int>> fibers;  // per codomain symbol

  explicit TransferFamily(const FactorCode& c) : code(&c) {
    fibers.resize(c.codomain.size());
    for (int y = 0; y < c.codomain.size(); ++y) fibers[y] = c.fiber(y);
  }

  BigInt count(const Word& y) const {
    if (y.empty()) throw validation_error("empty word");
    if (!word_allowed(code->codomain, y)) return 0;
    std::vector<BigInt> v(code->domain.size(), 0);
    for (int s : fibers[y[0]]) v[s] = 1;
    for (size_t t = 1; t < y.size(); ++t) {
      std::vector<BigInt> w(code->domain.size(), 0);
      for (int s2 : fibers[y[t]]) {
        BigInt acc = 0;
        for (int s1 : fibers[y[t - 1]])
          if (code->domain.edge(s1, s2)) acc += v[s1];
        w[s2] = acc;
      }
      v.swap(w);
    }
    BigInt total = 0;
    for (int s : fibers[y.back()]) total += v[s];
    return total;
  }

  // log-counts of every prefix y_0..y_{j-1}, j = 1..n, in scaled doubles
  // (exact enough for Monte-Carlo work; overflow-free). Returns false if some
  // prefix has no preimage.
  bool log_prefix_counts(const Word& y, std::vector<double>& out) const {
    out.assign(y.size(), 0.0);
    if (!word_allowed(code->codomain, y)) return false;
    std::vector<double> v(code->domain.size(), 0.0);
    double logscale = 0.0;
    double mass = 0.0;
    for (int s : fibers[y[0]]) {
      v[s] = 1.0;
      mass += 1.0;
    }
    if (mass == 0.0) return false;
    out[0] = std::log(mass);
    for (size_t t = 1; t < y.size(); ++t) {
      std::vector<double> w(code->domain.size(), 0.0);
      double total = 0.0;
      for (int s2 : fibers[y[t]]) {
        double acc = 0.0;
        for (int s1 : fibers[y[t - 1]])
          if (code->domain.edge(s1, s2)) acc += v[s1];
        w[s2] = acc;
        total += acc;
      }
      if (total <= 0.0) return false;
      logscale += std::log(total);
      for (int s2 : fibers[y[t]]) w[s2] /= total;
      out[t] = logscale;
      v.swap(w);
    }
    return true;
  }
};

inline BigInt count_preimages(const FactorCode& code, const Word& y) {
  if (!word_allowed(code.codomain, y))
    throw validation_error("word is not allowed in the image system");
  return TransferFamily(code).count(y);
}

// --- clump analysis ----------------------------------------------------------------

struct ClumpLevel {
  int k = 0;
  BigInt min_count = 0;
  std::vector<std::pair<Word, Word>> singletons;  // (Y k-block, its unique X preimage)
  std::vector<Word> uncovered;                    // Y k-blocks with no preimage
};

struct ClumpReport {
  int k_max = 0;
  std::vector<ClumpLevel> levels;
  std::optional<std::pair<int, Word>> first_singleton;  // smallest k with a singleton
};

// Recodes both sides to k-blocks for k = 1..k_max and tabulates fiber sizes
// of the recoded 1-block map; singleton fibers are the clumps of interest.
inline ClumpReport clump_analysis(const FactorCode& code, int k_max = 8,
                                  uint64_t cap = 1000000) {
  if (k_max < 1) throw validation_error("k_max must be >= 1");
  ClumpReport report;
  report.k_max = k_max;
  for (int k = 1; k <= k_max; ++k) {
    auto xblocks = enumerate_words(code.domain, k, cap);
    auto yblocks = enumerate_words(code.codomain, k, cap);
    std::map<Word, int> ycount;
    std::map<Word, Word> ywitness;
    for (auto& y : yblocks) ycount[y] = 0;
    for (auto& x : xblocks) {
      Word y = code.apply(x);
      auto it = ycount.find(y);
      if (it == ycount.end())
        throw validation_error("image of an allowed block is not allowed; not a factor code");
      if (++it->second == 1) ywitness[y] = x;
    }
    ClumpLevel level;
    level.k = k;
    bool first = true;
    for (auto& [y, c] : ycount) {
      if (c == 0) {
        level.uncovered.push_back(y);
        continue;
      }
      if (first || BigInt(c) < level.min_count) level.min_count = c;
      first = false;
      if (c == 1) level.singletons.push_back({y, ywitness[y]});
    }
    if (!level.singletons.empty() && !report.first_singleton)
      report.first_singleton = {k, level.singletons.front().first};
    report.levels.push_back(std::move(level));
  }
  return report;
}

// --- the fiber-size bound ------------------------------------------------------------

struct BoundReport {
  int value = 0;
  std::vector<std::pair<std::string, int>> charged_fibers;  // (Y symbol, fiber size)
};

// min over nu-charged codomain symbols of the symbol fiber size; bounds the
// number of ergodic relatively maximal lifts.
inline BoundReport bound_N(const FactorCode& code, const std::vector<int>& charged) {
  if (charged.empty()) throw validation_error("no charged symbols");
  BoundReport r;
  r.value = -1;
  for (int y : charged) {
    if (y < 0 || y >= code.codomain.size()) throw validation_error("charged symbol out of range");
    int f = static_cast<int>(code.fiber(y).size());
    r.charged_fibers.push_back({code.codomain.symbols[y], f});
    if (r.value < 0 || f < r.value) r.value = f;
  }
  return r;
}

inline std::vector<int> charged_symbols(const MarkovMeasure& nu) {
  std::vector<int> out;
  for (int i = 0; i < nu.size(); ++i)
    if (nu.pi[i] > 0) out.push_back(i);
  return out;
}

inline std::vector<int> charged_symbols(const PeriodicMeasure& nu) {
  std::set<int> s(nu.orbit.block.begin(), nu.orbit.block.end());
  return std::vector<int>(s.begin(), s.end());
}

// --- pushforward block distributions ---------------------------------------------------

template <class T>
std::map<Word, T> pushforward_of(const std::map<Word, T>& xdist, const FactorCode& code) {
  std::map<Word, T> out;
  for (auto& [w, p] : xdist) out[code.apply(w)] += p;
  return out;
}

inline std::map<Word, double> pushforward_blocks(const MarkovMeasure& mu, const FactorCode& code,
                                                 int n, uint64_t cap = 1000000) {
  return pushforward_of(block_distribution(mu, n, cap), code);
}

inline std::map<Word, Rat> pushforward_blocks_exact(const MarkovMeasure& mu,
                                                    const FactorCode& code, int n,
                                                    uint64_t cap = 1000000) {
  return pushforward_of(block_distribution_exact(mu, n, cap), code);
}

// --- image subshift check ----------------------------------------------------------------

struct ImageCheck {
  bool ok = true;
  int n_max = 0;
  std::vector<Word> missing;  // allowed Y-words with no preimage
};

// Verifies up to length n_max that the code is onto: every allowed codomain
// word must have at least one preimage. (Edge-consistency of images is already
// enforced by validate_code.)
inline ImageCheck image_subshift_check(const FactorCode& code, int n_max = 8,
                                       uint64_t cap = 1000000) {
  ImageCheck r;
  r.n_max = n_max;
  TransferFamily tf(code);
  for (int n = 1; n <= n_max; ++n)
    for (auto& y : enumerate_words(code.codomain, n, cap))
      if (tf.count(y) == 0) {
        r.ok = false;
        r.missing.push_back(y);
      }
  return r;
}

// --- samplers over the base system ------------------------------------------------------

// Source of Y-windows for Monte-Carlo estimates: a Markov measure on Y, a
// periodic orbit in Y, or the pushforward of a Markov measure on X (used when
// nu itself is not Markov but is exhibited as an image).
struct NuSampler {
  enum class Kind { markov, periodic, pushforward };
  Kind kind = Kind::markov;
  MarkovMeasure markov;     // kind markov: measure on Y
  PeriodicMeasure periodic; // kind periodic
  MarkovMeasure upstream;   // kind pushforward: measure on X
  FactorCode code;          // kind pushforward

  Word sample(Rng& rng, int n) const {
    if (kind == Kind::periodic) {
      const int p = periodic.orbit.period();
      int phase = static_cast<int>(rng.uniform() * p);
      if (phase >= p) phase = p - 1;
      Word w(n);
      for (int i = 0; i < n; ++i) w[i] = periodic.orbit.block[(phase + i) % p];
      return w;
    }
    const MarkovMeasure& m = kind == Kind::markov ? markov : upstream;
    Word w(n);
    std::vector<double> row(m.size());
    w[0] = rng.categorical(m.pi);
    for (int t = 1; t < n; ++t) {
      for (int j = 0; j < m.size(); ++j) row[j] = m.P(w[t - 1], j);
      w[t] = rng.categorical(row);
    }
    if (kind == Kind::pushforward)
      for (int t = 0; t < n; ++t) w[t] = code.map[w[t]];
    return w;
  }

  std::vector<int> charged() const {
    switch (kind) {
      case Kind::markov: return charged_symbols(markov);
      case Kind::periodic: return charged_symbols(periodic);
      case Kind::pushforward: {
        std::set<int> s;
        for (int i = 0; i < upstream.size(); ++i)
          if (upstream.pi[i] > 0) s.insert(code.map[i]);
        return std::vector<int>(s.begin(), s.end());
      }
    }
    return {};
  }
};

inline NuSampler nu_from_markov(const MarkovMeasure& nu) {
  NuSampler s;
  s.kind = NuSampler::Kind::markov;
  s.markov = nu;
  return s;
}

inline NuSampler nu_from_periodic(const PeriodicMeasure& nu) {
  NuSampler s;
  s.kind = NuSampler::Kind::periodic;
  s.periodic = nu;
  return s;
}

inline NuSampler nu_from_pushforward(const MarkovMeasure& mu, const FactorCode& code) {
  NuSampler s;
  s.kind = NuSampler::Kind::pushforward;
  s.upstream = mu;
  s.code = code;
  return s;
}

// --- periodic fiber graph -----------------------------------------------------------------

struct PeriodicFiberGraph {
  Sft graph;                              // phase-expanded fiber presentation
  std::vector<std::pair<int, int>> label; // vertex -> (X symbol, phase)
};

// Vertices are (X symbol, phase) pairs with the symbol lying over the orbit's
// phase; one edge per sigma-step, so component growth rates are already
// per-step.
inline PeriodicFiberGraph periodic_fiber_graph(const FactorCode& code,
                                               const PeriodicOrbit& orbit) {
  PeriodicFiberGraph g;
  const int p = orbit.period();
  for (int t = 0; t < p; ++t)
    for (int s = 0; s < code.domain.size(); ++s)
      if (code.map[s] == orbit.block[t]) g.label.push_back({s, t});
  const int m = static_cast<int>(g.label.size());
  if (m == 0) throw validation_error("orbit has no fiber");
  g.graph.symbols.reserve(m);
  for (auto& [s, t] : g.label)
    g.graph.symbols.push_back(code.domain.symbols[s] + "@" + std::to_string(t));
  g.graph.adj.assign(m, std::vector<uint8_t>(m, 0));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      auto [sa, ta] = g.label[a];
      auto [sb, tb] = g.label[b];
      g.graph.adj[a][b] = (tb == (ta + 1) % p && code.domain.edge(sa, sb)) ? 1 : 0;
    }
  return g;
}

// Per-sigma-step topological growth rate of the fiber over a periodic orbit:
// the max of log(Perron root) over nontrivial components of the phase graph.
inline double periodic_fiber_growth(const FactorCode& code, const PeriodicOrbit& orbit) {
  auto g = periodic_fiber_graph(code, orbit);
  double best = -1.0;
  bool found = false;
  for (auto& comp : scc(g.graph)) {
    if (comp.trivial) continue;
    const int m = static_cast<int>(comp.vertices.size());
    Mat<double> sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        sub(i, j) = g.graph.edge(comp.vertices[i], comp.vertices[j]) ? 1.0 : 0.0;
    double lam = perron(sub).lambda;
    best = found ? std::max(best, std::log(lam)) : std::log(lam);
    found = true;
  }
  if (!found) throw validation_error("fiber over the orbit contains no cycle");
  return best;
}

// --- relative entropy over nu (Monte-Carlo) -----------------------------------------------

struct RelPressureReport {
  int n = 0, n_half = 0;
  uint64_t trials = 0, seed = 0;
  double finite_n_mean = 0.0, finite_n_se = 0.0;   // mean of (1/n) log N_n
  double refined_mean = 0.0, refined_se = 0.0;     // second-half increment average
  std::vector<double> increment_means;             // E[log N_j - log N_{j-1}]
  std::optional<double> exact;                     // periodic nu only
};

// Estimates integral of lim (1/n) log N_n(y) d nu by sampling windows. The
// finite-n average carries an O(1/n) boundary bias, so the headline figure is
// the telescoped second-half estimator (log N_n - log N_{n/2})/(n - n/2),
// whose boundary effects cancel to geometric order. For a periodic nu the
// limit is computed exactly from the phase graph instead.
inline RelPressureReport relative_entropy_over_nu(const FactorCode& code,
                                                  const NuSampler& sampler, int n,
                                                  uint64_t trials, uint64_t seed) {
  if (n < 2) throw validation_error("window length must be >= 2");
  RelPressureReport r;
  r.n = n;
  r.n_half = n / 2;
  r.seed = seed;
  if (sampler.kind == NuSampler::Kind::periodic) {
    r.exact = periodic_fiber_growth(code, sampler.periodic.orbit);
    return r;
  }
  if (trials == 0) throw validation_error("trials must be positive");
  r.trials = trials;
  TransferFamily tf(code);
  std::vector<double> prefix;
  double s1 = 0, s2 = 0, t1 = 0, t2 = 0;
  std::vector<double> inc_sum(n, 0.0);
  for (uint64_t k = 0; k < trials; ++k) {
    Rng rng(derive_seed(seed, k));
    Word y = sampler.sample(rng, n);
    if (!tf.log_prefix_counts(y, prefix))
      throw validation_error("sampled window '" + format_word(code.codomain, y) +
                             "' has no preimage; the code is not onto");
    double fin = prefix[n - 1] / n;
    double ref = (prefix[n - 1] - prefix[r.n_half - 1]) / (n - r.n_half);
    s1 += fin;
    s2 += fin * fin;
    t1 += ref;
    t2 += ref * ref;
    inc_sum[0] += prefix[0];
    for (int j = 1; j < n; ++j) inc_sum[j] += prefix[j] - prefix[j - 1];
  }
  const double T = static_cast<double>(trials);
  r.finite_n_mean = s1 / T;
  r.refined_mean = t1 / T;
  r.finite_n_se = trials > 1 ? std::sqrt(std::max(0.0, (s2 / T - r.finite_n_mean * r.finite_n_mean) / (T - 1))) : 0.0;
  r.refined_se = trials > 1 ? std::sqrt(std::max(0.0, (t2 / T - r.refined_mean * r.refined_mean) / (T - 1))) : 0.0;
  r.increment_means.resize(n);
  for (int j = 0; j < n; ++j) r.increment_means[j] = inc_sum[j] / T;
  return r;
}

}  // namespace relent
