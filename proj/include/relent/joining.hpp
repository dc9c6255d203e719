#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "relent/common.hpp"
#include "relent/factor_map.hpp"
#include "relent/measure.hpp"
#include "relent/rng.hpp"
#include "relent/sft.hpp"

namespace relent {

// --- conditional distribution of a lift over an image word -----------------------

// Forward-backward tables for mu conditioned on an image word. States at time
// t are the fiber of y[t]; alpha/beta are rescaled per step, gamma holds the
// one-point posteriors.
struct Posterior {
  const MarkovMeasure* mu = nullptr;
  Word y;
  std::vector<std::vector<int>> states;
  std::vector<std::vector<double>> alpha, beta, gamma;
  double log_prob = 0.0;  // log pushforward probability of y

  // Draws a lift path: x_0 from gamma_0, then forward with backward weights.
  Word sample(Rng& rng) const {
    const size_t n = states.size();
    Word x(n);
    int cur = states[0][rng.categorical(gamma[0])];
    x[0] = cur;
    for (size_t t = 0; t + 1 < n; ++t) {
      std::vector<double> w(states[t + 1].size());
      for (size_t j = 0; j < w.size(); ++j)
        w[j] = mu->P(cur, states[t + 1][j]) * beta[t + 1][j];
      cur = states[t + 1][rng.categorical(w)];
      x[t + 1] = cur;
    }
    return x;
  }
};

inline Posterior posterior(const MarkovMeasure& mu, const FactorCode& code, const Word& y) {
  if (y.empty()) throw validation_error("image word must be nonempty");
  if (mu.sft.size() != code.domain.size())
    throw validation_error("measure must live on the domain");
  Posterior post;
  post.mu = &mu;
  post.y = y;
  const size_t n = y.size();
  post.states.resize(n);
  for (size_t t = 0; t < n; ++t) {
    if (y[t] < 0 || y[t] >= code.codomain.size())
      throw validation_error("image word uses an unknown symbol");
    post.states[t] = code.fiber(y[t]);
    if (post.states[t].empty())
      throw validation_error("image symbol " + code.codomain.symbols[y[t]] + " has empty fiber");
  }
  post.alpha.resize(n);
  post.beta.resize(n);
  post.gamma.resize(n);

  post.alpha[0].resize(post.states[0].size());
  double scale = 0.0;
  for (size_t j = 0; j < post.states[0].size(); ++j) {
    post.alpha[0][j] = mu.pi[post.states[0][j]];
    scale += post.alpha[0][j];
  }
  if (scale <= 0) throw validation_error("image word has no positive-probability lift");
  for (auto& v : post.alpha[0]) v /= scale;
  post.log_prob = std::log(scale);
  for (size_t t = 1; t < n; ++t) {
    post.alpha[t].assign(post.states[t].size(), 0.0);
    scale = 0.0;
    for (size_t j = 0; j < post.states[t].size(); ++j) {
      double s = 0.0;
      for (size_t i = 0; i < post.states[t - 1].size(); ++i)
        s += post.alpha[t - 1][i] * mu.P(post.states[t - 1][i], post.states[t][j]);
      post.alpha[t][j] = s;
      scale += s;
    }
    if (scale <= 0) throw validation_error("image word has no positive-probability lift");
    for (auto& v : post.alpha[t]) v /= scale;
    post.log_prob += std::log(scale);
  }

  post.beta[n - 1].assign(post.states[n - 1].size(), 1.0);
  for (size_t t = n - 1; t-- > 0;) {
    post.beta[t].assign(post.states[t].size(), 0.0);
    double mx = 0.0;
    for (size_t i = 0; i < post.states[t].size(); ++i) {
      double s = 0.0;
      for (size_t j = 0; j < post.states[t + 1].size(); ++j)
        s += mu.P(post.states[t][i], post.states[t + 1][j]) * post.beta[t + 1][j];
      post.beta[t][i] = s;
      mx = std::max(mx, s);
    }
    if (mx <= 0) throw validation_error("image word has no positive-probability lift");
    for (auto& v : post.beta[t]) v /= mx;
  }

  for (size_t t = 0; t < n; ++t) {
    post.gamma[t].resize(post.states[t].size());
    double tot = 0.0;
    for (size_t j = 0; j < post.states[t].size(); ++j) {
      post.gamma[t][j] = post.alpha[t][j] * post.beta[t][j];
      tot += post.gamma[t][j];
    }
    for (auto& v : post.gamma[t]) v /= tot;
  }
  return post;
}

// Exact one-point posteriors and image-word probability, no rescaling.
struct PosteriorExact {
  std::vector<std::vector<int>> states;
  std::vector<std::vector<Rat>> gamma;
  Rat prob;
};

inline PosteriorExact posterior_exact(const MarkovMeasure& mu, const FactorCode& code,
                                      const Word& y) {
  if (!mu.exact) throw validation_error("exact posterior needs an exact measure");
  if (y.empty()) throw validation_error("image word must be nonempty");
  PosteriorExact post;
  const size_t n = y.size();
  post.states.resize(n);
  for (size_t t = 0; t < n; ++t) post.states[t] = code.fiber(y[t]);
  std::vector<std::vector<Rat>> alpha(n), beta(n);
  alpha[0].resize(post.states[0].size());
  for (size_t j = 0; j < post.states[0].size(); ++j) alpha[0][j] = mu.piq[post.states[0][j]];
  for (size_t t = 1; t < n; ++t) {
    alpha[t].assign(post.states[t].size(), Rat(0));
    for (size_t j = 0; j < post.states[t].size(); ++j)
      for (size_t i = 0; i < post.states[t - 1].size(); ++i)
        alpha[t][j] += alpha[t - 1][i] * mu.Pq(post.states[t - 1][i], post.states[t][j]);
  }
  beta[n - 1].assign(post.states[n - 1].size(), Rat(1));
  for (size_t t = n - 1; t-- > 0;) {
    beta[t].assign(post.states[t].size(), Rat(0));
    for (size_t i = 0; i < post.states[t].size(); ++i)
      for (size_t j = 0; j < post.states[t + 1].size(); ++j)
        beta[t][i] += mu.Pq(post.states[t][i], post.states[t + 1][j]) * beta[t + 1][j];
  }
  post.prob = 0;
  for (size_t j = 0; j < post.states[n - 1].size(); ++j) post.prob += alpha[n - 1][j];
  post.gamma.resize(n);
  for (size_t t = 0; t < n; ++t) {
    post.gamma[t].resize(post.states[t].size());
    for (size_t j = 0; j < post.states[t].size(); ++j) {
      Rat g = alpha[t][j] * beta[t][j];
      post.gamma[t][j] = post.prob == 0 ? Rat(0) : Rat(g / post.prob);
    }
  }
  return post;
}

// --- relatively independent joining --------------------------------------------

struct OrthogonalityRow {
  int n = 0;
  double center = 0.0;     // coincidence frequency at the middle coordinate
  double center_se = 0.0;
  double anywhere = 0.0;   // mean coincidence fraction over all coordinates
};

struct OrthogonalityReport {
  uint64_t seed = 0;
  int trials = 0;
  std::vector<OrthogonalityRow> rows;
};

namespace detail {

inline void check_same_pushforward(const FactorCode& code, const MarkovMeasure& mu1,
                                   const MarkovMeasure& mu2, int n) {
  if (mu1.exact && mu2.exact) {
    if (pushforward_blocks_exact(mu1, code, n) != pushforward_blocks_exact(mu2, code, n))
      throw validation_error("the two lifts have different pushforwards at block length " +
                             std::to_string(n));
    return;
  }
  auto a = pushforward_blocks(mu1, code, n);
  auto b = pushforward_blocks(mu2, code, n);
  for (auto& [w, p] : a) {
    auto it = b.find(w);
    double q = it == b.end() ? 0.0 : it->second;
    if (std::fabs(p - q) > 1e-12)
      throw validation_error("the two lifts have different pushforwards at block length " +
                             std::to_string(n));
  }
}

}  // namespace detail

// Samples the relatively independent joining of two lifts of a common image
// measure: y from the pushforward, then conditionally independent lift paths.
// Coincidence frequencies quantify relative orthogonality.
inline OrthogonalityReport orthogonality_experiment(const FactorCode& code,
                                                    const MarkovMeasure& mu1,
                                                    const MarkovMeasure& mu2,
                                                    const std::vector<int>& ns, int trials,
                                                    uint64_t seed,
                                                    bool skip_pushforward_check = false) {
  if (trials < 1) throw validation_error("trials must be >= 1");
  for (int n : ns)
    if (n < 1) throw validation_error("window lengths must be >= 1");
  if (!skip_pushforward_check) detail::check_same_pushforward(code, mu1, mu2, 8);

  auto ysrc = nu_from_pushforward(mu1, code);
  OrthogonalityReport rep;
  rep.seed = seed;
  rep.trials = trials;
  for (size_t bi = 0; bi < ns.size(); ++bi) {
    const int n = ns[bi];
    const int c = n / 2;
    long hits = 0;
    double frac = 0.0;
    for (int k = 0; k < trials; ++k) {
      Rng rng(derive_seed(seed, bi * static_cast<size_t>(trials) + k));
      Word y = ysrc.sample(rng, n);
      Word x1 = posterior(mu1, code, y).sample(rng);
      Word x2 = posterior(mu2, code, y).sample(rng);
      if (x1[c] == x2[c]) ++hits;
      int same = 0;
      for (int t = 0; t < n; ++t)
        if (x1[t] == x2[t]) ++same;
      frac += static_cast<double>(same) / n;
    }
    OrthogonalityRow row;
    row.n = n;
    row.center = static_cast<double>(hits) / trials;
    row.center_se = std::sqrt(row.center * (1.0 - row.center) / trials);
    row.anywhere = frac / trials;
    rep.rows.push_back(row);
  }
  return rep;
}

// --- streaming n-gram entropy ------------------------------------------------------

// Conditional plug-in entropy H(next | previous `order`) from windows counted
// inside segments only. Counts are kept per batch so a bootstrap over batches
// yields an approximate confidence interval.
struct NgramCounter {
  int alphabet = 0;
  int order = 0;
  int batches = 16;
  std::vector<std::map<uint64_t, long>> joint;  // per batch, (order+1)-gram counts
  long windows = 0;

  NgramCounter(int alphabet_, int order_, int batches_ = 16)
      : alphabet(alphabet_), order(order_), batches(batches_), joint(batches_) {
    if (alphabet < 2) throw validation_error("alphabet must have >= 2 symbols");
    if (order < 0) throw validation_error("order must be >= 0");
    if (batches < 1) throw validation_error("batches must be >= 1");
    if ((order + 1) * std::log(static_cast<double>(alphabet)) > 62 * std::log(2.0))
      throw cap_error("n-gram keys would overflow; lower the order");
  }

  void add_segment(const Word& w, int batch) {
    auto& m = joint[batch % batches];
    if (static_cast<int>(w.size()) <= order) return;
    for (size_t t = 0; t + order < w.size(); ++t) {
      uint64_t key = 0;
      for (int i = 0; i <= order; ++i) {
        int s = w[t + i];
        if (s < 0 || s >= alphabet) throw validation_error("segment symbol out of range");
        key = key * alphabet + static_cast<uint64_t>(s);
      }
      ++m[key];
      ++windows;
    }
  }
};

struct EntropyEstimate {
  double h = 0.0;
  double lo = 0.0, hi = 0.0;  // bootstrap percentile interval over batches
  long windows = 0;
};

namespace detail {

inline double plugin_conditional_entropy(const std::map<uint64_t, long>& joint, int alphabet) {
  long total = 0;
  std::map<uint64_t, long> ctx;
  for (auto& [k, c] : joint) {
    total += c;
    ctx[k / alphabet] += c;
  }
  if (total == 0) return 0.0;
  double s = 0.0;
  for (auto& [k, c] : joint) s -= c * std::log(static_cast<double>(c));
  for (auto& [k, c] : ctx) s += c * std::log(static_cast<double>(c));
  return s / total;
}

}  // namespace detail

inline EntropyEstimate estimate_entropy(const NgramCounter& counter, int boot = 1000,
                                        uint64_t seed = 0) {
  if (counter.windows < 1000)
    throw validation_error("too few windows for an entropy estimate (< 1000)");
  std::map<uint64_t, long> total;
  int live = 0;
  for (auto& m : counter.joint) {
    if (!m.empty()) ++live;
    for (auto& [k, c] : m) total[k] += c;
  }
  EntropyEstimate est;
  est.windows = counter.windows;
  est.h = detail::plugin_conditional_entropy(total, counter.alphabet);
  if (live < 2 || boot < 1) {
    est.lo = est.hi = est.h;
    return est;
  }
  Rng rng(derive_seed(seed, 0xB007));
  std::vector<double> hs(boot);
  const int B = counter.batches;
  for (int b = 0; b < boot; ++b) {
    std::map<uint64_t, long> acc;
    for (int i = 0; i < B; ++i) {
      const auto& m = counter.joint[static_cast<int>(rng.uniform() * B) % B];
      for (auto& [k, c] : m) acc[k] += c;
    }
    hs[b] = detail::plugin_conditional_entropy(acc, counter.alphabet);
  }
  std::sort(hs.begin(), hs.end());
  est.lo = hs[static_cast<size_t>(0.025 * (boot - 1))];
  est.hi = hs[static_cast<size_t>(0.975 * (boot - 1))];
  return est;
}

// Per-order sequences from one top-order count table: the conditional entropy
// H(x_0 | x_1..x_n) and the block average H_{n+1}/(n+1) for n = 0..order.
struct EntropyRow {
  int n = 0;
  double cond = 0.0, cond_lo = 0.0, cond_hi = 0.0;
  double block_avg = 0.0, block_lo = 0.0, block_hi = 0.0;
};

namespace detail {

inline uint64_t upow(uint64_t base, int e) {
  uint64_t r = 1;
  while (e-- > 0) r *= base;
  return r;
}

inline void sequence_rows(const std::map<uint64_t, long>& top, int alphabet, int order,
                          std::vector<double>& cond, std::vector<double>& block) {
  cond.assign(order + 1, 0.0);
  block.assign(order + 1, 0.0);
  for (int n = 0; n <= order; ++n) {
    uint64_t div = upow(alphabet, order - n);
    uint64_t mod = upow(alphabet, n);
    std::map<uint64_t, long> joint;
    for (auto& [k, c] : top) joint[k / div] += c;
    long total = 0;
    double s_joint = 0.0, s_ctx = 0.0;
    std::map<uint64_t, long> ctx;
    for (auto& [k, c] : joint) {
      total += c;
      s_joint -= c * std::log(static_cast<double>(c));
      ctx[k % mod] += c;
    }
    for (auto& [k, c] : ctx) s_ctx -= c * std::log(static_cast<double>(c));
    cond[n] = (s_joint - s_ctx) / total;
    block[n] = (s_joint / total + std::log(static_cast<double>(total))) / (n + 1);
  }
}

}  // namespace detail

inline std::vector<EntropyRow> estimate_entropy_sequence(const NgramCounter& counter,
                                                         int boot = 400, uint64_t seed = 0) {
  if (counter.windows < 1000)
    throw validation_error("too few windows for an entropy estimate (< 1000)");
  std::map<uint64_t, long> total;
  int live = 0;
  for (auto& m : counter.joint) {
    if (!m.empty()) ++live;
    for (auto& [k, c] : m) total[k] += c;
  }
  std::vector<double> cond, block;
  detail::sequence_rows(total, counter.alphabet, counter.order, cond, block);
  std::vector<EntropyRow> rows(counter.order + 1);
  for (int n = 0; n <= counter.order; ++n) {
    rows[n].n = n;
    rows[n].cond = rows[n].cond_lo = rows[n].cond_hi = cond[n];
    rows[n].block_avg = rows[n].block_lo = rows[n].block_hi = block[n];
  }
  if (live < 2 || boot < 1) return rows;
  Rng rng(derive_seed(seed, 0xB0075EC));
  const int B = counter.batches;
  std::vector<std::vector<double>> cond_draws(counter.order + 1), block_draws(counter.order + 1);
  for (int b = 0; b < boot; ++b) {
    std::map<uint64_t, long> acc;
    for (int i = 0; i < B; ++i) {
      const auto& m = counter.joint[static_cast<int>(rng.uniform() * B) % B];
      for (auto& [k, c] : m) acc[k] += c;
    }
    std::vector<double> c2, b2;
    detail::sequence_rows(acc, counter.alphabet, counter.order, c2, b2);
    for (int n = 0; n <= counter.order; ++n) {
      cond_draws[n].push_back(c2[n]);
      block_draws[n].push_back(b2[n]);
    }
  }
  for (int n = 0; n <= counter.order; ++n) {
    auto& cd = cond_draws[n];
    auto& bd = block_draws[n];
    std::sort(cd.begin(), cd.end());
    std::sort(bd.begin(), bd.end());
    rows[n].cond_lo = cd[static_cast<size_t>(0.025 * (boot - 1))];
    rows[n].cond_hi = cd[static_cast<size_t>(0.975 * (boot - 1))];
    rows[n].block_lo = bd[static_cast<size_t>(0.025 * (boot - 1))];
    rows[n].block_hi = bd[static_cast<size_t>(0.975 * (boot - 1))];
  }
  return rows;
}

// Switched combination of two lift words sharing an image: the output copies
// u or v, the source chosen by the coin at the most recent coincidence
// position (r_pre before the first coincidence). Coins take values 1 or 2.
inline Word interleave(const FactorCode& code, const Word& u, const Word& v,
                       const std::vector<int>& r, int r_pre) {
  if (u.size() != v.size() || u.empty()) throw validation_error("lift words must match in length");
  if (r.size() != u.size()) throw validation_error("coin word must match the window length");
  if (r_pre != 1 && r_pre != 2) throw validation_error("coins must be 1 or 2");
  for (int c : r)
    if (c != 1 && c != 2) throw validation_error("coins must be 1 or 2");
  for (size_t t = 0; t < u.size(); ++t)
    if (code.map[u[t]] != code.map[v[t]])
      throw validation_error("lift words have different images at position " + std::to_string(t));
  if (!word_allowed(code.domain, u) || !word_allowed(code.domain, v))
    throw validation_error("lift words must be allowed in the domain");
  Word w(u.size());
  int src = r_pre;
  for (size_t k = 0; k < u.size(); ++k) {
    w[k] = src == 1 ? u[k] : v[k];
    if (u[k] == v[k]) src = r[k];  // coin indexed by the coincidence position
  }
  return w;
}

// --- switched interleaving of two deterministic lifts -----------------------------

// A symbol map lifting the image: s -> map[s] with code(map[s]) = s, edges
// preserved along every charged transition of nu.
inline void validate_deterministic_lift(const FactorCode& code, const MarkovMeasure& nu,
                                        const std::vector<int>& lift) {
  if (static_cast<int>(lift.size()) != code.codomain.size())
    throw validation_error("lift map must cover the image alphabet");
  for (int s = 0; s < code.codomain.size(); ++s) {
    if (nu.pi[s] <= 0) continue;
    if (lift[s] < 0 || lift[s] >= code.domain.size())
      throw validation_error("lift of " + code.codomain.symbols[s] + " out of range");
    if (code.map[lift[s]] != s)
      throw validation_error("lift of " + code.codomain.symbols[s] + " is not in its fiber");
  }
  for (int s = 0; s < code.codomain.size(); ++s) {
    if (nu.pi[s] <= 0) continue;
    for (int t = 0; t < code.codomain.size(); ++t) {
      if (nu.pi[t] <= 0 || nu.P(s, t) <= 0) continue;
      if (!code.domain.edge(lift[s], lift[t]))
        throw validation_error("lift breaks the edge " + code.codomain.symbols[s] + " -> " +
                               code.codomain.symbols[t]);
    }
  }
}

// The Markov measure carried by a deterministic lift: transitions copy nu on
// the lifted symbols; symbols off the lift image get uniform rows and no mass.
inline MarkovMeasure deterministic_lift_measure(const FactorCode& code, const MarkovMeasure& nu,
                                                const std::vector<int>& lift) {
  if (!nu.exact) throw validation_error("deterministic lift needs an exact base measure");
  validate_deterministic_lift(code, nu, lift);
  const int n = code.domain.size();
  Mat<Rat> p(n, n);
  std::vector<char> on_image(n, 0);
  for (int s = 0; s < code.codomain.size(); ++s)
    if (nu.pi[s] > 0) on_image[lift[s]] = 1;
  for (int s = 0; s < code.codomain.size(); ++s) {
    if (nu.pi[s] <= 0) continue;
    for (int t = 0; t < code.codomain.size(); ++t)
      if (nu.pi[t] > 0 && nu.Pq(s, t) != 0) p(lift[s], lift[t]) = nu.Pq(s, t);
  }
  for (int i = 0; i < n; ++i) {
    if (on_image[i]) continue;
    std::vector<int> outs;
    for (int j = 0; j < n; ++j)
      if (code.domain.edge(i, j)) outs.push_back(j);
    if (outs.empty()) throw validation_error("domain symbol with no out-edge");
    for (int j : outs) p(i, j) = Rat(1, static_cast<long>(outs.size()));
  }
  return make_markov(code.domain, p);
}

struct InterleaveReport {
  long steps = 0;
  int order = 0;
  int chunk = 0;
  uint64_t seed = 0;
  double h_hat = 0.0;  // empirical conditional entropy of the switched stream
  double lo = 0.0, hi = 0.0;
  double h_nu = 0.0;   // entropy of the image measure
  long switches = 0;   // coincidence epochs where the coin was refreshed
};

// Streams the switched interleaving w of two deterministic lifts u = f1(y),
// v = f2(y): a fair coin chooses u or v, refreshed at every coincidence
// u_t == v_t. The output is a lift of y whose entropy exceeds h(nu) by the
// coin's contribution. Windows are counted inside chunks only.
inline InterleaveReport interleave_stream_experiment(const FactorCode& code,
                                                     const MarkovMeasure& nu,
                                                     const std::vector<int>& lift1,
                                                     const std::vector<int>& lift2,
                                                     long total_steps, uint64_t seed,
                                                     int order = 3, int chunk = 4096) {
  validate_deterministic_lift(code, nu, lift1);
  validate_deterministic_lift(code, nu, lift2);
  if (total_steps < chunk) throw validation_error("stream shorter than one chunk");
  if (chunk <= order) throw validation_error("chunk must exceed the order");

  InterleaveReport rep;
  rep.steps = total_steps;
  rep.order = order;
  rep.chunk = chunk;
  rep.seed = seed;
  rep.h_nu = entropy(nu);

  NgramCounter counter(code.domain.size(), order);
  Rng rng(derive_seed(seed, 0x17EA));

  // stationary start for y, fresh pre-coincidence coin
  std::vector<double> start(nu.pi);
  int y = rng.categorical(start);
  bool use_first = rng.coin();
  Word buf;
  buf.reserve(chunk);
  long emitted = 0;
  int chunk_idx = 0;
  std::vector<double> row(nu.sft.size());
  while (emitted < total_steps) {
    int u = lift1[y], v = lift2[y];
    if (u == v) {
      use_first = rng.coin();
      ++rep.switches;
    }
    buf.push_back(use_first ? u : v);
    ++emitted;
    if (static_cast<int>(buf.size()) == chunk || emitted == total_steps) {
      counter.add_segment(buf, chunk_idx++);
      buf.clear();
    }
    for (int t = 0; t < nu.sft.size(); ++t) row[t] = nu.P(y, t);
    y = rng.categorical(row);
  }
  auto est = estimate_entropy(counter, 1000, seed);
  rep.h_hat = est.h;
  rep.lo = est.lo;
  rep.hi = est.hi;
  return rep;
}

// --- conditional block-entropy diagnostic ---------------------------------------

// Tests whether the time-zero symbol depends on the forward itinerary only
// through its first symbol once an image window is given:
//   gap(n, m) = H(x_0 | x_1, y_1..y_m) - H(x_0 | x_1..x_n, y_1..y_m).
// Exact enumeration over the charged words of the presentation carrying mu;
// to_x projects presentation symbols to domain symbols.
struct RelMarkovReport {
  int n = 0, m = 0;
  std::vector<double> h_seq;  // H(x_0 | x_1..x_k, y_1..y_m), k = 1..n
  double gap = 0.0;
  size_t words = 0;
};

inline RelMarkovReport relative_markov_diagnostic(const MarkovMeasure& mu,
                                                  const std::vector<int>& to_x,
                                                  const FactorCode& code, int n, int m,
                                                  long cap = 1000000) {
  if (n < 1 || n > 16 || m < 0 || m > 16)
    throw validation_error("diagnostic window lengths out of range (n in 1..16, m in 0..16)");
  if (static_cast<int>(to_x.size()) != mu.sft.size())
    throw validation_error("projection must cover the presentation alphabet");
  for (int s : to_x)
    if (s < 0 || s >= code.domain.size())
      throw validation_error("projection hits an unknown domain symbol");

  const int N = std::max(n, m);
  // joint mass of (x_0..x_n, y_1..y_m), exact when mu is
  std::map<Word, Rat> joint_q;
  std::map<Word, double> joint_d;
  long count = 0;
  Word w(N + 1);
  auto emit = [&](double pd, const Rat& pq) {
    if (++count > cap) throw cap_error("diagnostic enumeration exceeds the word cap");
    Word key;
    key.reserve(n + 1 + m);
    for (int i = 0; i <= n; ++i) key.push_back(to_x[w[i]]);
    for (int j = 1; j <= m; ++j) key.push_back(code.map[to_x[w[j]]]);
    if (mu.exact)
      joint_q[key] += pq;
    else
      joint_d[key] += pd;
  };
  auto dfs = [&](auto&& self, int t, double pd, Rat pq) -> void {
    if (t == N) {
      emit(pd, pq);
      return;
    }
    for (int s = 0; s < mu.sft.size(); ++s) {
      double p = mu.P(w[t], s);
      if (p <= 0) continue;
      w[t + 1] = s;
      self(self, t + 1, pd * p, mu.exact ? Rat(pq * mu.Pq(w[t], s)) : Rat(0));
    }
  };
  for (int s = 0; s < mu.sft.size(); ++s) {
    if (mu.pi[s] <= 0) continue;
    w[0] = s;
    dfs(dfs, 0, mu.pi[s], mu.exact ? mu.piq[s] : Rat(0));
  }
  if (mu.exact)
    for (auto& [k, q] : joint_q) joint_d[k] = to_double(q);

  RelMarkovReport rep;
  rep.n = n;
  rep.m = m;
  rep.words = joint_d.size();
  for (int k = 1; k <= n; ++k) {
    // group by (x_1..x_k, y_1..y_m), split by x_0
    std::map<Word, std::map<int, double>> groups;
    for (auto& [key, p] : joint_d) {
      Word g;
      g.reserve(k + m);
      for (int i = 1; i <= k; ++i) g.push_back(key[i]);
      for (int j = 0; j < m; ++j) g.push_back(key[n + 1 + j]);
      groups[g][key[0]] += p;
    }
    double h = 0.0;
    for (auto& [g, dist] : groups) {
      double mass = 0.0;
      for (auto& [x0, p] : dist) mass += p;
      for (auto& [x0, p] : dist)
        if (p > 0) h += p * (std::log(mass) - std::log(p));
    }
    rep.h_seq.push_back(h);
  }
  rep.gap = rep.h_seq.front() - rep.h_seq.back();
  return rep;
}

inline RelMarkovReport relative_markov_diagnostic(const MarkovMeasure& mu, const FactorCode& code,
                                                  int n, int m, long cap = 1000000) {
  if (mu.sft.size() != code.domain.size())
    throw validation_error("measure must live on the domain (or pass a projection)");
  std::vector<int> id(mu.sft.size());
  for (size_t i = 0; i < id.size(); ++i) id[i] = static_cast<int>(i);
  return relative_markov_diagnostic(mu, id, code, n, m, cap);
}

}  // namespace relent
