#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relent/common.hpp"
#include "relent/factor_map.hpp"
#include "relent/measure.hpp"
#include "relent/rng.hpp"
#include "relent/sft.hpp"

namespace relent {

// --- induced system over a singleton clump -------------------------------------

// One return loop of the base system at the clump symbol, together with the
// X-words (bands) lying over it. Loops never visit the clump internally.
struct InducedLoop {
  Word y_loop;              // b c_1 .. c_r b
  Rat prob_q;               // nu_a[loop], exact when nu is
  double prob = 0.0;
  std::vector<Word> bands;  // a B a words over the loop
  int J() const { return static_cast<int>(bands.size()); }
};

struct InducedSystem {
  FactorCode code;
  MarkovMeasure nu;
  int clump = -1;           // Y symbol with singleton fiber
  int clump_preimage = -1;  // the unique X symbol over it
  int L = 0;                // loop length truncation (steps to return)
  bool exact = false;
  Rat retained_q;
  double retained = 0.0;    // total nu_a-mass of retained loops
  Rat nu_clump_q;
  double nu_clump = 0.0;    // nu[clump]
  std::vector<InducedLoop> loops;
};

// Builds the loop/band decomposition of the fiber over a singleton clump.
// Truncation keeps return words of length <= L steps; the retained nu_a-mass
// is reported and must clear `mass_threshold` unless overridden.
inline InducedSystem build_induced(const FactorCode& code, const MarkovMeasure& nu, int clump,
                                   int L = 40, double mass_threshold = 1.0 - 1e-6,
                                   bool allow_low_mass = false) {
  if (clump < 0 || clump >= code.codomain.size())
    throw validation_error("clump symbol out of range");
  auto fib = code.fiber(clump);
  if (fib.size() != 1)
    throw validation_error("symbol " + code.codomain.symbols[clump] + " has fiber size " +
                           std::to_string(fib.size()) + ", not a singleton clump");
  if (nu.sft.size() != code.codomain.size())
    throw validation_error("nu must live on the codomain");
  if (nu.pi[clump] <= 0) throw validation_error("nu gives the clump symbol zero mass");
  if (L < 1) throw validation_error("loop truncation must be >= 1");

  InducedSystem sys;
  sys.code = code;
  sys.nu = nu;
  sys.clump = clump;
  sys.clump_preimage = fib[0];
  sys.L = L;
  sys.exact = nu.exact;
  sys.nu_clump = nu.pi[clump];
  if (nu.exact) sys.nu_clump_q = nu.piq[clump];

  const Sft& Y = code.codomain;
  const Sft& X = code.domain;
  const int a = fib[0];

  // return loops of nu at the clump, lexicographic DFS
  Word path{clump};
  auto dfs = [&](auto&& self, int last, double prob, Rat prob_q) -> void {
    int steps = static_cast<int>(path.size());  // steps taken so far
    if (steps > L) return;
    // close the loop
    if (Y.edge(last, clump)) {
      double p_close = nu.P(last, clump);
      if (p_close > 0) {
        InducedLoop loop;
        loop.y_loop = path;
        loop.y_loop.push_back(clump);
        loop.prob = prob * p_close;
        if (nu.exact) loop.prob_q = prob_q * nu.Pq(last, clump);
        sys.loops.push_back(std::move(loop));
      }
    }
    if (steps == L) return;
    for (int c = 0; c < Y.size(); ++c) {
      if (c == clump || !Y.edge(last, c)) continue;
      double p = nu.P(last, c);
      if (p <= 0) continue;
      path.push_back(c);
      self(self, c, prob * p, nu.exact ? Rat(prob_q * nu.Pq(last, c)) : Rat(0));
      path.pop_back();
    }
  };
  dfs(dfs, clump, 1.0, Rat(1));

  // bands over each loop: X-paths over the loop word, endpoints pinned to a
  for (auto& loop : sys.loops) {
    const Word& y = loop.y_loop;
    Word xw{a};
    auto band_dfs = [&](auto&& self, size_t t) -> void {
      if (t + 1 == y.size()) {
        // the final position is the clump again, already pinned to a
        loop.bands.push_back(xw);
        return;
      }
      for (int s = 0; s < X.size(); ++s) {
        if (code.map[s] != y[t + 1] || !X.edge(xw.back(), s)) continue;
        xw.push_back(s);
        self(self, t + 1);
        xw.pop_back();
      }
    };
    band_dfs(band_dfs, 0);
    if (loop.bands.empty())
      throw validation_error("loop " + format_word(Y, loop.y_loop) +
                             " has no band over it; the code is not onto");
  }

  Rat mass_q(0);
  double mass = 0.0;
  for (auto& loop : sys.loops) {
    mass += loop.prob;
    if (nu.exact) mass_q += loop.prob_q;
  }
  sys.retained = nu.exact ? to_double(mass_q) : mass;
  sys.retained_q = mass_q;
  if (sys.retained < mass_threshold && !allow_low_mass)
    throw validation_error("retained return-word mass " + std::to_string(sys.retained) +
                           " below threshold; raise L or pass the override");
  return sys;
}

// The relatively maximal induced measure: a Bernoulli choice of loop with
// nu_a's weights, equidistributed over the J bands of each loop.
struct InducedBernoulli {
  const InducedSystem* sys;
  // per loop: band weight = prob / J
  std::vector<Rat> band_weight_q;
  std::vector<double> band_weight;
};

inline InducedBernoulli maximal_induced_measure(const InducedSystem& sys) {
  InducedBernoulli b;
  b.sys = &sys;
  for (auto& loop : sys.loops) {
    b.band_weight.push_back(loop.prob / loop.J());
    b.band_weight_q.push_back(sys.exact ? Rat(loop.prob_q / loop.J()) : Rat(0));
  }
  return b;
}

// --- Abramov entropy -----------------------------------------------------------

struct AbramovReport {
  double h_induced = 0.0;  // entropy of the induced Bernoulli, per return
  double h_mu = 0.0;       // nu[clump] * h_induced
  double h_nu = 0.0;
  double h_rel = 0.0;      // h_mu - h_nu
  double retained = 0.0;
  int L = 0;
};

// Ambient entropy of the maximal lift via the return-time normalization
// h(mu) = mu[a] h(induced), with mu[a] = nu[clump] across the fiber.
inline AbramovReport abramov_entropy(const InducedSystem& sys) {
  AbramovReport r;
  r.L = sys.L;
  r.retained = sys.retained;
  double h = 0.0;
  for (auto& loop : sys.loops) {
    double q = sys.exact ? to_double(loop.prob_q) : loop.prob;
    if (q <= 0) continue;
    // J bands, each of weight q/J: -J (q/J) log(q/J)
    h += q * (std::log(loop.J()) - std::log(q));
  }
  r.h_induced = h;
  r.h_mu = sys.nu_clump * h;
  r.h_nu = entropy(sys.nu);
  r.h_rel = r.h_mu - r.h_nu;
  return r;
}

// --- cylinder probabilities under the maximal lift -------------------------------

struct CylinderProbability {
  Rat prob_q;
  double prob = 0.0;
  std::vector<int> loop_indices;  // band segments in order
};

// mu[x_word] for a word that starts and ends at the clump preimage: nu[clump]
// times the product over segments of nu_a[loop]/J.
inline CylinderProbability cylinder_probability(const InducedSystem& sys, const Word& x_word) {
  const int a = sys.clump_preimage;
  if (x_word.size() < 2 || x_word.front() != a || x_word.back() != a)
    throw validation_error("word must start and end at the clump preimage symbol");
  if (!word_allowed(sys.code.domain, x_word)) throw validation_error("word is not allowed");
  std::map<Word, int> band_to_loop;
  for (size_t i = 0; i < sys.loops.size(); ++i)
    for (auto& band : sys.loops[i].bands) band_to_loop[band] = static_cast<int>(i);
  CylinderProbability out;
  out.prob = sys.nu_clump;
  out.prob_q = sys.exact ? sys.nu_clump_q : Rat(0);
  size_t start = 0;
  for (size_t t = 1; t < x_word.size(); ++t) {
    if (x_word[t] != a) continue;
    Word seg(x_word.begin() + start, x_word.begin() + t + 1);
    auto it = band_to_loop.find(seg);
    if (it == band_to_loop.end())
      throw validation_error("segment '" + format_word(sys.code.domain, seg) +
                             "' is not a retained band (raise L?)");
    const auto& loop = sys.loops[it->second];
    out.loop_indices.push_back(it->second);
    out.prob *= loop.prob / loop.J();
    if (sys.exact) out.prob_q *= loop.prob_q / loop.J();
    start = t;
  }
  return out;
}

// --- fibers over periodic orbits ---------------------------------------------------

struct FiberComponent {
  std::vector<std::string> vertices;  // "symbol@phase" labels
  double lambda = 0.0;
  double entropy_per_step = 0.0;
  bool trivial = false;
};

struct FiberReport {
  PeriodicOrbit orbit;
  int vertex_count = 0;
  std::vector<FiberComponent> components;  // nontrivial first, then trivial
  double max_entropy = 0.0;
  int argmax_count = 0;
  bool determinate = false;  // exactly one component attains the max
};

// Components of the fiber over a periodic base point, with per-sigma-step
// growth; the count of maximizers bounds the ergodic relatively maximal
// measures sitting over the orbit measure.
inline FiberReport fiber_periodic(const FactorCode& code, const PeriodicOrbit& orbit) {
  auto g = periodic_fiber_graph(code, orbit);
  FiberReport r;
  r.orbit = orbit;
  r.vertex_count = g.graph.size();
  std::vector<FiberComponent> nontrivial, trivial;
  for (auto& comp : scc(g.graph)) {
    FiberComponent fc;
    for (int v : comp.vertices) fc.vertices.push_back(g.graph.symbols[v]);
    fc.trivial = comp.trivial;
    if (comp.trivial) {
      trivial.push_back(std::move(fc));
      continue;
    }
    const int m = static_cast<int>(comp.vertices.size());
    Mat<double> sub(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        sub(i, j) = g.graph.edge(comp.vertices[i], comp.vertices[j]) ? 1.0 : 0.0;
    fc.lambda = perron(sub).lambda;
    fc.entropy_per_step = std::log(fc.lambda);
    nontrivial.push_back(std::move(fc));
  }
  if (nontrivial.empty()) throw validation_error("fiber over the orbit contains no cycle");
  r.max_entropy = nontrivial[0].entropy_per_step;
  for (auto& fc : nontrivial) r.max_entropy = std::max(r.max_entropy, fc.entropy_per_step);
  for (auto& fc : nontrivial)
    if (fc.entropy_per_step >= r.max_entropy - 1e-12) ++r.argmax_count;
  r.determinate = r.argmax_count == 1;
  r.components = std::move(nontrivial);
  for (auto& fc : trivial) r.components.push_back(std::move(fc));
  return r;
}

// --- homogeneous-clump closed form -------------------------------------------------

// Six-state induced presentation for the two-interchangeable-preimage system:
// states are the return words (a1a1, a1b1a1, a1a2, a2a2, a2b2a2, a2a1), the
// image distinguishes only the loop type (aa vs aba), and the relatively
// maximal transition matrix has the two-parameter banded shape with
// x = y = K/(2K+2), K = nu[aa]/nu[aba].
struct HomclumpFamily {
  Rat K;
  Rat x;                      // = K/(2K+2)
  Sft induced;                // six-state SFT
  FactorCode loop_type;       // induced -> {aa, aba} full shift
  MarkovMeasure nu_a;         // Bernoulli loop-type distribution (K/(K+1), 1/(K+1))
  MarkovMeasure mu_a;         // the maximal induced Markov measure
  std::vector<Rat> fixed_q;   // closed-form stationary vector
  std::vector<double> fixed;
};

inline HomclumpFamily homclump_family(const Rat& K) {
  if (K <= 0) throw validation_error("K must be positive");
  HomclumpFamily f;
  f.K = K;
  f.x = K / (2 * K + 2);
  f.induced = make_sft({"a1a1", "a1b1a1", "a1a2", "a2a2", "a2b2a2", "a2a1"}, {});
  // states ending at a1 feed the a1-rooted loops; likewise for a2
  const int from_a1[3] = {0, 1, 5}, to_a1[3] = {0, 1, 2};
  const int from_a2[3] = {2, 3, 4}, to_a2[3] = {3, 4, 5};
  for (int i : from_a1)
    for (int j : to_a1) f.induced.adj[i][j] = 1;
  for (int i : from_a2)
    for (int j : to_a2) f.induced.adj[i][j] = 1;

  Sft loops = full_shift({"aa", "aba"});
  f.loop_type.domain = f.induced;
  f.loop_type.codomain = loops;
  f.loop_type.map = {0, 1, 0, 0, 1, 0};

  Mat<Rat> nu_rows(2, 2);
  nu_rows(0, 0) = nu_rows(1, 0) = K / (K + 1);
  nu_rows(0, 1) = nu_rows(1, 1) = Rat(1) / (K + 1);
  f.nu_a = make_markov(loops, nu_rows);

  const Rat x = f.x, mid = 1 - 2 * x;
  Mat<Rat> p(6, 6);
  // rows ending at a1 land on (s1, s2, s3), rows ending at a2 on (s4, s5, s6);
  // the middle weight is always the aba-type loop
  for (int i : from_a1) { p(i, 0) = x; p(i, 1) = mid; p(i, 2) = x; }
  for (int i : from_a2) { p(i, 3) = x; p(i, 4) = mid; p(i, 5) = x; }
  f.mu_a = make_markov(f.induced, p);

  // closed form (y, 1-2x, y, y, 1-2x, y)/(4y + 2(1-2x)) with y = x
  Rat denom = 4 * x + 2 * mid;
  f.fixed_q = {x / denom, mid / denom, x / denom, x / denom, mid / denom, x / denom};
  f.fixed.resize(6);
  for (int i = 0; i < 6; ++i) f.fixed[i] = to_double(f.fixed_q[i]);
  return f;
}

// K = nu[aa]/nu[aba] for a Markov nu on the two-symbol base {a, b} in which
// every b is followed by a (so [ab] = [aba] and the loop types exhaust [a]).
inline Rat homclump_K(const MarkovMeasure& nu, int a_sym, int b_sym) {
  if (!nu.exact) throw validation_error("homclump K extraction needs an exact nu");
  if (nu.Pq(b_sym, b_sym) != 0)
    throw validation_error("base system must forbid bb for the homogeneous-clump form");
  Rat nu_aa = nu.piq[a_sym] * nu.Pq(a_sym, a_sym);
  Rat nu_aba = nu.piq[a_sym] * nu.Pq(a_sym, b_sym) * nu.Pq(b_sym, a_sym);
  if (nu_aba == 0) throw validation_error("nu gives aba zero mass; K undefined");
  return nu_aa / nu_aba;
}

// --- constrained entropy optimizer ---------------------------------------------

struct OptimizerResult {
  int order = 1;
  HigherBlock presentation;        // k-block presentation (possibly trimmed)
  std::vector<int> image_block;    // presentation symbol -> Y k-block index
  std::vector<Word> y_blocks;      // Y k-block index -> word
  Mat<double> Q;                   // optimized transition matrix
  std::vector<double> stationary;
  double entropy = 0.0;            // per X-step
  double feasibility = 0.0;        // sup-norm pushforward defect
  int best_restart = -1;
  uint64_t seed = 0;
  int restarts = 0;
};

namespace detail {

// Euclidean projection onto the simplex over the support positions, with a
// small floor keeping the chain irreducible along the iteration.
inline void project_row_simplex(std::vector<double>& v, double floor_val) {
  const int m = static_cast<int>(v.size());
  double target = 1.0 - floor_val * m;
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  for (int i = 0; i < m; ++i) {
    css += u[i];
    double t = (css - target) / (i + 1);
    if (u[i] - t > 0) theta = t;
  }
  for (auto& x : v) x = std::max(0.0, x - theta) + floor_val;
}

struct OptimizerWork {
  const Sft* W;
  std::vector<std::vector<int>> support;  // allowed columns per row
  std::vector<int> image;                 // row -> constraint bucket
  std::vector<double> target;             // per bucket
  int nbuckets = 0;

  int n() const { return W->size(); }

  std::vector<double> stationary(const Mat<double>& q) const {
    return stationary_vector(q);
  }

  double entropy_of(const Mat<double>& q, const std::vector<double>& p) const {
    double h = 0.0;
    for (int i = 0; i < n(); ++i)
      for (int j : support[i]) h -= p[i] * xlogx(q(i, j));
    return h;
  }

  std::vector<double> violation(const std::vector<double>& p) const {
    std::vector<double> c(nbuckets, 0.0);
    for (int i = 0; i < n(); ++i) c[image[i]] += p[i];
    for (int v = 0; v < nbuckets; ++v) c[v] -= target[v];
    return c;
  }

  // gradient of  -h + lambda.c + (rho/2)|c|^2  with respect to Q entries
  void al_gradient(const Mat<double>& q, const std::vector<double>& p,
                   const std::vector<double>& lambda, double rho, Mat<double>& grad) const {
    const int m = n();
    std::vector<double> s(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j : support[i]) s[i] -= xlogx(q(i, j));
    auto c = violation(p);
    std::vector<double> g(m, 0.0);
    for (int i = 0; i < m; ++i) g[i] = lambda[image[i]] + rho * c[image[i]];
    // fundamental solve: (I - Q + 1 p^T) u = y for y in {s, g}
    Mat<double> A(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        A(i, j) = (i == j ? 1.0 : 0.0) - q(i, j) + p[j];
    auto us = solve_linear(A, s);
    auto ug = solve_linear(A, g);
    for (int i = 0; i < m; ++i)
      for (int j : support[i]) {
        double dh = p[i] * (us[j] - std::log(q(i, j)) - 1.0);
        double dc = p[i] * ug[j];
        grad(i, j) = -dh + dc;
      }
  }
};

// The relaxed optimum is a bucket-tilted Parry measure: rows of
// A(i,j) exp(theta[bucket(j)]) renormalized through the Perron data, one
// potential per constraint bucket. Newton on the dual (stationary bucket
// masses against the targets) reaches machine precision where the projected
// gradient stalls near sqrt(tol). Returns false when the dual step escapes
// (boundary optimum) so the caller keeps the iterative answer.
inline bool polish_tilted(const OptimizerWork& work, Mat<double>& q_out,
                          std::vector<double>& p_out) {
  const int m = work.n();
  const int nb = work.nbuckets;
  std::vector<double> theta(nb, 0.0);

  auto evaluate = [&](const std::vector<double>& th, Mat<double>& q,
                      std::vector<double>& p) -> std::vector<double> {
    Mat<double> b(m, m);
    for (int i = 0; i < m; ++i)
      for (int j : work.support[i]) b(i, j) = std::exp(th[work.image[j]]);
    SpectralData sd = perron(b);
    q = Mat<double>(m, m);
    for (int i = 0; i < m; ++i)
      for (int j : work.support[i]) q(i, j) = b(i, j) * sd.right[j] / (sd.lambda * sd.right[i]);
    p.assign(m, 0.0);
    for (int i = 0; i < m; ++i) p[i] = sd.left[i] * sd.right[i];
    std::vector<double> mass(nb, 0.0);
    for (int i = 0; i < m; ++i) mass[work.image[i]] += p[i];
    return mass;
  };

  try {
    Mat<double> q;
    std::vector<double> p;
    auto mass = evaluate(theta, q, p);
    for (int it = 0; it < 60; ++it) {
      double err = 0.0;
      for (int v = 0; v < nb; ++v) err = std::max(err, std::fabs(mass[v] - work.target[v]));
      if (err <= 1e-13) {
        q_out = q;
        p_out = p;
        return true;
      }
      const int d = nb - 1;  // theta[0] pinned, additive gauge freedom
      if (d == 0) return false;
      Mat<double> jac(d, d);
      std::vector<double> f(d);
      for (int v = 1; v < nb; ++v) f[v - 1] = mass[v] - work.target[v];
      const double hstep = 1e-6;
      for (int v = 1; v < nb; ++v) {
        auto tp = theta, tm = theta;
        tp[v] += hstep;
        tm[v] -= hstep;
        Mat<double> qd;
        std::vector<double> pd;
        auto mp = evaluate(tp, qd, pd);
        auto mm = evaluate(tm, qd, pd);
        for (int w = 1; w < nb; ++w) jac(w - 1, v - 1) = (mp[w] - mm[w]) / (2 * hstep);
      }
      auto delta = solve_linear(jac, f);
      double norm = 0.0;
      for (double x : delta) norm = std::max(norm, std::fabs(x));
      if (!(norm < 1e3)) return false;
      double scale = norm > 2.0 ? 2.0 / norm : 1.0;
      for (int v = 1; v < nb; ++v) theta[v] -= scale * delta[v - 1];
      for (double t : theta)
        if (!(std::fabs(t) < 200.0)) return false;
      mass = evaluate(theta, q, p);
    }
  } catch (const Error&) {
    return false;
  }
  return false;
}

}  // namespace detail

// Maximizes the entropy rate over order-k Markov measures on the domain whose
// k-block marginals push forward to nu's k-block distribution. Projected
// gradient with per-row simplex projection inside an augmented-Lagrangian
// loop; 16 seeded restarts, best feasible run wins.
inline OptimizerResult fiber_entropy_optimizer(const FactorCode& code, const MarkovMeasure& nu,
                                               int order, uint64_t seed, int restarts = 16,
                                               double tol = 1e-10) {
  if (order < 1 || order > 3) throw validation_error("optimizer supports orders 1..3");
  if (nu.sft.size() != code.codomain.size())
    throw validation_error("nu must live on the codomain");

  OptimizerResult res;
  res.order = order;
  res.seed = seed;
  res.restarts = restarts;

  // k-block presentation, charged part only
  HigherBlock hb = higher_block(code.domain, order);
  auto ydist = block_distribution(nu, order);
  std::map<Word, int> yindex;
  std::vector<Word> yblocks;
  for (auto& [w, p] : ydist) {
    yindex[w] = static_cast<int>(yblocks.size());
    yblocks.push_back(w);
  }
  std::vector<int> keep;
  for (int i = 0; i < hb.sft.size(); ++i)
    if (yindex.count(code.apply(hb.blocks[i]))) keep.push_back(i);
  if (keep.empty()) throw validation_error("no presentation symbol lies over a charged block");
  Sft restricted;
  std::vector<Word> rblocks;
  for (int i : keep) {
    restricted.symbols.push_back(hb.sft.symbols[i]);
    rblocks.push_back(hb.blocks[i]);
  }
  restricted.adj.assign(keep.size(), std::vector<uint8_t>(keep.size(), 0));
  for (size_t a = 0; a < keep.size(); ++a)
    for (size_t b = 0; b < keep.size(); ++b)
      restricted.adj[a][b] = hb.sft.adj[keep[a]][keep[b]];
  TrimResult tr = trim(restricted);
  if (tr.sft.size() == 0) throw validation_error("charged presentation is empty after trimming");
  if (!is_irreducible(tr.sft))
    throw validation_error("charged presentation is not irreducible; restrict the system first");

  res.presentation.sft = tr.sft;
  res.presentation.k = order;
  for (int i : tr.kept) res.presentation.blocks.push_back(rblocks[i]);

  detail::OptimizerWork work;
  work.W = &res.presentation.sft;
  const int m = res.presentation.sft.size();
  work.support.resize(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (res.presentation.sft.edge(i, j)) work.support[i].push_back(j);
  work.image.resize(m);
  for (int i = 0; i < m; ++i)
    work.image[i] = yindex.at(code.apply(res.presentation.blocks[i]));
  work.nbuckets = static_cast<int>(yblocks.size());
  work.target.assign(work.nbuckets, 0.0);
  for (auto& [w, p] : ydist) work.target[yindex[w]] = p;
  // every charged y-block must still be reachable
  {
    std::vector<char> covered(work.nbuckets, 0);
    for (int i = 0; i < m; ++i) covered[work.image[i]] = 1;
    for (int v = 0; v < work.nbuckets; ++v)
      if (!covered[v])
        throw validation_error("charged block " + format_word(code.codomain, yblocks[v]) +
                               " lost all its lifts; no feasible Markov lift at this order");
  }
  res.image_block = work.image;
  res.y_blocks = yblocks;

  const double floor_val = 1e-12;
  double best_entropy = -1.0;
  double best_feas = 1e9;

  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng(derive_seed(seed, restart));
    Mat<double> q(m, m);
    for (int i = 0; i < m; ++i) {
      double sum = 0.0;
      std::vector<double> row(work.support[i].size());
      for (auto& x : row) {
        x = -std::log(1.0 - rng.uniform());
        sum += x;
      }
      for (size_t jj = 0; jj < row.size(); ++jj)
        q(i, work.support[i][jj]) = row[jj] / sum * (1.0 - floor_val * row.size()) + floor_val;
    }

    std::vector<double> lambda(work.nbuckets, 0.0);
    double rho = 100.0;
    Mat<double> grad(m, m);
    double step = 0.1;
    auto objective = [&](const Mat<double>& qq, std::vector<double>& p_out) {
      p_out = work.stationary(qq);
      auto c = work.violation(p_out);
      double f = -work.entropy_of(qq, p_out);
      for (int v = 0; v < work.nbuckets; ++v)
        f += lambda[v] * c[v] + 0.5 * rho * c[v] * c[v];
      return f;
    };

    std::vector<double> p;
    double f = objective(q, p);
    double prev_norm = 1e9;
    for (int outer = 0; outer < 25; ++outer) {
      int stall = 0;
      for (int inner = 0; inner < 4000 && stall < 3; ++inner) {
        work.al_gradient(q, p, lambda, rho, grad);
        bool accepted = false;
        for (int bt = 0; bt < 40 && !accepted; ++bt) {
          Mat<double> qn = q;
          for (int i = 0; i < m; ++i) {
            std::vector<double> row(work.support[i].size());
            for (size_t jj = 0; jj < row.size(); ++jj)
              row[jj] = q(i, work.support[i][jj]) - step * grad(i, work.support[i][jj]);
            detail::project_row_simplex(row, floor_val);
            for (size_t jj = 0; jj < row.size(); ++jj) qn(i, work.support[i][jj]) = row[jj];
          }
          std::vector<double> pn;
          double fn;
          try {
            fn = objective(qn, pn);
          } catch (const Error&) {
            step *= 0.5;
            continue;
          }
          if (fn <= f - 1e-15) {
            if (f - fn < tol * std::max(1.0, std::fabs(f))) ++stall;
            else stall = 0;
            q = std::move(qn);
            p = std::move(pn);
            f = fn;
            accepted = true;
            step = std::min(step * 1.3, 10.0);
          } else {
            step *= 0.5;
          }
        }
        if (!accepted) break;
      }
      auto c = work.violation(p);
      double cnorm = 0.0;
      for (double x : c) cnorm = std::max(cnorm, std::fabs(x));
      if (cnorm <= 1e-11) break;
      for (int v = 0; v < work.nbuckets; ++v) lambda[v] += rho * c[v];
      if (cnorm > 0.25 * prev_norm) rho = std::min(rho * 10.0, 1e12);
      prev_norm = cnorm;
      f = objective(q, p);
      step = std::max(step, 1e-3);
    }

    auto c = work.violation(p);
    double feas = 0.0;
    for (double x : c) feas = std::max(feas, std::fabs(x));
    double h = work.entropy_of(q, p);
    bool better;
    if ((feas <= 1e-8) != (best_feas <= 1e-8))
      better = feas <= 1e-8;
    else if (feas <= 1e-8)
      better = h > best_entropy;
    else
      better = feas < best_feas;
    if (restart == 0 || better) {
      best_entropy = h;
      best_feas = feas;
      res.Q = q;
      res.stationary = p;
      res.entropy = h;
      res.feasibility = feas;
      res.best_restart = restart;
    }
  }

  // dual Newton polish of the winning iterate
  {
    Mat<double> q;
    std::vector<double> p;
    if (detail::polish_tilted(work, q, p)) {
      auto c = work.violation(p);
      double feas = 0.0;
      for (double v : c) feas = std::max(feas, std::fabs(v));
      double h = work.entropy_of(q, p);
      bool adopt = best_feas > 1e-8 ? feas <= 1e-8
                                    : (feas <= 1e-8 && h >= best_entropy - 1e-9);
      if (adopt) {
        res.Q = q;
        res.stationary = p;
        res.entropy = h;
        res.feasibility = feas;
      }
    }
  }
  return res;
}

}  // namespace relent
