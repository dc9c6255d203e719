#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relent/common.hpp"
#include "relent/linalg.hpp"
#include "relent/sft.hpp"

namespace relent {

// --- Perron eigendata ---------------------------------------------------------

struct SpectralData {
  double lambda = 0.0;
  std::vector<double> right;  // normalized to sum 1
  std::vector<double> left;   // scaled so left . right = 1
  int iterations = 0;
};

namespace detail {
// Power iteration on A + I (primitive whenever the support of A is
// irreducible, so periodic matrices converge too). Deterministic: starts from
// the uniform vector.
inline std::pair<std::vector<double>, int> power_iterate(const Mat<double>& a,
                                                         double tol, int maxit) {
  const int n = a.rows;
  std::vector<double> v(n, 1.0 / n);
  for (int it = 1; it <= maxit; ++it) {
    std::vector<double> w(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double s = v[i];  // the +I shift
      for (int j = 0; j < n; ++j) s += a(i, j) * v[j];
      w[i] = s;
    }
    double norm = 0.0;
    for (double x : w) norm += x;
    for (double& x : w) x /= norm;
    double delta = 0.0;
    for (int i = 0; i < n; ++i) delta = std::max(delta, std::fabs(w[i] - v[i]));
    v.swap(w);
    if (delta <= tol) return {v, it};
  }
  throw numeric_error("power iteration did not converge");
}
}  // namespace detail

// Perron root and eigenvectors of a non-negative matrix whose support graph
// is irreducible.
inline SpectralData perron(const Mat<double>& a, double tol = 1e-14, int maxit = 100000) {
  const int n = a.rows;
  if (n == 0 || a.cols != n) throw validation_error("perron: square matrix required");
  Sft support;
  support.symbols.assign(n, "");
  for (int i = 0; i < n; ++i) support.symbols[i] = "s" + std::to_string(i);
  support.adj.assign(n, std::vector<uint8_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (a(i, j) < 0) throw validation_error("perron: negative entry");
      support.adj[i][j] = a(i, j) > 0 ? 1 : 0;
    }
  if (!is_irreducible(support)) throw validation_error("perron: support graph is reducible");

  SpectralData sd;
  auto [r, it1] = detail::power_iterate(a, tol, maxit);
  Mat<double> at(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) at(i, j) = a(j, i);
  auto [l, it2] = detail::power_iterate(at, tol, maxit);
  sd.iterations = it1 + it2;

  // Rayleigh quotient on the converged right vector.
  auto av = mat_vec(a, r);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += l[i] * av[i];
    den += l[i] * r[i];
  }
  sd.lambda = num / den;
  sd.right = r;
  double lr = 0.0;
  for (int i = 0; i < n; ++i) lr += l[i] * r[i];
  for (double& x : l) x /= lr;
  sd.left = l;
  return sd;
}

// --- Markov measures ----------------------------------------------------------

// Stationary 1-step Markov measure on an SFT. Always carries a double
// transition matrix and stationary vector; when built from rational data it
// additionally carries the exact forms, and block probabilities downstream
// stay exact.
struct MarkovMeasure {
  Sft sft;
  Mat<double> P;
  std::vector<double> pi;
  bool exact = false;
  Mat<Rat> Pq;
  std::vector<Rat> piq;

  int size() const { return sft.size(); }
};

namespace detail {
// The unique recurrent class of a stochastic matrix's support graph, or a
// validation error if there are several (stationarity would be ambiguous).
inline std::vector<int> unique_recurrent_class(const Sft& support) {
  auto comps = scc(support);
  std::vector<int> comp_of(support.size(), -1);
  for (size_t c = 0; c < comps.size(); ++c)
    for (int v : comps[c].vertices) comp_of[v] = static_cast<int>(c);
  std::vector<int> recurrent;
  for (size_t c = 0; c < comps.size(); ++c) {
    bool escapes = false;
    for (int v : comps[c].vertices)
      for (int j = 0; j < support.size(); ++j)
        if (support.edge(v, j) && comp_of[j] != static_cast<int>(c)) escapes = true;
    if (!escapes) {
      if (comps[c].trivial)
        throw validation_error("transition matrix has an absorbing symbol with no self-loop");
      if (!recurrent.empty())
        throw validation_error("transition matrix has several recurrent classes");
      recurrent = comps[c].vertices;
    }
  }
  if (recurrent.empty()) throw validation_error("transition matrix has no recurrent class");
  return recurrent;
}

template <class T>
std::vector<T> stationary_on_support(const Mat<T>& p, const std::vector<int>& rec) {
  const int m = static_cast<int>(rec.size());
  Mat<T> sub(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sub(i, j) = p(rec[i], rec[j]);
  auto st = stationary_vector(sub);
  std::vector<T> full(p.rows, T(0));
  for (int i = 0; i < m; ++i) full[rec[i]] = st[i];
  return full;
}
}  // namespace detail

inline MarkovMeasure make_markov(const Sft& sft, const Mat<Rat>& rows) {
  const int n = sft.size();
  if (rows.rows != n || rows.cols != n)
    throw validation_error("transition matrix shape does not match alphabet");
  Sft support = sft;
  for (int i = 0; i < n; ++i) {
    Rat sum(0);
    for (int j = 0; j < n; ++j) {
      const Rat& x = rows(i, j);
      if (x < 0) throw validation_error("negative transition probability");
      if (x > 0 && !sft.edge(i, j))
        throw validation_error("transition " + sft.symbols[i] + " -> " + sft.symbols[j] +
                               " is positive but the edge is not allowed");
      support.adj[i][j] = x > 0 ? 1 : 0;
      sum += x;
    }
    if (sum != 1)
      throw validation_error("row for symbol " + sft.symbols[i] + " sums to " +
                             rat_to_string(sum) + ", expected 1");
  }
  MarkovMeasure mu;
  mu.sft = sft;
  mu.exact = true;
  mu.Pq = rows;
  auto rec = detail::unique_recurrent_class(support);
  mu.piq = detail::stationary_on_support(rows, rec);
  mu.P = Mat<double>(n, n);
  mu.pi.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    mu.pi[i] = to_double(mu.piq[i]);
    for (int j = 0; j < n; ++j) mu.P(i, j) = to_double(rows(i, j));
  }
  return mu;
}

inline MarkovMeasure make_markov(const Sft& sft, const Mat<double>& rows) {
  const int n = sft.size();
  if (rows.rows != n || rows.cols != n)
    throw validation_error("transition matrix shape does not match alphabet");
  Sft support = sft;
  for (int i = 0; i < n; ++i) {
    double sum = 0;
    for (int j = 0; j < n; ++j) {
      double x = rows(i, j);
      if (x < 0) throw validation_error("negative transition probability");
      if (x > 0 && !sft.edge(i, j))
        throw validation_error("transition " + sft.symbols[i] + " -> " + sft.symbols[j] +
                               " is positive but the edge is not allowed");
      support.adj[i][j] = x > 0 ? 1 : 0;
      sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw validation_error("row for symbol " + sft.symbols[i] + " does not sum to 1");
  }
  MarkovMeasure mu;
  mu.sft = sft;
  mu.exact = false;
  mu.P = rows;
  auto rec = detail::unique_recurrent_class(support);
  mu.pi = detail::stationary_on_support(rows, rec);
  return mu;
}

// Maximal-entropy (Shannon-Parry) measure of an irreducible SFT:
// P(i,j) = A(i,j) r_j / (lambda r_i), stationary_i = l_i r_i.
inline MarkovMeasure parry_measure(const Sft& sft, double tol = 1e-14) {
  if (!is_irreducible(sft)) throw validation_error("Parry measure needs an irreducible system");
  const int n = sft.size();
  Mat<double> a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = sft.edge(i, j) ? 1.0 : 0.0;
  SpectralData sd = perron(a, tol);
  Mat<double> p(n, n);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      p(i, j) = sft.edge(i, j) ? sd.right[j] / (sd.lambda * sd.right[i]) : 0.0;
      rowsum += p(i, j);
    }
    for (int j = 0; j < n; ++j) p(i, j) /= rowsum;  // absorb rounding
  }
  MarkovMeasure mu;
  mu.sft = sft;
  mu.P = p;
  mu.pi.assign(n, 0.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    mu.pi[i] = sd.left[i] * sd.right[i];
    total += mu.pi[i];
  }
  for (double& x : mu.pi) x /= total;
  return mu;
}

// Entropy rate in nats: -sum_i pi_i sum_j P_ij log P_ij.
inline double entropy(const MarkovMeasure& mu) {
  double h = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    if (mu.pi[i] <= 0) continue;
    for (int j = 0; j < mu.size(); ++j) h -= mu.pi[i] * xlogx(mu.P(i, j));
  }
  return h;
}

// --- periodic-orbit measures ----------------------------------------------------

// Uniform measure on a single periodic orbit; entropy 0.
struct PeriodicMeasure {
  Sft sft;
  PeriodicOrbit orbit;
};

inline PeriodicMeasure make_periodic(const Sft& sft, const Word& block) {
  return PeriodicMeasure{sft, make_orbit(sft, block)};
}

inline double entropy(const PeriodicMeasure&) { return 0.0; }

inline std::map<Word, Rat> block_distribution_exact(const PeriodicMeasure& pm, int n) {
  if (n < 1) throw validation_error("block length must be positive");
  const int p = pm.orbit.period();
  std::map<Word, Rat> out;
  for (int t = 0; t < p; ++t) {
    Word w(n);
    for (int i = 0; i < n; ++i) w[i] = pm.orbit.block[(t + i) % p];
    out[w] += Rat(1, p);
  }
  return out;
}

// --- block distributions ---------------------------------------------------------

namespace detail {
template <class T>
void block_walk(const Sft& sft, const Mat<T>& p, const std::vector<T>& start, int n,
                uint64_t cap, std::map<Word, T>& out) {
  Word w;
  uint64_t emitted = 0;
  auto rec = [&](auto&& self, int sym, T prob, int depth) -> void {
    w.push_back(sym);
    if (depth == n) {
      if (++emitted > cap) throw cap_error("block distribution exceeds enumeration cap");
      out[w] = prob;
    } else {
      for (int j = 0; j < sft.size(); ++j) {
        if (p(sym, j) == T(0)) continue;
        self(self, j, T(prob * p(sym, j)), depth + 1);
      }
    }
    w.pop_back();
  };
  for (int i = 0; i < sft.size(); ++i) {
    if (start[i] == T(0)) continue;
    rec(rec, i, start[i], 1);
  }
}
}  // namespace detail

// Probabilities of all positive-measure n-blocks. Exact when the measure is.
inline std::map<Word, double> block_distribution(const MarkovMeasure& mu, int n,
                                                 uint64_t cap = 1000000) {
  if (n < 1) throw validation_error("block length must be positive");
  std::map<Word, double> out;
  detail::block_walk(mu.sft, mu.P, mu.pi, n, cap, out);
  return out;
}

inline std::map<Word, Rat> block_distribution_exact(const MarkovMeasure& mu, int n,
                                                    uint64_t cap = 1000000) {
  if (!mu.exact) throw validation_error("measure has no exact rational form");
  if (n < 1) throw validation_error("block length must be positive");
  std::map<Word, Rat> out;
  detail::block_walk(mu.sft, mu.Pq, mu.piq, n, cap, out);
  return out;
}

// --- block entropy bounds ---------------------------------------------------------

struct BlockEntropyBounds {
  int n = 0;
  double h_n = 0.0;      // -sum p log p over n-blocks
  double h_np1 = 0.0;    // same over (n+1)-blocks
  double upper = 0.0;    // H_n / n
  double lower = 0.0;    // H_{n+1} - H_n
  double marginal_defect = 0.0;  // sup-norm consistency of the two inputs
};

// Entropy-rate bracket from consecutive block distributions. The inputs must
// be marginal-consistent (dropping the last symbol of dist_{n+1} reproduces
// dist_n) to 1e-10.
inline BlockEntropyBounds block_entropy_bounds(const std::map<Word, double>& dist_n,
                                               const std::map<Word, double>& dist_np1) {
  if (dist_n.empty() || dist_np1.empty()) throw validation_error("empty block distribution");
  BlockEntropyBounds out;
  out.n = static_cast<int>(dist_n.begin()->first.size());
  std::map<Word, double> marg;
  for (auto& [w, p] : dist_np1) {
    if (static_cast<int>(w.size()) != out.n + 1)
      throw validation_error("block distributions are not consecutive lengths");
    Word head(w.begin(), w.end() - 1);
    marg[head] += p;
  }
  double defect = 0.0;
  for (auto& [w, p] : dist_n) defect = std::max(defect, std::fabs(p - marg[w]));
  for (auto& [w, p] : marg)
    if (!dist_n.count(w)) defect = std::max(defect, std::fabs(p));
  out.marginal_defect = defect;
  if (defect > 1e-10)
    throw validation_error("block distributions are not marginal-consistent");
  for (auto& [w, p] : dist_n) out.h_n -= xlogx(p);
  for (auto& [w, p] : dist_np1) out.h_np1 -= xlogx(p);
  out.upper = out.h_n / out.n;
  out.lower = out.h_np1 - out.h_n;
  return out;
}

// --- weighted entropy functional ---------------------------------------------------

// [h(mu) + alpha h(nu)] / (alpha + 1); alpha = +infinity degenerates to h(nu),
// the relative-maximality objective.
inline double weighted_entropy(const MarkovMeasure& mu, double nu_entropy, double alpha) {
  if (std::isnan(alpha) || alpha < 0)
    throw validation_error("alpha must be in [0, infinity]");
  double h = entropy(mu);
  if (std::isinf(alpha)) return nu_entropy;
  return (h + alpha * nu_entropy) / (alpha + 1.0);
}

// --- pressure / equilibrium state -----------------------------------------------

struct EquilibriumResult {
  double pressure = 0.0;  // log of the Perron root of A .* exp(V)
  double lambda = 0.0;
  MarkovMeasure equilibrium;
  double variational_defect = 0.0;  // |pressure - h(mu) - integral of V|
};

// Equilibrium state of an edge-locally-constant potential V(i,j).
inline EquilibriumResult pressure_equilibrium(const Sft& sft, const Mat<double>& potential,
                                              double tol = 1e-14) {
  if (!is_irreducible(sft)) throw validation_error("pressure needs an irreducible system");
  const int n = sft.size();
  Mat<double> b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = sft.edge(i, j) ? std::exp(potential(i, j)) : 0.0;
  SpectralData sd = perron(b, tol);
  EquilibriumResult out;
  out.lambda = sd.lambda;
  out.pressure = std::log(sd.lambda);
  Mat<double> p(n, n);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < n; ++j) {
      p(i, j) = sft.edge(i, j) ? b(i, j) * sd.right[j] / (sd.lambda * sd.right[i]) : 0.0;
      rowsum += p(i, j);
    }
    for (int j = 0; j < n; ++j) p(i, j) /= rowsum;
  }
  out.equilibrium.sft = sft;
  out.equilibrium.P = p;
  out.equilibrium.pi.assign(n, 0.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    out.equilibrium.pi[i] = sd.left[i] * sd.right[i];
    total += out.equilibrium.pi[i];
  }
  for (double& x : out.equilibrium.pi) x /= total;
  double integral = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      integral += out.equilibrium.pi[i] * out.equilibrium.P(i, j) *
                  (out.equilibrium.P(i, j) > 0 ? potential(i, j) : 0.0);
  out.variational_defect =
      std::fabs(out.pressure - entropy(out.equilibrium) - integral);
  return out;
}

// --- measure text format -----------------------------------------------------------
//
//   markov
//   rows:
//   0 1/2 1/2
//   1 0 0
//   ...
//   stationary: 2/5 2/5 1/5     # optional; recomputed and checked

inline MarkovMeasure parse_measure(const std::string& text, const Sft& sft) {
  std::istringstream is(text);
  std::string line;
  enum { HEAD, ROWS_KW, ROWS, DONE } state = HEAD;
  std::vector<std::vector<Rat>> rows;
  std::optional<std::vector<Rat>> stationary;
  while (std::getline(is, line)) {
    std::string s = strip_comment(line);
    if (s.empty()) continue;
    if (state == HEAD) {
      if (s != "markov") throw validation_error("measure file must begin with 'markov'");
      state = ROWS_KW;
      continue;
    }
    if (state == ROWS_KW) {
      if (s != "rows:") throw validation_error("measure file: expected 'rows:'");
      state = ROWS;
      continue;
    }
    if (s.rfind("stationary:", 0) == 0) {
      auto toks = split_ws(s.substr(11));
      std::vector<Rat> v;
      for (auto& t : toks) v.push_back(parse_rational(t));
      stationary = std::move(v);
      state = DONE;
      continue;
    }
    if (state != ROWS) throw validation_error("measure file: unexpected line '" + s + "'");
    auto toks = split_ws(s);
    std::vector<Rat> row;
    for (auto& t : toks) row.push_back(parse_rational(t));
    rows.push_back(std::move(row));
    if (static_cast<int>(rows.size()) == sft.size()) state = DONE;
  }
  if (static_cast<int>(rows.size()) != sft.size())
    throw validation_error("measure file has " + std::to_string(rows.size()) +
                           " rows, alphabet has " + std::to_string(sft.size()));
  Mat<Rat> p(sft.size(), sft.size());
  for (int i = 0; i < sft.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != sft.size())
      throw validation_error("measure row " + std::to_string(i) + " has wrong length");
    for (int j = 0; j < sft.size(); ++j) p(i, j) = rows[i][j];
  }
  MarkovMeasure mu = make_markov(sft, p);
  if (stationary) {
    if (static_cast<int>(stationary->size()) != sft.size())
      throw validation_error("stationary vector has wrong length");
    for (int i = 0; i < sft.size(); ++i) {
      double given = to_double((*stationary)[i]);
      if (std::fabs(given - mu.pi[i]) > 1e-9)
        throw validation_error("declared stationary vector does not match the recomputed one");
    }
  }
  return mu;
}

inline std::string print_measure(const MarkovMeasure& mu) {
  std::ostringstream os;
  os << "markov\nrows:\n";
  for (int i = 0; i < mu.size(); ++i) {
    for (int j = 0; j < mu.size(); ++j) {
      if (j) os << " ";
      if (mu.exact)
        os << rat_to_string(mu.Pq(i, j));
      else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", mu.P(i, j));
        os << buf;
      }
    }
    os << "\n";
  }
  os << "stationary:";
  for (int i = 0; i < mu.size(); ++i) {
    os << " ";
    if (mu.exact)
      os << rat_to_string(mu.piq[i]);
    else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", mu.pi[i]);
      os << buf;
    }
  }
  os << "\n";
  return os.str();
}

}  // namespace relent
