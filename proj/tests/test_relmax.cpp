#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "relent/gallery.hpp"
#include "relent/relmax.hpp"

using namespace relent;

namespace {

MarkovMeasure abk_nu(Rat q) {
  Sft y = gallery_load("ABK").code.codomain;
  Mat<Rat> rows(2, 2);
  rows(0, 1) = Rat(1);       // a -> b
  rows(1, 0) = q;            // b -> a
  rows(1, 1) = 1 - q;
  return make_markov(y, rows);
}

FactorCode golden_identity() {
  Sft g = make_sft({"0", "1"}, {{"0", "0"}, {"0", "1"}, {"1", "0"}});
  return FactorCode{g, g, {0, 1}};
}

}  // namespace

TEST_CASE("induced loops of the two-lane code") {
  auto abk = gallery_load("ABK");
  Rat q(1, 2);
  auto nu = abk_nu(q);
  int a = abk.code.codomain.symbol_index("a");
  auto sys = build_induced(abk.code, nu, a);
  REQUIRE(sys.exact);
  REQUIRE(sys.clump_preimage == abk.code.domain.symbol_index("a"));
  REQUIRE(sys.nu_clump_q == Rat(1, 3));  // pi[a] = q/(1+q)

  // loops are the return words a b^k a, k = 1..L-1, in enumeration order
  REQUIRE(static_cast<int>(sys.loops.size()) == sys.L - 1);
  Rat total = 0;
  for (auto& loop : sys.loops) {
    int k = static_cast<int>(loop.y_loop.size()) - 2;
    REQUIRE(k >= 1);
    // nu_a[a b^k a] = (1-q)^{k-1} q
    Rat expect = q;
    for (int t = 1; t < k; ++t) expect *= (1 - q);
    REQUIRE(loop.prob_q == expect);
    REQUIRE(loop.J() == k + 1);
    // bands really are preimages of the loop
    REQUIRE(BigInt(loop.J()) == count_preimages(abk.code, loop.y_loop));
    for (auto& band : loop.bands) REQUIRE(abk.code.apply(band) == loop.y_loop);
    total += loop.prob_q;
  }
  REQUIRE(sys.retained_q == total);
  REQUIRE(to_double(total) > 1.0 - 1e-6);

  // truncating too early trips the retained-mass guard unless overridden
  REQUIRE_THROWS_AS(build_induced(abk.code, nu, a, 4), Error);
  auto low = build_induced(abk.code, nu, a, 4, 1.0 - 1e-6, true);
  REQUIRE(static_cast<int>(low.loops.size()) == 3);
}

TEST_CASE("induced construction rejects bad clumps") {
  auto homc = gallery_load("HOMC");
  auto y = homc.code.codomain;
  Mat<Rat> rows(2, 2);
  rows(0, 0) = Rat(1, 2);
  rows(0, 1) = Rat(1, 2);
  rows(1, 0) = Rat(1);
  auto nu = make_markov(y, rows);
  // both symbols have two preimages
  REQUIRE_THROWS_AS(build_induced(homc.code, nu, 0), Error);

  // clump of zero mass: make a transient off the recurrent class
  auto abk = gallery_load("ABK");
  Mat<Rat> dead(2, 2);
  dead(0, 1) = Rat(1);
  dead(1, 1) = Rat(1);  // recurrent class {b}, pi[a] = 0
  auto nub = make_markov(abk.code.codomain, dead);
  REQUIRE_THROWS_AS(build_induced(abk.code, nub, 0), Error);
}

TEST_CASE("equidistribution over bands maximizes the induced entropy") {
  auto abk = gallery_load("ABK");
  auto sys = build_induced(abk.code, abk_nu(Rat(1, 2)), 0);
  auto best = maximal_induced_measure(sys);
  double h_best = 0.0;
  for (size_t i = 0; i < sys.loops.size(); ++i)
    h_best -= sys.loops[i].J() * xlogx(best.band_weight[i]);

  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    // random weights per loop with the same per-loop sums
    double h = 0.0;
    for (auto& loop : sys.loops) {
      int j = loop.J();
      std::vector<double> w(j);
      double s = 0.0;
      for (double& v : w) {
        v = 0.05 + rng.uniform();
        s += v;
      }
      for (double& v : w) h -= xlogx(to_double(loop.prob_q) * v / s);
    }
    REQUIRE(h <= h_best + 1e-12);
  }
}

TEST_CASE("return-time entropy formula for the two-lane code") {
  auto abk = gallery_load("ABK");
  Rat q(1, 2);
  auto sys = build_induced(abk.code, abk_nu(q), 0);
  auto rep = abramov_entropy(sys);

  // independent sum: nu[a] sum_k (1-q)^{k-1} q log(k+1), plus the entropy of
  // the return-word distribution itself
  double qd = 0.5, acc_rel = 0.0, acc_ind = 0.0;
  for (int k = 1; k < sys.L; ++k) {
    double mass = qd * std::pow(1 - qd, k - 1);
    acc_rel += mass * std::log(k + 1.0);
    acc_ind += mass * (std::log(k + 1.0) - std::log(mass));
  }
  double nu_a = 1.0 / 3.0;
  REQUIRE(std::fabs(rep.h_induced - acc_ind) < 1e-12);
  REQUIRE(std::fabs(rep.h_mu - nu_a * acc_ind) < 1e-12);
  REQUIRE(std::fabs(rep.h_nu - entropy(sys.nu)) < 1e-15);
  // h_rel = nu[a] sum nu_a[loop] log J: agreement up to loop truncation
  REQUIRE(std::fabs(rep.h_rel - nu_a * acc_rel) < 1e-6);
  REQUIRE(rep.h_rel > 0.0);
}

TEST_CASE("cylinder probabilities under the maximal lift") {
  auto abk = gallery_load("ABK");
  Rat q(1, 2);
  auto sys = build_induced(abk.code, abk_nu(q), 0);
  auto& x = abk.code.domain;

  auto one = cylinder_probability(sys, parse_word(x, "a b1 a"));
  REQUIRE(one.prob_q == Rat(1, 3) * q / 2);
  REQUIRE(one.loop_indices.size() == 1);

  // concatenation multiplies segment weights
  auto two = cylinder_probability(sys, parse_word(x, "a b1 a b2 b2 a"));
  REQUIRE(two.prob_q == Rat(1, 3) * (q / 2) * (q * (1 - q) / 3));
  REQUIRE(two.loop_indices.size() == 2);

  // the two lanes over the same loop weigh the same
  auto lane1 = cylinder_probability(sys, parse_word(x, "a b1 b1 a"));
  auto lane2 = cylinder_probability(sys, parse_word(x, "a b2 b2 a"));
  auto mixed = cylinder_probability(sys, parse_word(x, "a b1 b2 a"));
  REQUIRE(lane1.prob_q == lane2.prob_q);
  REQUIRE(lane1.prob_q == mixed.prob_q);

  REQUIRE_THROWS_AS(cylinder_probability(sys, parse_word(x, "b1 b1 a")), Error);
  REQUIRE_THROWS_AS(cylinder_probability(sys, parse_word(x, "a b1 b1")), Error);
}

TEST_CASE("identity code: cylinders reproduce the base measure") {
  auto code = golden_identity();
  Mat<Rat> rows(2, 2);
  rows(0, 0) = Rat(2, 5);
  rows(0, 1) = Rat(3, 5);
  rows(1, 0) = Rat(1);
  auto nu = make_markov(code.codomain, rows);
  auto sys = build_induced(code, nu, 0);
  auto d = block_distribution_exact(nu, 5);
  for (auto& [w, p] : d) {
    if (w.front() != 0 || w.back() != 0) continue;
    REQUIRE(cylinder_probability(sys, w).prob_q == p);
  }
}

TEST_CASE("fiber growth over periodic base points") {
  auto abk = gallery_load("ABK");
  auto orb = make_orbit(abk.code.codomain, parse_word(abk.code.codomain, "ab"));
  auto rep = fiber_periodic(abk.code, orb);
  REQUIRE(rep.vertex_count == 3);
  REQUIRE(rep.components.size() == 1);
  REQUIRE(std::fabs(rep.max_entropy - 0.5 * std::log(2.0)) < 1e-9);
  REQUIRE(rep.argmax_count == 1);
  REQUIRE(rep.determinate);

  // rotation invariance of the verdict
  auto rot = fiber_periodic(abk.code, make_orbit(abk.code.codomain,
                                                 parse_word(abk.code.codomain, "ba")));
  REQUIRE(std::fabs(rot.max_entropy - rep.max_entropy) < 1e-12);
  REQUIRE(rot.determinate == rep.determinate);

  // two isolated lanes over b^infinity: maximum zero, attained twice
  auto fixed = fiber_periodic(abk.code, make_orbit(abk.code.codomain,
                                                   parse_word(abk.code.codomain, "b")));
  REQUIRE(fixed.components.size() == 2);
  REQUIRE(fixed.max_entropy == 0.0);
  REQUIRE(!fixed.determinate);

  auto homc = gallery_load("HOMC");
  auto ha = fiber_periodic(homc.code, make_orbit(homc.code.codomain,
                                                 parse_word(homc.code.codomain, "a")));
  REQUIRE(ha.components.size() == 1);
  REQUIRE(std::fabs(ha.max_entropy - std::log(2.0)) < 1e-9);
  REQUIRE(ha.determinate);

  // cycle-carrying component counts agree with the transitive-closure oracle
  for (auto& e : gallery()) {
    for (auto& orbit : periodic_orbits(e.code.codomain, 4)) {
      auto r = fiber_periodic(e.code, orbit);
      auto g = periodic_fiber_graph(e.code, orbit);
      int live = 0;
      for (auto& comp : r.components)
        if (!comp.trivial) ++live;
      REQUIRE(live == oracle::nontrivial_components(g.graph));
    }
  }
}

TEST_CASE("homogeneous-clump family closed form") {
  auto f = homclump_family(Rat(1));
  REQUIRE(f.x == Rat(1, 4));
  REQUIRE(f.induced.size() == 6);
  // row of a from-a1 state: (x, 1-2x, x) onto the to-a1 states
  REQUIRE(f.mu_a.Pq(0, 0) == Rat(1, 4));
  REQUIRE(f.mu_a.Pq(0, 1) == Rat(1, 2));
  REQUIRE(f.mu_a.Pq(0, 2) == Rat(1, 4));
  REQUIRE(f.mu_a.Pq(0, 3) == 0);
  REQUIRE(f.mu_a.Pq(2, 3) == Rat(1, 4));
  REQUIRE(f.mu_a.Pq(2, 4) == Rat(1, 2));
  REQUIRE(f.mu_a.Pq(2, 5) == Rat(1, 4));

  // closed-form fixed vector is the exact stationary vector
  REQUIRE(f.fixed_q == f.mu_a.piq);
  Rat sum = 0;
  for (auto& p : f.fixed_q) sum += p;
  REQUIRE(sum == 1);

  // type masses: aa loops K/(K+1), aba loops 1/(K+1)
  Rat aa = f.fixed_q[0] + f.fixed_q[2] + f.fixed_q[3] + f.fixed_q[5];
  Rat aba = f.fixed_q[1] + f.fixed_q[4];
  REQUIRE(aa == Rat(1, 2));
  REQUIRE(aba == Rat(1, 2));
  REQUIRE(f.nu_a.piq[0] == Rat(1, 2));

  for (Rat K : {Rat(1, 2), Rat(3, 2), Rat(5), Rat(99)}) {
    auto g = homclump_family(K);
    REQUIRE(g.x == K / (2 * K + 2));
    REQUIRE(g.fixed_q == g.mu_a.piq);
    Rat mass_aa = g.fixed_q[0] + g.fixed_q[2] + g.fixed_q[3] + g.fixed_q[5];
    REQUIRE(mass_aa == K / (K + 1));
    // pushforward onto loop types is the Bernoulli family member
    REQUIRE(g.nu_a.piq[0] == K / (K + 1));
  }
  REQUIRE_THROWS_AS(homclump_family(Rat(0)), Error);
  REQUIRE_THROWS_AS(homclump_family(Rat(-2)), Error);
}

TEST_CASE("K extraction from a base measure") {
  auto homc = gallery_load("HOMC");
  auto y = homc.code.codomain;
  Mat<Rat> rows(2, 2);
  rows(0, 0) = Rat(1, 2);
  rows(0, 1) = Rat(1, 2);
  rows(1, 0) = Rat(1);
  auto nu = make_markov(y, rows);
  REQUIRE(homclump_K(nu, 0, 1) == Rat(1));

  Mat<Rat> rows2(2, 2);
  rows2(0, 0) = Rat(3, 4);
  rows2(0, 1) = Rat(1, 4);
  rows2(1, 0) = Rat(1);
  REQUIRE(homclump_K(make_markov(y, rows2), 0, 1) == Rat(3));

  // bb edges break the two-loop structure
  auto plus = gallery_load("HOMCPLUS");
  Mat<Rat> rows3(2, 2);
  rows3(0, 0) = Rat(1, 2);
  rows3(0, 1) = Rat(1, 2);
  rows3(1, 0) = Rat(1, 2);
  rows3(1, 1) = Rat(1, 2);
  REQUIRE_THROWS_AS(homclump_K(make_markov(plus.code.codomain, rows3), 0, 1), Error);
}

TEST_CASE("constrained optimizer on a finite-to-one code") {
  auto x = gallery_load("XOR");
  Mat<Rat> rows(2, 2);
  rows(0, 0) = rows(0, 1) = rows(1, 0) = rows(1, 1) = Rat(1, 2);
  auto nu = make_markov(x.code.codomain, rows);
  auto res = fiber_entropy_optimizer(x.code, nu, 1, 11, 8);
  REQUIRE(res.feasibility < 1e-8);
  REQUIRE(std::fabs(res.entropy - std::log(2.0)) < 1e-8);
}

TEST_CASE("constrained optimizer recovers the clump family") {
  auto f = homclump_family(Rat(3, 2));
  auto res = fiber_entropy_optimizer(f.loop_type, f.nu_a, 1, 31, 8);
  REQUIRE(res.feasibility < 1e-10);
  double x = to_double(f.x);
  // stationary vector matches the closed form
  REQUIRE(res.stationary.size() == 6);
  for (int i = 0; i < 6; ++i)
    REQUIRE(std::fabs(res.stationary[i] - to_double(f.fixed_q[i])) < 1e-9);
  // transition rows land on the one-parameter family
  for (int i : {0, 1, 5}) {
    REQUIRE(std::fabs(res.Q(i, 0) - x) < 1e-9);
    REQUIRE(std::fabs(res.Q(i, 1) - (1 - 2 * x)) < 1e-9);
    REQUIRE(std::fabs(res.Q(i, 2) - x) < 1e-9);
  }
  REQUIRE(std::fabs(res.entropy - entropy(f.mu_a)) < 1e-10);
}

TEST_CASE("optimizer relaxations bracket the return-time value from above") {
  auto abk = gallery_load("ABK");
  auto nu = abk_nu(Rat(1, 2));
  auto sys = build_induced(abk.code, nu, 0);
  auto target = abramov_entropy(sys);

  // matching only k-block marginals is a relaxation of the fiber: the
  // optimum dominates the Abramov value and tightens as the order grows
  double prev = 1e9;
  for (int order : {1, 2, 3}) {
    auto res = fiber_entropy_optimizer(abk.code, nu, order, 7, 6);
    REQUIRE(res.feasibility < 1e-7);
    REQUIRE(res.entropy >= target.h_mu - 1e-9);
    REQUIRE(res.entropy >= entropy(nu) - 1e-8);
    REQUIRE(res.entropy <= prev + 1e-9);
    prev = res.entropy;
  }
  // by order 3 the gap over the supremum has shrunk well below its k=1 size
  REQUIRE(prev - target.h_mu < 3e-4);

  // deterministic given the seed
  auto res = fiber_entropy_optimizer(abk.code, nu, 2, 7, 6);
  auto res2 = fiber_entropy_optimizer(abk.code, nu, 2, 7, 6);
  REQUIRE(res.entropy == res2.entropy);
  REQUIRE(res.best_restart == res2.best_restart);
}

TEST_CASE("optimizer detects uncovered image blocks") {
  Sft x = make_sft({"0", "1"}, {{"0", "1"}, {"1", "0"}});
  Sft y = make_sft({"0", "1"}, {{"0", "0"}, {"0", "1"}, {"1", "0"}});
  FactorCode code{x, y, {0, 1}};
  REQUIRE(validate_code(code).ok);
  Mat<Rat> rows(2, 2);
  rows(0, 0) = Rat(1, 2);
  rows(0, 1) = Rat(1, 2);
  rows(1, 0) = Rat(1);
  auto nu = make_markov(y, rows);
  REQUIRE_THROWS_AS(fiber_entropy_optimizer(code, nu, 2, 1, 2), Error);
}
