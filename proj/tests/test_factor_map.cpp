#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "relent/factor_map.hpp"
#include "relent/gallery.hpp"

using namespace relent;

namespace {

MarkovMeasure abk_nu(Rat q) {
  Sft y = gallery_load("ABK").code.codomain;
  Mat<Rat> rows(2, 2);
  rows(y.symbol_index("a"), y.symbol_index("b")) = Rat(1);
  rows(y.symbol_index("b"), y.symbol_index("a")) = q;
  rows(y.symbol_index("b"), y.symbol_index("b")) = 1 - q;
  return make_markov(y, rows);
}

// Lift of an iid bit process with P(1) = p to the pair presentation used by
// the XOR code: symbol (r s) steps to (s t) with probability of the new bit.
MarkovMeasure xor_lift(Rat p) {
  Sft x = gallery_load("XOR").code.domain;
  Mat<Rat> rows(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (x.edge(i, j)) rows(i, j) = (j % 2 == 1) ? p : 1 - p;
  return make_markov(x, rows);
}

Word abk_word(const FactorCode& c, const std::string& s) { return parse_word(c.codomain, s); }

}  // namespace

TEST_CASE("code validation") {
  for (auto& e : gallery()) {
    auto v = validate_code(e.code);
    REQUIRE(v.ok);
  }
  // an edge of the domain must map to an edge of the codomain
  Sft x = make_sft({"0", "1"}, {{"0", "0"}, {"0", "1"}, {"1", "0"}});
  Sft y = make_sft({"0", "1"}, {{"0", "1"}, {"1", "0"}});
  FactorCode bad{x, y, {0, 1}};
  auto v = validate_code(bad);
  REQUIRE(!v.ok);  // 0 -> 0 upstairs has no image edge
}

TEST_CASE("code file format round-trips") {
  auto e = gallery_load("ABK");
  std::string text = print_code(e.code);
  auto back = parse_code(text, e.code.domain, e.code.codomain);
  REQUIRE(back.map == e.code.map);
  REQUIRE(print_code(back) == text);
  REQUIRE_THROWS_AS(parse_code("map:\na -> a\n", e.code.domain, e.code.codomain), Error);
  REQUIRE_THROWS_AS(
      parse_code("map:\na -> a\nb1 -> b\nb2 -> b\nb1 -> a\n", e.code.domain, e.code.codomain),
      Error);
}

TEST_CASE("preimage counts match exhaustive enumeration") {
  for (auto& e : gallery()) {
    TransferFamily tf(e.code);
    for (int n = 1; n <= 6; ++n)
      for (auto& y : enumerate_words(e.code.codomain, n))
        REQUIRE(tf.count(y) == BigInt(oracle::preimage_count(e.code, y)));
  }
}

TEST_CASE("preimages of return words grow linearly for the two-lane code") {
  auto e = gallery_load("ABK");
  for (int k = 1; k <= 20; ++k) {
    Word y{e.code.codomain.symbol_index("a")};
    for (int t = 0; t < k; ++t) y.push_back(e.code.codomain.symbol_index("b"));
    y.push_back(e.code.codomain.symbol_index("a"));
    REQUIRE(count_preimages(e.code, y) == BigInt(k + 1));
  }
  REQUIRE(count_preimages(e.code, abk_word(e.code, "b")) == 2);
  REQUIRE_THROWS_AS(count_preimages(e.code, abk_word(e.code, "aa")), Error);
}

TEST_CASE("preimage counts are log-subadditive across splits") {
  for (auto name : {"ABK", "HOMCPLUS"}) {
    auto e = gallery_load(name);
    TransferFamily tf(e.code);
    for (auto& y : enumerate_words(e.code.codomain, 7)) {
      BigInt whole = tf.count(y);
      if (whole == 0) continue;
      for (size_t cut = 1; cut + 1 < y.size(); ++cut) {
        // overlap one symbol so concatenation respects the edge constraint
        Word left(y.begin(), y.begin() + cut + 1);
        Word right(y.begin() + cut, y.end());
        REQUIRE(whole <= tf.count(left) * tf.count(right));
      }
    }
  }
}

TEST_CASE("prefix log-counts track exact counts") {
  auto e = gallery_load("ABK");
  TransferFamily tf(e.code);
  Word y = abk_word(e.code, "abbbabba");
  std::vector<double> lp;
  REQUIRE(tf.log_prefix_counts(y, lp));
  for (size_t t = 0; t < y.size(); ++t) {
    Word prefix(y.begin(), y.begin() + t + 1);
    REQUIRE(std::fabs(lp[t] - std::log(to_double(Rat(tf.count(prefix))))) < 1e-10);
  }
  REQUIRE(!tf.log_prefix_counts(abk_word(e.code, "aa"), lp));
}

TEST_CASE("clump analysis finds singletons at the right depth") {
  auto abk = gallery_load("ABK");
  auto r = clump_analysis(abk.code, 4);
  REQUIRE(r.first_singleton.has_value());
  REQUIRE(r.first_singleton->first == 1);
  REQUIRE(format_word(abk.code.codomain, r.first_singleton->second) == "a");

  auto homc = clump_analysis(gallery_load("HOMC").code, 4);
  REQUIRE(!homc.first_singleton.has_value());
  for (auto& lvl : homc.levels) {
    REQUIRE(lvl.min_count >= 2);
    REQUIRE(lvl.singletons.empty());
  }

  auto plus = gallery_load("HOMCPLUS");
  auto rp = clump_analysis(plus.code, 4);
  REQUIRE(rp.first_singleton.has_value());
  REQUIRE(rp.first_singleton->first == 2);
  REQUIRE(format_word(plus.code.codomain, rp.first_singleton->second) == "bb");
  bool abba = false;
  for (auto& [y, x] : rp.levels[3].singletons)
    if (format_word(plus.code.codomain, y) == "abba") {
      abba = true;
      REQUIRE(format_word(plus.code.domain, x) == "a1 b1 b1 a1");
    }
  REQUIRE(abba);

  auto ex5 = clump_analysis(gallery_load("EX5").code, 6);
  REQUIRE(!ex5.first_singleton.has_value());
}

TEST_CASE("fiber-size bound over charged symbols") {
  auto abk = gallery_load("ABK");
  auto nu = abk_nu(Rat(1, 2));
  auto b = bound_N(abk.code, charged_symbols(nu));
  REQUIRE(b.value == 1);  // symbol a has a singleton fiber

  auto x = gallery_load("XOR");
  std::vector<int> both{0, 1};
  REQUIRE(bound_N(x.code, both).value == 2);

  // charging fewer symbols can only raise the minimum
  auto homc = gallery_load("HOMC");
  int a = homc.code.codomain.symbol_index("a");
  int bsym = homc.code.codomain.symbol_index("b");
  REQUIRE(bound_N(homc.code, {a, bsym}).value == 2);
  REQUIRE(bound_N(homc.code, {a}).value >= bound_N(homc.code, {a, bsym}).value);
  REQUIRE_THROWS_AS(bound_N(homc.code, {}), Error);
}

TEST_CASE("pushforwards of lifts") {
  auto x = gallery_load("XOR");
  auto uniform = xor_lift(Rat(1, 2));
  for (int n = 1; n <= 6; ++n) {
    auto d = pushforward_blocks_exact(uniform, x.code, n);
    REQUIRE(static_cast<int>(d.size()) == (1 << n));
    for (auto& [w, p] : d) REQUIRE(p == Rat(1, BigInt(1) << n));
  }
  // complementary bit biases push to the same hidden-Markov image
  auto b7 = xor_lift(Rat(7, 10));
  auto b3 = xor_lift(Rat(3, 10));
  for (int n = 1; n <= 12; ++n)
    REQUIRE(pushforward_blocks_exact(b7, x.code, n) == pushforward_blocks_exact(b3, x.code, n));

  // length-1 pushforward is the stationary image
  auto d1 = pushforward_blocks_exact(b7, x.code, 1);
  Rat mass0 = b7.piq[0] + b7.piq[3];  // symbols 00 and 11 map to 0
  REQUIRE(d1.at(Word{0}) == mass0);

  // marginal consistency downstairs
  auto d4 = pushforward_blocks_exact(b7, x.code, 4);
  auto d3 = pushforward_blocks_exact(b7, x.code, 3);
  std::map<Word, Rat> drop;
  for (auto& [w, p] : d4) drop[Word(w.begin(), w.end() - 1)] += p;
  REQUIRE(drop == d3);
}

TEST_CASE("image subshift check spots missing words") {
  for (auto& e : gallery()) REQUIRE(image_subshift_check(e.code, 6).ok);
  Sft x = make_sft({"0", "1"}, {{"0", "0"}, {"0", "1"}, {"1", "0"}});
  FactorCode not_onto{x, full_shift({"0", "1"}), {0, 1}};
  REQUIRE(validate_code(not_onto).ok);
  auto chk = image_subshift_check(not_onto, 3);
  REQUIRE(!chk.ok);
  bool has11 = false;
  for (auto& w : chk.missing)
    if (w == Word{1, 1}) has11 = true;
  REQUIRE(has11);
}

TEST_CASE("window samplers honor their source") {
  auto abk = gallery_load("ABK");
  auto nu = abk_nu(Rat(1, 2));
  auto sm = nu_from_markov(nu);
  Rng rng(31337);
  int a_first = 0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    Word w = sm.sample(rng, 6);
    REQUIRE(word_allowed(abk.code.codomain, w));
    if (w[0] == abk.code.codomain.symbol_index("a")) ++a_first;
  }
  // pi[a] = 1/3; five standard errors of slack
  double freq = double(a_first) / trials;
  REQUIRE(std::fabs(freq - 1.0 / 3.0) < 5.0 * std::sqrt((1.0 / 3) * (2.0 / 3) / trials));

  auto orb = make_orbit(abk.code.codomain, parse_word(abk.code.codomain, "ab"));
  auto sp = nu_from_periodic(make_periodic(abk.code.codomain, orb.block));
  for (int t = 0; t < 50; ++t) {
    Word w = sp.sample(rng, 5);
    REQUIRE(word_allowed(abk.code.codomain, w));
    for (size_t i = 0; i + 1 < w.size(); ++i) REQUIRE(w[i] != w[i + 1]);
  }

  auto x = gallery_load("XOR");
  auto spf = nu_from_pushforward(xor_lift(Rat(7, 10)), x.code);
  for (int t = 0; t < 50; ++t) REQUIRE(word_allowed(x.code.codomain, spf.sample(rng, 8)));
}

TEST_CASE("fiber graph over a periodic point") {
  auto abk = gallery_load("ABK");
  auto orb = make_orbit(abk.code.codomain, parse_word(abk.code.codomain, "ab"));
  auto g = periodic_fiber_graph(abk.code, orb);
  REQUIRE(g.graph.size() == 3);  // a@0, b1@1, b2@1
  REQUIRE(std::fabs(periodic_fiber_growth(abk.code, orb) - 0.5 * std::log(2.0)) < 1e-12);

  auto fixed = make_orbit(abk.code.codomain, parse_word(abk.code.codomain, "b"));
  // two parallel lanes, no branching inside either: zero growth
  REQUIRE(std::fabs(periodic_fiber_growth(abk.code, fixed)) < 1e-12);

  auto homc = gallery_load("HOMC");
  auto ha = make_orbit(homc.code.codomain, parse_word(homc.code.codomain, "a"));
  REQUIRE(std::fabs(periodic_fiber_growth(homc.code, ha) - std::log(2.0)) < 1e-12);
}

TEST_CASE("relative entropy estimates over the base") {
  auto x = gallery_load("XOR");
  Sft y = x.code.codomain;
  Mat<Rat> rows(2, 2);
  rows(0, 0) = rows(0, 1) = rows(1, 0) = rows(1, 1) = Rat(1, 2);
  auto nu = make_markov(y, rows);
  auto r = relative_entropy_over_nu(x.code, nu_from_markov(nu), 8, 500, 99);
  // every window has exactly two preimages: the telescoped estimator dies
  REQUIRE(std::fabs(r.refined_mean) < 1e-12);
  REQUIRE(std::fabs(r.finite_n_mean - std::log(2.0) / 8) < 1e-12);

  auto abk = gallery_load("ABK");
  auto orb = make_periodic(abk.code.codomain, parse_word(abk.code.codomain, "ab"));
  auto rp = relative_entropy_over_nu(abk.code, nu_from_periodic(orb), 16, 10, 7);
  REQUIRE(rp.exact.has_value());
  REQUIRE(std::fabs(*rp.exact - 0.5 * std::log(2.0)) < 1e-12);

  // reproducible for a fixed seed
  auto nu_abk = abk_nu(Rat(1, 2));
  auto r1 = relative_entropy_over_nu(abk.code, nu_from_markov(nu_abk), 32, 400, 5);
  auto r2 = relative_entropy_over_nu(abk.code, nu_from_markov(nu_abk), 32, 400, 5);
  REQUIRE(r1.refined_mean == r2.refined_mean);
  REQUIRE(r1.finite_n_se == r2.finite_n_se);
  auto r3 = relative_entropy_over_nu(abk.code, nu_from_markov(nu_abk), 32, 400, 6);
  REQUIRE(r1.refined_mean != r3.refined_mean);
}
