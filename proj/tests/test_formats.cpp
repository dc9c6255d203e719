#include <catch2/catch_amalgamated.hpp>

#include "relent/gallery.hpp"
#include "relent/measure.hpp"

using namespace relent;

TEST_CASE("rational parsing") {
  REQUIRE(parse_rational("3/4") == Rat(3, 4));
  REQUIRE(parse_rational("0.25") == Rat(1, 4));
  REQUIRE(parse_rational("2") == Rat(2));
  REQUIRE(parse_rational("-1/3") == Rat(-1, 3));
  REQUIRE(parse_rational("-0.5") == Rat(-1, 2));
  REQUIRE(parse_rational(".5") == Rat(1, 2));
  // long decimals stay exact
  REQUIRE(parse_rational("0.0000000001") == Rat(1, BigInt("10000000000")));

  // sign belongs on the numerator
  for (auto bad : {"", "1/0", "3/-2", "abc", "1.2.3", "1/", "--2", "0x10"}) {
    INFO("token: '" << bad << "'");
    REQUIRE_THROWS_AS(parse_rational(bad), Error);
    try {
      parse_rational(bad);
    } catch (const Error& e) {
      REQUIRE(e.kind == "validation");
    }
  }
}

TEST_CASE("rational printing") {
  REQUIRE(rat_to_string(Rat(2)) == "2");
  REQUIRE(rat_to_string(Rat(1, 4)) == "1/4");
  REQUIRE(rat_to_string(Rat(-3, 2)) == "-3/2");
  REQUIRE(rat_to_string(Rat(0)) == "0");
  // print -> parse is the identity on rationals
  for (auto q : {Rat(7, 3), Rat(-1, 9), Rat(5), Rat(0)})
    REQUIRE(parse_rational(rat_to_string(q)) == q);
}

TEST_CASE("system text format") {
  std::string text =
      "# comment line\n"
      "alphabet: 0 1   # trailing comment\n"
      "\n"
      "0 -> 0\n"
      "0 -> 1\n"
      "1 -> 0\n";
  Sft s = parse_sft(text);
  REQUIRE(s.symbols == std::vector<std::string>{"0", "1"});
  REQUIRE(s.edge(0, 0));
  REQUIRE(s.edge(0, 1));
  REQUIRE(s.edge(1, 0));
  REQUIRE(!s.edge(1, 1));
  // canonical form is a fixed point
  REQUIRE(parse_sft(print_sft(s)).adj == s.adj);
  REQUIRE(print_sft(parse_sft(print_sft(s))) == print_sft(s));

  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind;
    }
    return std::string("no-throw");
  };
  REQUIRE(kind_of([] { parse_sft("0 -> 1\n"); }) == "validation");
  REQUIRE(kind_of([] { parse_sft("alphabet: a a\na -> a\n"); }) == "validation");
  REQUIRE(kind_of([] { parse_sft("alphabet:\n"); }) == "validation");
  REQUIRE(kind_of([] { parse_sft("alphabet: a b\na b\n"); }) == "validation");
  REQUIRE(kind_of([] { parse_sft("alphabet: a b\na -> c\n"); }) == "validation");
  REQUIRE(kind_of([] { parse_sft(""); }) == "validation");
}

TEST_CASE("word text forms") {
  Sft g = gallery_load("GOLDEN").code.domain;
  REQUIRE(parse_word(g, "0100") == Word{0, 1, 0, 0});
  REQUIRE(parse_word(g, "0 1 0 0") == Word{0, 1, 0, 0});
  REQUIRE(format_word(g, {0, 1, 0}) == "010");
  REQUIRE_THROWS_AS(parse_word(g, "012"), Error);

  Sft abk_x = gallery_load("ABK").code.domain;  // multi-char names
  REQUIRE(parse_word(abk_x, "a b1 b2 a") == Word{0, 1, 2, 0});
  REQUIRE(format_word(abk_x, {0, 1, 2, 0}) == "a b1 b2 a");
  REQUIRE(parse_word(abk_x, format_word(abk_x, {0, 1, 1, 0})) == Word{0, 1, 1, 0});
  REQUIRE_THROWS_AS(parse_word(abk_x, "a b3"), Error);

  // a single token that names a symbol is taken as that symbol
  REQUIRE(parse_word(g, "0") == Word{0});
}

TEST_CASE("code text format") {
  auto e = gallery_load("ABK");
  std::string text = print_code(e.code);
  auto back = parse_code(text, e.code.domain, e.code.codomain);
  REQUIRE(back.map == e.code.map);
  REQUIRE(print_code(back) == text);

  auto& X = e.code.domain;
  auto& Y = e.code.codomain;
  REQUIRE_THROWS_AS(parse_code("a -> a\n", X, Y), Error);                      // no header
  REQUIRE_THROWS_AS(parse_code("map:\na a\n", X, Y), Error);                   // no arrow
  REQUIRE_THROWS_AS(parse_code("map:\nz -> a\n", X, Y), Error);                // unknown domain
  REQUIRE_THROWS_AS(parse_code("map:\na -> z\n", X, Y), Error);                // unknown codomain
  REQUIRE_THROWS_AS(parse_code("map:\na -> a\na -> b\nb1 -> b\nb2 -> b\n", X, Y),
                    Error);                                                    // duplicate
  REQUIRE_THROWS_AS(parse_code("map:\na -> a\nb1 -> b\n", X, Y), Error);       // b2 unmapped
}

TEST_CASE("measure text format") {
  Sft g = gallery_load("GOLDEN").code.domain;

  SECTION("decimals become exact rationals") {
    auto mu = parse_measure(
        "markov\nrows:\n0.5 0.5\n1 0\nstationary: 2/3 1/3\n", g);
    REQUIRE(mu.exact);
    REQUIRE(mu.Pq(0, 0) == Rat(1, 2));
    REQUIRE(mu.Pq(1, 0) == Rat(1));
    REQUIRE(mu.piq[0] == Rat(2, 3));
    REQUIRE(mu.piq[1] == Rat(1, 3));
  }

  SECTION("stationary line is optional and recomputed") {
    auto mu = parse_measure("markov\nrows:\n1/2 1/2\n1 0\n", g);
    REQUIRE(mu.piq[0] == Rat(2, 3));
  }

  SECTION("print then parse is stable for exact measures") {
    auto mu = parse_measure("markov\nrows:\n2/5 3/5\n1 0\n", g);
    std::string text = print_measure(mu);
    auto back = parse_measure(text, g);
    REQUIRE(back.Pq(0, 1) == Rat(3, 5));
    REQUIRE(print_measure(back) == text);
  }

  SECTION("rejects") {
    auto kind_of = [&](const std::string& text) {
      try {
        parse_measure(text, g);
      } catch (const Error& e) {
        return e.kind;
      }
      return std::string("no-throw");
    };
    REQUIRE(kind_of("rows:\n1/2 1/2\n1 0\n") == "validation");       // missing header
    REQUIRE(kind_of("markov\n1/2 1/2\n1 0\n") == "validation");      // missing rows:
    REQUIRE(kind_of("markov\nrows:\n1/2 1/2\n") == "validation");    // too few rows
    REQUIRE(kind_of("markov\nrows:\n1/2 1/2 0\n1 0\n") == "validation");
    REQUIRE(kind_of("markov\nrows:\n1/2 1/3\n1 0\n") == "validation");  // row sum
    REQUIRE(kind_of("markov\nrows:\n1/2 1/2\n0 1\n") == "validation");  // off-support
    REQUIRE(kind_of("markov\nrows:\n1/2 1/2\n1 0\nstationary: 1/2 1/2\n") ==
            "validation");                                            // wrong stationary
    REQUIRE(kind_of("markov\nrows:\n1/2 1/2\n1 0\nstationary: 1\n") == "validation");
  }
}

TEST_CASE("inexact measures print with full precision") {
  Sft g = gallery_load("GOLDEN").code.domain;
  auto mu = parry_measure(g);
  REQUIRE(!mu.exact);
  std::string text = print_measure(mu);
  // the printed digits fully determine the doubles
  std::istringstream is(text);
  std::string head, rowskw;
  std::getline(is, head);
  std::getline(is, rowskw);
  double p00 = 0;
  is >> p00;
  REQUIRE(p00 == mu.P(0, 0));
}
