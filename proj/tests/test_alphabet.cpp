#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plate/alphabet.hpp"
#include "plate/errors.hpp"

using plate::Alphabet;

TEST_CASE("default alphabet is A-Z then 0-9 with a trailing blank") {
  Alphabet a;
  CHECK(a.size() == 36);
  CHECK(a.blank_index() == 36);
  CHECK(a.num_classes() == 37);
  CHECK(a.symbol(0) == 'A');
  CHECK(a.symbol(25) == 'Z');
  CHECK(a.symbol(26) == '0');
  CHECK(a.symbol(35) == '9');
}

TEST_CASE("encode maps characters to class indices") {
  Alphabet a;
  CHECK(a.encode("A0") == std::vector<int>{0, 26});
  CHECK(a.encode("ABZ919") == std::vector<int>{0, 1, 25, 35, 27, 35});
  CHECK(a.encode("").empty());
}

TEST_CASE("decode inverts encode") {
  Alphabet a;
  for (const std::string s : {"ABC123", "ZZZ", "0000", "Q9Q9Q9Q9"}) {
    CHECK(a.decode(a.encode(s)) == s);
  }
}

TEST_CASE("characters outside the alphabet are rejected with context") {
  Alphabet a;
  CHECK_THROWS_AS((void)a.encode("AB-12"), plate::EncodingError);
  try {
    (void)a.encode("AB-12");
    FAIL("expected a throw");
  } catch (const plate::EncodingError& e) {
    CHECK(std::string(e.what()).find('-') != std::string::npos);
  }
  CHECK_THROWS_AS((void)a.encode("abc"), plate::EncodingError);
  CHECK_THROWS_AS((void)a.encode("A B"), plate::EncodingError);
}

TEST_CASE("decode validates indices") {
  Alphabet a;
  CHECK_THROWS_AS((void)a.decode({36}), plate::ArgumentError);  // blank
  CHECK_THROWS_AS((void)a.decode({-1}), plate::ArgumentError);
  CHECK_THROWS_AS((void)a.decode({99}), plate::ArgumentError);
}

TEST_CASE("custom alphabets work and duplicates are rejected") {
  Alphabet hex("0123456789ABCDEF");
  CHECK(hex.size() == 16);
  CHECK(hex.blank_index() == 16);
  CHECK(hex.encode("FF") == std::vector<int>{15, 15});
  CHECK_THROWS_AS(Alphabet("AAB"), plate::ArgumentError);
  CHECK_THROWS_AS(Alphabet(""), plate::ArgumentError);
}

TEST_CASE("contains and index agree") {
  Alphabet a;
  CHECK(a.contains('A'));
  CHECK(a.contains('9'));
  CHECK_FALSE(a.contains('a'));
  CHECK_FALSE(a.contains(' '));
  CHECK(a.index('C') == 2);
  CHECK_FALSE(a.index('-').has_value());
}
