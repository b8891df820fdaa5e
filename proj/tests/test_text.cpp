#include <doctest.h>

#include <cmath>
#include <string>

#include "coupled/errors.hpp"
#include "coupled/rng.hpp"
#include "coupled/text.hpp"

using coupled::format_double;
using coupled::parse_finite_double;
using coupled::split_csv_line;

TEST_CASE("format_double round-trips exactly") {
  coupled::Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const double x = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform_int(-12, 12));
    const std::string s = format_double(x);
    CHECK(parse_finite_double(s, "roundtrip") == x);
  }
  CHECK(parse_finite_double(format_double(0.1), "t") == 0.1);
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("parse_finite_double rejects junk and non-finite cells") {
  CHECK(parse_finite_double("3.25", "ok") == 3.25);
  CHECK(parse_finite_double("-4e2", "ok") == -400.0);
  CHECK_THROWS_AS(parse_finite_double("", "empty"), coupled::DataError);
  CHECK_THROWS_AS(parse_finite_double("1.2.3", "bad"), coupled::DataError);
  CHECK_THROWS_AS(parse_finite_double("abc", "bad"), coupled::DataError);
  CHECK_THROWS_AS(parse_finite_double("1.5x", "trailing"), coupled::DataError);
  CHECK_THROWS_AS(parse_finite_double("nan", "nonfinite"), coupled::DataError);
  CHECK_THROWS_AS(parse_finite_double("inf", "nonfinite"), coupled::DataError);
  CHECK_THROWS_AS(parse_finite_double("1e999", "overflow"), coupled::DataError);
}

TEST_CASE("parse error message names the offending location") {
  try {
    parse_finite_double("??", "row 7, column x1");
    FAIL("expected a throw");
  } catch (const coupled::DataError& e) {
    CHECK(std::string(e.what()).find("row 7, column x1") != std::string::npos);
  }
}

TEST_CASE("split_csv_line basics") {
  CHECK(split_csv_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_csv_line("a") == std::vector<std::string>{"a"});
  CHECK(split_csv_line(",,") == std::vector<std::string>{"", "", ""});
  CHECK(split_csv_line("x,y\r") == std::vector<std::string>{"x", "y"});
  CHECK(split_csv_line("1,,3") == std::vector<std::string>{"1", "", "3"});
}
