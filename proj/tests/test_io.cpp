#include "thermogap/io.hpp"

#include <doctest.h>

#include <sstream>

using namespace thermogap;

TEST_CASE("parse_grid") {
  SUBCASE("inclusive range") {
    auto g = parse_grid("-1:1:0.5");
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(-1.0));
    CHECK(g.back() == doctest::Approx(1.0));
    CHECK(g[2] == doctest::Approx(0.0));
  }
  SUBCASE("descending range") {
    auto g = parse_grid("1:-1:-1");
    REQUIRE(g.size() == 3);
    CHECK(g[1] == doctest::Approx(0.0));
  }
  SUBCASE("single point") {
    auto g = parse_grid("2.5");
    REQUIRE(g.size() == 1);
    CHECK(g[0] == doctest::Approx(2.5));
  }
  SUBCASE("non-divisible step still hits the endpoint region") {
    auto g = parse_grid("0:1:0.3");
    CHECK(g.size() == 4);  // 0, 0.3, 0.6, 0.9
  }
  SUBCASE("rejects malformed input") {
    CHECK_THROWS_AS(parse_grid("a:b:c"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("1:2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("0:1:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("0:1:-0.5"), std::invalid_argument);
    CHECK_THROWS_AS(parse_grid("1.2.3"), std::invalid_argument);
  }
}

TEST_CASE("format_double") {
  SUBCASE("17 significant digits round-trip") {
    for (double x : {1.0 / 3.0, 0.9494512848767342, -1.2345678901234567e-12,
                     2.0, 1e300}) {
      CHECK(std::stod(format_double(x)) == x);
    }
  }
  SUBCASE("non-finite values") {
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(json_number(std::numeric_limits<double>::quiet_NaN()) == "null");
    CHECK(json_number(std::numeric_limits<double>::infinity()) == "null");
  }
}

TEST_CASE("write_csv") {
  SweepTable t;
  t.columns = {"a", "b"};
  t.add_row({1.0, 2.0});

  SUBCASE("clean table omits the error column") {
    std::ostringstream os;
    write_csv(os, t);
    CHECK(os.str() == "a,b\n1,2\n");
  }
  SUBCASE("failed rows add the error column") {
    t.add_failed({3.0}, "boom");
    std::ostringstream os;
    write_csv(os, t);
    const std::string out = os.str();
    CHECK(out.find("a,b,error") == 0);
    CHECK(out.find("3,nan,boom") != std::string::npos);
    CHECK(out.find("1,2,\n") != std::string::npos);
  }
}

TEST_CASE("write_json") {
  OutputRecord rec;
  rec.meta_str("command", "test");
  rec.meta_int("seed", 7);
  rec.meta_num("value", 0.5);
  rec.table.columns = {"x"};
  rec.table.add_row({1.5});
  rec.table.add_failed({}, "bad \"point\"");

  std::ostringstream os;
  write_json(os, rec, {"\"extra\": 3"});
  const std::string out = os.str();
  CHECK(out.find("\"command\": \"test\"") != std::string::npos);
  CHECK(out.find("\"seed\": 7") != std::string::npos);
  CHECK(out.find("\"x\": 1.5") != std::string::npos);
  CHECK(out.find("\"extra\": 3") != std::string::npos);
  CHECK(out.find("\"x\": null") != std::string::npos);
  CHECK(out.find("\\\"point\\\"") != std::string::npos);
  // insertion order of metadata is preserved
  CHECK(out.find("\"command\"") < out.find("\"seed\""));
  CHECK(out.find("\"seed\"") < out.find("\"value\""));
}
