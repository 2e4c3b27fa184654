#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "haarpr/csv.hpp"
#include "haarpr/errors.hpp"

using namespace haarpr;

TEST_CASE("doubles round-trip through the 17-digit format") {
  for (double x : {1.0 / 3.0, 2.0 + 0.09, -1.2345678901234567e-11, 0.0,
                   6.02214076e23}) {
    const std::string s = format_double(x);
    CHECK(std::stod(s) == x);
  }
}

TEST_CASE("csv table serialization") {
  CsvTable t;
  t.header = {"q", "F"};
  t.rows.push_back({0.0, 0.5});
  t.rows.push_back({0.25, -1.0 / 7.0});
  const std::string s = t.to_string();
  CHECK(s.substr(0, 4) == "q,F\n");
  CHECK(s.find("-0.14285714285714285") != std::string::npos);
}

TEST_CASE("measurement csv io") {
  const std::string path = "test_y_io.csv";
  write_y_csv(path, {1.5, -0.25, 2.0 / 3.0});
  auto back = load_y_csv(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0] == 1.5);
  CHECK(back[2] == 2.0 / 3.0);

  std::ofstream bad("test_bad_header.csv");
  bad << "x\n1.0\n";
  bad.close();
  CHECK_THROWS_AS(load_y_csv("test_bad_header.csv"), param_error);
  CHECK_THROWS_AS(load_y_csv("does_not_exist.csv"), param_error);
  std::remove(path.c_str());
  std::remove("test_bad_header.csv");
}
