// Copyright 2026 The sifkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace sifkit;
using sifkit::testing::join_lines;
using sifkit::testing::record;

TEST_CASE("fixed columns split a data record", "[reader]") {
  SourceRecord r = parse_record(record("XU", "BND", "X1", "10.0", "X2", "-3.5"), SectionKind::Bounds, 7);
  CHECK(r.line == 7);
  CHECK(r.indicator == "XU");
  CHECK(r.name2 == "BND");
  CHECK(r.name3 == "X1");
  CHECK(r.value4 == "10.0");
  CHECK(r.name5 == "X2");
  CHECK(r.value6 == "-3.5");
  CHECK_FALSE(r.expression);
}

TEST_CASE("misaligned tokens go to the nearest field", "[reader]") {
  // "X1" starts at column 13 instead of 14, the value at 22 instead of 24
  std::string line = "    OBJ      X1       2.0";
  SourceRecord r = parse_record(line, SectionKind::Variables, 1);
  CHECK(r.indicator.empty());
  CHECK(r.name2 == "OBJ");
  CHECK(r.name3 == "X1");
  CHECK(r.value4 == "2.0");
}

TEST_CASE("names filling their whole field", "[reader]") {
  SourceRecord r = parse_record(" XU BOUNDSET10VARIABLE10 2.5", SectionKind::Bounds, 1);
  CHECK(r.indicator == "XU");
  CHECK(r.name2 == "BOUNDSET10");
  CHECK(r.name3 == "VARIABLE10");
  CHECK(r.value4 == "2.5");
  SourceRecord s = parse_record("    ABCDEFGHIJ1.0", SectionKind::Variables, 1);
  CHECK(s.name2 == "ABCDEFGHIJ");
  CHECK(s.name3 == "1.0");
}

TEST_CASE("ambiguous placement is rejected", "[reader]") {
  // seven tokens never fit six fields
  CHECK_THROWS_AS(parse_record(" A B C D E F G", SectionKind::Variables, 3), Error);
  try {
    parse_record(" A B C D E F G", SectionKind::Variables, 3);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedRecord);
    CHECK(e.diagnostics().front().line == 3);
  }
}

TEST_CASE("non-numeric value fields are malformed", "[reader]") {
  CHECK_THROWS_AS(parse_record(record("", "X1", "G1", "1.2.3"), SectionKind::Variables, 1), Error);
  CHECK_THROWS_AS(parse_record(record("", "X1", "G1", "1.0", "G2", "abc"), SectionKind::Variables, 1), Error);
}

TEST_CASE("trailing comments after a dollar sign", "[reader]") {
  std::string line = record("IE", "N", "", "10");
  line.resize(62, ' ');
  line += "$-PARAMETER  size";
  SourceRecord r = parse_record(line, SectionKind::Preamble, 1);
  CHECK(r.value4 == "10");
  REQUIRE(r.trailing_comment);
  CHECK(r.is_parameter_marker());
  CHECK_FALSE(parse_record(record("IE", "N", "", "10"), SectionKind::Preamble, 1).is_parameter_marker());
}

TEST_CASE("assignment records keep the expression text", "[reader]") {
  std::string line = record("H", "X", "Y") ;
  line.resize(24, ' ');
  line += "2.0 * X ** 3";
  SourceRecord r = parse_record(line, SectionKind::ElementsIndividuals, 4);
  CHECK(r.indicator == "H");
  CHECK(r.name2 == "X");
  CHECK(r.name3 == "Y");
  REQUIRE(r.expression);
  CHECK(*r.expression == "2.0 * X ** 3");

  SourceRecord f = parse_record(" F                      X * X", SectionKind::GroupsIndividuals, 5);
  CHECK(f.indicator == "F");
  CHECK(f.name2.empty());
  CHECK(*f.expression == "X * X");
}

TEST_CASE("assignment fallback when names straddle columns", "[reader]") {
  // name field overruns into the expression column
  SourceRecord r = parse_record(" A  LONGTEMPNAME      EXP(X)", SectionKind::ElementsIndividuals, 1);
  CHECK(r.indicator == "A");
  CHECK(r.name2 == "LONGTEMPNAME");
  CHECK(*r.expression == "EXP(X)");
}

TEST_CASE("reading a whole file", "[reader]") {
  std::string text = join_lines({
      "NAME          TINY",
      "* classification OUR2-AN-1-0",
      "VARIABLES",
      record("", "X1"),
      "GROUPS",
      record("N", "OBJ", "X1", "1.0"),
      "ENDATA",
      "",
      "ELEMENTS      TINY",
      "INDIVIDUALS",
      " T  SQ",
      " F                      X * X",
      "ENDATA",
  });
  SectionedProgram p = read_sif(text);
  CHECK(p.problem_name == "TINY");
  CHECK(p.classification == "OUR2-AN-1-0");
  CHECK(p.has_endata);
  CHECK(p.endata_line == 7);
  REQUIRE(p.find(SectionKind::Variables));
  CHECK(p.find(SectionKind::Variables)->records.size() == 1);
  REQUIRE(p.find(SectionKind::ElementsIndividuals));
  CHECK(p.find(SectionKind::ElementsIndividuals)->records.size() == 2);
  CHECK(p.blocks.size() == 1);
  CHECK(p.blocks[0].label == "TINY");
  CHECK(p.blocks[0].endata_line == 13);
  CHECK_FALSE(p.find(SectionKind::Quadratic));
}

TEST_CASE("MPS style section aliases", "[reader]") {
  std::string text = join_lines({"NAME          LP", "ROWS", record("N", "COST"), "COLUMNS",
                                 record("", "X", "COST", "1.0"), "RHS", record("", "RHS", "COST", "0.0"), "ENDATA"});
  SectionedProgram p = read_sif(text);
  CHECK(p.find(SectionKind::Groups));
  CHECK(p.find(SectionKind::Variables));
  CHECK(p.find(SectionKind::Constants));
}

TEST_CASE("structural errors", "[reader]") {
  auto kinds = [](const std::string& text) {
    std::vector<ErrorKind> out;
    for (const auto& d : read_sif_collect(text).diagnostics) out.push_back(d.kind);
    return out;
  };
  SECTION("missing ENDATA") {
    auto out = read_sif_collect(sifkit::testing::read_file(sifkit::testing::data_path("NOENDATA.SIF")));
    CHECK(out.fatal);
    REQUIRE(out.diagnostics.size() == 1);
    CHECK(out.diagnostics[0].kind == ErrorKind::MissingEndata);
  }
  SECTION("no NAME line") { CHECK(kinds("") == std::vector{ErrorKind::MissingEndata}); }
  SECTION("unknown header") {
    CHECK(kinds(join_lines({"NAME          A", "WIBBLE", "ENDATA"})) == std::vector{ErrorKind::UnknownSectionHeader});
  }
  SECTION("duplicate section") {
    CHECK(kinds(join_lines({"NAME          A", "VARIABLES", "VARIABLES", "ENDATA"})) ==
          std::vector{ErrorKind::DuplicateSection});
  }
  SECTION("tab characters") {
    auto out = read_sif_collect(join_lines({"NAME          A", "VARIABLES", "\tX1", "ENDATA"}));
    REQUIRE(out.diagnostics.size() == 1);
    CHECK(out.diagnostics[0].kind == ErrorKind::MalformedRecord);
    CHECK(out.diagnostics[0].line == 3);
  }
  SECTION("read_sif throws with all diagnostics") {
    try {
      read_sif(join_lines({"NAME          A", "WIBBLE", "VARIABLES", record("", "X", "G", "x.y"), "ENDATA"}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.diagnostics().size() == 2);
    }
  }
}

TEST_CASE("CRLF line endings read like LF", "[reader]") {
  std::string lf = join_lines({"NAME          A", "VARIABLES", record("", "X1"), "ENDATA"});
  std::string crlf;
  for (char c : lf) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  CHECK(read_sif(lf) == read_sif(crlf));
}

TEST_CASE("format_sif is a fixed point of reading on the corpus", "[reader][property]") {
  for (const auto& name : sifkit::testing::valid_corpus()) {
    INFO(name);
    SectionedProgram p = read_sif(sifkit::testing::read_file(sifkit::testing::problem_path(name)));
    std::string once = format_sif(p);
    SectionedProgram q = read_sif(once);
    CHECK(q == p);
    CHECK(format_sif(q) == once);
  }
}

TEST_CASE("random data records survive format and reparse", "[reader][property]") {
  std::mt19937_64 rng(42);
  const std::vector<std::string> indicators{"", "N", "E", "XL", "ZV", "DO", "IA"};
  auto name = [&](std::size_t maxlen) {
    static const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789()_-,'";
    std::uniform_int_distribution<std::size_t> len(1, maxlen), pick(0, alphabet.size() - 1);
    std::string s;
    for (std::size_t k = len(rng); k > 0; --k) s += alphabet[pick(rng)];
    return s;
  };
  auto value = [&] {
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", d(rng));
    return std::string(buf);
  };
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 500; ++k) {
    SourceRecord r;
    r.line = k + 1;
    r.indicator = indicators[std::uniform_int_distribution<std::size_t>(0, indicators.size() - 1)(rng)];
    r.name2 = name(10);
    if (coin(rng)) r.name3 = name(10);
    if (coin(rng)) r.value4 = value();
    if (!r.value4.empty() && coin(rng)) {
      r.name5 = name(10);
      if (coin(rng)) r.value6 = value();
    }
    SourceRecord back = parse_record(format_record(r), SectionKind::Groups, r.line);
    INFO(format_record(r));
    CHECK(back == r);
  }
}
