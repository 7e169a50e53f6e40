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

#include <cmath>
#include <random>
#include <set>

#include "support.hpp"

using namespace sifkit;
using sifkit::testing::join_lines;
using sifkit::testing::record;

namespace {

SourceRecord rec(const std::string& f1, const std::string& f2 = "", const std::string& f3 = "",
                 const std::string& f4 = "", const std::string& f5 = "", const std::string& f6 = "", int line = 1) {
  SourceRecord r;
  r.line = line;
  r.indicator = f1;
  r.name2 = f2;
  r.name3 = f3;
  r.value4 = f4;
  r.name5 = f5;
  r.value6 = f6;
  return r;
}

ErrorKind directive_error(ParameterEnvironment env, const SourceRecord& r) {
  try {
    apply_param_directive(env, r);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::BadDump;
}

std::vector<std::string> expand(const std::vector<SourceRecord>& recs, ParameterEnvironment env = {}) {
  std::vector<std::string> out;
  expand_loops(recs, env, [&](const SourceRecord& r) { out.push_back(r.indicator + " " + r.name2 + " " + r.name3); });
  return out;
}

std::vector<ErrorKind> decode_errors(const std::vector<std::string>& lines, std::vector<ParamValue> params = {}) {
  std::vector<ErrorKind> out;
  for (const auto& d : decode(join_lines(lines), params).diagnostics) out.push_back(d.kind);
  return out;
}

}  // namespace

TEST_CASE("name registry assigns dense indices", "[expander]") {
  NameRegistry reg;
  CHECK(reg.resolve("X1") == std::pair<std::size_t, bool>{0, true});
  CHECK(reg.resolve("X2") == std::pair<std::size_t, bool>{1, true});
  CHECK(reg.resolve("X1") == std::pair<std::size_t, bool>{0, false});
  CHECK(reg.find("X2") == 1u);
  CHECK_FALSE(reg.find("X3"));
  CHECK(reg.size() == 2);
}

TEST_CASE("registry indices are dense under random insertion", "[expander][property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, 199);
  for (int trial = 0; trial < 50; ++trial) {
    NameRegistry reg;
    std::map<std::string, std::size_t> seen;
    for (int k = 0; k < 300; ++k) {
      std::string name = "N" + std::to_string(pick(rng));
      auto [index, fresh] = reg.resolve(name);
      CHECK(fresh == !seen.count(name));
      if (fresh) {
        CHECK(index == seen.size());
        seen[name] = index;
      }
      CHECK(seen.at(name) == index);
    }
    for (std::size_t k = 0; k < reg.size(); ++k) CHECK(reg.find(reg.names()[k]) == k);
  }
}

TEST_CASE("problem renaming", "[expander]") {
  CHECK(rename_problem("C-RELOAD") == "CmRELOAD");
  CHECK(rename_problem("10FOLDTR") == "n10FOLDTR");
  CHECK(rename_problem("ROSENBR") == "ROSENBR");
  CHECK(rename_problem("A+B*C/D") == "ApBtCdD");
}

TEST_CASE("renaming round-trips random names", "[expander][property]") {
  // independent inverse of the substitution table
  auto invert = [](const std::string& s) {
    std::string out;
    std::size_t k = 0;
    if (!s.empty() && s[0] == 'n' && s.size() > 1 && std::isdigit(static_cast<unsigned char>(s[1]))) k = 1;
    for (; k < s.size(); ++k) {
      switch (s[k]) {
        case 'm': out += '-'; break;
        case 'p': out += '+'; break;
        case 't': out += '*'; break;
        case 'd': out += '/'; break;
        default: out += s[k];
      }
    }
    return out;
  };
  std::mt19937_64 rng(5);
  const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-+*/";
  std::uniform_int_distribution<std::size_t> len(1, 12), pick(0, alphabet.size() - 1);
  for (int k = 0; k < 100; ++k) {
    std::string name;
    for (std::size_t n = len(rng); n > 0; --n) name += alphabet[pick(rng)];
    std::string renamed = rename_problem(name);
    INFO(name << " -> " << renamed);
    CHECK(renamed.find_first_of("-+*/") == std::string::npos);
    CHECK_FALSE(std::isdigit(static_cast<unsigned char>(renamed[0])));
    CHECK(invert(renamed) == name);
  }
}

TEST_CASE("integer and real directives", "[expander]") {
  ParameterEnvironment env;
  env = eval_param_directive(env, rec("IE", "N", "", "10"));
  env = eval_param_directive(env, rec("IA", "N+1", "N", "1"));
  env = eval_param_directive(env, rec("IS", "M", "N", "4"));
  env = eval_param_directive(env, rec("IM", "2N", "N", "2"));
  env = eval_param_directive(env, rec("ID", "Q", "N", "25"));
  env = eval_param_directive(env, rec("I*", "P", "N", "", "2N"));
  env = eval_param_directive(env, rec("I/", "R", "2N", "", "M"));
  CHECK(env.integer("N+1") == 11);
  CHECK(env.integer("M") == -6);
  CHECK(env.integer("2N") == 20);
  CHECK(env.integer("Q") == 2);
  CHECK(env.integer("P") == 200);
  CHECK(env.integer("R") == -3);

  env = eval_param_directive(env, rec("RI", "RN", "N"));
  env = eval_param_directive(env, rec("RD", "H", "RN", "1.0"));
  env = eval_param_directive(env, rec("RF", "S", "SQRT", "16.0"));
  env = eval_param_directive(env, rec("RE", "RZ", "", "0.0"));
  env = eval_param_directive(env, rec("R(", "C", "COS", "", "RZ"));
  env = eval_param_directive(env, rec("R+", "T", "S", "", "C"));
  CHECK(env.real("RN") == 10.0);
  CHECK(env.real("H") == 0.1);
  CHECK(env.real("S") == 4.0);
  CHECK(env.real("C") == 1.0);
  CHECK(env.real("T") == 5.0);
}

TEST_CASE("directive errors", "[expander]") {
  ParameterEnvironment env;
  env.set_integer("N", 3);
  env.set_real("X", 1.5);
  CHECK(directive_error(env, rec("IA", "M", "NOPE", "1")) == ErrorKind::UnboundParameter);
  CHECK(directive_error(env, rec("IA", "M", "X", "1")) == ErrorKind::TypeMismatch);
  CHECK(directive_error(env, rec("RA", "Y", "N", "1")) == ErrorKind::TypeMismatch);
  CHECK(directive_error(env, rec("ID", "M", "Z", "1")) == ErrorKind::UnboundParameter);
  CHECK(directive_error(env, rec("IZ", "M", "N", "1")) == ErrorKind::UnknownDirective);
  CHECK(directive_error(env, rec("RF", "Y", "NOSUCH", "1")) != ErrorKind::BadDump);
  env.set_integer("Z", 0);
  CHECK(directive_error(env, rec("ID", "M", "Z", "1")) == ErrorKind::DomainError);
  CHECK(directive_error(env, rec("IE", "M", "", "1.5")) != ErrorKind::BadDump);
}

TEST_CASE("setting a name retypes it", "[expander]") {
  ParameterEnvironment env;
  env.set_integer("K", 2);
  env.set_real("K", 2.5);
  CHECK(env.real("K") == 2.5);
  CHECK_THROWS_AS(env.integer("K"), Error);
}

TEST_CASE("index substitution", "[expander]") {
  ParameterEnvironment env;
  env.set_integer("I", 1);
  env.set_integer("J", 2);
  env.set_integer("I+1", 2);
  CHECK(substitute_indices("X(I,J)", env) == "X1,2");
  CHECK(substitute_indices("X(I+1)", env) == "X2");
  CHECK(substitute_indices("X(3,J)", env) == "X3,2");
  CHECK(substitute_indices("PLAIN", env) == "PLAIN");
  CHECK(substitute_indices("'SCALE'", env) == "'SCALE'");
  CHECK_THROWS_AS(substitute_indices("X(K)", env), Error);
}

TEST_CASE("loops", "[expander]") {
  SECTION("nested loops") {
    CHECK(expand({rec("DO", "I", "1", "", "2"), rec("DO", "J", "1", "", "2"), rec("X", "X(I,J)"), rec("OD", "J"),
                  rec("OD", "I")}) == std::vector<std::string>{"X X1,1 ", "X X1,2 ", "X X2,1 ", "X X2,2 "});
  }
  SECTION("ND closes all loops") {
    CHECK(expand({rec("DO", "I", "1", "", "2"), rec("DO", "J", "1", "", "1"), rec("X", "Y(J,I)"), rec("ND")}) ==
          std::vector<std::string>{"X Y1,1 ", "X Y1,2 "});
  }
  SECTION("increments and empty ranges") {
    CHECK(expand({rec("DO", "I", "1", "", "7"), rec("DI", "I", "3"), rec("X", "X(I)"), rec("OD", "I")}) ==
          std::vector<std::string>{"X X1 ", "X X4 ", "X X7 "});
    CHECK(expand({rec("DO", "I", "5", "", "1"), rec("DI", "I", "-2"), rec("X", "X(I)"), rec("OD", "I")}) ==
          std::vector<std::string>{"X X5 ", "X X3 ", "X X1 "});
    CHECK(expand({rec("DO", "I", "3", "", "2"), rec("X", "X(I)"), rec("OD", "I")}).empty());
  }
  SECTION("bounds taken from parameters") {
    ParameterEnvironment env;
    env.set_integer("N", 3);
    CHECK(expand({rec("DO", "I", "2", "", "N"), rec("IA", "I-1", "I", "-1"), rec("E", "G(I)", "X(I-1)"),
                  rec("OD", "I")},
                 env) == std::vector<std::string>{"E G2 X1", "E G3 X2"});
  }
  SECTION("errors") {
    auto kind = [](const std::vector<SourceRecord>& recs) {
      ParameterEnvironment env;
      std::vector<Diagnostic> diags;
      expand_loops(recs, env, [](const SourceRecord&) {}, &diags);
      return diags.empty() ? ErrorKind::BadDump : diags.front().kind;
    };
    CHECK(kind({rec("DO", "I", "1", "", "2"), rec("X", "X(I)")}) == ErrorKind::UnterminatedLoop);
    CHECK(kind({rec("DO", "I", "1", "", "2"), rec("DI", "I", "0"), rec("OD", "I")}) == ErrorKind::ZeroIncrement);
    CHECK(kind({rec("OD", "I")}) == ErrorKind::UnexpectedRecord);
    CHECK(kind({rec("DI", "I", "1")}) == ErrorKind::UnexpectedRecord);
    CHECK(kind({rec("X", "X(I)")}) == ErrorKind::UnboundLoopVariable);
    CHECK(kind({rec("DO", "I", "1", "", "M"), rec("OD", "I")}) == ErrorKind::UnboundParameter);
  }
}

TEST_CASE("decoding the linear program", "[expander]") {
  Problem p = sifkit::testing::load_problem("LINPROG.SIF");
  const DecodedProblem& pb = p.pb;
  CHECK(pb.n == 3);
  CHECK(pb.m == 5);
  CHECK(pb.nob == 1);
  CHECK(pb.nle == 2);
  CHECK(pb.neq == 1);
  CHECK(pb.nge == 2);
  CHECK(*pb.cnames == std::vector<std::string>{"CAP1", "CAP2", "BAL", "DEM", "LOWX"});
  CHECK(pb.lincons == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(*pb.clower == std::vector<double>{-2.0, -kInf, 0.0, 0.0, 0.0});
  CHECK(*pb.cupper == std::vector<double>{0.0, 0.0, 0.0, 1.5, kInf});
  CHECK(pb.x0 == std::vector<double>{1.0, 1.0, 2.0});
  CHECK(pb.xlower == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(pb.xupper == std::vector<double>{4.0, 3.0, 5.0});
  CHECK(*pb.y0 == std::vector<double>{0.0, 0.0, 0.5, 0.0, 0.0});
  CHECK(p.pbm.alternative_sets == std::vector<std::string>{"CONSTANTS ALTSET"});

  SECTION("keeping the file order") {
    DecodeOptions opts;
    opts.keepcorder = true;
    Problem q = sifkit::testing::load_problem("LINPROG.SIF", {}, opts);
    CHECK(*q.pb.cnames == std::vector<std::string>{"BAL", "CAP1", "DEM", "CAP2", "LOWX"});
  }
  SECTION("keeping relations and ranges") {
    DecodeOptions opts;
    opts.keepcformat = true;
    Problem q = sifkit::testing::load_problem("LINPROG.SIF", {}, opts);
    CHECK_FALSE(q.pb.clower);
    REQUIRE(q.pb.ctypes);
    CHECK(*q.pb.ctypes == std::vector<Relation>{Relation::Le, Relation::Le, Relation::Eq, Relation::Ge, Relation::Ge});
    CHECK(*q.pb.cranges == std::vector<std::optional<double>>{-2.0, std::nullopt, std::nullopt, 1.5, std::nullopt});
  }
}

TEST_CASE("decoding with loops and run-time parameters", "[expander]") {
  auto check_chain = [](const Problem& p, std::size_t n) {
    CHECK(p.pb.n == n);
    CHECK(p.pb.nob == 2 * (n - 1));
    CHECK(p.pb.m == 0);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(p.pb.x0[i] == Catch::Approx(static_cast<double>(i + 1) / static_cast<double>(n) - 1.2).epsilon(1e-14));
      CHECK(p.pb.xlower[i] == (i % 2 == 0 ? -10.0 : -kInf));
    }
    CHECK((*p.pb.xnames)[n - 1] == "X" + std::to_string(n));
  };
  check_chain(sifkit::testing::load_problem("CHAINROS.SIF"), 10);
  check_chain(sifkit::testing::load_problem("CHAINROS.SIF", {{"N", 25.0}}), 25);
  check_chain(sifkit::testing::load_problem("CHAINROS.SIF", {{"", 4.0}}), 4);

  std::string text = sifkit::testing::read_file(sifkit::testing::problem_path("CHAINROS.SIF"));
  auto kinds = [&](std::vector<ParamValue> params) {
    std::vector<ErrorKind> out;
    for (const auto& d : decode(text, params).diagnostics) out.push_back(d.kind);
    return out;
  };
  CHECK(kinds({{"M", 5.0}}) == std::vector{ErrorKind::ParameterNameMismatch});
  CHECK(kinds({{"N", 5.5}}) == std::vector{ErrorKind::TypeMismatch});
  CHECK(kinds({{"N", 5.0}, {"K", 1.0}}) == std::vector{ErrorKind::TooManyParameters});
}

TEST_CASE("element and group parameters reach the internals", "[expander]") {
  Problem p = sifkit::testing::load_problem("CONGPS.SIF");
  CHECK(p.pbm.nel() == 3);
  CHECK(p.pbm.elftype == std::vector<std::string>{"PCOS", "2PR", "EEXP"});
  CHECK(p.pbm.elvar == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 2}, {1}});
  CHECK(p.pbm.elpar == std::vector<std::vector<double>>{{0.5}, {}, {0.5}});
  CHECK(p.pbm.element_types.at("PCOS").range == std::vector<std::vector<double>>{{1.0, -1.0}});

  Problem g = sifkit::testing::load_problem("GRPPAR.SIF");
  CHECK(g.pbm.grftype == std::vector<std::string>{"CAUCHY", "CAUCHY", "POWER"});
  CHECK(g.pbm.grpar == std::vector<std::vector<double>>{{2.0}, {0.5}, {4.0}});
  CHECK(g.pbm.gfpar_names == std::vector<std::string>{"HALF"});
  CHECK(g.pbm.gfpar == std::vector<double>{0.5});
}

TEST_CASE("the erroneous corpus file reports its seeded errors", "[expander]") {
  DecodeOutcome out = decode(sifkit::testing::read_file(sifkit::testing::problem_path("BADFILE.SIF")));
  CHECK_FALSE(out.problem);
  REQUIRE(out.diagnostics.size() == 3);
  CHECK(out.diagnostics[0].kind == ErrorKind::MalformedRecord);
  CHECK(out.diagnostics[1].kind == ErrorKind::UndefinedElementType);
  CHECK(out.diagnostics[2].kind == ErrorKind::DanglingElementUse);
  CHECK(out.diagnostics[0].line < out.diagnostics[1].line);
  CHECK(out.diagnostics[1].line < out.diagnostics[2].line);
}

TEST_CASE("setup errors", "[expander]") {
  const std::string head = "NAME          BAD";
  CHECK(decode_errors({head, "VARIABLES", record("", "X1"), "BOUNDS", record("LO", "B", "X1", "2.0"),
                       record("UP", "B", "X1", "1.0"), "ENDATA"}) == std::vector{ErrorKind::InconsistentBounds});
  CHECK(decode_errors({head, "VARIABLES", record("", "X1"), "BOUNDS", record("LO", "B", "Y1", "2.0"), "ENDATA"}) ==
        std::vector{ErrorKind::UndefinedVariable});
  CHECK(decode_errors({head, "VARIABLES", record("", "X1"), "GROUPS", record("N", "G1"), "ELEMENT TYPE",
                       record("EV", "SQ", "V"), "ELEMENT USES", record("T", "E1", "SQ"), "GROUP USES",
                       record("E", "G1", "E1"), "ENDATA", "ELEMENTS      BAD", "INDIVIDUALS", " T  SQ",
                       " F                      V * V", "ENDATA"}) ==
        std::vector{ErrorKind::UnassignedElementVariable});
  CHECK(decode_errors({head, "VARIABLES", record("", "X1"), "GROUPS", record("N", "G1"), "ELEMENT TYPE",
                       record("EV", "SQ", "V"), record("EP", "SQ", "P"), "ELEMENT USES", record("T", "E1", "SQ"),
                       record("V", "E1", "V", "", "X1"), "GROUP USES", record("E", "G1", "E1"), "ENDATA",
                       "ELEMENTS      BAD", "INDIVIDUALS", " T  SQ", " F                      P * V", "ENDATA"}) ==
        std::vector{ErrorKind::MissingParameter});
  CHECK(decode_errors({head, "VARIABLES", record("", "X1"), "GROUPS", record("N", "G1"), "GROUP USES",
                       record("T", "G1", "L2"), "ENDATA"}) == std::vector{ErrorKind::UndefinedGroupType});
  CHECK(decode_errors({head, "VARIABLES", record("", "X1", "'SCALE'", "0.0"), "GROUPS", record("N", "G1", "X1", "1.0"),
                       "ENDATA"}) == std::vector{ErrorKind::ZeroScaleFactor});
}

TEST_CASE("bounds directives", "[expander]") {
  Problem p = decode_or_throw(join_lines({"NAME          BND", "VARIABLES", record("", "A"), record("", "B"),
                                          record("", "C"), record("", "D"), record("", "E"), record("", "F"),
                                          "GROUPS", record("N", "OBJ", "A", "1.0"), "BOUNDS",
                                          record("FX", "BND", "A", "3.0"), record("FR", "BND", "B"),
                                          record("MI", "BND", "C"), record("PL", "BND", "D"),
                                          record("BV", "BND", "E"), record("UI", "BND", "F", "7.0"), "ENDATA"}));
  CHECK(p.pb.xlower == std::vector<double>{3.0, -kInf, -kInf, 0.0, 0.0, 0.0});
  CHECK(p.pb.xupper == std::vector<double>{3.0, kInf, kInf, kInf, 1.0, 7.0});
  CHECK(p.pb.xtype == "rrrrbi");
}
