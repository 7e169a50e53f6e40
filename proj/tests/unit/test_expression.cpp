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
#include <string>

#include "sifkit/expression.hpp"

using namespace sifkit;
using Catch::Matchers::WithinRel;

namespace {

double eval_text(const std::string& text, std::vector<std::pair<std::string, double>> vars = {}) {
  Expr e = parse_expression(text);
  std::vector<double> slots;
  for_each_name(e, [&](Expr& node) {
    for (std::size_t k = 0; k < vars.size(); ++k)
      if (vars[k].first == node.name) node.slot = static_cast<int>(k);
  });
  for (const auto& v : vars) slots.push_back(v.second);
  return evaluate(e, slots);
}

ErrorKind error_of(const std::string& text) {
  try {
    eval_text(text, {{"X", 0.0}});
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error for " << text);
  return ErrorKind::BadDump;
}

}  // namespace

TEST_CASE("Fortran real literals", "[expression]") {
  CHECK(parse_fortran_real("1.5") == 1.5);
  CHECK(parse_fortran_real("-2.0D+1") == -20.0);
  CHECK(parse_fortran_real(".5E-3") == 0.0005);
  CHECK(parse_fortran_real("7") == 7.0);
  CHECK(parse_fortran_real("+3.") == 3.0);
  CHECK(parse_fortran_real("1d2") == 100.0);
  CHECK_FALSE(parse_fortran_real(""));
  CHECK_FALSE(parse_fortran_real("1.2.3"));
  CHECK_FALSE(parse_fortran_real("E5"));
  CHECK_FALSE(parse_fortran_real("1E"));
  CHECK_FALSE(parse_fortran_real("X1"));
}

TEST_CASE("operator precedence and associativity", "[expression]") {
  CHECK(eval_text("1 + 2 * 3") == 7.0);
  CHECK(eval_text("(1 + 2) * 3") == 9.0);
  CHECK(eval_text("2 ** 3 ** 2") == 512.0);
  CHECK(eval_text("-2 ** 2") == -4.0);
  CHECK(eval_text("2 ** -1") == 0.5);
  CHECK(eval_text("8 / 4 / 2") == 1.0);
  CHECK(eval_text("1 - 2 - 3") == -4.0);
  CHECK(eval_text("2 * 3 ** 2") == 18.0);
  CHECK(eval_text("- - 3") == 3.0);
  CHECK(eval_text("1.0D0 + .5") == 1.5);
}

TEST_CASE("names and intrinsics", "[expression]") {
  CHECK(eval_text("x * y", {{"X", 3.0}, {"Y", 4.0}}) == 12.0);
  CHECK_THAT(eval_text("SIN(X) ** 2 + COS(X) ** 2", {{"X", 0.7}}), WithinRel(1.0, 1e-15));
  CHECK(eval_text("MAX(1, 5, 3)") == 5.0);
  CHECK(eval_text("MIN(4, -2)") == -2.0);
  CHECK(eval_text("SIGN(3, -1)") == -3.0);
  CHECK(eval_text("SIGN(-3, 0)") == 3.0);
  CHECK(eval_text("MOD(7, 3)") == 1.0);
  CHECK(eval_text("ABS(-2.5)") == 2.5);
  CHECK(eval_text("SQRT(16)") == 4.0);
  CHECK(eval_text("LOG10(1000)") == 3.0);
  CHECK(eval_text("DEXP(0)") == 1.0);
  CHECK(eval_text("ALOG(1)") == 0.0);
  CHECK(eval_text("DMAX1(1, 2)") == 2.0);
  CHECK(eval_text("TANH(0) + SINH(0) + COSH(0)") == 1.0);
  CHECK_THAT(eval_text("ATAN(1) * 4"), WithinRel(M_PI, 1e-15));
  CHECK_THAT(eval_text("ASIN(1) + ACOS(1)"), WithinRel(M_PI / 2, 1e-15));
}

TEST_CASE("integer powers multiply exactly", "[expression]") {
  CHECK(fortran_power(-2.0, 3.0) == -8.0);
  CHECK(fortran_power(0.0, 0.0) == 1.0);
  CHECK(fortran_power(1.1, 2.0) == 1.1 * 1.1);
  CHECK(fortran_power(4.0, 0.5) == 2.0);
  CHECK_THROWS_AS(fortran_power(-4.0, 0.5), Error);
  CHECK_THROWS_AS(fortran_power(0.0, -1.0), Error);
}

TEST_CASE("syntax and domain errors", "[expression]") {
  CHECK(error_of("1 +") == ErrorKind::SyntaxError);
  CHECK(error_of("(1 + 2") == ErrorKind::SyntaxError);
  CHECK(error_of("1 2") == ErrorKind::SyntaxError);
  CHECK(error_of("X @ 2") == ErrorKind::SyntaxError);
  CHECK(error_of("SIGN(1)") == ErrorKind::SyntaxError);
  CHECK(error_of("ABS(1, 2)") == ErrorKind::SyntaxError);
  CHECK(error_of("FOO(1)") == ErrorKind::UnknownIntrinsic);
  CHECK(error_of("LOG(X)") == ErrorKind::DomainError);
  CHECK(error_of("SQRT(X - 1)") == ErrorKind::DomainError);
  CHECK(error_of("1 / X") == ErrorKind::DomainError);
  CHECK(error_of("ASIN(2)") == ErrorKind::DomainError);
  CHECK(error_of("MOD(1, X)") == ErrorKind::DomainError);
}

TEST_CASE("parse trees compare structurally", "[expression]") {
  CHECK(parse_expression("X + 1") == Expr::binary(Op::Add, Expr::reference("X"), Expr::number(1.0)));
  CHECK(parse_expression("(X) + (1)") == parse_expression("X+1"));
  CHECK_FALSE(parse_expression("X + 1") == parse_expression("1 + X"));
}

namespace {

struct Generated {
  std::string text;
  double value;
};

// Random well-defined expressions over X in [0.5, 1.5], paired with a value
// computed directly with <cmath>.
Generated generate(std::mt19937_64& rng, double x, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
  std::uniform_real_distribution<double> lit(0.5, 2.0);
  switch (pick(rng)) {
    case 0: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", lit(rng));
      return {buf, std::strtod(buf, nullptr)};
    }
    case 1: return {"X", x};
    case 2: {
      auto a = generate(rng, x, depth - 1), b = generate(rng, x, depth - 1);
      return {"(" + a.text + " + " + b.text + ")", a.value + b.value};
    }
    case 3: {
      auto a = generate(rng, x, depth - 1), b = generate(rng, x, depth - 1);
      return {"(" + a.text + " - " + b.text + ")", a.value - b.value};
    }
    case 4: {
      auto a = generate(rng, x, depth - 1), b = generate(rng, x, depth - 1);
      return {a.text + " * " + b.text, a.value * b.value};
    }
    case 5: {
      auto a = generate(rng, x, depth - 1);
      return {"EXP(" + a.text + " / 8.0)", std::exp(a.value / 8.0)};
    }
    case 6: {
      auto a = generate(rng, x, depth - 1);
      return {"SIN(" + a.text + ")", std::sin(a.value)};
    }
    case 7: {
      auto a = generate(rng, x, depth - 1);
      return {"(" + a.text + ") ** 2", a.value * a.value};
    }
    case 8: {
      auto a = generate(rng, x, depth - 1);
      return {"LOG(1.0 + ABS(" + a.text + "))", std::log(1.0 + std::fabs(a.value))};
    }
    default: {
      auto a = generate(rng, x, depth - 1);
      return {"-(" + a.text + ")", -a.value};
    }
  }
}

}  // namespace

TEST_CASE("random expressions match a direct computation", "[expression][property]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xs(0.5, 1.5);
  for (int k = 0; k < 500; ++k) {
    double x = xs(rng);
    Generated g = generate(rng, x, 4);
    INFO(g.text);
    double got = eval_text(g.text, {{"X", x}});
    CHECK(std::fabs(got - g.value) <= 1e-13 * std::max(1.0, std::fabs(g.value)));
  }
}
