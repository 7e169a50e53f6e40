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

// Fortran-style arithmetic expressions as they appear on the assignment
// lines of the nonlinear ELEMENTS and GROUPS sections.

#ifndef SIFKIT_EXPRESSION_HPP
#define SIFKIT_EXPRESSION_HPP

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sifkit/error.hpp"

namespace sifkit {

enum class Intrinsic { Abs, Sqrt, Exp, Log, Log10, Sin, Cos, Tan, Asin, Acos, Atan, Sinh, Cosh, Tanh, Max, Min, Sign, Mod };

struct IntrinsicInfo {
  std::string_view name;  // canonical spelling
  Intrinsic fn;
  int min_args;
  int max_args;  // -1: unbounded
};

inline constexpr std::array<IntrinsicInfo, 18> kIntrinsics{{
    {"ABS", Intrinsic::Abs, 1, 1},     {"SQRT", Intrinsic::Sqrt, 1, 1},   {"EXP", Intrinsic::Exp, 1, 1},
    {"LOG", Intrinsic::Log, 1, 1},     {"LOG10", Intrinsic::Log10, 1, 1}, {"SIN", Intrinsic::Sin, 1, 1},
    {"COS", Intrinsic::Cos, 1, 1},     {"TAN", Intrinsic::Tan, 1, 1},     {"ASIN", Intrinsic::Asin, 1, 1},
    {"ACOS", Intrinsic::Acos, 1, 1},   {"ATAN", Intrinsic::Atan, 1, 1},   {"SINH", Intrinsic::Sinh, 1, 1},
    {"COSH", Intrinsic::Cosh, 1, 1},   {"TANH", Intrinsic::Tanh, 1, 1},   {"MAX", Intrinsic::Max, 2, -1},
    {"MIN", Intrinsic::Min, 2, -1},    {"SIGN", Intrinsic::Sign, 2, 2},   {"MOD", Intrinsic::Mod, 2, 2},
}};

inline const IntrinsicInfo& intrinsic_info(Intrinsic fn) {
  for (const auto& info : kIntrinsics)
    if (info.fn == fn) return info;
  return kIntrinsics.front();
}

/// Looks up an intrinsic by its Fortran name. Double-precision specific
/// names (DEXP, DLOG, ALOG, DMAX1, ...) map onto their generic intrinsic.
inline std::optional<Intrinsic> find_intrinsic(std::string_view upper) {
  for (const auto& info : kIntrinsics)
    if (info.name == upper) return info.fn;
  struct Alias {
    std::string_view name;
    Intrinsic fn;
  };
  static constexpr std::array<Alias, 22> aliases{{
      {"DABS", Intrinsic::Abs},   {"DSQRT", Intrinsic::Sqrt}, {"DEXP", Intrinsic::Exp},
      {"DLOG", Intrinsic::Log},   {"ALOG", Intrinsic::Log},   {"DLOG10", Intrinsic::Log10},
      {"ALOG10", Intrinsic::Log10}, {"DSIN", Intrinsic::Sin}, {"DCOS", Intrinsic::Cos},
      {"DTAN", Intrinsic::Tan},   {"DASIN", Intrinsic::Asin}, {"DACOS", Intrinsic::Acos},
      {"DATAN", Intrinsic::Atan}, {"DSINH", Intrinsic::Sinh}, {"DCOSH", Intrinsic::Cosh},
      {"DTANH", Intrinsic::Tanh}, {"DMAX1", Intrinsic::Max},  {"AMAX1", Intrinsic::Max},
      {"DMIN1", Intrinsic::Min},  {"AMIN1", Intrinsic::Min},  {"DSIGN", Intrinsic::Sign},
      {"DMOD", Intrinsic::Mod},
  }};
  for (const auto& a : aliases)
    if (a.name == upper) return a.fn;
  return std::nullopt;
}

/// Parses a Fortran real literal ("1.5", "-2.0D+1", ".5E-3", "7").
inline std::optional<double> parse_fortran_real(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::string s(text);
  for (char& c : s)
    if (c == 'D' || c == 'd') c = 'E';
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') ++i;
  bool digits = false;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, digits = true;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, digits = true;
  }
  if (!digits) return std::nullopt;
  if (i < s.size() && (s[i] == 'E' || s[i] == 'e')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    bool exp_digits = false;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, exp_digits = true;
    if (!exp_digits) return std::nullopt;
  }
  if (i != s.size()) return std::nullopt;
  const char* first = s.data() + (s[0] == '+' ? 1 : 0);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

enum class Op { Literal, Name, Negate, Add, Sub, Mul, Div, Pow, Call };

struct Expr {
  Op op = Op::Literal;
  double literal = 0.0;
  std::string name;  // identifier for Op::Name
  Intrinsic fn = Intrinsic::Abs;
  int slot = -1;  // resolved storage slot for Op::Name
  std::vector<Expr> args;

  static Expr number(double v) {
    Expr e;
    e.literal = v;
    return e;
  }
  static Expr reference(std::string n) {
    Expr e;
    e.op = Op::Name;
    e.name = std::move(n);
    return e;
  }
  static Expr unary(Op op, Expr a) {
    Expr e;
    e.op = op;
    e.args.push_back(std::move(a));
    return e;
  }
  static Expr binary(Op op, Expr a, Expr b) {
    Expr e;
    e.op = op;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }
  static Expr call(Intrinsic fn, std::vector<Expr> args) {
    Expr e;
    e.op = Op::Call;
    e.fn = fn;
    e.args = std::move(args);
    return e;
  }

  // Slots are derived data; two trees are equal when their shape is.
  bool operator==(const Expr& o) const {
    return op == o.op && literal == o.literal && name == o.name && (op != Op::Call || fn == o.fn) &&
           args == o.args;
  }
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = additive();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::SyntaxError, what + " at column " + std::to_string(pos_ + 1) + " of '" +
                                            std::string(text_) + "'");
  }

  void skip_space() {
    while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_space();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  bool peek_power() {
    skip_space();
    return text_.substr(pos_, 2) == "**";
  }

  Expr additive() {
    Expr lhs = multiplicative();
    for (;;) {
      if (accept("+"))
        lhs = Expr::binary(Op::Add, std::move(lhs), multiplicative());
      else if (accept("-"))
        lhs = Expr::binary(Op::Sub, std::move(lhs), multiplicative());
      else
        return lhs;
    }
  }

  Expr multiplicative() {
    Expr lhs = unary();
    for (;;) {
      if (peek_power()) fail("misplaced '**'");
      if (accept("*"))
        lhs = Expr::binary(Op::Mul, std::move(lhs), unary());
      else if (accept("/"))
        lhs = Expr::binary(Op::Div, std::move(lhs), unary());
      else
        return lhs;
    }
  }

  Expr unary() {
    if (accept("-")) return Expr::unary(Op::Negate, unary());
    if (accept("+")) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (peek_power()) {
      pos_ += 2;
      return Expr::binary(Op::Pow, std::move(base), unary());
    }
    return base;
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = additive();
      if (!accept(")")) fail("missing ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr number() {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && std::strchr("EeDd", text_[pos_]) != nullptr) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        digits();
      else
        pos_ = save;
    }
    auto value = parse_fortran_real(text_.substr(start, pos_ - start));
    if (!value) fail("bad number '" + std::string(text_.substr(start, pos_ - start)) + "'");
    return Expr::number(*value);
  }

  Expr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string id(text_.substr(start, pos_ - start));
    for (char& ch : id) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (!accept("(")) return Expr::reference(std::move(id));
    auto fn = find_intrinsic(id);
    if (!fn) throw Error(ErrorKind::UnknownIntrinsic, "unknown intrinsic '" + id + "' in '" + std::string(text_) + "'");
    std::vector<Expr> args;
    args.push_back(additive());
    while (accept(",")) args.push_back(additive());
    if (!accept(")")) fail("missing ')' after arguments of " + id);
    const auto& info = intrinsic_info(*fn);
    int n = static_cast<int>(args.size());
    if (n < info.min_args || (info.max_args >= 0 && n > info.max_args))
      fail("wrong number of arguments to " + std::string(info.name));
    return Expr::call(*fn, std::move(args));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

[[noreturn]] inline void domain_error(const std::string& what) { throw Error(ErrorKind::DomainError, what); }

inline double integer_power(double base, long long exponent) {
  if (exponent < 0) {
    if (base == 0.0) domain_error("zero raised to a negative power");
    return 1.0 / integer_power(base, -exponent);
  }
  double result = 1.0;
  for (long long k = 0; k < exponent; ++k) result *= base;
  return result;
}

}  // namespace detail

inline Expr parse_expression(std::string_view text) { return detail::ExprParser(text).parse(); }

/// Fortran semantics for a**b: integer-valued exponents multiply
/// repeatedly; any other exponent needs a positive base.
inline double fortran_power(double base, double exponent) {
  if (exponent == std::floor(exponent) && std::fabs(exponent) <= 64.0)
    return detail::integer_power(base, static_cast<long long>(exponent));
  if (base <= 0.0)
    detail::domain_error("non-integer power " + std::to_string(exponent) + " of nonpositive base " +
                         std::to_string(base));
  return std::pow(base, exponent);
}

inline double apply_intrinsic(Intrinsic fn, std::span<const double> a) {
  using detail::domain_error;
  switch (fn) {
    case Intrinsic::Abs: return std::fabs(a[0]);
    case Intrinsic::Sqrt:
      if (a[0] < 0.0) domain_error("SQRT of negative value " + std::to_string(a[0]));
      return std::sqrt(a[0]);
    case Intrinsic::Exp: return std::exp(a[0]);
    case Intrinsic::Log:
      if (a[0] <= 0.0) domain_error("LOG of nonpositive value " + std::to_string(a[0]));
      return std::log(a[0]);
    case Intrinsic::Log10:
      if (a[0] <= 0.0) domain_error("LOG10 of nonpositive value " + std::to_string(a[0]));
      return std::log10(a[0]);
    case Intrinsic::Sin: return std::sin(a[0]);
    case Intrinsic::Cos: return std::cos(a[0]);
    case Intrinsic::Tan: return std::tan(a[0]);
    case Intrinsic::Asin:
      if (std::fabs(a[0]) > 1.0) domain_error("ASIN outside [-1,1]: " + std::to_string(a[0]));
      return std::asin(a[0]);
    case Intrinsic::Acos:
      if (std::fabs(a[0]) > 1.0) domain_error("ACOS outside [-1,1]: " + std::to_string(a[0]));
      return std::acos(a[0]);
    case Intrinsic::Atan: return std::atan(a[0]);
    case Intrinsic::Sinh: return std::sinh(a[0]);
    case Intrinsic::Cosh: return std::cosh(a[0]);
    case Intrinsic::Tanh: return std::tanh(a[0]);
    case Intrinsic::Max: {
      double m = a[0];
      for (double v : a.subspan(1)) m = std::max(m, v);
      return m;
    }
    case Intrinsic::Min: {
      double m = a[0];
      for (double v : a.subspan(1)) m = std::min(m, v);
      return m;
    }
    case Intrinsic::Sign: return a[1] >= 0.0 ? std::fabs(a[0]) : -std::fabs(a[0]);
    case Intrinsic::Mod:
      if (a[1] == 0.0) domain_error("MOD with zero divisor");
      return std::fmod(a[0], a[1]);
  }
  return 0.0;
}

/// Evaluates a tree whose names have been resolved to slots.
inline double evaluate(const Expr& e, std::span<const double> slots) {
  switch (e.op) {
    case Op::Literal: return e.literal;
    case Op::Name: return slots[static_cast<std::size_t>(e.slot)];
    case Op::Negate: return -evaluate(e.args[0], slots);
    case Op::Add: return evaluate(e.args[0], slots) + evaluate(e.args[1], slots);
    case Op::Sub: return evaluate(e.args[0], slots) - evaluate(e.args[1], slots);
    case Op::Mul: return evaluate(e.args[0], slots) * evaluate(e.args[1], slots);
    case Op::Div: {
      double num = evaluate(e.args[0], slots);
      double den = evaluate(e.args[1], slots);
      if (den == 0.0) detail::domain_error("division by zero");
      return num / den;
    }
    case Op::Pow: return fortran_power(evaluate(e.args[0], slots), evaluate(e.args[1], slots));
    case Op::Call: {
      double buf[8];
      std::vector<double> heap;
      double* vals = buf;
      if (e.args.size() > 8) {
        heap.resize(e.args.size());
        vals = heap.data();
      }
      for (std::size_t k = 0; k < e.args.size(); ++k) vals[k] = evaluate(e.args[k], slots);
      return apply_intrinsic(e.fn, std::span<const double>(vals, e.args.size()));
    }
  }
  return 0.0;
}

/// Calls `visit(name_node)` for every name reference in the tree.
template <typename Visitor>
void for_each_name(Expr& e, Visitor&& visit) {
  if (e.op == Op::Name) visit(e);
  for (auto& a : e.args) for_each_name(a, visit);
}

}  // namespace sifkit

#endif  // SIFKIT_EXPRESSION_HPP
