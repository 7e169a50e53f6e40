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

#ifndef SIFKIT_NONLINEAR_HPP
#define SIFKIT_NONLINEAR_HPP

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sifkit/error.hpp"
#include "sifkit/expression.hpp"
#include "sifkit/reader.hpp"

namespace sifkit {

inline std::string to_upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

struct FirstDerivative {
  std::string variable;
  Expr expr;
  bool operator==(const FirstDerivative&) const = default;
};

/// Key is stored with the variable declared first on the left.
struct SecondDerivative {
  std::string first;
  std::string second;
  Expr expr;
  bool operator==(const SecondDerivative&) const = default;
};

/// Straight-line program defining one element or group function together
/// with the derivatives written in the file.
///
/// Input layout: the `variable_count` differentiated variables, then the
/// type's parameters, then the global parameters of the section. Temporaries
/// take the slots after the inputs, one per assignment.
struct ExpressionProgram {
  std::vector<std::string> inputs;
  std::size_t variable_count = 0;
  std::vector<std::pair<std::string, Expr>> temporaries;
  Expr value;
  std::vector<FirstDerivative> first_derivs;
  std::vector<SecondDerivative> second_derivs;
  bool has_first = false;   // at least one derivative line of that order
  bool has_second = false;  // was present in the file

  std::size_t slot_count() const { return inputs.size() + temporaries.size(); }

  std::optional<std::size_t> variable_index(const std::string& name) const {
    for (std::size_t k = 0; k < variable_count; ++k)
      if (inputs[k] == name) return k;
    return std::nullopt;
  }

  /// Resolves every name to a slot and puts derivative keys in canonical
  /// order. Throws UndeclaredName.
  void bind() {
    std::unordered_map<std::string, int> slots;
    for (std::size_t k = 0; k < inputs.size(); ++k) slots[inputs[k]] = static_cast<int>(k);
    auto resolve = [&](Expr& e, const std::string& where) {
      for_each_name(e, [&](Expr& node) {
        auto it = slots.find(node.name);
        if (it == slots.end())
          throw Error(ErrorKind::UndeclaredName, "name '" + node.name + "' used in " + where + " is not declared");
        node.slot = it->second;
      });
    };
    for (std::size_t k = 0; k < temporaries.size(); ++k) {
      resolve(temporaries[k].second, "the assignment to " + temporaries[k].first);
      slots[temporaries[k].first] = static_cast<int>(inputs.size() + k);
    }
    resolve(value, "the function value");
    for (auto& d : first_derivs) {
      if (!variable_index(d.variable))
        throw Error(ErrorKind::UndeclaredName, "derivative with respect to undeclared variable '" + d.variable + "'");
      resolve(d.expr, "the derivative with respect to " + d.variable);
    }
    for (auto& d : second_derivs) {
      auto i = variable_index(d.first);
      auto j = variable_index(d.second);
      if (!i || !j)
        throw Error(ErrorKind::UndeclaredName,
                    "second derivative with respect to undeclared variables '" + d.first + "', '" + d.second + "'");
      if (*j < *i) std::swap(d.first, d.second);
      resolve(d.expr, "the second derivative with respect to " + d.first + " and " + d.second);
    }
    std::stable_sort(first_derivs.begin(), first_derivs.end(), [&](const auto& a, const auto& b) {
      return *variable_index(a.variable) < *variable_index(b.variable);
    });
    std::stable_sort(second_derivs.begin(), second_derivs.end(), [&](const auto& a, const auto& b) {
      auto ka = std::pair(*variable_index(a.first), *variable_index(a.second));
      auto kb = std::pair(*variable_index(b.first), *variable_index(b.second));
      return ka < kb;
    });
    for (std::size_t k = 1; k < first_derivs.size(); ++k)
      if (first_derivs[k].variable == first_derivs[k - 1].variable)
        throw Error(ErrorKind::SyntaxError, "derivative with respect to " + first_derivs[k].variable + " given twice");
    for (std::size_t k = 1; k < second_derivs.size(); ++k)
      if (second_derivs[k].first == second_derivs[k - 1].first &&
          second_derivs[k].second == second_derivs[k - 1].second)
        throw Error(ErrorKind::SyntaxError, "second derivative with respect to " + second_derivs[k].first + ", " +
                                                second_derivs[k].second + " given twice");
  }

  bool operator==(const ExpressionProgram&) const = default;
};

/// Value, gradient and dense row-major Hessian of a program with respect to
/// its differentiated variables.
struct ProgramResult {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> hessian;
};

inline ProgramResult run_program(const ExpressionProgram& prog, std::span<const double> inputs, int order) {
  if (inputs.size() != prog.inputs.size())
    throw Error(ErrorKind::DimensionMismatch, "program expects " + std::to_string(prog.inputs.size()) +
                                                  " inputs, got " + std::to_string(inputs.size()));
  if (order >= 1 && !prog.has_first)
    throw Error(ErrorKind::MissingDerivative, "no first derivatives are defined");
  if (order >= 2 && !prog.has_second)
    throw Error(ErrorKind::MissingDerivative, "no second derivatives are defined");
  double small[32];
  std::vector<double> large;
  double* slots = small;
  if (prog.slot_count() > 32) {
    large.resize(prog.slot_count());
    slots = large.data();
  }
  std::copy(inputs.begin(), inputs.end(), slots);
  std::span<const double> view(slots, prog.slot_count());
  for (std::size_t k = 0; k < prog.temporaries.size(); ++k)
    slots[prog.inputs.size() + k] = evaluate(prog.temporaries[k].second, view);

  ProgramResult out;
  out.value = evaluate(prog.value, view);
  const std::size_t nv = prog.variable_count;
  if (order >= 1) {
    out.gradient.assign(nv, 0.0);
    for (const auto& d : prog.first_derivs) out.gradient[*prog.variable_index(d.variable)] = evaluate(d.expr, view);
  }
  if (order >= 2) {
    out.hessian.assign(nv * nv, 0.0);
    for (const auto& d : prog.second_derivs) {
      std::size_t i = *prog.variable_index(d.first);
      std::size_t j = *prog.variable_index(d.second);
      double v = evaluate(d.expr, view);
      out.hessian[i * nv + j] = v;
      out.hessian[j * nv + i] = v;
    }
  }
  return out;
}

struct ElementDescriptor {
  std::string type;
  std::vector<std::string> elemental_variables;
  std::vector<std::string> internal_variables;  // empty: identity range
  std::vector<std::string> parameters;
  std::vector<std::vector<double>> range;  // internal x elemental
  ExpressionProgram program;

  std::size_t elemental_count() const { return elemental_variables.size(); }
  std::size_t internal_count() const {
    return internal_variables.empty() ? elemental_variables.size() : internal_variables.size();
  }
  bool has_range() const { return !internal_variables.empty(); }

  bool operator==(const ElementDescriptor&) const = default;
};

struct GroupDescriptor {
  std::string type;
  std::string argument;
  std::vector<std::string> parameters;
  ExpressionProgram program;

  bool operator==(const GroupDescriptor&) const = default;
};

inline constexpr const char* kTrivialGroup = "TRIVIAL";

/// The identity group function used for groups without a type.
inline GroupDescriptor make_trivial_group() {
  GroupDescriptor g;
  g.type = kTrivialGroup;
  g.argument = "GVAR";
  g.program.inputs = {"GVAR"};
  g.program.variable_count = 1;
  g.program.value = Expr::reference("GVAR");
  g.program.first_derivs.push_back({"GVAR", Expr::number(1.0)});
  g.program.second_derivs.push_back({"GVAR", "GVAR", Expr::number(0.0)});
  g.program.has_first = true;
  g.program.has_second = true;
  g.program.bind();
  return g;
}

struct ElementValue {
  double value = 0.0;
  std::vector<double> gradient;  // over elemental variables
  std::vector<double> hessian;   // dense, elemental x elemental, row-major
};

/// Evaluates f(U x_e) and its derivatives with respect to the elemental
/// variables. `params` holds the element's parameters followed by the
/// global element parameters.
inline ElementValue eval_element(const ElementDescriptor& desc, std::span<const double> x_e,
                                 std::span<const double> params, int order) {
  const std::size_t ne = desc.elemental_count();
  const std::size_t ni = desc.internal_count();
  if (x_e.size() != ne)
    throw Error(ErrorKind::DimensionMismatch, "element type " + desc.type + " takes " + std::to_string(ne) +
                                                  " variables, got " + std::to_string(x_e.size()));
  std::vector<double> inputs(ni + params.size());
  if (desc.has_range()) {
    for (std::size_t i = 0; i < ni; ++i) {
      double u = 0.0;
      for (std::size_t j = 0; j < ne; ++j) u += desc.range[i][j] * x_e[j];
      inputs[i] = u;
    }
  } else {
    std::copy(x_e.begin(), x_e.end(), inputs.begin());
  }
  std::copy(params.begin(), params.end(), inputs.begin() + static_cast<std::ptrdiff_t>(ni));
  ProgramResult raw = run_program(desc.program, inputs, order);

  ElementValue out;
  out.value = raw.value;
  if (!desc.has_range()) {
    out.gradient = std::move(raw.gradient);
    out.hessian = std::move(raw.hessian);
    return out;
  }
  const auto& U = desc.range;
  if (order >= 1) {
    out.gradient.assign(ne, 0.0);
    for (std::size_t p = 0; p < ne; ++p)
      for (std::size_t i = 0; i < ni; ++i) out.gradient[p] += U[i][p] * raw.gradient[i];
  }
  if (order >= 2) {
    // W = H_u U, then U^T W on the upper triangle, mirrored.
    std::vector<double> w(ni * ne, 0.0);
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t q = 0; q < ne; ++q)
        for (std::size_t k = 0; k < ni; ++k) w[i * ne + q] += raw.hessian[i * ni + k] * U[k][q];
    out.hessian.assign(ne * ne, 0.0);
    for (std::size_t p = 0; p < ne; ++p)
      for (std::size_t q = p; q < ne; ++q) {
        double s = 0.0;
        for (std::size_t i = 0; i < ni; ++i) s += U[i][p] * w[i * ne + q];
        out.hessian[p * ne + q] = s;
        out.hessian[q * ne + p] = s;
      }
  }
  return out;
}

struct GroupValue {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// F(alpha), F'(alpha), F''(alpha). `params` holds the group's parameters
/// followed by the global group parameters.
inline GroupValue eval_group_function(const GroupDescriptor& desc, double alpha, std::span<const double> params,
                                      int order) {
  std::vector<double> inputs;
  inputs.reserve(1 + params.size());
  inputs.push_back(alpha);
  inputs.insert(inputs.end(), params.begin(), params.end());
  ProgramResult raw = run_program(desc.program, inputs, order);
  GroupValue out;
  out.value = raw.value;
  if (order >= 1) out.first = raw.gradient[0];
  if (order >= 2) out.second = raw.hessian[0];
  return out;
}

// ---------------------------------------------------------------------------
// Parsing of the ELEMENTS and GROUPS sections.

/// What the data part declares about an element type (EV, IV, EP lines).
struct ElementTypeDecl {
  std::vector<std::string> elemental;
  std::vector<std::string> internal;
  std::vector<std::string> parameters;
};

/// What the data part declares about a group type (GV, GP lines).
struct GroupTypeDecl {
  std::string argument;
  std::vector<std::string> parameters;
};

struct GlobalParameters {
  std::vector<std::string> names;
  std::vector<double> values;
};

namespace detail {

struct Statement {
  char kind = 0;  // A, F, G, H
  std::string name2;
  std::string name3;
  std::string text;
  int line = 0;
};

/// Joins '+' continuation records onto the statement they continue.
/// Non-assignment records are passed through `other`.
template <typename OnStatement, typename OnOther>
void gather_statements(std::span<const SourceRecord> records, OnStatement&& on_statement, OnOther&& on_other) {
  std::optional<Statement> pending;
  auto flush = [&] {
    if (pending) on_statement(*pending);
    pending.reset();
  };
  for (const auto& r : records) {
    const std::string& ind = r.indicator;
    if (r.expression && ind.size() == 2 && ind[1] == '+') {
      if (!pending || pending->kind != ind[0])
        throw Error(ErrorKind::SyntaxError, "continuation '" + ind + "' does not follow a matching statement", r.line);
      pending->text += " " + *r.expression;
      continue;
    }
    flush();
    if (r.expression) {
      if (ind == "I" || ind == "E")
        throw Error(ErrorKind::SyntaxError, "conditional assignments are not supported", r.line);
      pending = Statement{ind[0], to_upper(r.name2), to_upper(r.name3), *r.expression, r.line};
    } else {
      on_other(r);
    }
  }
  flush();
}

template <typename Fn>
void with_line(int line, std::vector<Diagnostic>* sink, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    std::vector<Diagnostic> diags = e.diagnostics();
    for (auto& d : diags)
      if (d.line == 0) d.line = line;
    if (!sink) throw Error(std::move(diags));
    sink->insert(sink->end(), diags.begin(), diags.end());
  }
}

/// Shared state machine for both sections.
struct ProgramBuilder {
  ExpressionProgram prog;
  int line = 0;
  bool has_value = false;

  void add(const Statement& s, bool element_section) {
    Expr e = parse_expression(s.text);
    switch (s.kind) {
      case 'A':
        if (s.name2.empty()) throw Error(ErrorKind::SyntaxError, "assignment without a target name", s.line);
        prog.temporaries.emplace_back(s.name2, std::move(e));
        break;
      case 'F':
        if (has_value) throw Error(ErrorKind::SyntaxError, "function value given twice", s.line);
        prog.value = std::move(e);
        has_value = true;
        break;
      case 'G': {
        std::string var = element_section ? s.name2 : prog.inputs[0];
        prog.first_derivs.push_back({var, std::move(e)});
        prog.has_first = true;
        break;
      }
      case 'H': {
        std::string a = element_section ? s.name2 : prog.inputs[0];
        std::string b = element_section ? s.name3 : prog.inputs[0];
        prog.second_derivs.push_back({a, b, std::move(e)});
        prog.has_second = true;
        break;
      }
      default:
        throw Error(ErrorKind::SyntaxError, std::string("unexpected statement '") + s.kind + "'", s.line);
    }
  }

  ExpressionProgram finish(const std::string& type) {
    if (!has_value)
      throw Error(ErrorKind::MissingValueExpression, "type " + type + " has no F line", line);
    prog.bind();
    return std::move(prog);
  }
};

}  // namespace detail

/// Evaluates the assignments of a GLOBALS section in order.
inline GlobalParameters evaluate_globals(std::span<const SourceRecord> records,
                                         std::vector<Diagnostic>* sink = nullptr) {
  GlobalParameters out;
  auto on_statement = [&](const detail::Statement& s) {
    detail::with_line(s.line, sink, [&] {
      if (s.kind != 'A')
        throw Error(ErrorKind::SyntaxError, std::string("unexpected '") + s.kind + "' line in GLOBALS", s.line);
      ExpressionProgram p;
      p.inputs = out.names;
      p.value = parse_expression(s.text);
      p.bind();
      double v = evaluate(p.value, out.values);
      auto it = std::find(out.names.begin(), out.names.end(), s.name2);
      if (it != out.names.end()) {
        out.values[static_cast<std::size_t>(it - out.names.begin())] = v;
      } else {
        out.names.push_back(s.name2);
        out.values.push_back(v);
      }
    });
  };
  auto on_other = [&](const SourceRecord& r) {
    detail::with_line(r.line, sink, [&] {
      throw Error(ErrorKind::SyntaxError, "unexpected record '" + r.indicator + "' in GLOBALS", r.line);
    });
  };
  detail::with_line(0, sink, [&] { detail::gather_statements(records, on_statement, on_other); });
  return out;
}

/// Builds one ElementDescriptor per type defined in an ELEMENTS INDIVIDUALS
/// section. Types must be declared in `decls`.
inline std::map<std::string, ElementDescriptor> parse_element_section(
    std::span<const SourceRecord> records, const std::map<std::string, ElementTypeDecl>& decls,
    const std::vector<std::string>& global_names, std::vector<Diagnostic>* sink = nullptr) {
  std::map<std::string, ElementDescriptor> out;
  std::optional<ElementDescriptor> desc;
  detail::ProgramBuilder builder;
  bool broken = false;

  auto close = [&] {
    if (!desc) return;
    if (!broken) {
      detail::with_line(builder.line, sink, [&] {
        desc->program = builder.finish(desc->type);
        out.emplace(desc->type, std::move(*desc));
      });
    }
    desc.reset();
  };

  auto on_other = [&](const SourceRecord& r) {
    if (r.indicator == "T") {
      close();
      broken = false;
      builder = detail::ProgramBuilder{};
      builder.line = r.line;
      detail::with_line(r.line, sink, [&] {
        auto it = decls.find(r.name2);
        if (it == decls.end())
          throw Error(ErrorKind::UndefinedElementType, "element type " + r.name2 + " is not declared", r.line);
        if (out.count(r.name2))
          throw Error(ErrorKind::SyntaxError, "element type " + r.name2 + " defined twice", r.line);
        ElementDescriptor d;
        d.type = r.name2;
        d.elemental_variables = it->second.elemental;
        d.internal_variables = it->second.internal;
        d.parameters = it->second.parameters;
        if (d.has_range())
          d.range.assign(d.internal_variables.size(), std::vector<double>(d.elemental_variables.size(), 0.0));
        const auto& vars = d.has_range() ? d.internal_variables : d.elemental_variables;
        for (const auto& v : vars) builder.prog.inputs.push_back(to_upper(v));
        builder.prog.variable_count = vars.size();
        for (const auto& p : d.parameters) builder.prog.inputs.push_back(to_upper(p));
        for (const auto& g : global_names) builder.prog.inputs.push_back(to_upper(g));
        desc = std::move(d);
      });
      if (!desc) broken = true;
      return;
    }
    detail::with_line(r.line, sink, [&] {
      if (!desc && !broken)
        throw Error(ErrorKind::SyntaxError, "record before the first T line", r.line);
      if (broken) return;
      if (r.indicator != "R")
        throw Error(ErrorKind::SyntaxError, "unexpected record '" + r.indicator + "' in ELEMENTS", r.line);
      if (!desc->has_range())
        throw Error(ErrorKind::SyntaxError, "type " + desc->type + " has no internal variables", r.line);
      auto row = std::find(desc->internal_variables.begin(), desc->internal_variables.end(), r.name2);
      if (row == desc->internal_variables.end())
        throw Error(ErrorKind::UndeclaredName, "internal variable " + r.name2 + " not declared", r.line);
      auto i = static_cast<std::size_t>(row - desc->internal_variables.begin());
      auto set = [&](const std::string& var, const std::string& value) {
        if (var.empty()) return;
        auto col = std::find(desc->elemental_variables.begin(), desc->elemental_variables.end(), var);
        if (col == desc->elemental_variables.end())
          throw Error(ErrorKind::UndeclaredName, "elemental variable " + var + " not declared", r.line);
        desc->range[i][static_cast<std::size_t>(col - desc->elemental_variables.begin())] =
            value.empty() ? 0.0 : *parse_fortran_real(value);
      };
      set(r.name3, r.value4);
      set(r.name5, r.value6);
    });
  };

  auto on_statement = [&](const detail::Statement& s) {
    detail::with_line(s.line, sink, [&] {
      if (!desc && !broken)
        throw Error(ErrorKind::SyntaxError, "statement before the first T line", s.line);
      if (broken) return;
      try {
        builder.add(s, true);
      } catch (const Error&) {
        broken = true;
        throw;
      }
    });
  };

  detail::with_line(0, sink, [&] { detail::gather_statements(records, on_statement, on_other); });
  close();
  return out;
}

/// Builds one GroupDescriptor per type defined in a GROUPS INDIVIDUALS
/// section.
inline std::map<std::string, GroupDescriptor> parse_group_section(
    std::span<const SourceRecord> records, const std::map<std::string, GroupTypeDecl>& decls,
    const std::vector<std::string>& global_names, std::vector<Diagnostic>* sink = nullptr) {
  std::map<std::string, GroupDescriptor> out;
  std::optional<GroupDescriptor> desc;
  detail::ProgramBuilder builder;
  bool broken = false;

  auto close = [&] {
    if (!desc) return;
    if (!broken) {
      detail::with_line(builder.line, sink, [&] {
        desc->program = builder.finish(desc->type);
        out.emplace(desc->type, std::move(*desc));
      });
    }
    desc.reset();
  };

  auto on_other = [&](const SourceRecord& r) {
    if (r.indicator == "T") {
      close();
      broken = false;
      builder = detail::ProgramBuilder{};
      builder.line = r.line;
      detail::with_line(r.line, sink, [&] {
        auto it = decls.find(r.name2);
        if (it == decls.end())
          throw Error(ErrorKind::UndefinedGroupType, "group type " + r.name2 + " is not declared", r.line);
        if (out.count(r.name2))
          throw Error(ErrorKind::SyntaxError, "group type " + r.name2 + " defined twice", r.line);
        GroupDescriptor d;
        d.type = r.name2;
        d.argument = it->second.argument;
        d.parameters = it->second.parameters;
        builder.prog.inputs.push_back(to_upper(d.argument));
        builder.prog.variable_count = 1;
        for (const auto& p : d.parameters) builder.prog.inputs.push_back(to_upper(p));
        for (const auto& g : global_names) builder.prog.inputs.push_back(to_upper(g));
        desc = std::move(d);
      });
      if (!desc) broken = true;
      return;
    }
    detail::with_line(r.line, sink, [&] {
      throw Error(ErrorKind::SyntaxError, "unexpected record '" + r.indicator + "' in GROUPS", r.line);
    });
  };

  auto on_statement = [&](const detail::Statement& s) {
    detail::with_line(s.line, sink, [&] {
      if (!desc && !broken)
        throw Error(ErrorKind::SyntaxError, "statement before the first T line", s.line);
      if (broken) return;
      try {
        builder.add(s, false);
      } catch (const Error&) {
        broken = true;
        throw;
      }
    });
  };

  detail::with_line(0, sink, [&] { detail::gather_statements(records, on_statement, on_other); });
  close();
  return out;
}

}  // namespace sifkit

#endif  // SIFKIT_NONLINEAR_HPP
