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

#ifndef SIFKIT_EXPANDER_HPP
#define SIFKIT_EXPANDER_HPP

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sifkit/error.hpp"
#include "sifkit/expression.hpp"
#include "sifkit/model.hpp"
#include "sifkit/nonlinear.hpp"
#include "sifkit/reader.hpp"
#include "sifkit/sparse.hpp"

namespace sifkit {

/// Maps names to dense zero-based indices in order of first appearance.
class NameRegistry {
 public:
  std::pair<std::size_t, bool> resolve(const std::string& name) {
    auto [it, inserted] = index_.try_emplace(name, names_.size());
    if (inserted) names_.push_back(name);
    return {it->second, inserted};
  }

  std::optional<std::size_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> names_;
};

inline std::pair<std::size_t, bool> resolve_name(NameRegistry& registry, const std::string& name) {
  return registry.resolve(name);
}

/// Turns a SIF problem name into a valid identifier.
inline std::string rename_problem(std::string_view sif_name) {
  std::string out;
  if (!sif_name.empty() && std::isdigit(static_cast<unsigned char>(sif_name.front()))) out = "n";
  for (char c : sif_name) {
    switch (c) {
      case '+': out += 'p'; break;
      case '-': out += 'm'; break;
      case '*': out += 't'; break;
      case '/': out += 'd'; break;
      default: out += c;
    }
  }
  return out;
}

struct LoopFrame {
  std::string variable;
  long long value = 0;
  long long end = 0;
  long long increment = 1;

  bool operator==(const LoopFrame&) const = default;
};

struct ParameterEnvironment {
  std::map<std::string, long long> integer_params;
  std::map<std::string, double> real_params;
  std::vector<LoopFrame> loop_stack;

  void set_integer(const std::string& name, long long v) {
    real_params.erase(name);
    integer_params[name] = v;
  }
  void set_real(const std::string& name, double v) {
    integer_params.erase(name);
    real_params[name] = v;
  }

  long long integer(const std::string& name, int line = 0) const {
    if (auto it = integer_params.find(name); it != integer_params.end()) return it->second;
    if (real_params.count(name))
      throw Error(ErrorKind::TypeMismatch, "parameter " + name + " is real where an integer is required", line);
    throw Error(ErrorKind::UnboundParameter, "integer parameter " + name + " is not defined", line);
  }

  double real(const std::string& name, int line = 0) const {
    if (auto it = real_params.find(name); it != real_params.end()) return it->second;
    if (integer_params.count(name))
      throw Error(ErrorKind::TypeMismatch, "parameter " + name + " is an integer where a real is required", line);
    throw Error(ErrorKind::UnboundParameter, "real parameter " + name + " is not defined", line);
  }

  bool operator==(const ParameterEnvironment&) const = default;
};

struct DecodeOptions {
  bool keepcorder = false;
  bool keepcformat = false;
  bool expose_xscale = false;
  bool addinA = true;
  bool get_xnames = true;
  bool get_cnames = true;
  bool get_enames = false;
  bool get_gnames = false;

  bool operator==(const DecodeOptions&) const = default;
};

/// A value supplied for a "$-PARAMETER" record. An empty name matches any.
struct ParamValue {
  std::string name;
  double value = 0.0;

  bool operator==(const ParamValue&) const = default;
};

namespace detail {

inline std::optional<long long> parse_integer(std::string_view s) {
  std::string t = trim(s);
  std::string_view v = t;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) return std::nullopt;
  return out;
}

inline double field_real(const std::string& text, int line) {
  if (text.empty()) return 0.0;
  auto v = parse_fortran_real(text);
  if (!v) throw Error(ErrorKind::MalformedRecord, "'" + text + "' is not a number", line);
  return *v;
}

inline long long field_integer(const std::string& text, int line) {
  if (auto v = parse_integer(text)) return *v;
  double d = field_real(text, line);
  if (d != std::trunc(d) || std::abs(d) > 9.0e15)
    throw Error(ErrorKind::TypeMismatch, "'" + text + "' is not an integer", line);
  return static_cast<long long>(d);
}

inline bool is_quoted(const std::string& s) { return !s.empty() && s.front() == '\''; }

/// Named RF functions, including the SIF spellings.
inline Intrinsic param_function(const std::string& name, int line) {
  static const std::map<std::string, Intrinsic, std::less<>> sif_names{
      {"ARCSIN", Intrinsic::Asin}, {"ARCCOS", Intrinsic::Acos}, {"ARCTAN", Intrinsic::Atan},
      {"HYPSIN", Intrinsic::Sinh}, {"HYPCOS", Intrinsic::Cosh}, {"HYPTAN", Intrinsic::Tanh},
  };
  std::string upper = to_upper(name);
  if (auto it = sif_names.find(upper); it != sif_names.end()) return it->second;
  auto fn = find_intrinsic(upper);
  if (!fn || intrinsic_info(*fn).min_args != 1)
    throw Error(ErrorKind::UnknownIntrinsic, "'" + name + "' is not a one-argument function", line);
  return *fn;
}

inline long long checked_divide(long long a, long long b, int line) {
  if (b == 0) throw Error(ErrorKind::DomainError, "integer division by zero", line);
  return a / b;
}

inline double checked_divide(double a, double b, int line) {
  if (b == 0.0) throw Error(ErrorKind::DomainError, "division by zero", line);
  return a / b;
}

}  // namespace detail

inline bool is_param_directive(std::string_view ind) {
  if (ind.size() != 2) return false;
  std::string_view ops = ind[0] == 'I' ? "EASMDR=+-*/" : (ind[0] == 'R' || ind[0] == 'A') ? "EASMDIF(=+-*/" : "";
  return ops.find(ind[1]) != std::string_view::npos;
}

/// Executes one parameter directive. Arrays (A codes) behave as real codes
/// on index-expanded names.
inline void apply_param_directive(ParameterEnvironment& env, const SourceRecord& r) {
  using namespace detail;
  const int line = r.line;
  if (r.indicator.size() != 2)
    throw Error(ErrorKind::UnknownDirective, "unknown directive '" + r.indicator + "'", line);
  const char family = r.indicator[0];
  const char op = r.indicator[1];
  if (r.name2.empty()) throw Error(ErrorKind::MalformedRecord, "directive without a target name", line);

  if (family == 'I') {
    auto i3 = [&] { return env.integer(r.name3, line); };
    auto i5 = [&] { return env.integer(r.name5, line); };
    long long v = 0;
    switch (op) {
      case 'E': v = field_integer(r.value4, line); break;
      case 'A': v = i3() + field_integer(r.value4, line); break;
      case 'S': v = field_integer(r.value4, line) - i3(); break;
      case 'M': v = i3() * field_integer(r.value4, line); break;
      case 'D': v = checked_divide(field_integer(r.value4, line), i3(), line); break;
      case 'R': v = static_cast<long long>(env.real(r.name3, line)); break;
      case '=': v = i3(); break;
      case '+': v = i3() + i5(); break;
      case '-': v = i3() - i5(); break;
      case '*': v = i3() * i5(); break;
      case '/': v = checked_divide(i3(), i5(), line); break;
      default: throw Error(ErrorKind::UnknownDirective, "unknown directive '" + r.indicator + "'", line);
    }
    env.set_integer(r.name2, v);
    return;
  }
  if (family == 'R' || family == 'A') {
    auto r3 = [&] { return env.real(r.name3, line); };
    auto r5 = [&] { return env.real(r.name5, line); };
    auto f4 = [&] { return field_real(r.value4, line); };
    double v = 0.0;
    switch (op) {
      case 'E': v = f4(); break;
      case 'A': v = r3() + f4(); break;
      case 'S': v = f4() - r3(); break;
      case 'M': v = r3() * f4(); break;
      case 'D': v = checked_divide(f4(), r3(), line); break;
      case 'I': v = static_cast<double>(env.integer(r.name3, line)); break;
      case 'F': {
        double arg = f4();
        v = apply_intrinsic(param_function(r.name3, line), std::span<const double>(&arg, 1));
        break;
      }
      case '(': {
        double arg = r5();
        v = apply_intrinsic(param_function(r.name3, line), std::span<const double>(&arg, 1));
        break;
      }
      case '=': v = r3(); break;
      case '+': v = r3() + r5(); break;
      case '-': v = r3() - r5(); break;
      case '*': v = r3() * r5(); break;
      case '/': v = checked_divide(r3(), r5(), line); break;
      default: throw Error(ErrorKind::UnknownDirective, "unknown directive '" + r.indicator + "'", line);
    }
    env.set_real(r.name2, v);
    return;
  }
  throw Error(ErrorKind::UnknownDirective, "unknown directive '" + r.indicator + "'", line);
}

inline ParameterEnvironment eval_param_directive(ParameterEnvironment env, const SourceRecord& record) {
  try {
    apply_param_directive(env, record);
  } catch (const Error& e) {
    std::vector<Diagnostic> diags = e.diagnostics();
    for (auto& d : diags)
      if (d.line == 0) d.line = record.line;
    throw Error(std::move(diags));
  }
  return env;
}

/// "X(I,J)" with I=1, J=2 becomes "X1,2". Quoted names are left alone.
inline std::string substitute_indices(const std::string& name, const ParameterEnvironment& env, int line = 0) {
  if (detail::is_quoted(name)) return name;
  auto open = name.find('(');
  if (open == std::string::npos) return name;
  auto close = name.rfind(')');
  if (close == std::string::npos || close < open)
    throw Error(ErrorKind::MalformedRecord, "unbalanced parentheses in '" + name + "'", line);
  std::string out = name.substr(0, open);
  std::string_view inside = std::string_view(name).substr(open + 1, close - open - 1);
  bool first = true;
  while (true) {
    auto comma = inside.find(',');
    std::string token = detail::trim(inside.substr(0, comma));
    long long value = 0;
    if (auto it = env.integer_params.find(token); it != env.integer_params.end()) {
      value = it->second;
    } else if (auto lit = detail::parse_integer(token)) {
      value = *lit;
    } else {
      throw Error(ErrorKind::UnboundLoopVariable, "index '" + token + "' in '" + name + "' is not bound", line);
    }
    if (!first) out += ',';
    out += std::to_string(value);
    first = false;
    if (comma == std::string_view::npos) break;
    inside.remove_prefix(comma + 1);
  }
  out += name.substr(close + 1);
  return out;
}

inline SourceRecord substitute_record(const SourceRecord& rec, const ParameterEnvironment& env) {
  SourceRecord out = rec;
  out.name2 = substitute_indices(rec.name2, env, rec.line);
  out.name3 = substitute_indices(rec.name3, env, rec.line);
  out.name5 = substitute_indices(rec.name5, env, rec.line);
  return out;
}

using RecordSink = std::function<void(const SourceRecord&)>;

namespace detail {

struct LoopNode {
  const SourceRecord* record = nullptr;     // plain record
  const SourceRecord* head = nullptr;       // DO record of a loop
  const SourceRecord* increment = nullptr;  // DI record, if any
  std::vector<LoopNode> body;
};

inline void report(std::vector<Diagnostic>* sink, const Error& e, int line) {
  std::vector<Diagnostic> diags = e.diagnostics();
  for (auto& d : diags)
    if (d.line == 0) d.line = line;
  if (!sink) throw Error(std::move(diags));
  sink->insert(sink->end(), diags.begin(), diags.end());
}

inline long long loop_bound(const std::string& token, const ParameterEnvironment& env, int line) {
  if (token.empty()) throw Error(ErrorKind::MalformedRecord, "loop bound missing", line);
  if (auto it = env.integer_params.find(token); it != env.integer_params.end()) return it->second;
  if (auto lit = parse_integer(token)) return *lit;
  if (env.real_params.count(token))
    throw Error(ErrorKind::TypeMismatch, "loop bound " + token + " is a real parameter", line);
  throw Error(ErrorKind::UnboundParameter, "loop bound " + token + " is not defined", line);
}

inline void run_nodes(const std::vector<LoopNode>& nodes, ParameterEnvironment& env, const RecordSink& emit,
                      std::vector<Diagnostic>* sink) {
  for (const auto& node : nodes) {
    if (node.record) {
      try {
        SourceRecord rec = substitute_record(*node.record, env);
        if (is_param_directive(rec.indicator))
          apply_param_directive(env, rec);
        else
          emit(rec);
      } catch (const Error& e) {
        report(sink, e, node.record->line);
      }
      continue;
    }
    const SourceRecord& head = *node.head;
    LoopFrame frame;
    try {
      frame.variable = head.name2;
      frame.value = loop_bound(head.name3, env, head.line);
      frame.end = loop_bound(head.name5, env, head.line);
      if (node.increment) {
        frame.increment = loop_bound(node.increment->name3, env, node.increment->line);
        if (frame.increment == 0)
          throw Error(ErrorKind::ZeroIncrement, "loop " + frame.variable + " has increment 0", node.increment->line);
      }
    } catch (const Error& e) {
      report(sink, e, head.line);
      continue;
    }
    std::optional<long long> saved;
    if (auto it = env.integer_params.find(frame.variable); it != env.integer_params.end()) saved = it->second;
    env.loop_stack.push_back(frame);
    for (long long v = frame.value; frame.increment > 0 ? v <= frame.end : v >= frame.end; v += frame.increment) {
      env.loop_stack.back().value = v;
      env.set_integer(frame.variable, v);
      run_nodes(node.body, env, emit, sink);
    }
    env.loop_stack.pop_back();
    if (saved)
      env.integer_params[frame.variable] = *saved;
    else
      env.integer_params.erase(frame.variable);
  }
}

}  // namespace detail

/// Runs the records of one data section: parameter directives update `env`,
/// loops are unrolled and every other record is emitted with its indices
/// substituted. Without a sink the first error is thrown.
inline void expand_loops(std::span<const SourceRecord> records, ParameterEnvironment& env, const RecordSink& emit,
                         std::vector<Diagnostic>* sink = nullptr) {
  using detail::LoopNode;
  std::vector<LoopNode> root;
  std::vector<LoopNode*> open;
  auto current = [&]() -> std::vector<LoopNode>& { return open.empty() ? root : open.back()->body; };
  for (const auto& rec : records) {
    if (rec.indicator == "DO") {
      current().push_back(LoopNode{nullptr, &rec, nullptr, {}});
      open.push_back(&current().back());
    } else if (rec.indicator == "DI") {
      LoopNode* target = nullptr;
      for (auto it = open.rbegin(); it != open.rend(); ++it)
        if ((*it)->head->name2 == rec.name2) {
          target = *it;
          break;
        }
      if (!target) {
        detail::report(sink,
                       Error(ErrorKind::UnexpectedRecord, "DI for " + rec.name2 + " outside a matching loop", rec.line),
                       rec.line);
        continue;
      }
      target->increment = &rec;
    } else if (rec.indicator == "OD") {
      if (open.empty()) {
        detail::report(sink, Error(ErrorKind::UnexpectedRecord, "OD without an open loop", rec.line), rec.line);
        continue;
      }
      open.pop_back();
    } else if (rec.indicator == "ND") {
      open.clear();
    } else {
      current().push_back(LoopNode{&rec, nullptr, nullptr, {}});
    }
  }
  if (!open.empty()) {
    const SourceRecord& head = *open.front()->head;
    detail::report(sink,
                   Error(ErrorKind::UnterminatedLoop, "loop over " + head.name2 + " is never closed", head.line),
                   head.line);
    return;
  }
  detail::run_nodes(root, env, emit, sink);
}

namespace detail {

inline std::string format_param_value(double v, bool integer) {
  if (integer) return std::to_string(static_cast<long long>(v));
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

/// Replaces the values of "$-PARAMETER" records, in file order, by the
/// supplied values.
inline void apply_user_params(SectionedProgram& prog, std::span<const ParamValue> params,
                              std::vector<Diagnostic>& diags) {
  std::size_t next = 0;
  for (auto& section : prog.sections) {
    for (auto& rec : section.records) {
      if (!rec.is_parameter_marker() || !is_param_directive(rec.indicator)) continue;
      if (next >= params.size()) return;
      const ParamValue& p = params[next++];
      if (!p.name.empty() && p.name != rec.name2) {
        diags.push_back({ErrorKind::ParameterNameMismatch, rec.line,
                         "parameter " + std::to_string(next) + " is named " + p.name + " but the file defines " +
                             rec.name2});
        continue;
      }
      bool integer = rec.indicator[0] == 'I';
      if (integer && p.value != std::trunc(p.value)) {
        diags.push_back({ErrorKind::TypeMismatch, rec.line,
                         "integer parameter " + rec.name2 + " given non-integer value " +
                             format_param_value(p.value, false)});
        continue;
      }
      rec.value4 = format_param_value(p.value, integer);
    }
  }
  if (next < params.size())
    diags.push_back({ErrorKind::TooManyParameters, 0,
                     std::to_string(params.size()) + " parameters given but the file declares only " +
                         std::to_string(next)});
}

struct VarInfo {
  double scale = 1.0;
  char type = 'r';
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> start;
};

struct GroupInfo {
  char kind = 'N';
  int line = 0;
  std::optional<double> constant;
  std::optional<double> range;
  double scale = 1.0;
  std::optional<std::string> type;
  std::map<std::string, double> params;
  std::vector<std::size_t> elements;
  std::vector<double> weights;
  std::optional<double> multiplier;
};

struct ElementInfo {
  std::string type;
  int line = 0;
  std::map<std::string, std::size_t> vars;
  std::map<std::string, double> params;
};

struct LinearEntry {
  std::string group;
  std::size_t var = 0;
  double value = 0.0;
  int line = 0;
};

/// Tracks the first named set of an alternative-set section.
struct SetFilter {
  std::string section;
  std::optional<std::string> first;

  bool accept(const std::string& set, std::vector<std::string>& inert) {
    if (!first) first = set;
    if (set == *first) return true;
    std::string tag = section + " " + set;
    if (std::find(inert.begin(), inert.end(), tag) == inert.end()) inert.push_back(tag);
    return false;
  }
};

class ProblemBuilder {
 public:
  ProblemBuilder(const SectionedProgram& prog, const DecodeOptions& options, std::vector<Diagnostic>& diags)
      : prog_(prog), options_(options), diags_(diags) {}

  Problem build() {
    for (const auto& section : prog_.sections) {
      if (is_nonlinear_section(section.kind)) continue;
      expand_loops(
          section.records, env_,
          [&](const SourceRecord& rec) {
            try {
              dispatch(section.kind, rec);
            } catch (const Error& e) {
              report(&diags_, e, rec.line);
            }
          },
          &diags_);
    }
    return finish();
  }

 private:
  [[noreturn]] static void unexpected(const SourceRecord& r, SectionKind kind) {
    if (r.indicator.size() == 2 && (r.indicator[0] == 'I' || r.indicator[0] == 'R' || r.indicator[0] == 'A'))
      throw Error(ErrorKind::UnknownDirective, "unknown directive '" + r.indicator + "'", r.line);
    throw Error(ErrorKind::UnexpectedRecord,
                "record '" + r.indicator + "' not allowed in " + std::string(section_title(kind)), r.line);
  }

  double zvalue(const SourceRecord& r) const { return env_.real(r.name5, r.line); }

  /// Calls fn(name, value) for each (field, value) pair of a record; Z codes
  /// carry a single pair whose value is the real parameter named in field 5.
  template <typename Fn>
  void pairs(const SourceRecord& r, bool z, Fn&& fn) {
    if (z) {
      fn(r.name3, zvalue(r));
      return;
    }
    if (!r.name3.empty()) fn(r.name3, field_real(r.value4, r.line));
    if (!r.name5.empty()) fn(r.name5, field_real(r.value6, r.line));
  }

  std::size_t variable(const std::string& name, int line) const {
    auto v = vars_.find(name);
    if (!v) throw Error(ErrorKind::UndefinedVariable, "variable " + name + " is not declared", line);
    return *v;
  }

  std::size_t group(const std::string& name, int line) const {
    auto g = groups_.find(name);
    if (!g) throw Error(ErrorKind::UndefinedGroup, "group " + name + " is not declared", line);
    return *g;
  }

  std::size_t declare_variable(const std::string& name) {
    auto [idx, fresh] = vars_.resolve(name);
    if (fresh) var_info_.emplace_back();
    return idx;
  }

  void dispatch(SectionKind kind, const SourceRecord& r) {
    switch (kind) {
      case SectionKind::Preamble: unexpected(r, kind);
      case SectionKind::Variables: on_variables(r); break;
      case SectionKind::Groups: on_groups(r); break;
      case SectionKind::Constants: on_constants(r, false); break;
      case SectionKind::Ranges: on_constants(r, true); break;
      case SectionKind::Bounds: on_bounds(r); break;
      case SectionKind::StartPoint: on_start(r); break;
      case SectionKind::Quadratic: on_quadratic(r); break;
      case SectionKind::ElementType: on_element_type(r); break;
      case SectionKind::ElementUses: on_element_uses(r); break;
      case SectionKind::GroupType: on_group_type(r); break;
      case SectionKind::GroupUses: on_group_uses(r); break;
      case SectionKind::ObjectBound: on_object_bound(r); break;
      default: unexpected(r, kind);
    }
  }

  void on_variables(const SourceRecord& r) {
    const std::string& ind = r.indicator;
    if (!(ind.empty() || ind == "X" || ind == "Z")) unexpected(r, SectionKind::Variables);
    if (r.name2.empty()) throw Error(ErrorKind::MalformedRecord, "variable name missing", r.line);
    std::size_t v = declare_variable(r.name2);
    pairs(r, ind == "Z", [&](const std::string& field, double value) {
      if (field == "'SCALE'") {
        var_info_[v].scale = value;
      } else if (field == "'INTEGER'") {
        var_info_[v].type = 'i';
      } else if (field == "'ZERO-ONE'") {
        var_info_[v].type = 'b';
      } else {
        linear_.push_back({field, v, value, r.line});
      }
    });
  }

  void on_groups(const SourceRecord& r) {
    std::string ind = r.indicator;
    bool z = false;
    if (ind.size() == 2 && (ind[0] == 'X' || ind[0] == 'Z')) {
      z = ind[0] == 'Z';
      ind = ind.substr(1);
    }
    if (ind != "N" && ind != "E" && ind != "L" && ind != "G") unexpected(r, SectionKind::Groups);
    if (r.name2.empty()) throw Error(ErrorKind::MalformedRecord, "group name missing", r.line);
    auto [g, fresh] = groups_.resolve(r.name2);
    if (fresh) {
      group_info_.emplace_back();
      group_info_[g].kind = ind[0];
      group_info_[g].line = r.line;
    } else if (group_info_[g].kind != ind[0]) {
      throw Error(ErrorKind::UnexpectedRecord, "group " + r.name2 + " declared with two different types", r.line);
    }
    pairs(r, z, [&](const std::string& field, double value) {
      if (field == "'SCALE'") {
        group_info_[g].scale = value;
      } else {
        std::size_t v = declare_variable(field);
        linear_.push_back({r.name2, v, value, r.line});
      }
    });
  }

  void on_constants(const SourceRecord& r, bool ranges) {
    const std::string& ind = r.indicator;
    SectionKind kind = ranges ? SectionKind::Ranges : SectionKind::Constants;
    if (!(ind.empty() || ind == "X" || ind == "Z")) unexpected(r, kind);
    SetFilter& filter = ranges ? range_sets_ : constant_sets_;
    if (!filter.accept(r.name2, alternative_sets_)) return;
    pairs(r, ind == "Z", [&](const std::string& field, double value) {
      if (field == "'DEFAULT'") {
        (ranges ? default_range_ : default_constant_) = value;
        return;
      }
      std::size_t g = group(field, r.line);
      (ranges ? group_info_[g].range : group_info_[g].constant) = value;
    });
  }

  void on_bounds(const SourceRecord& r) {
    static const std::map<std::string, std::string, std::less<>> aliases{
        {"XL", "LO"}, {"XU", "UP"}, {"XX", "FX"}, {"XR", "FR"}, {"XM", "MI"}, {"XP", "PL"},
        {"ZL", "LO"}, {"ZU", "UP"}, {"ZX", "FX"},
    };
    std::string code = r.indicator;
    bool z = !code.empty() && code[0] == 'Z';
    if (auto it = aliases.find(code); it != aliases.end()) code = it->second;
    static const std::set<std::string, std::less<>> known{"LO", "UP", "FX", "FR", "MI", "PL", "BV", "LI", "UI"};
    if (!known.count(code)) unexpected(r, SectionKind::Bounds);
    if (!bound_sets_.accept(r.name2, alternative_sets_)) return;
    double value = 0.0;
    bool needs_value = code == "LO" || code == "UP" || code == "FX" || code == "LI" || code == "UI";
    if (needs_value) value = z ? zvalue(r) : field_real(r.value4, r.line);

    auto apply = [&](std::optional<double>& lo, std::optional<double>& up, char* type) {
      if (code == "LO" || code == "LI") lo = value;
      if (code == "UP" || code == "UI") up = value;
      if (code == "FX") lo = up = value;
      if (code == "FR") {
        lo = -kInf;
        up = kInf;
      }
      if (code == "MI") lo = -kInf;
      if (code == "PL") up = kInf;
      if (code == "BV") {
        lo = 0.0;
        up = 1.0;
      }
      if (type && (code == "LI" || code == "UI")) *type = 'i';
      if (type && code == "BV") *type = 'b';
    };
    if (r.name3 == "'DEFAULT'") {
      apply(default_lower_, default_upper_, nullptr);
      return;
    }
    VarInfo& info = var_info_[variable(r.name3, r.line)];
    apply(info.lower, info.upper, &info.type);
  }

  void on_start(const SourceRecord& r) {
    std::string ind = r.indicator;
    bool z = !ind.empty() && ind[0] == 'Z';
    if (!ind.empty() && (ind[0] == 'X' || ind[0] == 'Z')) ind = ind.substr(1);
    if (!(ind.empty() || ind == "V" || ind == "M")) unexpected(r, SectionKind::StartPoint);
    if (!start_sets_.accept(r.name2, alternative_sets_)) return;
    pairs(r, z, [&](const std::string& field, double value) {
      if (field == "'DEFAULT'") {
        if (ind != "M") default_start_ = value;
        if (ind != "V") default_multiplier_ = value;
        return;
      }
      if (ind == "V") {
        var_info_[variable(field, r.line)].start = value;
      } else if (ind == "M") {
        group_info_[group(field, r.line)].multiplier = value;
      } else if (auto v = vars_.find(field)) {
        var_info_[*v].start = value;
      } else if (auto g = groups_.find(field)) {
        group_info_[*g].multiplier = value;
      } else {
        throw Error(ErrorKind::UndefinedVariable, "start point names unknown variable " + field, r.line);
      }
    });
  }

  void on_quadratic(const SourceRecord& r) {
    const std::string& ind = r.indicator;
    if (!(ind.empty() || ind == "X" || ind == "Z")) unexpected(r, SectionKind::Quadratic);
    std::size_t i = variable(r.name2, r.line);
    pairs(r, ind == "Z", [&](const std::string& field, double value) {
      quadratic_.push_back({i, variable(field, r.line), value});
    });
  }

  void on_element_type(const SourceRecord& r) {
    const std::string& ind = r.indicator;
    if (ind != "EV" && ind != "IV" && ind != "EP") unexpected(r, SectionKind::ElementType);
    if (r.name2.empty()) throw Error(ErrorKind::MalformedRecord, "element type name missing", r.line);
    ElementTypeDecl& decl = element_decls_[r.name2];
    auto& list = ind == "EV" ? decl.elemental : ind == "IV" ? decl.internal : decl.parameters;
    for (const std::string* name : {&r.name3, &r.name5})
      if (!name->empty() && std::find(list.begin(), list.end(), *name) == list.end()) list.push_back(*name);
  }

  std::optional<std::size_t> create_element(const std::string& name, const std::string& type, int line) {
    auto [e, fresh] = elements_.resolve(name);
    if (fresh) {
      element_info_.push_back({type, line, {}, {}});
    } else if (element_info_[e].type != type) {
      throw Error(ErrorKind::UnexpectedRecord, "element " + name + " already has type " + element_info_[e].type, line);
    }
    return e;
  }

  std::size_t element_for_use(const std::string& name, int line) {
    if (auto e = elements_.find(name)) return *e;
    if (default_element_type_) return *create_element(name, *default_element_type_, line);
    throw Error(ErrorKind::UndefinedElement, "element " + name + " has no type", line);
  }

  void on_element_uses(const SourceRecord& r) {
    std::string ind = r.indicator;
    bool z = !ind.empty() && ind[0] == 'Z';
    if (ind.size() == 2 && (ind[0] == 'X' || ind[0] == 'Z')) ind = ind.substr(1);
    if (ind == "T") {
      if (z) unexpected(r, SectionKind::ElementUses);
      if (!element_decls_.count(r.name3))
        throw Error(ErrorKind::UndefinedElementType, "element type " + r.name3 + " is not declared", r.line);
      if (r.name2 == "'DEFAULT'")
        default_element_type_ = r.name3;
      else
        create_element(r.name2, r.name3, r.line);
      return;
    }
    if (ind == "V") {
      if (z) unexpected(r, SectionKind::ElementUses);
      ElementInfo& info = element_info_[element_for_use(r.name2, r.line)];
      const auto& decl = element_decls_.at(info.type);
      if (std::find(decl.elemental.begin(), decl.elemental.end(), r.name3) == decl.elemental.end())
        throw Error(ErrorKind::UndeclaredName,
                    "element type " + info.type + " has no elemental variable " + r.name3, r.line);
      info.vars[r.name3] = variable(r.name5, r.line);
      return;
    }
    if (ind == "P") {
      ElementInfo& info = element_info_[element_for_use(r.name2, r.line)];
      const auto& decl = element_decls_.at(info.type);
      pairs(r, z, [&](const std::string& field, double value) {
        if (std::find(decl.parameters.begin(), decl.parameters.end(), field) == decl.parameters.end())
          throw Error(ErrorKind::UndeclaredName, "element type " + info.type + " has no parameter " + field, r.line);
        info.params[field] = value;
      });
      return;
    }
    unexpected(r, SectionKind::ElementUses);
  }

  void on_group_type(const SourceRecord& r) {
    const std::string& ind = r.indicator;
    if (ind != "GV" && ind != "GP") unexpected(r, SectionKind::GroupType);
    if (r.name2.empty()) throw Error(ErrorKind::MalformedRecord, "group type name missing", r.line);
    GroupTypeDecl& decl = group_decls_[r.name2];
    if (ind == "GV") {
      decl.argument = r.name3;
      return;
    }
    for (const std::string* name : {&r.name3, &r.name5})
      if (!name->empty() && std::find(decl.parameters.begin(), decl.parameters.end(), *name) == decl.parameters.end())
        decl.parameters.push_back(*name);
  }

  void on_group_uses(const SourceRecord& r) {
    std::string ind = r.indicator;
    bool z = !ind.empty() && ind[0] == 'Z';
    if (ind.size() == 2 && (ind[0] == 'X' || ind[0] == 'Z')) ind = ind.substr(1);
    if (ind == "T") {
      if (z) unexpected(r, SectionKind::GroupUses);
      if (!group_decls_.count(r.name3))
        throw Error(ErrorKind::UndefinedGroupType, "group type " + r.name3 + " is not declared", r.line);
      if (r.name2 == "'DEFAULT'")
        default_group_type_ = r.name3;
      else
        group_info_[group(r.name2, r.line)].type = r.name3;
      return;
    }
    if (ind == "E") {
      auto g = groups_.find(r.name2);
      if (!g)
        throw Error(ErrorKind::DanglingElementUse, "elements assigned to undeclared group " + r.name2, r.line);
      auto add = [&](const std::string& name, double weight) {
        auto e = elements_.find(name);
        if (!e) throw Error(ErrorKind::UndefinedElement, "element " + name + " is not defined", r.line);
        group_info_[*g].elements.push_back(*e);
        group_info_[*g].weights.push_back(weight);
      };
      if (z) {
        add(r.name3, zvalue(r));
      } else {
        if (!r.name3.empty()) add(r.name3, r.value4.empty() ? 1.0 : field_real(r.value4, r.line));
        if (!r.name5.empty()) add(r.name5, r.value6.empty() ? 1.0 : field_real(r.value6, r.line));
      }
      return;
    }
    if (ind == "P") {
      GroupInfo& info = group_info_[group(r.name2, r.line)];
      pairs(r, z, [&](const std::string& field, double value) { info.params[field] = value; });
      return;
    }
    unexpected(r, SectionKind::GroupUses);
  }

  void on_object_bound(const SourceRecord& r) {
    const std::string& ind = r.indicator;
    bool z = !ind.empty() && ind[0] == 'Z';
    double value = z ? zvalue(r) : field_real(r.value4, r.line);
    if (ind == "LO" || ind == "XL" || ind == "ZL")
      objlower_ = value;
    else if (ind == "UP" || ind == "XU" || ind == "ZU")
      objupper_ = value;
    else
      unexpected(r, SectionKind::ObjectBound);
  }

  void error(ErrorKind kind, int line, std::string message) { diags_.push_back({kind, line, std::move(message)}); }

  std::span<const SourceRecord> records_of(SectionKind kind) const {
    const Section* s = prog_.find(kind);
    return s ? std::span<const SourceRecord>(s->records) : std::span<const SourceRecord>();
  }

  Problem finish() {
    Problem out;
    DecodedProblem& pb = out.pb;
    ProblemInternals& pbm = out.pbm;

    // Nonlinear sections.
    std::size_t before = diags_.size();
    GlobalParameters eglobals = evaluate_globals(records_of(SectionKind::ElementsGlobals), &diags_);
    pbm.element_types =
        parse_element_section(records_of(SectionKind::ElementsIndividuals), element_decls_, eglobals.names, &diags_);
    GlobalParameters gglobals = evaluate_globals(records_of(SectionKind::GroupsGlobals), &diags_);
    pbm.group_types =
        parse_group_section(records_of(SectionKind::GroupsIndividuals), group_decls_, gglobals.names, &diags_);
    bool nonlinear_ok = diags_.size() == before;
    pbm.efpar_names = eglobals.names;
    pbm.efpar = eglobals.values;
    pbm.gfpar_names = gglobals.names;
    pbm.gfpar = gglobals.values;

    // Variables.
    const std::size_t n = vars_.size();
    pb.n = n;
    pb.x0.resize(n);
    pb.xlower.resize(n);
    pb.xupper.resize(n);
    pb.xtype.assign(n, 'r');
    std::vector<double> xscale(n);
    for (std::size_t j = 0; j < n; ++j) {
      const VarInfo& v = var_info_[j];
      double lo = v.lower.value_or(default_lower_.value_or(0.0));
      double up = v.upper.value_or(default_upper_.value_or(kInf));
      if (v.type == 'b') {
        lo = v.lower.value_or(0.0);
        up = v.upper.value_or(1.0);
      }
      pb.xlower[j] = lo;
      pb.xupper[j] = up;
      pb.xtype[j] = v.type;
      pb.x0[j] = v.start.value_or(default_start_.value_or(0.0));
      xscale[j] = v.scale;
      if (lo > up)
        error(ErrorKind::InconsistentBounds, 0,
              "variable " + vars_.names()[j] + " has lower bound above upper bound");
      if (v.type == 'b' && (lo < 0.0 || up > 1.0))
        error(ErrorKind::InconsistentBounds, 0, "binary variable " + vars_.names()[j] + " has bounds outside [0,1]");
      if (v.scale == 0.0) error(ErrorKind::ZeroScaleFactor, 0, "variable " + vars_.names()[j] + " has scale 0");
    }

    // Linear part.
    const std::size_t ngrp = groups_.size();
    std::vector<Triplet> entries;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
    for (const auto& e : linear_) {
      auto g = groups_.find(e.group);
      if (!g) {
        error(ErrorKind::UndefinedGroup, e.line, "group " + e.group + " is not declared");
        continue;
      }
      if (!options_.addinA) {
        auto [it, fresh] = slot.try_emplace({*g, e.var}, entries.size());
        if (!fresh) {
          entries[it->second].value = e.value;
          continue;
        }
      }
      entries.push_back({*g, e.var, e.value});
    }
    SparseMatrix A = SparseMatrix::from_triplets(ngrp, n, std::move(entries));
    bool scales_ok = std::none_of(xscale.begin(), xscale.end(), [](double s) { return s == 0.0; });
    if (scales_ok) {
      ScaledLinearPart folded = fold_variable_scaling(A, xscale, options_.expose_xscale);
      pbm.A = std::move(folded.A);
      pb.xscale = std::move(folded.xscale);
    } else {
      pbm.A = std::move(A);
    }

    // Quadratic part.
    SymmetricBuilder hb(n);
    for (const auto& t : quadratic_) hb.add(t.row, t.col, t.value);
    pbm.H = std::move(hb).freeze();

    // Groups.
    pbm.gconst.resize(ngrp);
    pbm.gscale.resize(ngrp);
    pbm.grftype.resize(ngrp);
    pbm.grelt.resize(ngrp);
    pbm.grelw.resize(ngrp);
    pbm.grpar.resize(ngrp);
    bool trivial_used = false;
    for (std::size_t g = 0; g < ngrp; ++g) {
      const GroupInfo& info = group_info_[g];
      const std::string& gname = groups_.names()[g];
      pbm.gconst[g] = info.constant.value_or(default_constant_.value_or(0.0));
      pbm.gscale[g] = info.scale;
      if (info.scale == 0.0) error(ErrorKind::ZeroScaleFactor, info.line, "group " + gname + " has scale 0");
      pbm.grelt[g] = info.elements;
      pbm.grelw[g] = info.weights;
      std::optional<std::string> type = info.type ? info.type : default_group_type_;
      if (!type) {
        pbm.grftype[g] = kTrivialGroup;
        trivial_used = true;
        continue;
      }
      pbm.grftype[g] = *type;
      if (!pbm.group_types.count(*type)) {
        if (nonlinear_ok)
          error(ErrorKind::UndefinedGroupType, info.line,
                "group type " + *type + " used by " + gname + " has no definition in GROUPS");
        continue;
      }
      for (const auto& p : group_decls_.at(*type).parameters) {
        auto it = info.params.find(p);
        if (it == info.params.end()) {
          error(ErrorKind::MissingParameter, info.line, "group " + gname + " has no value for parameter " + p);
          continue;
        }
        pbm.grpar[g].push_back(it->second);
      }
    }
    if (trivial_used) pbm.group_types.emplace(kTrivialGroup, make_trivial_group());

    // Elements.
    const std::size_t nel = elements_.size();
    pbm.elftype.resize(nel);
    pbm.elvar.resize(nel);
    pbm.elpar.resize(nel);
    for (std::size_t e = 0; e < nel; ++e) {
      const ElementInfo& info = element_info_[e];
      const std::string& ename = elements_.names()[e];
      pbm.elftype[e] = info.type;
      const ElementTypeDecl& decl = element_decls_.at(info.type);
      if (!pbm.element_types.count(info.type) && nonlinear_ok)
        error(ErrorKind::UndefinedElementType, info.line,
              "element type " + info.type + " used by " + ename + " has no definition in ELEMENTS");
      for (const auto& v : decl.elemental) {
        auto it = info.vars.find(v);
        if (it == info.vars.end()) {
          error(ErrorKind::UnassignedElementVariable, info.line,
                "element " + ename + " has no variable assigned to " + v);
          continue;
        }
        pbm.elvar[e].push_back(it->second);
      }
      for (const auto& p : decl.parameters) {
        auto it = info.params.find(p);
        if (it == info.params.end()) {
          error(ErrorKind::MissingParameter, info.line, "element " + ename + " has no value for parameter " + p);
          continue;
        }
        pbm.elpar[e].push_back(it->second);
      }
    }

    // Objective and constraints.
    std::vector<std::size_t> cgroups;
    std::vector<Relation> relations;
    for (std::size_t g = 0; g < ngrp; ++g) {
      char k = group_info_[g].kind;
      if (k == 'N') {
        pbm.objgrps.push_back(g);
        continue;
      }
      cgroups.push_back(g);
      relations.push_back(k == 'L' ? Relation::Le : k == 'E' ? Relation::Eq : Relation::Ge);
    }
    std::vector<std::size_t> perm = classify_and_order(relations, options_.keepcorder);
    const std::size_t m = cgroups.size();
    pb.nob = pbm.objgrps.size();
    pb.m = m;
    std::vector<Relation> ctypes;
    std::vector<std::optional<double>> cranges;
    std::vector<double> clower, cupper, y0;
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t g = cgroups[perm[k]];
      Relation rel = relations[perm[k]];
      pbm.congrps.push_back(g);
      if (rel == Relation::Le) ++pb.nle;
      if (rel == Relation::Eq) ++pb.neq;
      if (rel == Relation::Ge) ++pb.nge;
      std::optional<double> range = group_info_[g].range ? group_info_[g].range : default_range_;
      if (rel == Relation::Eq) range.reset();
      if (range) range = rel == Relation::Le ? -std::abs(*range) : std::abs(*range);
      ctypes.push_back(rel);
      cranges.push_back(range);
      auto [lo, up] = convert_constraint_format(rel, range);
      clower.push_back(lo);
      cupper.push_back(up);
      y0.push_back(group_info_[g].multiplier.value_or(default_multiplier_.value_or(0.0)));
      if (pbm.grelt[g].empty()) pb.lincons.push_back(k);
    }
    if (m > 0) {
      pb.y0 = std::move(y0);
      if (options_.keepcformat) {
        pb.ctypes = std::move(ctypes);
        pb.cranges = std::move(cranges);
      } else {
        pb.clower = std::move(clower);
        pb.cupper = std::move(cupper);
      }
    }
    pb.objlower = objlower_;
    pb.objupper = objupper_;

    // Names.
    pb.name = rename_problem(prog_.problem_name);
    if (pb.name != prog_.problem_name) pb.sif_name = prog_.problem_name;
    pb.pbclass = prog_.classification;
    if (options_.get_xnames) pb.xnames = vars_.names();
    if (options_.get_cnames && m > 0) {
      std::vector<std::string> cnames;
      for (std::size_t g : pbm.congrps) cnames.push_back(groups_.names()[g]);
      pb.cnames = std::move(cnames);
    }
    if (options_.get_enames) pbm.enames = elements_.names();
    if (options_.get_gnames) pbm.grnames = groups_.names();
    pbm.alternative_sets = alternative_sets_;
    return out;
  }

  const SectionedProgram& prog_;
  DecodeOptions options_;
  std::vector<Diagnostic>& diags_;
  ParameterEnvironment env_;

  NameRegistry vars_;
  NameRegistry groups_;
  NameRegistry elements_;
  std::vector<VarInfo> var_info_;
  std::vector<GroupInfo> group_info_;
  std::vector<ElementInfo> element_info_;
  std::vector<LinearEntry> linear_;
  std::vector<Triplet> quadratic_;

  std::map<std::string, ElementTypeDecl> element_decls_;
  std::map<std::string, GroupTypeDecl> group_decls_;
  std::optional<std::string> default_element_type_;
  std::optional<std::string> default_group_type_;

  SetFilter constant_sets_{"CONSTANTS", {}};
  SetFilter range_sets_{"RANGES", {}};
  SetFilter bound_sets_{"BOUNDS", {}};
  SetFilter start_sets_{"START POINT", {}};
  std::vector<std::string> alternative_sets_;

  std::optional<double> default_constant_;
  std::optional<double> default_range_;
  std::optional<double> default_lower_;
  std::optional<double> default_upper_;
  std::optional<double> default_start_;
  std::optional<double> default_multiplier_;
  std::optional<double> objlower_;
  std::optional<double> objupper_;
};

}  // namespace detail

/// Runs the data phase, appending every problem found to `diags`. The
/// returned problem is meaningful only when no diagnostics were added.
inline Problem setup_collect(const SectionedProgram& program, std::span<const ParamValue> user_params,
                             const DecodeOptions& options, std::vector<Diagnostic>& diags) {
  if (!program.has_endata) {
    diags.push_back({ErrorKind::MissingEndata, 0, "program has no ENDATA"});
    return {};
  }
  SectionedProgram prog = program;
  detail::apply_user_params(prog, user_params, diags);
  detail::ProblemBuilder builder(prog, options, diags);
  return builder.build();
}

inline Problem setup(const SectionedProgram& program, std::span<const ParamValue> user_params = {},
                     const DecodeOptions& options = {}) {
  std::vector<Diagnostic> diags;
  Problem out = setup_collect(program, user_params, options, diags);
  if (!diags.empty()) throw Error(std::move(diags));
  return out;
}

struct DecodeOutcome {
  std::optional<Problem> problem;
  std::vector<Diagnostic> diagnostics;
};

/// Reads and sets up a SIF text, collecting the diagnostics of both phases.
inline DecodeOutcome decode(std::string_view text, std::span<const ParamValue> user_params = {},
                            const DecodeOptions& options = {}) {
  DecodeOutcome out;
  ReadOutcome read = read_sif_collect(text);
  out.diagnostics = std::move(read.diagnostics);
  if (read.fatal) return out;
  Problem p = setup_collect(read.program, user_params, options, out.diagnostics);
  std::stable_sort(out.diagnostics.begin(), out.diagnostics.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  if (out.diagnostics.empty()) out.problem = std::move(p);
  return out;
}

/// Throwing convenience wrapper around decode().
inline Problem decode_or_throw(std::string_view text, std::span<const ParamValue> user_params = {},
                               const DecodeOptions& options = {}) {
  DecodeOutcome out = decode(text, user_params, options);
  if (!out.problem) throw Error(std::move(out.diagnostics));
  return std::move(*out.problem);
}

}  // namespace sifkit

#endif  // SIFKIT_EXPANDER_HPP
