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

#ifndef SIFKIT_JSON_IO_HPP
#define SIFKIT_JSON_IO_HPP

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sifkit/error.hpp"
#include "sifkit/expander.hpp"
#include "sifkit/expression.hpp"
#include "sifkit/model.hpp"
#include "sifkit/nonlinear.hpp"
#include "sifkit/sparse.hpp"

namespace sifkit {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

struct Provenance {
  std::string source;
  DecodeOptions options;
  std::vector<ParamValue> params;

  bool operator==(const Provenance&) const = default;
};

/// Everything written by `sifkit decode`.
struct ProblemDump {
  Provenance provenance;
  Problem problem;

  bool operator==(const ProblemDump&) const = default;
};

namespace json_detail {

[[noreturn]] inline void bad(const std::string& what) { throw Error(ErrorKind::BadDump, what); }

inline Json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

inline double number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  bad("expected a number, got " + j.dump());
}

inline Json numbers(const std::vector<double>& v) {
  Json out = Json::array();
  for (double d : v) out.push_back(number(d));
  return out;
}

inline std::vector<double> numbers(const Json& j) {
  if (!j.is_array()) bad("expected an array of numbers, got " + j.dump());
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(number(e));
  return out;
}

inline Json indices(const std::vector<std::size_t>& v) { return Json(v); }

inline std::vector<std::size_t> indices(const Json& j) {
  if (!j.is_array()) bad("expected an array of indices, got " + j.dump());
  std::vector<std::size_t> out;
  for (const auto& e : j) {
    if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0))
      bad("expected a nonnegative index, got " + e.dump());
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

inline std::vector<std::string> strings(const Json& j) {
  if (!j.is_array()) bad("expected an array of strings, got " + j.dump());
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) bad("expected a string, got " + e.dump());
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline const Json& at(const Json& j, std::string_view key) {
  if (!j.is_object()) bad("expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad("missing key '" + std::string(key) + "'");
  return *it;
}

template <typename T>
T get(const Json& j, std::string_view key) {
  try {
    return at(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad("key '" + std::string(key) + "' has the wrong type");
  }
}

inline Json sparse(const SparseMatrix& m) {
  Json entries = Json::array();
  for (const auto& t : m.entries()) entries.push_back(Json::array({t.row, t.col, number(t.value)}));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
}

inline SparseMatrix sparse(const Json& j) {
  auto rows = get<std::size_t>(j, "rows");
  auto cols = get<std::size_t>(j, "cols");
  std::vector<Triplet> entries;
  for (const auto& e : at(j, "entries")) {
    if (!e.is_array() || e.size() != 3) bad("sparse entry must be [i, j, v]");
    entries.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), number(e[2])});
  }
  try {
    return SparseMatrix::from_triplets(rows, cols, std::move(entries));
  } catch (const Error& err) {
    bad(err.what());
  }
}

inline std::string_view op_symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "**";
    case Op::Negate: return "neg";
    default: return "?";
  }
}

inline Json expr(const Expr& e) {
  switch (e.op) {
    case Op::Literal: return number(e.literal);
    case Op::Name: return e.name;
    case Op::Call: {
      Json out = Json::array({std::string(intrinsic_info(e.fn).name)});
      for (const auto& a : e.args) out.push_back(expr(a));
      return out;
    }
    default: {
      Json out = Json::array({std::string(op_symbol(e.op))});
      for (const auto& a : e.args) out.push_back(expr(a));
      return out;
    }
  }
}

inline Expr expr(const Json& j) {
  if (j.is_number()) return Expr::number(j.get<double>());
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf" || s == "-inf" || s == "nan") return Expr::number(number(j));
    return Expr::reference(s);
  }
  if (!j.is_array() || j.empty() || !j[0].is_string()) bad("malformed expression " + j.dump());
  std::string head = j[0].get<std::string>();
  std::vector<Expr> args;
  for (std::size_t k = 1; k < j.size(); ++k) args.push_back(expr(j[k]));
  if (head == "neg") {
    if (args.size() != 1) bad("'neg' takes one operand");
    return Expr::unary(Op::Negate, std::move(args[0]));
  }
  for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow})
    if (head == op_symbol(op)) {
      if (args.size() != 2) bad("'" + head + "' takes two operands");
      return Expr::binary(op, std::move(args[0]), std::move(args[1]));
    }
  auto fn = find_intrinsic(head);
  if (!fn) bad("unknown operator '" + head + "'");
  const auto& info = intrinsic_info(*fn);
  if (static_cast<int>(args.size()) < info.min_args || (info.max_args >= 0 && static_cast<int>(args.size()) > info.max_args))
    bad("wrong number of arguments to " + head);
  return Expr::call(*fn, std::move(args));
}

inline Json program(const ExpressionProgram& p) {
  Json temps = Json::array();
  for (const auto& [name, e] : p.temporaries) temps.push_back(Json::array({name, expr(e)}));
  Json first = Json::array();
  for (const auto& d : p.first_derivs) first.push_back(Json::array({d.variable, expr(d.expr)}));
  Json second = Json::array();
  for (const auto& d : p.second_derivs) second.push_back(Json::array({d.first, d.second, expr(d.expr)}));
  return Json{{"inputs", p.inputs},       {"variable_count", p.variable_count},
              {"temporaries", temps},      {"value", expr(p.value)},
              {"first_derivs", first},     {"second_derivs", second},
              {"has_first", p.has_first},  {"has_second", p.has_second}};
}

inline ExpressionProgram program(const Json& j) {
  ExpressionProgram p;
  p.inputs = strings(at(j, "inputs"));
  p.variable_count = get<std::size_t>(j, "variable_count");
  if (p.variable_count > p.inputs.size()) bad("variable_count exceeds the number of inputs");
  for (const auto& t : at(j, "temporaries")) {
    if (!t.is_array() || t.size() != 2 || !t[0].is_string()) bad("temporary must be [name, expr]");
    p.temporaries.emplace_back(t[0].get<std::string>(), expr(t[1]));
  }
  p.value = expr(at(j, "value"));
  for (const auto& d : at(j, "first_derivs")) {
    if (!d.is_array() || d.size() != 2 || !d[0].is_string()) bad("first derivative must be [name, expr]");
    p.first_derivs.push_back({d[0].get<std::string>(), expr(d[1])});
  }
  for (const auto& d : at(j, "second_derivs")) {
    if (!d.is_array() || d.size() != 3 || !d[0].is_string() || !d[1].is_string())
      bad("second derivative must be [name, name, expr]");
    p.second_derivs.push_back({d[0].get<std::string>(), d[1].get<std::string>(), expr(d[2])});
  }
  p.has_first = get<bool>(j, "has_first");
  p.has_second = get<bool>(j, "has_second");
  try {
    p.bind();
  } catch (const Error& err) {
    bad(err.what());
  }
  return p;
}

inline Json options(const DecodeOptions& o) {
  return Json{{"keepcorder", o.keepcorder}, {"keepcformat", o.keepcformat}, {"expose_xscale", o.expose_xscale},
              {"addinA", o.addinA},         {"get_xnames", o.get_xnames},   {"get_cnames", o.get_cnames},
              {"get_enames", o.get_enames}, {"get_gnames", o.get_gnames}};
}

inline DecodeOptions options(const Json& j) {
  DecodeOptions o;
  o.keepcorder = get<bool>(j, "keepcorder");
  o.keepcformat = get<bool>(j, "keepcformat");
  o.expose_xscale = get<bool>(j, "expose_xscale");
  o.addinA = get<bool>(j, "addinA");
  o.get_xnames = get<bool>(j, "get_xnames");
  o.get_cnames = get<bool>(j, "get_cnames");
  o.get_enames = get<bool>(j, "get_enames");
  o.get_gnames = get<bool>(j, "get_gnames");
  return o;
}

inline Json problem(const DecodedProblem& pb) {
  Json j;
  j["name"] = pb.name;
  j["sif_name"] = pb.sif_name;
  j["n"] = pb.n;
  j["nob"] = pb.nob;
  j["nle"] = pb.nle;
  j["neq"] = pb.neq;
  j["nge"] = pb.nge;
  j["m"] = pb.m;
  j["lincons"] = indices(pb.lincons);
  j["pbclass"] = pb.pbclass;
  j["x0"] = numbers(pb.x0);
  j["xlower"] = numbers(pb.xlower);
  j["xupper"] = numbers(pb.xupper);
  j["xtype"] = pb.xtype;
  if (pb.xscale) j["xscale"] = numbers(*pb.xscale);
  if (pb.y0) j["y0"] = numbers(*pb.y0);
  if (pb.clower) j["clower"] = numbers(*pb.clower);
  if (pb.cupper) j["cupper"] = numbers(*pb.cupper);
  if (pb.ctypes) {
    Json t = Json::array();
    for (Relation r : *pb.ctypes) t.push_back(relation_symbol(r));
    j["ctypes"] = std::move(t);
  }
  if (pb.cranges) {
    Json t = Json::array();
    for (const auto& r : *pb.cranges) t.push_back(r ? number(*r) : Json(nullptr));
    j["cranges"] = std::move(t);
  }
  if (pb.objlower) j["objlower"] = number(*pb.objlower);
  if (pb.objupper) j["objupper"] = number(*pb.objupper);
  if (pb.xnames) j["xnames"] = *pb.xnames;
  if (pb.cnames) j["cnames"] = *pb.cnames;
  return j;
}

inline DecodedProblem problem(const Json& j) {
  DecodedProblem pb;
  pb.name = get<std::string>(j, "name");
  pb.sif_name = get<std::string>(j, "sif_name");
  pb.n = get<std::size_t>(j, "n");
  pb.nob = get<std::size_t>(j, "nob");
  pb.nle = get<std::size_t>(j, "nle");
  pb.neq = get<std::size_t>(j, "neq");
  pb.nge = get<std::size_t>(j, "nge");
  pb.m = get<std::size_t>(j, "m");
  pb.lincons = indices(at(j, "lincons"));
  pb.pbclass = get<std::string>(j, "pbclass");
  pb.x0 = numbers(at(j, "x0"));
  pb.xlower = numbers(at(j, "xlower"));
  pb.xupper = numbers(at(j, "xupper"));
  pb.xtype = get<std::string>(j, "xtype");
  if (j.contains("xscale")) pb.xscale = numbers(j["xscale"]);
  if (j.contains("y0")) pb.y0 = numbers(j["y0"]);
  if (j.contains("clower")) pb.clower = numbers(j["clower"]);
  if (j.contains("cupper")) pb.cupper = numbers(j["cupper"]);
  if (j.contains("ctypes")) {
    std::vector<Relation> t;
    for (const auto& s : strings(j["ctypes"])) {
      auto r = parse_relation(s);
      if (!r) bad("unknown constraint type '" + s + "'");
      t.push_back(*r);
    }
    pb.ctypes = std::move(t);
  }
  if (j.contains("cranges")) {
    std::vector<std::optional<double>> t;
    for (const auto& e : j["cranges"]) t.push_back(e.is_null() ? std::nullopt : std::optional<double>(number(e)));
    pb.cranges = std::move(t);
  }
  if (j.contains("objlower")) pb.objlower = number(j["objlower"]);
  if (j.contains("objupper")) pb.objupper = number(j["objupper"]);
  if (j.contains("xnames")) pb.xnames = strings(j["xnames"]);
  if (j.contains("cnames")) pb.cnames = strings(j["cnames"]);
  return pb;
}

inline Json nested_indices(const std::vector<std::vector<std::size_t>>& v) {
  Json out = Json::array();
  for (const auto& row : v) out.push_back(indices(row));
  return out;
}

inline Json nested_numbers(const std::vector<std::vector<double>>& v) {
  Json out = Json::array();
  for (const auto& row : v) out.push_back(numbers(row));
  return out;
}

inline std::vector<std::vector<std::size_t>> nested_indices(const Json& j) {
  if (!j.is_array()) bad("expected an array of arrays");
  std::vector<std::vector<std::size_t>> out;
  for (const auto& row : j) out.push_back(indices(row));
  return out;
}

inline std::vector<std::vector<double>> nested_numbers(const Json& j) {
  if (!j.is_array()) bad("expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(numbers(row));
  return out;
}

inline Json internals(const ProblemInternals& pbm) {
  Json j;
  j["objgrps"] = indices(pbm.objgrps);
  j["congrps"] = indices(pbm.congrps);
  j["A"] = sparse(pbm.A);
  j["gconst"] = numbers(pbm.gconst);
  j["H"] = sparse(pbm.H);
  j["gscale"] = numbers(pbm.gscale);
  j["elftype"] = pbm.elftype;
  j["elvar"] = nested_indices(pbm.elvar);
  j["elpar"] = nested_numbers(pbm.elpar);
  j["grftype"] = pbm.grftype;
  j["grelt"] = nested_indices(pbm.grelt);
  j["grelw"] = nested_numbers(pbm.grelw);
  j["grpar"] = nested_numbers(pbm.grpar);
  j["efpar_names"] = pbm.efpar_names;
  j["efpar"] = numbers(pbm.efpar);
  j["gfpar_names"] = pbm.gfpar_names;
  j["gfpar"] = numbers(pbm.gfpar);
  if (pbm.enames) j["enames"] = *pbm.enames;
  if (pbm.grnames) j["grnames"] = *pbm.grnames;
  Json etypes = Json::object();
  for (const auto& [name, d] : pbm.element_types)
    etypes[name] = Json{{"elemental_variables", d.elemental_variables},
                        {"internal_variables", d.internal_variables},
                        {"parameters", d.parameters},
                        {"range", nested_numbers(d.range)},
                        {"program", program(d.program)}};
  j["element_types"] = std::move(etypes);
  Json gtypes = Json::object();
  for (const auto& [name, d] : pbm.group_types)
    gtypes[name] = Json{{"argument", d.argument}, {"parameters", d.parameters}, {"program", program(d.program)}};
  j["group_types"] = std::move(gtypes);
  j["alternative_sets"] = pbm.alternative_sets;
  return j;
}

inline ProblemInternals internals(const Json& j) {
  ProblemInternals pbm;
  pbm.objgrps = indices(at(j, "objgrps"));
  pbm.congrps = indices(at(j, "congrps"));
  pbm.A = sparse(at(j, "A"));
  pbm.gconst = numbers(at(j, "gconst"));
  pbm.H = sparse(at(j, "H"));
  pbm.gscale = numbers(at(j, "gscale"));
  pbm.elftype = strings(at(j, "elftype"));
  pbm.elvar = nested_indices(at(j, "elvar"));
  pbm.elpar = nested_numbers(at(j, "elpar"));
  pbm.grftype = strings(at(j, "grftype"));
  pbm.grelt = nested_indices(at(j, "grelt"));
  pbm.grelw = nested_numbers(at(j, "grelw"));
  pbm.grpar = nested_numbers(at(j, "grpar"));
  pbm.efpar_names = strings(at(j, "efpar_names"));
  pbm.efpar = numbers(at(j, "efpar"));
  pbm.gfpar_names = strings(at(j, "gfpar_names"));
  pbm.gfpar = numbers(at(j, "gfpar"));
  if (j.contains("enames")) pbm.enames = strings(j["enames"]);
  if (j.contains("grnames")) pbm.grnames = strings(j["grnames"]);
  for (const auto& [name, d] : at(j, "element_types").items()) {
    ElementDescriptor e;
    e.type = name;
    e.elemental_variables = strings(at(d, "elemental_variables"));
    e.internal_variables = strings(at(d, "internal_variables"));
    e.parameters = strings(at(d, "parameters"));
    e.range = nested_numbers(at(d, "range"));
    e.program = program(at(d, "program"));
    pbm.element_types.emplace(name, std::move(e));
  }
  for (const auto& [name, d] : at(j, "group_types").items()) {
    GroupDescriptor g;
    g.type = name;
    g.argument = get<std::string>(d, "argument");
    g.parameters = strings(at(d, "parameters"));
    g.program = program(at(d, "program"));
    pbm.group_types.emplace(name, std::move(g));
  }
  pbm.alternative_sets = strings(at(j, "alternative_sets"));
  return pbm;
}

/// Shape checks so that a loaded dump can be evaluated safely.
inline void validate(const Problem& p) {
  const auto& pb = p.pb;
  const auto& pbm = p.pbm;
  const std::size_t n = pb.n;
  const std::size_t ngrp = pbm.gconst.size();
  const std::size_t nel = pbm.elftype.size();
  auto need = [](bool ok, const std::string& what) {
    if (!ok) bad(what);
  };
  need(pb.x0.size() == n && pb.xlower.size() == n && pb.xupper.size() == n && pb.xtype.size() == n,
       "variable vectors do not have length n");
  need(!pb.xscale || pb.xscale->size() == n, "xscale does not have length n");
  need(pb.m == pb.nle + pb.neq + pb.nge, "m differs from nle + neq + nge");
  need(pbm.congrps.size() == pb.m, "congrps does not have length m");
  need(pbm.objgrps.size() == pb.nob, "objgrps does not have length nob");
  need(pbm.A.rows() == ngrp && pbm.A.cols() == n, "A has the wrong shape");
  need(pbm.H.rows() == n && pbm.H.cols() == n, "H has the wrong shape");
  need(pbm.gscale.size() == ngrp && pbm.grftype.size() == ngrp && pbm.grelt.size() == ngrp &&
           pbm.grelw.size() == ngrp && pbm.grpar.size() == ngrp,
       "group tables do not have one entry per group");
  need(pbm.elvar.size() == nel && pbm.elpar.size() == nel, "element tables do not have one entry per element");
  for (std::size_t g : pbm.objgrps) need(g < ngrp, "objective group index out of range");
  for (std::size_t g : pbm.congrps) need(g < ngrp, "constraint group index out of range");
  for (std::size_t k : pb.lincons) need(k < pb.m, "lincons entry out of range");
  for (std::size_t g = 0; g < ngrp; ++g) {
    need(pbm.grelt[g].size() == pbm.grelw[g].size(), "grelt and grelw differ in length");
    for (std::size_t e : pbm.grelt[g]) need(e < nel, "element index out of range");
    auto it = pbm.group_types.find(pbm.grftype[g]);
    need(it != pbm.group_types.end(), "group type " + pbm.grftype[g] + " has no definition");
    need(it->second.program.inputs.size() == 1 + pbm.grpar[g].size() + pbm.gfpar.size(),
         "group " + std::to_string(g) + " has the wrong number of parameters");
    need(it->second.program.variable_count == 1, "group type " + pbm.grftype[g] + " must have one argument");
  }
  for (std::size_t e = 0; e < nel; ++e) {
    for (std::size_t v : pbm.elvar[e]) need(v < n, "element variable index out of range");
    auto it = pbm.element_types.find(pbm.elftype[e]);
    need(it != pbm.element_types.end(), "element type " + pbm.elftype[e] + " has no definition");
    const ElementDescriptor& d = it->second;
    need(pbm.elvar[e].size() == d.elemental_count(), "element " + std::to_string(e) + " has the wrong arity");
    need(d.program.variable_count == d.internal_count(), "element type " + d.type + " has inconsistent inputs");
    need(d.program.inputs.size() == d.internal_count() + pbm.elpar[e].size() + pbm.efpar.size(),
         "element " + std::to_string(e) + " has the wrong number of parameters");
    if (d.has_range()) {
      need(d.range.size() == d.internal_count(), "range matrix has the wrong number of rows");
      for (const auto& row : d.range) need(row.size() == d.elemental_count(), "range matrix row has wrong length");
    }
  }
}

}  // namespace json_detail

inline Json to_json(const ProblemDump& dump) {
  using namespace json_detail;
  Json params = Json::array();
  for (const auto& p : dump.provenance.params) params.push_back(Json{{"name", p.name}, {"value", number(p.value)}});
  Json j;
  j["format_version"] = kFormatVersion;
  j["provenance"] = Json{{"source", dump.provenance.source},
                         {"options", options(dump.provenance.options)},
                         {"params", std::move(params)}};
  j["problem"] = problem(dump.problem.pb);
  j["internals"] = internals(dump.problem.pbm);
  return j;
}

inline ProblemDump from_json(const Json& j) {
  using namespace json_detail;
  try {
    if (get<int>(j, "format_version") != kFormatVersion) bad("unsupported format_version");
    ProblemDump dump;
    const Json& prov = at(j, "provenance");
    dump.provenance.source = get<std::string>(prov, "source");
    dump.provenance.options = options(at(prov, "options"));
    for (const auto& p : at(prov, "params"))
      dump.provenance.params.push_back({get<std::string>(p, "name"), number(at(p, "value"))});
    dump.problem.pb = problem(at(j, "problem"));
    dump.problem.pbm = internals(at(j, "internals"));
    validate(dump.problem);
    return dump;
  } catch (const nlohmann::json::exception& e) {
    bad(e.what());
  }
}

inline std::string dump_json(const ProblemDump& dump) { return to_json(dump).dump(1) + "\n"; }

inline ProblemDump load_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadDump, std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace sifkit

#endif  // SIFKIT_JSON_IO_HPP
