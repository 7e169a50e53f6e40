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

// sifkit: decode SIF problems, inspect and evaluate them, check derivatives.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sifkit/sifkit.hpp"

namespace {

using sifkit::Error;
using sifkit::ErrorKind;
using sifkit::Json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingArgument, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_number(const std::string& text) {
  auto v = sifkit::parse_fortran_real(sifkit::detail::trim(text));
  if (!v) throw Error(ErrorKind::MissingArgument, "'" + text + "' is not a number");
  return *v;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  if (sifkit::detail::trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  return out;
}

std::vector<double> read_vector_file(const std::string& path) {
  std::vector<double> out;
  std::stringstream ss(read_file(path));
  std::string item;
  while (std::getline(ss, item))
    if (!sifkit::detail::trim(item).empty()) out.push_back(parse_number(item));
  return out;
}

std::vector<std::size_t> parse_indices(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string t = sifkit::detail::trim(item);
    if (t.empty()) continue;
    auto v = sifkit::detail::parse_integer(t);
    if (!v || *v < 0) throw Error(ErrorKind::BadSubset, "'" + t + "' is not a constraint index");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

std::vector<sifkit::ParamValue> parse_params(const std::vector<std::string>& raw) {
  std::vector<sifkit::ParamValue> out;
  for (const auto& p : raw) {
    auto eq = p.find('=');
    if (eq == std::string::npos)
      out.push_back({"", parse_number(p)});
    else
      out.push_back({sifkit::detail::trim(p.substr(0, eq)), parse_number(p.substr(eq + 1))});
  }
  return out;
}

bool looks_like_json(const std::string& text) {
  auto pos = text.find_first_not_of(" \t\r\n");
  return pos != std::string::npos && text[pos] == '{';
}

/// Loads a dump or decodes a SIF file.
sifkit::ProblemDump load_problem(const std::string& path, const std::vector<sifkit::ParamValue>& params) {
  std::string text = read_file(path);
  if (looks_like_json(text)) {
    if (!params.empty()) throw Error(ErrorKind::MissingArgument, "--param only applies to SIF input");
    return sifkit::load_json(text);
  }
  sifkit::ProblemDump dump;
  dump.provenance.source = std::filesystem::path(path).filename().string();
  dump.provenance.params = params;
  dump.problem = sifkit::decode_or_throw(text, params, dump.provenance.options);
  return dump;
}

void print_errors(const Error& e) {
  for (const auto& d : e.diagnostics()) std::cerr << "error: " << d.describe() << "\n";
}

int cmd_decode(const std::string& input, const std::optional<std::string>& out_path,
               const sifkit::DecodeOptions& options, const std::vector<std::string>& raw_params) {
  std::vector<sifkit::Diagnostic> diags;
  std::optional<sifkit::ProblemDump> dump;
  try {
    std::vector<sifkit::ParamValue> params = parse_params(raw_params);
    std::string text = read_file(input);
    sifkit::DecodeOutcome outcome = sifkit::decode(text, params, options);
    diags = std::move(outcome.diagnostics);
    if (outcome.problem) {
      dump.emplace();
      dump->provenance.source = std::filesystem::path(input).filename().string();
      dump->provenance.options = options;
      dump->provenance.params = params;
      dump->problem = std::move(*outcome.problem);
    }
  } catch (const Error& e) {
    diags.insert(diags.end(), e.diagnostics().begin(), e.diagnostics().end());
  }
  for (const auto& d : diags) std::cerr << "error: " << d.describe() << "\n";
  if (!diags.empty() || !dump) return static_cast<int>(std::min<std::size_t>(std::max<std::size_t>(diags.size(), 1), 255));
  std::string json = sifkit::dump_json(*dump);
  if (out_path) {
    std::ofstream out(*out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << *out_path << "\n";
      return 1;
    }
    out << json;
  } else {
    std::cout << json;
  }
  return 0;
}

int cmd_info(const std::string& path, const std::vector<std::string>& raw_params) {
  sifkit::ProblemDump dump = load_problem(path, parse_params(raw_params));
  const auto& pb = dump.problem.pb;
  const auto& pbm = dump.problem.pbm;
  Json j;
  j["name"] = pb.name;
  if (!pb.sif_name.empty()) j["sif_name"] = pb.sif_name;
  j["pbclass"] = pb.pbclass;
  j["n"] = pb.n;
  j["m"] = pb.m;
  j["nob"] = pb.nob;
  j["nle"] = pb.nle;
  j["neq"] = pb.neq;
  j["nge"] = pb.nge;
  j["ngrp"] = pbm.ngrp();
  j["nel"] = pbm.nel();
  j["lincons"] = pb.lincons;
  j["nnz_A"] = pbm.A.nnz();
  j["nnz_H"] = pbm.H.nnz();
  Json et = Json::array();
  for (const auto& [name, d] : pbm.element_types) et.push_back(name);
  j["element_types"] = et;
  Json gt = Json::array();
  for (const auto& [name, d] : pbm.group_types) gt.push_back(name);
  j["group_types"] = gt;
  std::cout << j.dump(1) << "\n";
  return 0;
}

struct EvalArgs {
  std::string problem;
  std::string action;
  std::optional<std::string> x, x_file, y, y_file, v, v_file, subset;
  std::vector<std::string> params;
};

std::optional<std::vector<double>> vector_arg(const std::optional<std::string>& inline_text,
                                              const std::optional<std::string>& file) {
  if (inline_text) return parse_vector(*inline_text);
  if (file) return read_vector_file(*file);
  return std::nullopt;
}

int cmd_eval(const EvalArgs& args) {
  const sifkit::ActionSpec& action = sifkit::find_action(args.action);
  sifkit::ProblemDump dump = load_problem(args.problem, parse_params(args.params));
  sifkit::Evaluator ev(dump.problem);
  std::vector<double> x = vector_arg(args.x, args.x_file).value_or(dump.problem.pb.x0);
  std::optional<std::vector<std::size_t>> subset;
  if (args.subset) subset = parse_indices(*args.subset);
  sifkit::EvalRequest req =
      sifkit::make_request(action, std::move(x), vector_arg(args.y, args.y_file), subset, vector_arg(args.v, args.v_file));
  sifkit::EvalResult r = sifkit::evaluate(ev, req);

  using sifkit::json_detail::number;
  using sifkit::json_detail::numbers;
  using sifkit::json_detail::sparse;
  Json j = Json::object();
  const bool lag = action.kind == sifkit::EvalKind::Lagrangian;
  if (r.product) j[action.kind == sifkit::EvalKind::Constraints ? "Jv" : "Hv"] = numbers(*r.product);
  if (r.value) j[lag ? "L" : "f"] = number(*r.value);
  if (r.values) j["c"] = numbers(*r.values);
  if (r.gradient) j["g"] = numbers(*r.gradient);
  if (r.jacobian) j["J"] = sparse(*r.jacobian);
  if (r.hessian) j["H"] = sparse(*r.hessian);
  if (r.hessians) {
    Json hs = Json::array();
    for (const auto& h : *r.hessians) hs.push_back(sparse(h));
    j["H"] = std::move(hs);
  }
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_check(const std::string& path, int trials, std::uint64_t seed, const std::vector<std::string>& raw_params) {
  sifkit::ProblemDump dump = load_problem(path, parse_params(raw_params));
  sifkit::Evaluator ev(dump.problem);
  sifkit::CheckOptions opts;
  opts.trials = trials;
  opts.seed = seed;
  sifkit::CheckReport report = sifkit::check_problem(ev, opts);
  std::printf("problem %s n=%zu m=%zu points=%zu seed=%llu\n", dump.problem.pb.name.c_str(), dump.problem.pb.n,
              dump.problem.pb.m, report.points.size(), static_cast<unsigned long long>(seed));
  for (const auto& l : report.lines) {
    if (!l.failure.empty()) {
      std::printf("%-26s FAIL at point %d: %s\n", l.name.c_str(), l.worst_point, l.failure.c_str());
      continue;
    }
    std::printf("%-26s max_rel_err=%.3e tol=%.0e %s", l.name.c_str(), l.max_error, l.tolerance,
                l.passed() ? "PASS" : "FAIL");
    if (!l.passed()) std::printf(" at point %d", l.worst_point);
    std::printf("\n");
  }
  std::printf("%s\n", report.passed() ? "all checks passed" : "some checks failed");
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decode SIF optimization problems and evaluate them"};
  app.require_subcommand(1);

  auto* decode = app.add_subcommand("decode", "Decode a SIF file to a JSON problem dump");
  std::string decode_input;
  std::optional<std::string> decode_out;
  sifkit::DecodeOptions options;
  bool no_addin = false;
  std::vector<std::string> decode_params;
  decode->add_option("input", decode_input, "SIF file")->required();
  decode->add_option("--out", decode_out, "Output path (default: stdout)");
  decode->add_flag("--keep-corder", options.keepcorder, "Keep constraints in file order");
  decode->add_flag("--keep-cformat", options.keepcformat, "Report constraint types and ranges");
  decode->add_flag("--expose-xscale", options.expose_xscale, "Report variable scalings instead of applying them");
  decode->add_flag("--no-addin-a", no_addin, "Overwrite repeated linear coefficients instead of summing");
  decode->add_option("--param", decode_params, "Value for the next $-PARAMETER, as NAME=VALUE or VALUE");

  auto* info = app.add_subcommand("info", "Summarize a problem");
  std::string info_input;
  std::vector<std::string> info_params;
  info->add_option("problem", info_input, "JSON dump or SIF file")->required();
  info->add_option("--param", info_params, "Parameter value for SIF input");

  auto* eval = app.add_subcommand("eval", "Evaluate an action at a point");
  EvalArgs eval_args;
  eval->add_option("problem", eval_args.problem, "JSON dump or SIF file")->required();
  eval->add_option("action", eval_args.action, "Action name, e.g. fgx, cJx, LgHxy")->required();
  eval->add_option("--x", eval_args.x, "Point, comma separated (default: x0)");
  eval->add_option("--x-file", eval_args.x_file, "Point, one value per line");
  eval->add_option("--y", eval_args.y, "Multipliers, comma separated");
  eval->add_option("--y-file", eval_args.y_file, "Multipliers, one value per line");
  eval->add_option("--v", eval_args.v, "Product vector, comma separated");
  eval->add_option("--v-file", eval_args.v_file, "Product vector, one value per line");
  eval->add_option("--I", eval_args.subset, "Constraint subset, comma separated zero-based indices");
  eval->add_option("--param", eval_args.params, "Parameter value for SIF input");

  auto* check = app.add_subcommand("check", "Check derivatives by finite differences");
  std::string check_input;
  int trials = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> check_params;
  check->add_option("problem", check_input, "JSON dump or SIF file")->required();
  check->add_option("--trials", trials, "Random points besides x0")->check(CLI::NonNegativeNumber);
  check->add_option("--seed", seed, "Random seed");
  check->add_option("--param", check_params, "Parameter value for SIF input");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*decode) {
      options.addinA = !no_addin;
      return cmd_decode(decode_input, decode_out, options, decode_params);
    }
    if (*info) return cmd_info(info_input, info_params);
    if (*eval) return cmd_eval(eval_args);
    if (*check) return cmd_check(check_input, trials, seed, check_params);
  } catch (const Error& e) {
    print_errors(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
