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

#ifndef SIFKIT_MODEL_HPP
#define SIFKIT_MODEL_HPP

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sifkit/error.hpp"
#include "sifkit/nonlinear.hpp"
#include "sifkit/sparse.hpp"

namespace sifkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sign applied to the linear part of every group argument:
/// a_i = sum_j w_ij f_j + kLinearTermSign * (A x)_i - beta_i.
inline constexpr double kLinearTermSign = 1.0;

enum class Relation { Le, Eq, Ge };

inline std::string relation_symbol(Relation r) {
  switch (r) {
    case Relation::Le: return "<=";
    case Relation::Eq: return "==";
    case Relation::Ge: return ">=";
  }
  return "?";
}

inline std::optional<Relation> parse_relation(std::string_view s) {
  if (s == "<=") return Relation::Le;
  if (s == "==") return Relation::Eq;
  if (s == ">=") return Relation::Ge;
  return std::nullopt;
}

/// Public problem summary.
struct DecodedProblem {
  std::string name;
  std::string sif_name;  // empty unless the name was changed
  std::size_t n = 0;
  std::size_t nob = 0;
  std::size_t nle = 0;
  std::size_t neq = 0;
  std::size_t nge = 0;
  std::size_t m = 0;
  std::vector<std::size_t> lincons;
  std::string pbclass;
  std::vector<double> x0;
  std::vector<double> xlower;
  std::vector<double> xupper;
  std::string xtype;  // one of 'r', 'i', 'b' per variable
  std::optional<std::vector<double>> xscale;
  std::optional<std::vector<double>> y0;
  std::optional<std::vector<double>> clower;
  std::optional<std::vector<double>> cupper;
  std::optional<std::vector<Relation>> ctypes;
  std::optional<std::vector<std::optional<double>>> cranges;
  std::optional<double> objlower;
  std::optional<double> objupper;
  std::optional<std::vector<std::string>> xnames;
  std::optional<std::vector<std::string>> cnames;

  bool operator==(const DecodedProblem&) const = default;
};

/// Evaluation structure. Group k of congrps is constraint k.
struct ProblemInternals {
  std::vector<std::size_t> objgrps;
  std::vector<std::size_t> congrps;
  SparseMatrix A;
  std::vector<double> gconst;
  SparseMatrix H;
  std::vector<double> gscale;
  std::vector<std::string> elftype;
  std::vector<std::vector<std::size_t>> elvar;
  std::vector<std::vector<double>> elpar;
  std::vector<std::string> grftype;
  std::vector<std::vector<std::size_t>> grelt;
  std::vector<std::vector<double>> grelw;
  std::vector<std::vector<double>> grpar;
  std::vector<std::string> efpar_names;
  std::vector<double> efpar;
  std::vector<std::string> gfpar_names;
  std::vector<double> gfpar;
  std::optional<std::vector<std::string>> enames;
  std::optional<std::vector<std::string>> grnames;
  std::map<std::string, ElementDescriptor> element_types;
  std::map<std::string, GroupDescriptor> group_types;
  std::vector<std::string> alternative_sets;  // e.g. "CONSTANTS ALT2", not decoded

  std::size_t ngrp() const { return gconst.size(); }
  std::size_t nel() const { return elftype.size(); }

  bool operator==(const ProblemInternals&) const = default;
};

struct Problem {
  DecodedProblem pb;
  ProblemInternals pbm;

  bool operator==(const Problem&) const = default;
};

/// Permutation listing <= constraints, then ==, then >=, each in file order.
/// Identity when keepcorder is set.
inline std::vector<std::size_t> classify_and_order(std::span<const Relation> relations, bool keepcorder) {
  std::vector<std::size_t> perm;
  perm.reserve(relations.size());
  if (keepcorder) {
    for (std::size_t k = 0; k < relations.size(); ++k) perm.push_back(k);
    return perm;
  }
  for (Relation cls : {Relation::Le, Relation::Eq, Relation::Ge})
    for (std::size_t k = 0; k < relations.size(); ++k)
      if (relations[k] == cls) perm.push_back(k);
  return perm;
}

/// Bounds on c_i(x) implied by a relation and optional range.
inline std::pair<double, double> convert_constraint_format(Relation rel, std::optional<double> range) {
  switch (rel) {
    case Relation::Le:
      if (!range) return {-kInf, 0.0};
      if (*range > 0.0)
        throw Error(ErrorKind::RangeSignViolation, "range of a <= constraint must be nonpositive, got " +
                                                       std::to_string(*range));
      return {*range, 0.0};
    case Relation::Eq:
      return {0.0, 0.0};
    case Relation::Ge:
      if (!range) return {0.0, kInf};
      if (*range < 0.0)
        throw Error(ErrorKind::RangeSignViolation, "range of a >= constraint must be nonnegative, got " +
                                                       std::to_string(*range));
      return {0.0, *range};
  }
  return {-kInf, kInf};
}

struct ScaledLinearPart {
  SparseMatrix A;
  std::optional<std::vector<double>> xscale;
};

inline ScaledLinearPart fold_variable_scaling(const SparseMatrix& A, std::span<const double> xscale,
                                              bool expose_xscale) {
  if (xscale.size() != A.cols())
    throw Error(ErrorKind::DimensionMismatch, "xscale has length " + std::to_string(xscale.size()) + ", expected " +
                                                  std::to_string(A.cols()));
  for (std::size_t j = 0; j < xscale.size(); ++j)
    if (xscale[j] == 0.0) throw Error(ErrorKind::ZeroScaleFactor, "variable " + std::to_string(j) + " has scale 0");
  if (expose_xscale) return {A, std::vector<double>(xscale.begin(), xscale.end())};
  std::vector<Triplet> entries(A.entries().begin(), A.entries().end());
  for (auto& t : entries) t.value /= xscale[t.col];
  return {SparseMatrix::from_triplets(A.rows(), A.cols(), std::move(entries)), std::nullopt};
}

}  // namespace sifkit

#endif  // SIFKIT_MODEL_HPP
