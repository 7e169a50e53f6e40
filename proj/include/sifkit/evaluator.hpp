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

#ifndef SIFKIT_EVALUATOR_HPP
#define SIFKIT_EVALUATOR_HPP

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sifkit/error.hpp"
#include "sifkit/model.hpp"
#include "sifkit/nonlinear.hpp"
#include "sifkit/sparse.hpp"

namespace sifkit {

using SparseVector = std::vector<std::pair<Index, double>>;

struct ObjectiveResult {
  double value = 0.0;
  std::optional<std::vector<double>> gradient;
  std::optional<SparseMatrix> hessian;
};

struct ConstraintResult {
  std::vector<double> values;
  std::optional<SparseMatrix> jacobian;
  std::optional<std::vector<SparseMatrix>> hessians;
};

/// Evaluates objective, constraints and Lagrangian of a decoded problem.
/// Holds a reference: the problem must outlive the evaluator.
class Evaluator {
 public:
  explicit Evaluator(const Problem& problem) : p_(problem) {
    const ProblemInternals& pbm = p_.pbm;
    for (std::size_t e = 0; e < pbm.nel(); ++e) {
      auto it = pbm.element_types.find(pbm.elftype[e]);
      if (it == pbm.element_types.end())
        throw Error(ErrorKind::UndefinedElementType, "element type " + pbm.elftype[e] + " has no definition");
      element_types_.push_back(&it->second);
      std::vector<double> params = pbm.elpar[e];
      params.insert(params.end(), pbm.efpar.begin(), pbm.efpar.end());
      element_params_.push_back(std::move(params));
    }
    for (std::size_t g = 0; g < pbm.ngrp(); ++g) {
      auto it = pbm.group_types.find(pbm.grftype[g]);
      if (it == pbm.group_types.end())
        throw Error(ErrorKind::UndefinedGroupType, "group type " + pbm.grftype[g] + " has no definition");
      group_types_.push_back(&it->second);
      std::vector<double> params = pbm.grpar[g];
      params.insert(params.end(), pbm.gfpar.begin(), pbm.gfpar.end());
      group_params_.push_back(std::move(params));
    }
  }

  const Problem& problem() const { return p_; }
  std::size_t n() const { return p_.pb.n; }
  std::size_t m() const { return p_.pb.m; }

  /// a_i(x) for group i.
  double group_argument(std::size_t g, std::span<const double> x) const {
    check_x(x);
    return argument(g, x, 0).value;
  }

  ObjectiveResult objective(std::span<const double> x, int order) const {
    check_x(x);
    check_order(order);
    const auto& pbm = p_.pbm;
    ObjectiveResult out;
    std::vector<double> hx = pbm.H.multiply(x);
    double quad = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) quad += x[j] * hx[j];
    std::vector<double> grad;
    SymmetricBuilder hess(n());
    if (order >= 1) grad.assign(n(), 0.0);
    for (std::size_t g : pbm.objgrps) accumulate(g, x, order, 1.0, out.value, grad, hess);
    out.value += 0.5 * quad;
    if (order >= 1) {
      for (std::size_t j = 0; j < n(); ++j) grad[j] += hx[j];
      out.gradient = std::move(grad);
    }
    if (order >= 2) {
      hess.add_matrix(pbm.H);
      out.hessian = std::move(hess).freeze();
    }
    return out;
  }

  /// All constraints, or those listed in `subset` in its order.
  ConstraintResult constraints(std::span<const double> x, int order,
                               std::optional<std::span<const std::size_t>> subset = std::nullopt) const {
    check_x(x);
    check_order(order);
    std::vector<std::size_t> rows = selection(subset);
    ConstraintResult out;
    CoordinateBuilder jac(rows.size(), n());
    std::vector<SparseMatrix> hessians;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::size_t g = p_.pbm.congrps[rows[k]];
      double value = 0.0;
      std::vector<double> unused;
      SymmetricBuilder hess(n());
      GroupState s = accumulate(g, x, order, 1.0, value, unused, hess);
      out.values.push_back(value);
      if (order >= 1)
        for (const auto& [j, d] : s.gradient) jac.add(k, j, s.first * d);
      if (order >= 2) hessians.push_back(std::move(hess).freeze());
    }
    if (order >= 1) out.jacobian = std::move(jac).freeze();
    if (order >= 2) out.hessians = std::move(hessians);
    return out;
  }

  /// L = f + sum_k y_k c_k over all constraints or over `subset`.
  ObjectiveResult lagrangian(std::span<const double> x, std::span<const double> y, int order,
                             std::optional<std::span<const std::size_t>> subset = std::nullopt) const {
    check_x(x);
    check_order(order);
    std::vector<std::size_t> rows = selection(subset);
    check_y(y, rows.size());
    const auto& pbm = p_.pbm;
    ObjectiveResult out;
    std::vector<double> hx = pbm.H.multiply(x);
    double quad = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) quad += x[j] * hx[j];
    std::vector<double> grad;
    SymmetricBuilder hess(n());
    if (order >= 1) grad.assign(n(), 0.0);
    double f = 0.0;
    for (std::size_t g : pbm.objgrps) accumulate(g, x, order, 1.0, f, grad, hess);
    f += 0.5 * quad;
    double yc = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double c = 0.0;
      accumulate(pbm.congrps[rows[k]], x, order, y[k], c, grad, hess);
      yc += y[k] * c;
    }
    out.value = f + yc;
    if (order >= 1) {
      for (std::size_t j = 0; j < n(); ++j) grad[j] += hx[j];
      out.gradient = std::move(grad);
    }
    if (order >= 2) {
      hess.add_matrix(pbm.H);
      out.hessian = std::move(hess).freeze();
    }
    return out;
  }

  /// Hessian of the objective times v, accumulated group by group.
  std::vector<double> objective_hvp(std::span<const double> x, std::span<const double> v) const {
    check_x(x);
    check_v(v);
    std::vector<double> out = p_.pbm.H.multiply(v);
    for (std::size_t g : p_.pbm.objgrps) add_group_hvp(g, x, v, 1.0, out);
    return out;
  }

  std::vector<double> lagrangian_hvp(std::span<const double> x, std::span<const double> y, std::span<const double> v,
                                     std::optional<std::span<const std::size_t>> subset = std::nullopt) const {
    check_x(x);
    check_v(v);
    std::vector<std::size_t> rows = selection(subset);
    check_y(y, rows.size());
    std::vector<double> out = p_.pbm.H.multiply(v);
    for (std::size_t g : p_.pbm.objgrps) add_group_hvp(g, x, v, 1.0, out);
    for (std::size_t k = 0; k < rows.size(); ++k) add_group_hvp(p_.pbm.congrps[rows[k]], x, v, y[k], out);
    return out;
  }

  /// J(x) v over all constraints or over `subset`.
  std::vector<double> jacobian_vector_product(std::span<const double> x, std::span<const double> v,
                                              std::optional<std::span<const std::size_t>> subset = std::nullopt) const {
    check_x(x);
    check_v(v);
    std::vector<std::size_t> rows = selection(subset);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t k : rows) {
      GroupState s = argument(p_.pbm.congrps[k], x, 1);
      GroupValue gv = group_value(p_.pbm.congrps[k], s.value, 1);
      double dot = 0.0;
      for (const auto& [j, d] : s.gradient) dot += d * v[j];
      out.push_back(gv.first / p_.pbm.gscale[p_.pbm.congrps[k]] * dot);
    }
    return out;
  }

 private:
  struct ElementPart {
    std::size_t element = 0;
    double weight = 0.0;
    std::vector<double> hessian;
  };

  struct GroupState {
    double value = 0.0;          // a_i
    SparseVector gradient;       // of a_i, sorted by index
    std::vector<ElementPart> elements;
    double first = 0.0;          // F'/sigma, set by accumulate
  };

  void check_x(std::span<const double> x) const {
    if (x.size() != n())
      throw Error(ErrorKind::DimensionMismatch,
                  "x has length " + std::to_string(x.size()) + ", expected " + std::to_string(n()));
  }

  void check_v(std::span<const double> v) const {
    if (v.size() != n())
      throw Error(ErrorKind::DimensionMismatch,
                  "v has length " + std::to_string(v.size()) + ", expected " + std::to_string(n()));
  }

  void check_y(std::span<const double> y, std::size_t expected) const {
    if (y.size() != expected)
      throw Error(ErrorKind::MultiplierLengthMismatch,
                  "y has length " + std::to_string(y.size()) + ", expected " + std::to_string(expected));
  }

  static void check_order(int order) {
    if (order < 0 || order > 2) throw Error(ErrorKind::DimensionMismatch, "order must be 0, 1 or 2");
  }

  std::vector<std::size_t> selection(std::optional<std::span<const std::size_t>> subset) const {
    if (m() == 0) throw Error(ErrorKind::NoConstraints, "problem " + p_.pb.name + " has no constraints");
    std::vector<std::size_t> rows;
    if (!subset) {
      for (std::size_t k = 0; k < m(); ++k) rows.push_back(k);
      return rows;
    }
    std::vector<bool> seen(m(), false);
    for (std::size_t k : *subset) {
      if (k >= m())
        throw Error(ErrorKind::BadSubset,
                    "constraint index " + std::to_string(k) + " outside [0, " + std::to_string(m()) + ")");
      if (seen[k]) throw Error(ErrorKind::BadSubset, "constraint index " + std::to_string(k) + " repeated");
      seen[k] = true;
      rows.push_back(k);
    }
    return rows;
  }

  GroupState argument(std::size_t g, std::span<const double> x, int order) const {
    const auto& pbm = p_.pbm;
    GroupState s;
    SparseVector raw;
    const auto& elts = pbm.grelt[g];
    std::vector<double> xe;
    for (std::size_t k = 0; k < elts.size(); ++k) {
      std::size_t e = elts[k];
      double w = pbm.grelw[g][k];
      const auto& vars = pbm.elvar[e];
      xe.resize(vars.size());
      for (std::size_t p = 0; p < vars.size(); ++p) xe[p] = x[vars[p]];
      ElementValue ev;
      try {
        ev = eval_element(*element_types_[e], xe, element_params_[e], order);
      } catch (const Error& err) {
        throw Error(err.kind(), "element " + std::to_string(e) + " in group " + std::to_string(g) + ": " +
                                    err.diagnostics().front().message);
      }
      s.value += w * ev.value;
      if (order >= 1)
        for (std::size_t p = 0; p < vars.size(); ++p) raw.emplace_back(vars[p], w * ev.gradient[p]);
      if (order >= 2) s.elements.push_back({e, w, std::move(ev.hessian)});
    }
    double linear = 0.0;
    for (const auto& t : pbm.A.row(g)) {
      linear += t.value * x[t.col];
      if (order >= 1) raw.emplace_back(t.col, kLinearTermSign * t.value);
    }
    s.value += kLinearTermSign * linear - pbm.gconst[g];
    if (order >= 1) {
      std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [j, d] : raw) {
        if (!s.gradient.empty() && s.gradient.back().first == j)
          s.gradient.back().second += d;
        else
          s.gradient.emplace_back(j, d);
      }
    }
    return s;
  }

  GroupValue group_value(std::size_t g, double alpha, int order) const {
    try {
      return eval_group_function(*group_types_[g], alpha, group_params_[g], order);
    } catch (const Error& err) {
      throw Error(err.kind(), "group " + std::to_string(g) + ": " + err.diagnostics().front().message);
    }
  }

  /// Adds weight * (group value, gradient, Hessian) of group g. `value`
  /// receives the unweighted group value F/sigma.
  GroupState accumulate(std::size_t g, std::span<const double> x, int order, double weight, double& value,
                        std::vector<double>& grad, SymmetricBuilder& hess) const {
    GroupState s = argument(g, x, order);
    GroupValue gv = group_value(g, s.value, order);
    const double sigma = p_.pbm.gscale[g];
    value += gv.value / sigma;
    s.first = gv.first / sigma;
    if (order >= 1 && !grad.empty())
      for (const auto& [j, d] : s.gradient) grad[j] += weight * s.first * d;
    if (order >= 2) {
      const double second = weight * gv.second / sigma;
      for (std::size_t p = 0; p < s.gradient.size(); ++p)
        for (std::size_t q = 0; q <= p; ++q)
          hess.add(s.gradient[p].first, s.gradient[q].first, second * s.gradient[p].second * s.gradient[q].second);
      const double first = weight * s.first;
      for (const auto& part : s.elements) scatter(part, first, hess);
    }
    return s;
  }

  void scatter(const ElementPart& part, double scale, SymmetricBuilder& hess) const {
    const auto& vars = p_.pbm.elvar[part.element];
    const std::size_t ne = vars.size();
    const double c = scale * part.weight;
    for (std::size_t p = 0; p < ne; ++p)
      for (std::size_t q = 0; q <= p; ++q) {
        double h = c * part.hessian[p * ne + q];
        if (p != q && vars[p] == vars[q]) h *= 2.0;
        hess.add(vars[p], vars[q], h);
      }
  }

  void add_group_hvp(std::size_t g, std::span<const double> x, std::span<const double> v, double weight,
                     std::vector<double>& out) const {
    GroupState s = argument(g, x, 2);
    GroupValue gv = group_value(g, s.value, 2);
    const double sigma = p_.pbm.gscale[g];
    double dot = 0.0;
    for (const auto& [j, d] : s.gradient) dot += d * v[j];
    const double rank = weight * gv.second / sigma * dot;
    for (const auto& [j, d] : s.gradient) out[j] += rank * d;
    const double first = weight * gv.first / sigma;
    for (const auto& part : s.elements) {
      const auto& vars = p_.pbm.elvar[part.element];
      const std::size_t ne = vars.size();
      for (std::size_t p = 0; p < ne; ++p) {
        double acc = 0.0;
        for (std::size_t q = 0; q < ne; ++q) acc += part.hessian[p * ne + q] * v[vars[q]];
        out[vars[p]] += first * part.weight * acc;
      }
    }
  }

  const Problem& p_;
  std::vector<const ElementDescriptor*> element_types_;
  std::vector<std::vector<double>> element_params_;
  std::vector<const GroupDescriptor*> group_types_;
  std::vector<std::vector<double>> group_params_;
};

// ---------------------------------------------------------------------------
// Action catalogue.

enum class EvalKind { Objective, Constraints, Lagrangian };

struct ActionSpec {
  std::string_view name;
  EvalKind kind;
  int order;
  bool restricted;  // takes a constraint subset
  bool product;     // Hessian- or Jacobian-vector product
};

inline constexpr ActionSpec kActions[] = {
    {"fx", EvalKind::Objective, 0, false, false},      {"fgx", EvalKind::Objective, 1, false, false},
    {"fgHx", EvalKind::Objective, 2, false, false},    {"fHxv", EvalKind::Objective, 2, false, true},
    {"cx", EvalKind::Constraints, 0, false, false},    {"cJx", EvalKind::Constraints, 1, false, false},
    {"cJHx", EvalKind::Constraints, 2, false, false},  {"cJxv", EvalKind::Constraints, 1, false, true},
    {"cIx", EvalKind::Constraints, 0, true, false},    {"cIJx", EvalKind::Constraints, 1, true, false},
    {"cIJHx", EvalKind::Constraints, 2, true, false},  {"cIJxv", EvalKind::Constraints, 1, true, true},
    {"Lxy", EvalKind::Lagrangian, 0, false, false},    {"Lgxy", EvalKind::Lagrangian, 1, false, false},
    {"LgHxy", EvalKind::Lagrangian, 2, false, false},  {"LHxyv", EvalKind::Lagrangian, 2, false, true},
    {"LIxy", EvalKind::Lagrangian, 0, true, false},    {"LIgxy", EvalKind::Lagrangian, 1, true, false},
    {"LIgHxy", EvalKind::Lagrangian, 2, true, false},  {"LIHxyv", EvalKind::Lagrangian, 2, true, true},
};

inline const ActionSpec& find_action(std::string_view name) {
  if (name == "HLxyv") name = "LHxyv";
  if (name == "HLIxyv") name = "LIHxyv";
  for (const auto& a : kActions)
    if (a.name == name) return a;
  throw Error(ErrorKind::UnknownAction, "unknown action '" + std::string(name) + "'");
}

struct EvalRequest {
  EvalKind kind = EvalKind::Objective;
  int order = 0;
  std::vector<double> x;
  std::optional<std::vector<double>> y;
  std::optional<std::vector<std::size_t>> subset;
  std::optional<std::vector<double>> v;  // set for product requests
};

struct EvalResult {
  std::optional<double> value;                      // objective or Lagrangian
  std::optional<std::vector<double>> values;        // constraints
  std::optional<std::vector<double>> gradient;
  std::optional<SparseMatrix> jacobian;
  std::optional<SparseMatrix> hessian;
  std::optional<std::vector<SparseMatrix>> hessians;
  std::optional<std::vector<double>> product;
};

/// Builds the request for an action, checking its argument contract.
inline EvalRequest make_request(const ActionSpec& action, std::vector<double> x,
                                std::optional<std::vector<double>> y, std::optional<std::vector<std::size_t>> subset,
                                std::optional<std::vector<double>> v) {
  const std::string name(action.name);
  if (action.kind == EvalKind::Lagrangian && !y)
    throw Error(ErrorKind::MissingArgument, "action " + name + " requires multipliers y");
  if (action.restricted && !subset)
    throw Error(ErrorKind::MissingArgument, "action " + name + " requires a constraint subset I");
  if (action.product && !v) throw Error(ErrorKind::MissingArgument, "action " + name + " requires a vector v");
  EvalRequest r;
  r.kind = action.kind;
  r.order = action.order;
  r.x = std::move(x);
  if (action.kind == EvalKind::Lagrangian) r.y = std::move(y);
  if (action.restricted) r.subset = std::move(subset);
  if (action.product) r.v = std::move(v);
  return r;
}

inline EvalResult evaluate(const Evaluator& ev, const EvalRequest& req) {
  EvalResult out;
  std::optional<std::span<const std::size_t>> subset;
  if (req.subset) subset = std::span<const std::size_t>(*req.subset);
  switch (req.kind) {
    case EvalKind::Objective: {
      if (req.v) {
        out.product = ev.objective_hvp(req.x, *req.v);
        break;
      }
      ObjectiveResult r = ev.objective(req.x, req.order);
      out.value = r.value;
      out.gradient = std::move(r.gradient);
      out.hessian = std::move(r.hessian);
      break;
    }
    case EvalKind::Constraints: {
      if (req.v) {
        out.product = ev.jacobian_vector_product(req.x, *req.v, subset);
        break;
      }
      ConstraintResult r = ev.constraints(req.x, req.order, subset);
      out.values = std::move(r.values);
      out.jacobian = std::move(r.jacobian);
      out.hessians = std::move(r.hessians);
      break;
    }
    case EvalKind::Lagrangian: {
      if (!req.y) throw Error(ErrorKind::MissingArgument, "Lagrangian requests require multipliers y");
      if (req.v) {
        out.product = ev.lagrangian_hvp(req.x, *req.y, *req.v, subset);
        break;
      }
      ObjectiveResult r = ev.lagrangian(req.x, *req.y, req.order, subset);
      out.value = r.value;
      out.gradient = std::move(r.gradient);
      out.hessian = std::move(r.hessian);
      break;
    }
  }
  return out;
}

}  // namespace sifkit

#endif  // SIFKIT_EVALUATOR_HPP
