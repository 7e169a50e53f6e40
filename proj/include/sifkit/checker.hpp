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

#ifndef SIFKIT_CHECKER_HPP
#define SIFKIT_CHECKER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sifkit/error.hpp"
#include "sifkit/evaluator.hpp"
#include "sifkit/model.hpp"
#include "sifkit/sparse.hpp"

namespace sifkit {

struct CheckOptions {
  int trials = 10;
  std::uint64_t seed = 0;
  double gradient_tol = 1e-6;
  double hessian_tol = 1e-5;
  double jacobian_tol = 1e-6;
  double constraint_hessian_tol = 1e-5;
  double identity_tol = 1e-12;
};

struct CheckLine {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int worst_point = 0;  // 0 is x0, k > 0 the k-th random point
  std::string failure;  // evaluation error, if any

  bool passed() const { return failure.empty() && max_error <= tolerance; }
};

struct CheckReport {
  std::vector<CheckLine> lines;
  std::vector<std::vector<double>> points;

  bool passed() const {
    return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.passed(); });
  }
};

namespace check_detail {

inline double norm_inf(const std::vector<double>& v) {
  double m = 0.0;
  for (double d : v) m = std::max(m, std::abs(d));
  return m;
}

inline double rel_error(const std::vector<double>& value, const std::vector<double>& ref) {
  double diff = 0.0;
  for (std::size_t k = 0; k < value.size(); ++k) diff = std::max(diff, std::abs(value[k] - ref[k]));
  return diff / std::max(1.0, norm_inf(value));
}

inline std::vector<double> flatten(const SparseMatrix& m) {
  std::vector<double> out(m.rows() * m.cols(), 0.0);
  for (const auto& t : m.entries()) out[t.row * m.cols() + t.col] = t.value;
  return out;
}

inline double fd_step(double xj) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(xj));
}

/// Central differences of a vector-valued function; result is row-major
/// (outputs x n).
inline std::vector<double> fd_jacobian(const std::function<std::vector<double>(const std::vector<double>&)>& fn,
                                       std::vector<double> x, std::size_t outputs) {
  const std::size_t n = x.size();
  std::vector<double> out(outputs * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    const double h = fd_step(xj);
    x[j] = xj + h;
    std::vector<double> plus = fn(x);
    x[j] = xj - h;
    std::vector<double> minus = fn(x);
    x[j] = xj;
    const double width = (xj + h) - (xj - h);
    for (std::size_t i = 0; i < outputs; ++i) out[i * n + j] = (plus[i] - minus[i]) / width;
  }
  return out;
}

inline std::vector<double> mat_vec(const SparseMatrix& m, const std::vector<double>& v) { return m.multiply(v); }

}  // namespace check_detail

/// Finite-difference and identity checks at x0 and at seeded random points
/// drawn uniformly from [max(xlower, x0-1), min(xupper, x0+1)].
inline CheckReport check_problem(const Evaluator& ev, const CheckOptions& opts = {}) {
  using namespace check_detail;
  const Problem& p = ev.problem();
  const std::size_t n = p.pb.n;
  const std::size_t m = p.pb.m;
  CheckReport report;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  report.points.push_back(p.pb.x0);
  for (int t = 0; t < opts.trials; ++t) {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) {
      double lo = std::max(p.pb.xlower[j], p.pb.x0[j] - 1.0);
      double hi = std::min(p.pb.xupper[j], p.pb.x0[j] + 1.0);
      x[j] = lo <= hi ? uniform(lo, hi) : p.pb.x0[j];
    }
    report.points.push_back(std::move(x));
  }

  std::vector<CheckLine> lines;
  auto line = [&](const std::string& name, double tol) -> CheckLine& {
    for (auto& l : lines)
      if (l.name == name) return l;
    lines.push_back({name, 0.0, tol, 0, {}});
    return lines.back();
  };
  auto run = [&](const std::string& name, double tol, int point, const std::function<double()>& fn) {
    CheckLine& l = line(name, tol);
    if (!l.failure.empty()) return;
    try {
      double err = fn();
      if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
      if (err > l.max_error) {
        l.max_error = err;
        l.worst_point = point;
      }
    } catch (const Error& e) {
      l.failure = e.what();
      l.worst_point = point;
    }
  };

  for (std::size_t k = 0; k < report.points.size(); ++k) {
    const std::vector<double>& x = report.points[k];
    const int pt = static_cast<int>(k);
    std::vector<double> v(n), y(m);
    for (auto& d : v) d = uniform(-1.0, 1.0);
    for (auto& d : y) d = uniform(-1.0, 1.0);

    auto fvalue = [&](const std::vector<double>& z) { return std::vector<double>{ev.objective(z, 0).value}; };
    auto fgrad = [&](const std::vector<double>& z) { return *ev.objective(z, 1).gradient; };

    run("gradient", opts.gradient_tol, pt, [&] {
      std::vector<double> g = fgrad(x);
      return rel_error(g, fd_jacobian(fvalue, x, 1));
    });
    run("hessian", opts.hessian_tol, pt, [&] {
      SparseMatrix h = *ev.objective(x, 2).hessian;
      if (!h.is_symmetric()) return std::numeric_limits<double>::infinity();
      return rel_error(flatten(h), fd_jacobian(fgrad, x, n));
    });
    run("hessian-vector", opts.identity_tol, pt, [&] {
      SparseMatrix h = *ev.objective(x, 2).hessian;
      return rel_error(mat_vec(h, v), ev.objective_hvp(x, v));
    });
    if (m == 0) continue;

    auto cvalue = [&](const std::vector<double>& z) { return ev.constraints(z, 0).values; };
    auto cjac = [&](const std::vector<double>& z) { return flatten(*ev.constraints(z, 1).jacobian); };
    run("jacobian", opts.jacobian_tol, pt, [&] { return rel_error(cjac(x), fd_jacobian(cvalue, x, m)); });
    run("constraint-hessians", opts.constraint_hessian_tol, pt, [&] {
      std::vector<SparseMatrix> hs = *ev.constraints(x, 2).hessians;
      std::vector<double> fd = fd_jacobian(cjac, x, m * n);  // (m*n) x n
      double worst = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (!hs[i].is_symmetric()) return std::numeric_limits<double>::infinity();
        std::vector<double> ref(fd.begin() + static_cast<std::ptrdiff_t>(i * n * n),
                                fd.begin() + static_cast<std::ptrdiff_t>((i + 1) * n * n));
        worst = std::max(worst, rel_error(flatten(hs[i]), ref));
      }
      return worst;
    });
    run("jacobian-vector", opts.identity_tol, pt, [&] {
      SparseMatrix j = *ev.constraints(x, 1).jacobian;
      return rel_error(mat_vec(j, v), ev.jacobian_vector_product(x, v));
    });
    run("lagrangian", opts.identity_tol, pt, [&] {
      ObjectiveResult l = ev.lagrangian(x, y, 1);
      ObjectiveResult f = ev.objective(x, 1);
      ConstraintResult c = ev.constraints(x, 1);
      double composed = f.value;
      for (std::size_t i = 0; i < m; ++i) composed += y[i] * c.values[i];
      std::vector<double> g = *f.gradient;
      for (const auto& t : c.jacobian->entries()) g[t.col] += y[t.row] * t.value;
      double value_err = std::abs(l.value - composed) / std::max(1.0, std::abs(l.value));
      return std::max(value_err, rel_error(*l.gradient, g));
    });
    run("lagrangian-hessian-vector", opts.identity_tol, pt, [&] {
      SparseMatrix h = *ev.lagrangian(x, y, 2).hessian;
      return rel_error(mat_vec(h, v), ev.lagrangian_hvp(x, y, v));
    });
    run("restriction", 0.0, pt, [&] {
      std::vector<std::size_t> subset;
      for (std::size_t i = 0; i < m; ++i)
        if (unit(rng) < 0.5) subset.push_back(i);
      if (subset.empty()) subset.push_back(m - 1);
      std::shuffle(subset.begin(), subset.end(), rng);
      ConstraintResult full = ev.constraints(x, 2);
      ConstraintResult part = ev.constraints(x, 2, subset);
      std::vector<double> jv = ev.jacobian_vector_product(x, v);
      std::vector<double> jv_part = ev.jacobian_vector_product(x, v, subset);
      for (std::size_t k2 = 0; k2 < subset.size(); ++k2) {
        std::size_t i = subset[k2];
        if (part.values[k2] != full.values[i] || jv_part[k2] != jv[i]) return 1.0;
        if (!((*part.hessians)[k2] == (*full.hessians)[i])) return 1.0;
        auto a = part.jacobian->row(k2);
        auto b = full.jacobian->row(i);
        if (a.size() != b.size()) return 1.0;
        for (std::size_t q = 0; q < a.size(); ++q)
          if (a[q].col != b[q].col || a[q].value != b[q].value) return 1.0;
      }
      return 0.0;
    });
  }
  report.lines = std::move(lines);
  return report;
}

}  // namespace sifkit

#endif  // SIFKIT_CHECKER_HPP
