// Brute-force reference solvers shared by the unit and acceptance suites.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "resilience/milp/problem.hpp"

namespace oracle {

using resilience::milp::kInf;
using resilience::milp::MilpProblem;
using resilience::milp::ObjSense;
using resilience::milp::RowSense;
using resilience::milp::VarKind;

struct Result {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

// Optimal value of an LP with finite variable bounds by enumerating every
// basic point: each choice of n linearly independent tight constraints
// (rows or bounds) is solved and kept if feasible.  `fixed` pins variables
// (NaN = free to optimize).
inline Result lp_by_vertices(const MilpProblem& p, const std::vector<double>& fixed) {
  const int n = p.num_vars();
  std::vector<int> freev;
  for (int j = 0; j < n; ++j) {
    if (std::isnan(fixed[j])) freev.push_back(j);
  }
  const int k = static_cast<int>(freev.size());
  // Candidate hyperplanes a.x = b over the free variables.
  struct Plane {
    std::vector<double> a;
    double b;
  };
  std::vector<Plane> planes;
  for (const auto& c : p.rows()) {
    Plane pl{std::vector<double>(k, 0.0), c.rhs};
    for (const auto& t : c.terms) {
      if (!std::isnan(fixed[t.var])) {
        pl.b -= t.coef * fixed[t.var];
        continue;
      }
      for (int q = 0; q < k; ++q) {
        if (freev[q] == t.var) pl.a[q] += t.coef;
      }
    }
    planes.push_back(pl);
  }
  for (int q = 0; q < k; ++q) {
    const auto& v = p.var(freev[q]);
    Plane lo{std::vector<double>(k, 0.0), v.lb};
    lo.a[q] = 1.0;
    Plane hi{std::vector<double>(k, 0.0), v.ub};
    hi.a[q] = 1.0;
    planes.push_back(lo);
    planes.push_back(hi);
  }
  const double s = p.objective_sense() == ObjSense::kMaximize ? -1.0 : 1.0;
  Result best;
  double best_val = kInf;
  auto consider = [&](const std::vector<double>& x) {
    if (!resilience::milp::check_feasibility(p, x).feasible(1e-9)) return;
    const double v = s * p.evaluate_objective(x);
    if (v < best_val - 1e-12) {
      best_val = v;
      best.feasible = true;
      best.x = x;
    }
  };
  std::vector<double> x(n);
  for (int j = 0; j < n; ++j) x[j] = std::isnan(fixed[j]) ? 0.0 : fixed[j];
  if (k == 0) {
    consider(x);
  } else {
    const int m = static_cast<int>(planes.size());
    std::vector<int> idx(k);
    std::function<void(int, int)> rec = [&](int depth, int start) {
      if (depth == k) {
        Eigen::MatrixXd a(k, k);
        Eigen::VectorXd b(k);
        for (int r = 0; r < k; ++r) {
          for (int q = 0; q < k; ++q) a(r, q) = planes[idx[r]].a[q];
          b[r] = planes[idx[r]].b;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (lu.rank() < k) return;
        Eigen::VectorXd z = lu.solve(b);
        for (int q = 0; q < k; ++q) x[freev[q]] = z[q];
        consider(x);
        return;
      }
      for (int t = start; t <= m - (k - depth); ++t) {
        idx[depth] = t;
        rec(depth + 1, t + 1);
      }
    };
    rec(0, 0);
  }
  if (best.feasible) best.objective = p.evaluate_objective(best.x);
  return best;
}

// Exhaustive MILP oracle: every integer assignment of the discrete variables
// (finite bounds required), continuous part by vertex enumeration.
inline Result milp_by_enumeration(const MilpProblem& p) {
  std::vector<int> disc;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.var(j).is_discrete()) disc.push_back(j);
  }
  const double s = p.objective_sense() == ObjSense::kMaximize ? -1.0 : 1.0;
  Result best;
  double best_val = kInf;
  std::vector<double> fixed(p.num_vars(), std::numeric_limits<double>::quiet_NaN());
  std::function<void(std::size_t)> rec = [&](std::size_t d) {
    if (d == disc.size()) {
      Result r = lp_by_vertices(p, fixed);
      if (r.feasible && s * r.objective < best_val - 1e-12) {
        best_val = s * r.objective;
        best = r;
      }
      return;
    }
    const auto& v = p.var(disc[d]);
    for (double val = std::ceil(v.lb); val <= std::floor(v.ub); val += 1.0) {
      fixed[disc[d]] = val;
      rec(d + 1);
    }
    fixed[disc[d]] = std::numeric_limits<double>::quiet_NaN();
  };
  rec(0);
  return best;
}

// Random bounded problem: integer-valued data keeps vertex solutions exact
// enough for 1e-8 comparisons.
inline MilpProblem random_problem(std::mt19937_64& rng, int n_cont, int n_disc,
                                  int n_rows, bool allow_general_int) {
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_int_distribution<int> cost(-9, 9);
  std::uniform_int_distribution<int> ub(1, 4);
  std::uniform_int_distribution<int> sense(0, 2);
  std::bernoulli_distribution coin(0.5);
  MilpProblem p;
  p.set_objective_sense(coin(rng) ? ObjSense::kMaximize : ObjSense::kMinimize);
  for (int j = 0; j < n_disc; ++j) {
    const bool general = allow_general_int && coin(rng);
    p.add_variable("z" + std::to_string(j), 0.0, general ? ub(rng) : 1.0,
                   general ? VarKind::kInteger : VarKind::kBinary, cost(rng));
  }
  for (int j = 0; j < n_cont; ++j) {
    p.add_variable("c" + std::to_string(j), coin(rng) ? -2.0 : 0.0, ub(rng),
                   VarKind::kContinuous, cost(rng));
  }
  const int n = n_cont + n_disc;
  for (int i = 0; i < n_rows; ++i) {
    std::vector<resilience::milp::Term> terms;
    for (int j = 0; j < n; ++j) {
      const int a = coef(rng);
      if (a != 0 && coin(rng)) terms.push_back({j, static_cast<double>(a)});
    }
    if (terms.empty()) terms.push_back({static_cast<int>(rng() % n), 1.0});
    const int sn = sense(rng);
    const double rhs = static_cast<double>(coef(rng)) + (sn == 0 ? 3.0 : sn == 2 ? -3.0 : 0.0);
    p.add_constraint("r" + std::to_string(i), std::move(terms),
                     sn == 0 ? RowSense::kLessEqual
                     : sn == 1 ? RowSense::kEqual
                               : RowSense::kGreaterEqual,
                     rhs);
  }
  return p;
}

}  // namespace oracle
