// Copyright 2026 The Resilience Planner Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "resilience/milp/problem.hpp"

namespace resilience::milp {

struct DualityReport {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double objective_gap = 0.0;
  double max_dual_sign_violation = 0.0;
  double max_complementarity = 0.0;

  bool holds(double tol = 1e-6) const {
    return objective_gap <= tol && max_dual_sign_violation <= tol &&
           max_complementarity <= tol;
  }
};

// Checks an LP primal/dual pair from the problem data alone.  `y` are row
// duals with y_i = d(objective)/d(rhs_i).  Reduced costs d = c - A^T y are
// recomputed here; the dual objective is
//     offset + sum_i rhs_i y_i + sum_j (d_j^+ lb_j - d_j^- ub_j)   (min)
// with the roles of the bounds swapped for maximization.  Sign violations and
// complementarity products are measured relative to max(1, |objective|).
inline DualityReport strong_duality_check(const MilpProblem& p,
                                          const std::vector<double>& x,
                                          const std::vector<double>& y) {
  DualityReport r;
  const bool maxi = p.objective_sense() == ObjSense::kMaximize;
  const double s = maxi ? -1.0 : 1.0;  // convert to a min problem
  std::vector<double> d(p.num_vars());
  for (int j = 0; j < p.num_vars(); ++j) d[j] = s * p.objective()[j];
  double dual = 0.0;
  for (int i = 0; i < p.num_rows(); ++i) {
    const Constraint& c = p.row(i);
    const double yi = s * y.at(i);
    for (const Term& t : c.terms) d[t.var] -= yi * t.coef;
    dual += c.rhs * yi;
    // Min problem: <= rows need y <= 0, >= rows need y >= 0.
    double sign_viol = 0.0;
    if (c.sense == RowSense::kLessEqual) sign_viol = std::max(0.0, yi);
    if (c.sense == RowSense::kGreaterEqual) sign_viol = std::max(0.0, -yi);
    r.max_dual_sign_violation = std::max(r.max_dual_sign_violation, sign_viol);
    const double slack = MilpProblem::row_activity(c, x) - c.rhs;
    r.max_complementarity = std::max(r.max_complementarity, std::abs(yi * slack));
  }
  for (int j = 0; j < p.num_vars(); ++j) {
    const Variable& v = p.var(j);
    const double dp = std::max(d[j], 0.0);
    const double dm = std::max(-d[j], 0.0);
    if (dp > 0.0) {
      if (std::isfinite(v.lb)) dual += dp * v.lb;
      else r.max_dual_sign_violation = std::max(r.max_dual_sign_violation, dp);
      r.max_complementarity = std::max(r.max_complementarity,
                                       std::isfinite(v.lb) ? dp * std::abs(x[j] - v.lb) : 0.0);
    }
    if (dm > 0.0) {
      if (std::isfinite(v.ub)) dual -= dm * v.ub;
      else r.max_dual_sign_violation = std::max(r.max_dual_sign_violation, dm);
      r.max_complementarity = std::max(r.max_complementarity,
                                       std::isfinite(v.ub) ? dm * std::abs(v.ub - x[j]) : 0.0);
    }
  }
  r.primal_objective = p.evaluate_objective(x);
  r.dual_objective = s * dual + p.objective_offset();
  const double scale = std::max(1.0, std::abs(r.primal_objective));
  r.objective_gap = std::abs(r.primal_objective - r.dual_objective) / scale;
  r.max_dual_sign_violation /= scale;
  r.max_complementarity /= scale;
  return r;
}

}  // namespace resilience::milp
