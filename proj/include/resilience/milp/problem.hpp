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
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace resilience::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary, kInteger };
enum class RowSense { kLessEqual, kEqual, kGreaterEqual };
enum class ObjSense { kMinimize, kMaximize };

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = kInf;
  VarKind kind = VarKind::kContinuous;

  bool is_discrete() const { return kind != VarKind::kContinuous; }
};

struct Term {
  int var = -1;
  double coef = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
};

// Container for a mixed-integer linear program.  Variables and rows are kept
// in insertion order; that order is the canonical order used by the solver
// and by the LP file writer.
class MilpProblem {
 public:
  MilpProblem() = default;

  int add_variable(std::string name, double lb, double ub,
                   VarKind kind = VarKind::kContinuous, double obj = 0.0) {
    if (kind == VarKind::kBinary) {
      lb = std::max(lb, 0.0);
      ub = std::min(ub, 1.0);
    }
    if (!(lb <= ub)) {
      throw std::invalid_argument("variable '" + name + "' has lb > ub");
    }
    const int id = static_cast<int>(vars_.size());
    if (!name.empty()) {
      auto [it, inserted] = index_.emplace(name, id);
      if (!inserted) {
        throw std::invalid_argument("duplicate variable name '" + name + "'");
      }
    }
    vars_.push_back(Variable{std::move(name), lb, ub, kind});
    obj_.push_back(obj);
    return id;
  }

  int add_constraint(std::string name, std::vector<Term> terms, RowSense sense,
                     double rhs) {
    for (const Term& t : terms) {
      if (t.var < 0 || t.var >= num_vars()) {
        throw std::out_of_range("constraint '" + name +
                                "' references an undeclared variable");
      }
    }
    rows_.push_back(Constraint{std::move(name), std::move(terms), sense, rhs});
    return static_cast<int>(rows_.size()) - 1;
  }

  void set_objective_sense(ObjSense s) { sense_ = s; }
  void set_objective(int var, double coef) { obj_.at(var) = coef; }
  void add_objective(int var, double coef) { obj_.at(var) += coef; }
  void set_objective_offset(double c) { offset_ = c; }

  void set_bounds(int var, double lb, double ub) {
    if (vars_.at(var).kind == VarKind::kBinary) {
      lb = std::max(lb, 0.0);
      ub = std::min(ub, 1.0);
    }
    vars_.at(var).lb = lb;
    vars_.at(var).ub = ub;
  }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const Variable& var(int j) const { return vars_.at(j); }
  const std::vector<Variable>& vars() const { return vars_; }
  const Constraint& row(int i) const { return rows_.at(i); }
  const std::vector<Constraint>& rows() const { return rows_; }
  std::vector<Constraint>& mutable_rows() { return rows_; }
  const std::vector<double>& objective() const { return obj_; }
  double objective_offset() const { return offset_; }
  ObjSense objective_sense() const { return sense_; }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  int num_discrete() const {
    int n = 0;
    for (const auto& v : vars_) n += v.is_discrete() ? 1 : 0;
    return n;
  }

  double evaluate_objective(const std::vector<double>& x) const {
    double v = offset_;
    for (int j = 0; j < num_vars(); ++j) v += obj_[j] * x.at(j);
    return v;
  }

  static double row_activity(const Constraint& c, const std::vector<double>& x) {
    double a = 0.0;
    for (const Term& t : c.terms) a += t.coef * x[t.var];
    return a;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<double> obj_;
  double offset_ = 0.0;
  ObjSense sense_ = ObjSense::kMinimize;
  std::unordered_map<std::string, int> index_;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kGapLimit,
  kNoSolution,
  kNumericalFailure,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kGapLimit: return "gap-limit";
    case SolveStatus::kNoSolution: return "no-solution";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

struct MilpSolution {
  SolveStatus status = SolveStatus::kNoSolution;
  double objective = 0.0;
  std::vector<double> x;
  // Row duals and reduced costs, in the sign convention
  // d(objective)/d(rhs) and c - A^T y.  Filled for LP solves only.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  double best_bound = 0.0;
  double gap = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  std::vector<double> incumbent_history;

  bool ok() const {
    return status == SolveStatus::kOptimal || status == SolveStatus::kGapLimit;
  }
};

struct FeasibilityReport {
  double max_row_violation = 0.0;
  double max_bound_violation = 0.0;
  double max_integrality_violation = 0.0;
  int worst_row = -1;

  bool feasible(double tol = 1e-6) const {
    return max_row_violation <= tol && max_bound_violation <= tol &&
           max_integrality_violation <= tol;
  }
};

// Re-substitutes a point into the problem.  Independent of the solver: only
// the problem data is consulted.  Row violations are measured relative to
// max(1, |rhs|) so kW-scale and per-unit rows are judged alike.
inline FeasibilityReport check_feasibility(const MilpProblem& p,
                                           const std::vector<double>& x) {
  FeasibilityReport r;
  for (int j = 0; j < p.num_vars(); ++j) {
    const Variable& v = p.var(j);
    r.max_bound_violation =
        std::max({r.max_bound_violation, v.lb - x[j], x[j] - v.ub});
    if (v.is_discrete()) {
      r.max_integrality_violation =
          std::max(r.max_integrality_violation, std::abs(x[j] - std::round(x[j])));
    }
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    const Constraint& c = p.row(i);
    const double a = MilpProblem::row_activity(c, x);
    const double scale = std::max(1.0, std::abs(c.rhs));
    double viol = 0.0;
    switch (c.sense) {
      case RowSense::kLessEqual: viol = a - c.rhs; break;
      case RowSense::kGreaterEqual: viol = c.rhs - a; break;
      case RowSense::kEqual: viol = std::abs(a - c.rhs); break;
    }
    viol /= scale;
    if (viol > r.max_row_violation) {
      r.max_row_violation = viol;
      r.worst_row = i;
    }
  }
  return r;
}

}  // namespace resilience::milp
