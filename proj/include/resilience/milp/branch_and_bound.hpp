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
#include <chrono>
#include <cmath>
#include <vector>

#include "resilience/milp/problem.hpp"
#include "resilience/milp/simplex.hpp"

namespace resilience::milp {

struct MilpOptions {
  double rel_gap = 1e-6;
  double abs_gap = 1e-9;
  double int_tol = 1e-6;
  long node_limit = 2'000'000;
  // Depth-first search jumps to the best-bound open node this often.
  int restart_interval = 500;
  double time_limit_s = 1e30;
  // Optional starting incumbent.  Ignored unless it passes check_feasibility.
  std::vector<double> initial_solution;
  LpOptions lp;
};

inline MilpSolution solve_lp(const MilpProblem& p, const LpOptions& opt = {}) {
  MilpSolution sol;
  LpEngine eng(p, opt);
  const LpEngine::Status s = eng.solve_primal();
  sol.lp_iterations = eng.iterations();
  switch (s) {
    case LpEngine::Status::kOptimal: sol.status = SolveStatus::kOptimal; break;
    case LpEngine::Status::kInfeasible: sol.status = SolveStatus::kInfeasible; return sol;
    case LpEngine::Status::kUnbounded: sol.status = SolveStatus::kUnbounded; return sol;
    default: sol.status = SolveStatus::kNumericalFailure; return sol;
  }
  sol.x = eng.primal_values();
  sol.objective = p.evaluate_objective(sol.x);
  sol.best_bound = sol.objective;
  sol.row_duals = eng.row_duals(p.objective_sense());
  sol.reduced_costs = eng.reduced_costs(p.objective_sense());
  return sol;
}

namespace detail {

struct BnbNode {
  std::vector<double> lb;  // per discrete variable
  std::vector<double> ub;
  double bound = -kInf;    // parent LP value, internal min sense
};

}  // namespace detail

// Branch and bound on the discrete variables: most-fractional branching,
// depth-first with periodic best-bound restarts, dual simplex warm starts.
inline MilpSolution solve_milp(const MilpProblem& p, const MilpOptions& opt = {}) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const double sign = p.objective_sense() == ObjSense::kMaximize ? -1.0 : 1.0;

  MilpSolution sol;
  std::vector<int> disc;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.var(j).is_discrete()) disc.push_back(j);
  }
  const int nd = static_cast<int>(disc.size());

  LpEngine eng(p, opt.lp);
  double incumbent = kInf;  // internal min sense, without offset
  std::vector<double> best_x;
  if (static_cast<int>(opt.initial_solution.size()) == p.num_vars() &&
      check_feasibility(p, opt.initial_solution).feasible()) {
    best_x = opt.initial_solution;
    for (int j : disc) best_x[j] = std::round(best_x[j]);
    incumbent = sign * (p.evaluate_objective(best_x) - p.objective_offset());
    sol.incumbent_history.push_back(sign * incumbent + p.objective_offset());
  }

  auto lp_value = [&]() { return sign * eng.objective(p.objective_sense()); };
  auto allowance = [&](double inc) {
    return std::max(opt.abs_gap, opt.rel_gap * std::abs(inc));
  };

  detail::BnbNode root;
  root.lb.resize(nd);
  root.ub.resize(nd);
  for (int k = 0; k < nd; ++k) {
    root.lb[k] = std::ceil(p.var(disc[k]).lb - opt.int_tol);
    root.ub[k] = std::floor(p.var(disc[k]).ub + opt.int_tol);
    if (root.lb[k] > root.ub[k]) {
      sol.status = SolveStatus::kInfeasible;
      return sol;
    }
  }
  std::vector<double> cur_lb(nd, kInf), cur_ub(nd, -kInf);
  auto apply = [&](const detail::BnbNode& node) {
    for (int k = 0; k < nd; ++k) {
      if (node.lb[k] != cur_lb[k] || node.ub[k] != cur_ub[k]) {
        eng.set_bounds(disc[k], node.lb[k], node.ub[k]);
        cur_lb[k] = node.lb[k];
        cur_ub[k] = node.ub[k];
      }
    }
  };

  std::vector<detail::BnbNode> open;
  open.push_back(std::move(root));
  bool first = true;
  bool limit_hit = false;
  long nodes = 0;

  while (!open.empty()) {
    if (nodes >= opt.node_limit ||
        std::chrono::duration<double>(Clock::now() - t0).count() > opt.time_limit_s) {
      limit_hit = true;
      break;
    }
    if (opt.restart_interval > 0 && nodes > 0 && nodes % opt.restart_interval == 0) {
      auto it = std::min_element(open.begin(), open.end(),
                                 [](const auto& a, const auto& b) { return a.bound < b.bound; });
      std::iter_swap(it, open.end() - 1);
    }
    detail::BnbNode node = std::move(open.back());
    open.pop_back();
    if (incumbent < kInf && node.bound >= incumbent - allowance(incumbent)) continue;
    ++nodes;
    apply(node);

    LpEngine::Status st;
    const double cutoff =
        incumbent < kInf ? incumbent - allowance(incumbent) : kInf;
    if (first) {
      st = eng.solve_primal();
      first = false;
      if (st == LpEngine::Status::kUnbounded) {
        sol.status = SolveStatus::kUnbounded;
        sol.nodes = nodes;
        return sol;
      }
    } else {
      st = eng.solve(cutoff);
    }
    if (st == LpEngine::Status::kIterationLimit) {
      // Numerical trouble on the warm basis: solve this node from scratch.
      LpEngine fresh(p, opt.lp);
      for (int k = 0; k < nd; ++k) fresh.set_bounds(disc[k], node.lb[k], node.ub[k]);
      st = fresh.solve_primal();
      eng = std::move(fresh);
      for (int k = 0; k < nd; ++k) {
        cur_lb[k] = node.lb[k];
        cur_ub[k] = node.ub[k];
      }
      if (st == LpEngine::Status::kIterationLimit) {
        sol.status = SolveStatus::kNumericalFailure;
        sol.nodes = nodes;
        sol.lp_iterations += eng.iterations();
        return sol;
      }
    }
    if (st == LpEngine::Status::kInfeasible || st == LpEngine::Status::kCutoff) continue;
    if (st == LpEngine::Status::kUnbounded) continue;
    const double z = lp_value();
    if (incumbent < kInf && z >= incumbent - allowance(incumbent)) continue;

    const std::vector<double> x = eng.primal_values();
    int branch = -1;
    double best_frac = opt.int_tol;
    for (int k = 0; k < nd; ++k) {
      const double v = x[disc[k]];
      const double f = std::abs(v - std::round(v));
      if (f > best_frac) {
        best_frac = f;
        branch = k;
      }
    }
    if (branch < 0) {
      incumbent = z;
      best_x = x;
      for (int j : disc) best_x[j] = std::round(best_x[j]);
      sol.incumbent_history.push_back(sign * z + p.objective_offset());
      continue;
    }
    const double v = x[disc[branch]];
    detail::BnbNode down = node;
    down.ub[branch] = std::floor(v);
    down.bound = z;
    detail::BnbNode up = std::move(node);
    up.lb[branch] = std::ceil(v);
    up.bound = z;
    if (v - std::floor(v) >= 0.5) {
      open.push_back(std::move(down));
      open.push_back(std::move(up));
    } else {
      open.push_back(std::move(up));
      open.push_back(std::move(down));
    }
  }

  sol.nodes = nodes;
  sol.lp_iterations += eng.iterations();
  double bound = incumbent;
  for (const auto& n : open) bound = std::min(bound, n.bound);
  if (best_x.empty()) {
    sol.status = limit_hit ? SolveStatus::kNoSolution : SolveStatus::kInfeasible;
    return sol;
  }
  sol.x = best_x;
  sol.objective = p.evaluate_objective(best_x);
  sol.best_bound = sign * bound + p.objective_offset();
  sol.gap = std::abs(incumbent - bound);
  sol.status = limit_hit && incumbent - bound > allowance(incumbent)
                   ? SolveStatus::kGapLimit
                   : SolveStatus::kOptimal;
  return sol;
}

}  // namespace resilience::milp
