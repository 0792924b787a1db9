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

// Bounded revised simplex over the row-activity form
//
//     A x - s = 0,   lb <= x <= ub,   L <= s <= U
//
// with an explicit dense basis inverse.  The primal method (composite
// phase 1) solves from any basis; the dual method re-optimizes after bound
// changes, which is how branch-and-bound uses it.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "resilience/milp/problem.hpp"

namespace resilience::milp {

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  long max_iterations = 500000;
  int refactor_interval = 100;
  // Consecutive degenerate pivots tolerated before switching to Bland's rule.
  int degenerate_limit = 60;
};

class LpEngine {
 public:
  enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kCutoff };

  explicit LpEngine(const MilpProblem& p, LpOptions opt = {})
      : opt_(opt), n_(p.num_vars()), m_(p.num_rows()) {
    const double sign = p.objective_sense() == ObjSense::kMaximize ? -1.0 : 1.0;
    build_columns(p);
    compute_scaling();
    const int total = n_ + m_;
    cost_.assign(total, 0.0);
    lb_.assign(total, 0.0);
    ub_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) {
      cost_[j] = sign * p.objective()[j] * cscale_[j];
      lb_[j] = p.var(j).lb / cscale_[j];
      ub_[j] = p.var(j).ub / cscale_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const Constraint& c = p.row(i);
      double lo = -kInf, hi = kInf;
      if (c.sense != RowSense::kLessEqual) lo = c.rhs;
      if (c.sense != RowSense::kGreaterEqual) hi = c.rhs;
      lb_[n_ + i] = lo * rscale_[i];
      ub_[n_ + i] = hi * rscale_[i];
    }
    x_.assign(total, 0.0);
    state_.assign(total, kAtLower);
    pos_.assign(total, -1);
    head_.resize(m_);
    for (int j = 0; j < n_; ++j) place_nonbasic_default(j);
    for (int i = 0; i < m_; ++i) {
      head_[i] = n_ + i;
      pos_[n_ + i] = i;
      state_[n_ + i] = kBasic;
    }
    binv_ = -Eigen::MatrixXd::Identity(m_, m_);
    compute_basic_values();
  }

  int num_vars() const { return n_; }
  int num_rows() const { return m_; }
  long iterations() const { return iterations_; }

  double lower(int j) const { return lb_[j] * cscale_[j]; }
  double upper(int j) const { return ub_[j] * cscale_[j]; }

  // Changes structural bounds (unscaled).  Nonbasic variables follow their
  // bound; basic variables may become primal infeasible.
  void set_bounds(int j, double lb, double ub) {
    lb_[j] = lb / cscale_[j];
    ub_[j] = ub / cscale_[j];
    if (state_[j] != kBasic) {
      place_nonbasic_default(j);
      dirty_ = true;
    }
  }

  // Re-optimizes from the current basis.  Uses the dual method when the
  // basis is dual feasible after re-seating nonbasic variables, otherwise the
  // primal method.
  Status solve(double cutoff = kInf) {
    refresh_if_dirty();
    if (make_dual_feasible()) {
      Status s = solve_dual(cutoff);
      if (s != Status::kIterationLimit) return s;
    }
    return solve_primal();
  }

  Status solve_primal() {
    refresh_if_dirty();
    int degenerate = 0;
    for (int cleanup = 0; cleanup < 4; ++cleanup) {
      while (true) {
        if (iterations_ >= opt_.max_iterations) return Status::kIterationLimit;
        if (since_refactor_ >= opt_.refactor_interval) refactor();
        const bool phase1 = compute_phase_costs();
        compute_duals(phase_cost_);
        const bool bland = degenerate >= opt_.degenerate_limit;
        int q = -1;
        int dir = 0;
        price_primal(bland, &q, &dir);
        if (q < 0) {
          if (phase1) {
            refactor();
            if (max_primal_infeasibility() > opt_.primal_tol) {
              return Status::kInfeasible;
            }
            continue;
          }
          break;
        }
        column(q, &alpha_);
        double theta = 0.0;
        int r = -1;
        bool to_upper = false;
        if (!primal_ratio(q, dir, phase1, bland, &theta, &r, &to_upper)) {
          if (phase1) {
            refactor();
            continue;
          }
          return Status::kUnbounded;
        }
        degenerate = theta <= 1e-12 ? degenerate + 1 : 0;
        step_primal(q, dir, theta, r, to_upper);
        ++iterations_;
      }
      // Verify the optimum on a fresh factorization.
      refactor();
      compute_phase_costs();
      compute_duals(cost_);
      if (max_primal_infeasibility() <= opt_.primal_tol &&
          max_dual_infeasibility() <= opt_.dual_tol) {
        return Status::kOptimal;
      }
    }
    return max_primal_infeasibility() <= 1e-7 ? Status::kOptimal
                                               : Status::kIterationLimit;
  }

  // Dual simplex; requires a dual feasible basis.  Stops with kCutoff as soon
  // as the (monotone) objective exceeds `cutoff`.
  Status solve_dual(double cutoff = kInf) {
    refresh_if_dirty();
    const long start = iterations_;
    const long budget = std::max<long>(200, 20L * (m_ + n_));
    for (int cleanup = 0; cleanup < 4; ++cleanup) {
      while (true) {
        if (iterations_ >= opt_.max_iterations ||
            iterations_ - start > budget) {
          return Status::kIterationLimit;
        }
        if (since_refactor_ >= opt_.refactor_interval) refactor();
        compute_duals(cost_);
        if (cutoff < kInf && objective_internal() > cutoff) {
          return Status::kCutoff;
        }
        int r = -1;
        double target = 0.0;
        price_dual(&r, &target);
        if (r < 0) break;
        int q = -1;
        if (!dual_ratio(r, target, &q)) {
          refactor();
          compute_duals(cost_);
          price_dual(&r, &target);
          if (r < 0) break;
          if (!dual_ratio(r, target, &q)) return Status::kInfeasible;
        }
        column(q, &alpha_);
        if (std::abs(alpha_[r]) < opt_.pivot_tol) {
          refactor();
          continue;
        }
        step_dual(q, r, target);
        ++iterations_;
      }
      refactor();
      compute_duals(cost_);
      if (max_dual_infeasibility() > opt_.dual_tol) {
        return Status::kIterationLimit;
      }
      if (max_primal_infeasibility() <= opt_.primal_tol) {
        return Status::kOptimal;
      }
    }
    return Status::kIterationLimit;
  }

  // Objective of the current basic solution in the problem's own sense,
  // excluding the constant offset.
  double objective(ObjSense sense) const {
    const double v = objective_internal();
    return sense == ObjSense::kMaximize ? -v : v;
  }

  std::vector<double> primal_values() const {
    std::vector<double> x(n_);
    for (int j = 0; j < n_; ++j) x[j] = x_[j] * cscale_[j];
    return x;
  }

  // d(objective)/d(rhs) in the problem's own sense.
  std::vector<double> row_duals(ObjSense sense) const {
    const double sign = sense == ObjSense::kMaximize ? -1.0 : 1.0;
    std::vector<double> y(m_);
    for (int i = 0; i < m_; ++i) y[i] = sign * y_[i] * rscale_[i];
    return y;
  }

  std::vector<double> reduced_costs(ObjSense sense) const {
    const double sign = sense == ObjSense::kMaximize ? -1.0 : 1.0;
    std::vector<double> d(n_);
    for (int j = 0; j < n_; ++j) d[j] = sign * reduced_cost(j) / cscale_[j];
    return d;
  }

  bool is_basic(int j) const { return state_[j] == kBasic; }

 private:
  enum State : std::uint8_t { kAtLower, kAtUpper, kFreeZero, kBasic };

  void build_columns(const MilpProblem& p) {
    std::vector<int> count(n_ + 1, 0);
    for (const Constraint& c : p.rows()) {
      for (const Term& t : c.terms) {
        if (t.coef != 0.0) ++count[t.var + 1];
      }
    }
    for (int j = 0; j < n_; ++j) count[j + 1] += count[j];
    colptr_ = count;
    rowidx_.assign(colptr_[n_], 0);
    val_.assign(colptr_[n_], 0.0);
    std::vector<int> fill(colptr_.begin(), colptr_.end() - 1);
    for (int i = 0; i < m_; ++i) {
      for (const Term& t : p.row(i).terms) {
        if (t.coef == 0.0) continue;
        rowidx_[fill[t.var]] = i;
        val_[fill[t.var]++] = t.coef;
      }
    }
    // Merge duplicate (row, col) entries.
    for (int j = 0; j < n_; ++j) {
      std::vector<std::pair<int, double>> e;
      for (int k = colptr_[j]; k < colptr_[j + 1]; ++k) {
        e.emplace_back(rowidx_[k], val_[k]);
      }
      std::sort(e.begin(), e.end());
      int w = colptr_[j];
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (w > colptr_[j] && rowidx_[w - 1] == e[k].first) {
          val_[w - 1] += e[k].second;
        } else {
          rowidx_[w] = e[k].first;
          val_[w++] = e[k].second;
        }
      }
      for (int k = w; k < colptr_[j + 1]; ++k) {
        rowidx_[k] = e.empty() ? 0 : e.back().first;
        val_[k] = 0.0;
      }
    }
  }

  // Geometric-mean scaling with powers of two, a few alternating passes.
  void compute_scaling() {
    rscale_.assign(m_, 1.0);
    cscale_.assign(n_, 1.0);
    auto pow2 = [](double v) { return std::exp2(std::round(std::log2(v))); };
    for (int pass = 0; pass < 4; ++pass) {
      std::vector<double> rmin(m_, kInf), rmax(m_, 0.0);
      for (int j = 0; j < n_; ++j) {
        for (int k = colptr_[j]; k < colptr_[j + 1]; ++k) {
          const double a = std::abs(val_[k]) * cscale_[j];
          if (a == 0.0) continue;
          rmin[rowidx_[k]] = std::min(rmin[rowidx_[k]], a);
          rmax[rowidx_[k]] = std::max(rmax[rowidx_[k]], a);
        }
      }
      for (int i = 0; i < m_; ++i) {
        if (rmax[i] > 0.0) rscale_[i] = pow2(1.0 / std::sqrt(rmin[i] * rmax[i]));
      }
      for (int j = 0; j < n_; ++j) {
        double lo = kInf, hi = 0.0;
        for (int k = colptr_[j]; k < colptr_[j + 1]; ++k) {
          const double a = std::abs(val_[k]) * rscale_[rowidx_[k]];
          if (a == 0.0) continue;
          lo = std::min(lo, a);
          hi = std::max(hi, a);
        }
        if (hi > 0.0) cscale_[j] = pow2(1.0 / std::sqrt(lo * hi));
      }
    }
    for (int j = 0; j < n_; ++j) {
      for (int k = colptr_[j]; k < colptr_[j + 1]; ++k) {
        val_[k] *= rscale_[rowidx_[k]] * cscale_[j];
      }
    }
  }

  void place_nonbasic_default(int j) {
    if (std::isfinite(lb_[j])) {
      if (state_[j] == kAtUpper && std::isfinite(ub_[j])) {
        x_[j] = ub_[j];
      } else {
        state_[j] = kAtLower;
        x_[j] = lb_[j];
      }
    } else if (std::isfinite(ub_[j])) {
      state_[j] = kAtUpper;
      x_[j] = ub_[j];
    } else {
      state_[j] = kFreeZero;
      x_[j] = 0.0;
    }
  }

  void refresh_if_dirty() {
    if (dirty_) {
      compute_basic_values();
      dirty_ = false;
    }
  }

  // x_B = -B^{-1} N x_N.
  void compute_basic_values() {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == kBasic || x_[j] == 0.0) continue;
      add_column(j, x_[j], &rhs);
    }
    Eigen::VectorXd xb = -(binv_ * rhs);
    for (int i = 0; i < m_; ++i) x_[head_[i]] = xb[i];
  }

  void add_column(int j, double scale, Eigen::VectorXd* v) const {
    if (j < n_) {
      for (int k = colptr_[j]; k < colptr_[j + 1]; ++k) {
        (*v)[rowidx_[k]] += scale * val_[k];
      }
    } else {
      (*v)[j - n_] -= scale;
    }
  }

  // alpha = B^{-1} a_q.
  void column(int q, Eigen::VectorXd* alpha) const {
    if (q < n_) {
      alpha->setZero(m_);
      for (int k = colptr_[q]; k < colptr_[q + 1]; ++k) {
        alpha->noalias() += val_[k] * binv_.col(rowidx_[k]);
      }
    } else {
      *alpha = -binv_.col(q - n_);
    }
  }

  double dot_column(const Eigen::VectorXd& y, int j) const {
    if (j >= n_) return -y[j - n_];
    double s = 0.0;
    for (int k = colptr_[j]; k < colptr_[j + 1]; ++k) s += y[rowidx_[k]] * val_[k];
    return s;
  }

  double reduced_cost(int j) const { return cost_[j] - dot_column(y_, j); }

  // Phase-1 costs are the gradient of the sum of basic infeasibilities.
  bool compute_phase_costs() {
    phase_cost_.assign(n_ + m_, 0.0);
    bool infeasible = false;
    for (int i = 0; i < m_; ++i) {
      const int b = head_[i];
      if (x_[b] < lb_[b] - opt_.primal_tol) {
        phase_cost_[b] = -1.0;
        infeasible = true;
      } else if (x_[b] > ub_[b] + opt_.primal_tol) {
        phase_cost_[b] = 1.0;
        infeasible = true;
      }
    }
    if (!infeasible) phase_cost_ = cost_;
    return infeasible;
  }

  void compute_duals(const std::vector<double>& c) {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = c[head_[i]];
    y_ = binv_.transpose() * cb;
    cur_cost_ = &c;
  }

  double current_reduced_cost(int j) const {
    return (*cur_cost_)[j] - dot_column(y_, j);
  }

  void price_primal(bool bland, int* q, int* dir) const {
    double best = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == kBasic) continue;
      if (lb_[j] == ub_[j]) continue;
      const double d = current_reduced_cost(j);
      int dj = 0;
      if (state_[j] == kAtLower && d < -opt_.dual_tol) dj = 1;
      else if (state_[j] == kAtUpper && d > opt_.dual_tol) dj = -1;
      else if (state_[j] == kFreeZero && std::abs(d) > opt_.dual_tol) dj = d < 0 ? 1 : -1;
      if (dj == 0) continue;
      if (bland) {
        *q = j;
        *dir = dj;
        return;
      }
      const double score = std::abs(d);
      if (score > best) {
        best = score;
        *q = j;
        *dir = dj;
      }
    }
  }

  // Harris two-pass ratio test.  Infeasible basics (phase 1) block when they
  // reach the violated bound; feasible basics block at the bound they move
  // toward.
  bool primal_ratio(int q, int dir, bool phase1, bool bland, double* theta,
                    int* r, bool* to_upper) const {
    const double tol = opt_.primal_tol;
    double limit = kInf;
    if (std::isfinite(lb_[q]) && std::isfinite(ub_[q])) limit = ub_[q] - lb_[q];
    auto bound_for = [&](int i, double rate, double relax, double* t, bool* up) {
      const int b = head_[i];
      const double xb = x_[b];
      if (rate < 0.0) {
        if (phase1 && xb > ub_[b] + tol) {
          *t = (xb - ub_[b] + relax) / -rate;
          *up = true;
          return true;
        }
        if (xb < lb_[b] - tol || !std::isfinite(lb_[b])) return false;
        *t = (xb - lb_[b] + relax) / -rate;
        *up = false;
        return true;
      }
      if (phase1 && xb < lb_[b] - tol) {
        *t = (lb_[b] - xb + relax) / rate;
        *up = false;
        return true;
      }
      if (xb > ub_[b] + tol || !std::isfinite(ub_[b])) return false;
      *t = (ub_[b] - xb + relax) / rate;
      *up = true;
      return true;
    };
    if (bland) {
      double best = limit;
      int best_row = -1;
      bool best_up = false;
      int best_var = 1 << 30;
      for (int i = 0; i < m_; ++i) {
        const double rate = -dir * alpha_[i];
        if (std::abs(rate) < opt_.pivot_tol) continue;
        double t;
        bool up;
        if (!bound_for(i, rate, 0.0, &t, &up)) continue;
        t = std::max(t, 0.0);
        if (t < best - 1e-12 || (t <= best + 1e-12 && best_row >= 0 && head_[i] < best_var)) {
          best = t;
          best_row = i;
          best_up = up;
          best_var = head_[i];
        }
      }
      if (best_row < 0 && !std::isfinite(limit)) return false;
      *theta = best;
      *r = best_row;
      *to_upper = best_up;
      return true;
    }
    double tmax = limit;
    for (int i = 0; i < m_; ++i) {
      const double rate = -dir * alpha_[i];
      if (std::abs(rate) < opt_.pivot_tol) continue;
      double t;
      bool up;
      if (bound_for(i, rate, tol, &t, &up)) tmax = std::min(tmax, t);
    }
    if (!std::isfinite(tmax)) return false;
    double best_piv = 0.0;
    int best_row = -1;
    bool best_up = false;
    double best_t = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double rate = -dir * alpha_[i];
      if (std::abs(rate) < opt_.pivot_tol) continue;
      double t;
      bool up;
      if (!bound_for(i, rate, 0.0, &t, &up)) continue;
      if (t <= tmax && std::abs(rate) > best_piv) {
        best_piv = std::abs(rate);
        best_row = i;
        best_up = up;
        best_t = t;
      }
    }
    if (best_row < 0 || (std::isfinite(limit) && limit <= best_t)) {
      // Bound flip of the entering variable.
      *theta = limit;
      *r = -1;
      return true;
    }
    *theta = std::max(best_t, 0.0);
    *r = best_row;
    *to_upper = best_up;
    return true;
  }

  void step_primal(int q, int dir, double theta, int r, bool to_upper) {
    const double delta = dir * theta;
    x_[q] += delta;
    for (int i = 0; i < m_; ++i) x_[head_[i]] -= delta * alpha_[i];
    if (r < 0) {
      state_[q] = dir > 0 ? kAtUpper : kAtLower;
      x_[q] = dir > 0 ? ub_[q] : lb_[q];
      return;
    }
    const int leaving = head_[r];
    x_[leaving] = to_upper ? ub_[leaving] : lb_[leaving];
    state_[leaving] = to_upper ? kAtUpper : kAtLower;
    pos_[leaving] = -1;
    pivot(q, r);
  }

  void pivot(int q, int r) {
    head_[r] = q;
    pos_[q] = r;
    state_[q] = kBasic;
    const double piv = alpha_[r];
    Eigen::RowVectorXd prow = binv_.row(r) / piv;
    alpha_[r] = 0.0;
    binv_.noalias() -= alpha_ * prow;
    binv_.row(r) = prow;
    ++since_refactor_;
  }

  void price_dual(int* r, double* target) const {
    double best = 0.0;
    *r = -1;
    for (int i = 0; i < m_; ++i) {
      const int b = head_[i];
      double viol = 0.0;
      double t = 0.0;
      if (x_[b] < lb_[b] - opt_.primal_tol) {
        viol = lb_[b] - x_[b];
        t = lb_[b];
      } else if (x_[b] > ub_[b] + opt_.primal_tol) {
        viol = x_[b] - ub_[b];
        t = ub_[b];
      }
      if (viol > best) {
        best = viol;
        *r = i;
        *target = t;
      }
    }
  }

  bool dual_ratio(int r, double target, int* q) {
    const int b = head_[r];
    const double need = target > x_[b] ? 1.0 : -1.0;
    Eigen::VectorXd rho = binv_.row(r).transpose();
    const double tol = opt_.dual_tol;
    double tmax = kInf;
    row_alpha_.assign(n_ + m_, 0.0);
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == kBasic || lb_[j] == ub_[j]) continue;
      const double a = dot_column(rho, j);
      row_alpha_[j] = a;
      if (std::abs(a) < opt_.pivot_tol) continue;
      // x_b moves by -a * dx_j; the allowed dx_j sign depends on the state.
      const int dx = a * need < 0 ? 1 : -1;
      if (!allowed(j, dx)) continue;
      const double d = reduced_cost(j);
      tmax = std::min(tmax, (std::abs(d) + tol) / std::abs(a));
    }
    if (!std::isfinite(tmax)) return false;
    double best = 0.0;
    *q = -1;
    for (int j = 0; j < n_ + m_; ++j) {
      const double a = row_alpha_[j];
      if (a == 0.0 || std::abs(a) < opt_.pivot_tol) continue;
      if (state_[j] == kBasic || lb_[j] == ub_[j]) continue;
      const int dx = a * need < 0 ? 1 : -1;
      if (!allowed(j, dx)) continue;
      const double t = std::abs(reduced_cost(j)) / std::abs(a);
      if (t <= tmax && std::abs(a) > best) {
        best = std::abs(a);
        *q = j;
      }
    }
    return *q >= 0;
  }

  bool allowed(int j, int dx) const {
    switch (state_[j]) {
      case kAtLower: return dx > 0;
      case kAtUpper: return dx < 0;
      case kFreeZero: return true;
      default: return false;
    }
  }

  void step_dual(int q, int r, double target) {
    const int leaving = head_[r];
    const double dxq = (x_[leaving] - target) / alpha_[r];
    x_[q] += dxq;
    for (int i = 0; i < m_; ++i) x_[head_[i]] -= dxq * alpha_[i];
    x_[leaving] = target;
    state_[leaving] = target == lb_[leaving] ? kAtLower : kAtUpper;
    pos_[leaving] = -1;
    pivot(q, r);
  }

  // Re-seats nonbasic variables at the bound matching their reduced cost
  // sign.  Returns false when a reduced cost has the wrong sign for an
  // infinite bound (basis not dual feasible).
  bool make_dual_feasible() {
    compute_duals(cost_);
    bool moved = false;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == kBasic || lb_[j] == ub_[j]) continue;
      const double d = reduced_cost(j);
      if (d > opt_.dual_tol) {
        if (!std::isfinite(lb_[j])) return false;
        if (state_[j] != kAtLower) {
          state_[j] = kAtLower;
          x_[j] = lb_[j];
          moved = true;
        }
      } else if (d < -opt_.dual_tol) {
        if (!std::isfinite(ub_[j])) return false;
        if (state_[j] != kAtUpper) {
          state_[j] = kAtUpper;
          x_[j] = ub_[j];
          moved = true;
        }
      }
    }
    if (moved) compute_basic_values();
    return true;
  }

  double max_primal_infeasibility() const {
    double v = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int b = head_[i];
      v = std::max({v, lb_[b] - x_[b], x_[b] - ub_[b]});
    }
    return v;
  }

  double max_dual_infeasibility() const {
    double v = 0.0;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == kBasic || lb_[j] == ub_[j]) continue;
      const double d = reduced_cost(j);
      if (state_[j] == kAtLower) v = std::max(v, -d);
      else if (state_[j] == kAtUpper) v = std::max(v, d);
      else v = std::max(v, std::abs(d));
    }
    return v;
  }

  double objective_internal() const {
    double v = 0.0;
    for (int j = 0; j < n_; ++j) v += cost_[j] * x_[j];
    return v;
  }

  // Rebuilds B^{-1} exploiting that logical columns are -e_i.  Structural
  // basic columns are inverted on the rows whose logicals are nonbasic;
  // dependent columns are swapped for logicals of uncovered rows.
  void refactor() {
    since_refactor_ = 0;
    for (int attempt = 0; attempt < 3; ++attempt) {
      std::vector<int> srows;
      std::vector<char> row_has_logical(m_, 0);
      std::vector<int> scols;
      for (int i = 0; i < m_; ++i) {
        if (head_[i] >= n_) row_has_logical[head_[i] - n_] = 1;
        else scols.push_back(head_[i]);
      }
      for (int i = 0; i < m_; ++i) {
        if (!row_has_logical[i]) srows.push_back(i);
      }
      const int k = static_cast<int>(scols.size());
      std::vector<int> local(m_, -1);
      for (int c = 0; c < k; ++c) local[srows[c]] = c;
      Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(k, k);
      for (int p = 0; p < k; ++p) {
        const int j = scols[p];
        for (int t = colptr_[j]; t < colptr_[j + 1]; ++t) {
          if (local[rowidx_[t]] >= 0) kmat(local[rowidx_[t]], p) = val_[t];
        }
      }
      std::vector<int> bad;
      Eigen::MatrixXd kinv;
      if (!invert(kmat, &kinv, &bad)) {
        // Replace dependent structurals with logicals of uncovered rows.
        std::vector<int> free_rows = bad;  // local row ids without a pivot
        std::vector<int> drop_cols;
        for (int p = 0; p < k; ++p) {
          if (std::find(kinv_bad_cols_.begin(), kinv_bad_cols_.end(), p) !=
              kinv_bad_cols_.end()) {
            drop_cols.push_back(p);
          }
        }
        for (std::size_t t = 0; t < drop_cols.size(); ++t) {
          const int j = scols[drop_cols[t]];
          const int row = srows[free_rows[t]];
          const int slot = pos_[j];
          pos_[j] = -1;
          place_nonbasic_default(j);
          head_[slot] = n_ + row;
          pos_[n_ + row] = slot;
          state_[n_ + row] = kBasic;
        }
        continue;
      }
      // Assemble B^{-1} in slot order.
      binv_.setZero(m_, m_);
      std::vector<int> slot_of_col(k);
      for (int p = 0; p < k; ++p) slot_of_col[p] = pos_[scols[p]];
      for (int p = 0; p < k; ++p) {
        const int slot = slot_of_col[p];
        for (int c = 0; c < k; ++c) binv_(slot, srows[c]) = kinv(p, c);
      }
      for (int i = 0; i < m_; ++i) {
        if (head_[i] >= n_) binv_(i, head_[i] - n_) = -1.0;
      }
      // s_row = a_row . x_S, so the logical's row of B^{-1} is A[row,S] K^{-1}.
      for (int p = 0; p < k; ++p) {
        const int j = scols[p];
        for (int t = colptr_[j]; t < colptr_[j + 1]; ++t) {
          const int row = rowidx_[t];
          if (local[row] >= 0 || val_[t] == 0.0) continue;
          const int slot = pos_[n_ + row];
          for (int c = 0; c < k; ++c) binv_(slot, srows[c]) += val_[t] * kinv(p, c);
        }
      }
      compute_basic_values();
      return;
    }
    compute_basic_values();
  }

  // Gauss-Jordan inversion with partial pivoting.  On failure reports the
  // local rows left without a pivot in `bad` and the singular columns in
  // kinv_bad_cols_.
  bool invert(Eigen::MatrixXd a, Eigen::MatrixXd* inv, std::vector<int>* bad) {
    const int k = static_cast<int>(a.rows());
    kinv_bad_cols_.clear();
    bad->clear();
    std::vector<int> pivot_row(k, -1);
    std::vector<char> used(k, 0);
    Eigen::MatrixXd e = Eigen::MatrixXd::Identity(k, k);
    for (int c = 0; c < k; ++c) {
      int pr = -1;
      double best = 0.0;
      for (int i = 0; i < k; ++i) {
        if (used[i]) continue;
        if (std::abs(a(i, c)) > best) {
          best = std::abs(a(i, c));
          pr = i;
        }
      }
      if (pr < 0 || best < 1e-11) {
        kinv_bad_cols_.push_back(c);
        continue;
      }
      used[pr] = 1;
      pivot_row[c] = pr;
      const double piv = a(pr, c);
      a.row(pr) /= piv;
      e.row(pr) /= piv;
      for (int i = 0; i < k; ++i) {
        if (i == pr) continue;
        const double f = a(i, c);
        if (f == 0.0) continue;
        a.row(i) -= f * a.row(pr);
        e.row(i) -= f * e.row(pr);
      }
    }
    if (!kinv_bad_cols_.empty()) {
      for (int i = 0; i < k; ++i) {
        if (!used[i]) bad->push_back(i);
      }
      return false;
    }
    // Column c of the reduced system was pivoted on row pivot_row[c]:
    // x_c = e.row(pivot_row[c]) . b.
    inv->resize(k, k);
    for (int c = 0; c < k; ++c) inv->row(c) = e.row(pivot_row[c]);
    return true;
  }

  LpOptions opt_;
  int n_;
  int m_;
  std::vector<int> colptr_;
  std::vector<int> rowidx_;
  std::vector<double> val_;
  std::vector<double> rscale_;
  std::vector<double> cscale_;
  std::vector<double> cost_;
  std::vector<double> phase_cost_;
  std::vector<double> lb_;
  std::vector<double> ub_;
  std::vector<double> x_;
  std::vector<State> state_;
  std::vector<int> pos_;
  std::vector<int> head_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd y_;
  Eigen::VectorXd alpha_;
  std::vector<double> row_alpha_;
  std::vector<int> kinv_bad_cols_;
  const std::vector<double>* cur_cost_ = nullptr;
  long iterations_ = 0;
  int since_refactor_ = 0;
  bool dirty_ = false;
};

}  // namespace resilience::milp
