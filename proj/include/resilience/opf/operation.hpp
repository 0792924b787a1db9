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
#include <optional>
#include <string>
#include <vector>

#include "resilience/grid/network.hpp"
#include "resilience/milp/problem.hpp"

namespace resilience::opf {

using milp::kInf;
using milp::MilpProblem;
using milp::RowSense;
using milp::Term;
using milp::VarKind;

struct TimeGrid {
  int t_e = 0;
  int t_r = 24;
  int t_c = 72;

  bool valid() const { return t_e < t_r && t_r < t_c; }
  // Self-healing hours t_e + 1 .. t_r - 1.
  int self_heal_hours() const { return t_r - t_e - 1; }
  // Recovery hours t_r .. t_c.
  int recovery_hours() const { return t_c - t_r + 1; }
};

enum class SwitchMode {
  kOpen,    // s = 0 on every line: topology is exactly u (shock inner problem)
  kFrozen,  // s fixed at the pre-event state (normally open ties stay open)
  kFree,    // s binary on switch lines
};

struct StepOptions {
  SwitchMode switches = SwitchMode::kFree;
  // Fixed damage per line; empty means u is declared binary and left free.
  std::vector<int> fixed_u;
  bool radiality = true;
  // beta, gamma and y are integral whenever u and s are (the orientation rows
  // form a network matrix and gamma = u*s is pinned by its linking rows), so
  // by default they are declared continuous to keep branching on decisions.
  bool declare_implied_binaries = false;
  double v0 = 1.0;
};

// Variable indices for one time step; -1 where a quantity does not exist.
struct StepVars {
  int t = 0;
  std::vector<int> p, q;          // line flows, kW / kVar, from -> to
  std::vector<int> v;             // bus voltage magnitude, p.u.
  std::vector<int> pg, qg;        // DG output, kW / kVar
  std::vector<int> rho;           // shed ratio (buses with demand)
  std::vector<int> u, s, gamma, y;
  std::vector<int> beta_fwd;      // from-bus is parent of to-bus
  std::vector<int> beta_bwd;      // to-bus is parent of from-bus
  // Rows of interest for dual extraction.
  std::vector<int> balance_p, balance_q;
};

// Big-M making the voltage-drop rows vacuous on a disconnected line:
// (Vmax - Vmin) + max over lines of (R Pmax + X Qmax) / V0, all per unit.
inline double voltage_big_m(const grid::Network& net, double v0 = 1.0) {
  double vmax = -kInf, vmin = kInf;
  for (const auto& b : net.buses) {
    vmax = std::max(vmax, b.v_max);
    vmin = std::min(vmin, b.v_min);
  }
  double drop = 0.0;
  const double sb = net.bases.s_base_kw();
  for (const auto& l : net.lines) {
    drop = std::max(drop, (l.r_pu * l.p_max_kw + l.x_pu * l.q_max_kvar) / sb / v0);
  }
  return (vmax - vmin) + drop;
}

inline std::string step_name(const char* what, const std::string& id, int t) {
  return std::string(what) + "_" + id + "_t" + std::to_string(t);
}

// Declares every variable of one operating hour.  Voltage, DG and shed-ratio
// bounds are variable bounds (the DG/shed/voltage limits of the model).
inline StepVars declare_step(MilpProblem& p, const grid::Network& net, int t,
                             const StepOptions& opt) {
  StepVars sv;
  sv.t = t;
  const int nl = net.num_lines();
  const int nb = net.num_buses();
  const VarKind implied = opt.declare_implied_binaries ? VarKind::kBinary : VarKind::kContinuous;
  for (int l = 0; l < nl; ++l) {
    const auto& ln = net.lines[l];
    sv.p.push_back(p.add_variable(step_name("P", ln.id, t), 0.0, ln.p_max_kw));
    sv.q.push_back(p.add_variable(step_name("Q", ln.id, t), 0.0, ln.q_max_kvar));
  }
  for (int b = 0; b < nb; ++b) {
    const auto& bus = net.buses[b];
    sv.v.push_back(p.add_variable(step_name("V", bus.id, t), bus.v_min, bus.v_max));
    sv.pg.push_back(net.dg_p_max(b) > 0 || net.dg_q_max(b) > 0
                        ? p.add_variable(step_name("Pg", bus.id, t), 0.0, net.dg_p_max(b))
                        : -1);
    sv.qg.push_back(sv.pg.back() >= 0
                        ? p.add_variable(step_name("Qg", bus.id, t), 0.0, net.dg_q_max(b))
                        : -1);
    sv.rho.push_back(bus.p_kw > 0 || bus.q_kvar > 0
                         ? p.add_variable(step_name("rho", bus.id, t), 0.0, 1.0)
                         : -1);
  }
  for (int l = 0; l < nl; ++l) {
    const auto& ln = net.lines[l];
    const double uf = opt.fixed_u.empty() ? -1.0 : opt.fixed_u.at(l);
    sv.u.push_back(p.add_variable(step_name("u", ln.id, t), uf < 0 ? 0.0 : uf,
                                  uf < 0 ? 1.0 : uf, VarKind::kBinary));
    if (ln.has_switch && opt.switches != SwitchMode::kOpen) {
      const double base = ln.normally_open ? 1.0 : 0.0;
      const bool frozen = opt.switches == SwitchMode::kFrozen;
      sv.s.push_back(p.add_variable(step_name("s", ln.id, t), frozen ? base : 0.0,
                                    frozen ? base : 1.0, VarKind::kBinary));
      sv.gamma.push_back(p.add_variable(step_name("gamma", ln.id, t), 0.0, 1.0, implied));
    } else {
      sv.s.push_back(-1);
      sv.gamma.push_back(-1);
    }
    sv.y.push_back(p.add_variable(step_name("y", ln.id, t), 0.0, 1.0, implied));
    if (opt.radiality) {
      sv.beta_fwd.push_back(p.add_variable(step_name("bf", ln.id, t), 0.0,
                                           net.buses[ln.to].is_root ? 0.0 : 1.0, implied));
      sv.beta_bwd.push_back(p.add_variable(step_name("bb", ln.id, t), 0.0,
                                           net.buses[ln.from].is_root ? 0.0 : 1.0, implied));
    }
  }
  return sv;
}

// Active and reactive balance at each bus:
//   sum_in P - sum_out P + Pg + rho * Pld = Pld.
inline void build_flow_balance(MilpProblem& p, const grid::Network& net, StepVars& sv) {
  const double mult = net.demand_multiplier(sv.t);
  sv.balance_p.assign(net.num_buses(), -1);
  sv.balance_q.assign(net.num_buses(), -1);
  for (int b = 0; b < net.num_buses(); ++b) {
    const auto& bus = net.buses[b];
    const double pld = bus.p_kw * mult;
    const double qld = bus.q_kvar * mult;
    std::vector<Term> tp, tq;
    for (int l : net.lines_into(b)) {
      tp.push_back({sv.p[l], 1.0});
      tq.push_back({sv.q[l], 1.0});
    }
    for (int l : net.lines_out_of(b)) {
      tp.push_back({sv.p[l], -1.0});
      tq.push_back({sv.q[l], -1.0});
    }
    if (sv.pg[b] >= 0) {
      tp.push_back({sv.pg[b], 1.0});
      tq.push_back({sv.qg[b], 1.0});
    }
    if (sv.rho[b] >= 0) {
      if (pld != 0) tp.push_back({sv.rho[b], pld});
      if (qld != 0) tq.push_back({sv.rho[b], qld});
    }
    sv.balance_p[b] =
        p.add_constraint(step_name("balP", bus.id, sv.t), std::move(tp), RowSense::kEqual, pld);
    sv.balance_q[b] =
        p.add_constraint(step_name("balQ", bus.id, sv.t), std::move(tq), RowSense::kEqual, qld);
  }
}

// Flow limits tied to line status and the two relaxed voltage-drop rows:
//   P + Pmax y <= Pmax,  Q + Qmax y <= Qmax,
//   V_j - V_i + (R P + X Q) / (V0 S_base) - M1 y <= 0,
//   V_j - V_i + (R P + X Q) / (V0 S_base) + M1 y >= 0.
inline void build_capacity_and_voltage(MilpProblem& p, const grid::Network& net,
                                       const StepVars& sv, double m1, double v0 = 1.0) {
  const double sb = net.bases.s_base_kw();
  for (int l = 0; l < net.num_lines(); ++l) {
    const auto& ln = net.lines[l];
    p.add_constraint(step_name("capP", ln.id, sv.t), {{sv.p[l], 1.0}, {sv.y[l], ln.p_max_kw}},
                     RowSense::kLessEqual, ln.p_max_kw);
    p.add_constraint(step_name("capQ", ln.id, sv.t), {{sv.q[l], 1.0}, {sv.y[l], ln.q_max_kvar}},
                     RowSense::kLessEqual, ln.q_max_kvar);
    const double a = ln.r_pu / (v0 * sb);
    const double b = ln.x_pu / (v0 * sb);
    std::vector<Term> drop{{sv.v[ln.to], 1.0}, {sv.v[ln.from], -1.0}};
    if (a != 0) drop.push_back({sv.p[l], a});
    if (b != 0) drop.push_back({sv.q[l], b});
    auto lo = drop;
    drop.push_back({sv.y[l], -m1});
    lo.push_back({sv.y[l], m1});
    p.add_constraint(step_name("vdrop_hi", ln.id, sv.t), std::move(drop), RowSense::kLessEqual,
                     0.0);
    p.add_constraint(step_name("vdrop_lo", ln.id, sv.t), std::move(lo), RowSense::kGreaterEqual,
                     0.0);
  }
}

// DG, voltage and shed limits are declared as variable bounds by
// declare_step; this re-applies them (e.g. after a caller changed them).
inline void build_dg_shed_bounds(MilpProblem& p, const grid::Network& net, const StepVars& sv) {
  for (int b = 0; b < net.num_buses(); ++b) {
    p.set_bounds(sv.v[b], net.buses[b].v_min, net.buses[b].v_max);
    if (sv.pg[b] >= 0) {
      p.set_bounds(sv.pg[b], 0.0, net.dg_p_max(b));
      p.set_bounds(sv.qg[b], 0.0, net.dg_q_max(b));
    }
    if (sv.rho[b] >= 0) p.set_bounds(sv.rho[b], 0.0, 1.0);
  }
}

// y = u + s - gamma with gamma = u AND s; y = u on lines without a switch.
inline void build_status_linking(MilpProblem& p, const grid::Network& net, const StepVars& sv) {
  for (int l = 0; l < net.num_lines(); ++l) {
    const auto& id = net.lines[l].id;
    if (sv.s[l] < 0) {
      p.add_constraint(step_name("link", id, sv.t), {{sv.y[l], 1.0}, {sv.u[l], -1.0}},
                       RowSense::kEqual, 0.0);
      continue;
    }
    p.add_constraint(step_name("link", id, sv.t),
                     {{sv.y[l], 1.0}, {sv.u[l], -1.0}, {sv.s[l], -1.0}, {sv.gamma[l], 1.0}},
                     RowSense::kEqual, 0.0);
    p.add_constraint(step_name("gu", id, sv.t), {{sv.gamma[l], 1.0}, {sv.u[l], -1.0}},
                     RowSense::kLessEqual, 0.0);
    p.add_constraint(step_name("gs", id, sv.t), {{sv.gamma[l], 1.0}, {sv.s[l], -1.0}},
                     RowSense::kLessEqual, 0.0);
    p.add_constraint(step_name("guS", id, sv.t),
                     {{sv.gamma[l], 1.0}, {sv.u[l], -1.0}, {sv.s[l], -1.0}},
                     RowSense::kGreaterEqual, -1.0);
  }
}

// Spanning-tree rows: every connected line gets one orientation
// (beta_fwd + beta_bwd + y = 1), roots take no parent (bounds), and each bus
// has at most one parent.
inline void build_radiality(MilpProblem& p, const grid::Network& net, const StepVars& sv) {
  for (int l = 0; l < net.num_lines(); ++l) {
    p.add_constraint(step_name("orient", net.lines[l].id, sv.t),
                     {{sv.beta_fwd[l], 1.0}, {sv.beta_bwd[l], 1.0}, {sv.y[l], 1.0}},
                     RowSense::kEqual, 1.0);
  }
  for (int b = 0; b < net.num_buses(); ++b) {
    if (net.buses[b].is_root) continue;
    std::vector<Term> t;
    for (int l : net.lines_into(b)) t.push_back({sv.beta_fwd[l], 1.0});
    for (int l : net.lines_out_of(b)) t.push_back({sv.beta_bwd[l], 1.0});
    if (t.size() > 1) {
      p.add_constraint(step_name("parent", net.buses[b].id, sv.t), std::move(t),
                       RowSense::kLessEqual, 1.0);
    }
  }
}

// Adds hours * sum_j c_ld rho_j Pld_j to the objective (cost in $).
inline void shedding_cost(MilpProblem& p, const grid::Network& net, const StepVars& sv,
                          double hours = 1.0) {
  const double mult = net.demand_multiplier(sv.t);
  for (int b = 0; b < net.num_buses(); ++b) {
    if (sv.rho[b] < 0) continue;
    p.add_objective(sv.rho[b], hours * net.buses[b].shed_cost * net.buses[b].p_kw * mult);
  }
}

// Lazy cut forbidding one detected cycle: at least one of its lines open.
inline void add_cycle_cut(MilpProblem& p, const StepVars& sv, const std::vector<int>& cycle,
                          const std::string& name) {
  std::vector<Term> t;
  for (int l : cycle) t.push_back({sv.y[l], 1.0});
  p.add_constraint(name, std::move(t), RowSense::kGreaterEqual, 1.0);
}

// Every constraint family of one operating hour.
inline StepVars build_operation_step(MilpProblem& p, const grid::Network& net, int t,
                                     const StepOptions& opt, double hours_weight = 1.0) {
  StepVars sv = declare_step(p, net, t, opt);
  build_flow_balance(p, net, sv);
  build_capacity_and_voltage(p, net, sv, voltage_big_m(net, opt.v0), opt.v0);
  build_status_linking(p, net, sv);
  if (opt.radiality) build_radiality(p, net, sv);
  shedding_cost(p, net, sv, hours_weight);
  return sv;
}

// Solution values of one hour.
struct OperationState {
  int t = 0;
  std::vector<double> p, q, v, pg, qg, rho;
  std::vector<int> u, s, y;
  // Parent orientation of each connected line; meaningless when y = 1.
  std::vector<bool> parent_is_from;
};

inline OperationState extract_state(const grid::Network& net, const StepVars& sv,
                                    const std::vector<double>& x) {
  OperationState st;
  st.t = sv.t;
  auto val = [&](int j) { return j >= 0 ? x[j] : 0.0; };
  auto bit = [&](int j) { return j >= 0 ? static_cast<int>(std::lround(x[j])) : 0; };
  for (int l = 0; l < net.num_lines(); ++l) {
    st.p.push_back(val(sv.p[l]));
    st.q.push_back(val(sv.q[l]));
    st.u.push_back(bit(sv.u[l]));
    st.s.push_back(bit(sv.s[l]));
    st.y.push_back(bit(sv.y[l]));
    st.parent_is_from.push_back(sv.beta_fwd.empty() || val(sv.beta_fwd[l]) >= 0.5);
  }
  for (int b = 0; b < net.num_buses(); ++b) {
    st.v.push_back(val(sv.v[b]));
    st.pg.push_back(val(sv.pg[b]));
    st.qg.push_back(val(sv.qg[b]));
    st.rho.push_back(val(sv.rho[b]));
  }
  return st;
}

inline double state_shed_cost(const grid::Network& net, const OperationState& st) {
  const double mult = net.demand_multiplier(st.t);
  double c = 0.0;
  for (int b = 0; b < net.num_buses(); ++b) {
    c += net.buses[b].shed_cost * st.rho[b] * net.buses[b].p_kw * mult;
  }
  return c;
}

// Residual check of balance, capacity, voltage, DG, shed and status-linking
// rules computed straight from network data.  Returns the violated rules.
inline std::vector<std::string> verify_operation(const grid::Network& net,
                                                 const OperationState& st, double tol = 1e-6,
                                                 double v0 = 1.0) {
  std::vector<std::string> bad;
  const double mult = net.demand_multiplier(st.t);
  const double sb = net.bases.s_base_kw();
  auto scale = [](double ref) { return std::max(1.0, std::abs(ref)); };
  for (int b = 0; b < net.num_buses(); ++b) {
    const auto& bus = net.buses[b];
    double bp = st.pg[b] - (1.0 - st.rho[b]) * bus.p_kw * mult;
    double bq = st.qg[b] - (1.0 - st.rho[b]) * bus.q_kvar * mult;
    for (int l : net.lines_into(b)) {
      bp += st.p[l];
      bq += st.q[l];
    }
    for (int l : net.lines_out_of(b)) {
      bp -= st.p[l];
      bq -= st.q[l];
    }
    if (std::abs(bp) > tol * scale(bus.p_kw)) bad.push_back("active balance at bus " + bus.id);
    if (std::abs(bq) > tol * scale(bus.q_kvar)) bad.push_back("reactive balance at bus " + bus.id);
    if (st.v[b] < bus.v_min - tol || st.v[b] > bus.v_max + tol) {
      bad.push_back("voltage limit at bus " + bus.id);
    }
    if (st.pg[b] < -tol || st.pg[b] > net.dg_p_max(b) + tol * scale(net.dg_p_max(b)) ||
        st.qg[b] < -tol || st.qg[b] > net.dg_q_max(b) + tol * scale(net.dg_q_max(b))) {
      bad.push_back("DG limit at bus " + bus.id);
    }
    if (st.rho[b] < -tol || st.rho[b] > 1 + tol) bad.push_back("shed ratio at bus " + bus.id);
  }
  for (int l = 0; l < net.num_lines(); ++l) {
    const auto& ln = net.lines[l];
    const int expect_y = (st.u[l] || st.s[l]) ? 1 : 0;
    if (st.y[l] != expect_y) bad.push_back("status linking on line " + ln.id);
    if (!ln.has_switch && st.s[l] != 0) bad.push_back("switch operated on line " + ln.id);
    const double pcap = (1 - st.y[l]) * ln.p_max_kw;
    const double qcap = (1 - st.y[l]) * ln.q_max_kvar;
    if (st.p[l] < -tol * scale(ln.p_max_kw) || st.p[l] > pcap + tol * scale(ln.p_max_kw) ||
        st.q[l] < -tol * scale(ln.q_max_kvar) || st.q[l] > qcap + tol * scale(ln.q_max_kvar)) {
      bad.push_back("flow limit on line " + ln.id);
    }
    if (st.y[l] == 0) {
      const double expect = st.v[ln.from] - (ln.r_pu * st.p[l] + ln.x_pu * st.q[l]) / (v0 * sb);
      if (std::abs(st.v[ln.to] - expect) > tol) bad.push_back("voltage drop on line " + ln.id);
    }
  }
  return bad;
}

}  // namespace resilience::opf
