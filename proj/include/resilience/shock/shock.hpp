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
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "resilience/grid/network.hpp"
#include "resilience/milp/branch_and_bound.hpp"
#include "resilience/opf/operation.hpp"

namespace resilience::shock {

using milp::kInf;
using milp::MilpProblem;
using milp::RowSense;
using milp::Term;
using milp::VarKind;

struct DamageScenario {
  std::vector<int> u;  // 1 = line failed
  double weight_used = 0.0;
  double damage_cost = 0.0;  // shed cost plus epsilon * failures

  std::vector<int> failed_lines() const {
    std::vector<int> f;
    for (int l = 0; l < static_cast<int>(u.size()); ++l) {
      if (u[l]) f.push_back(l);
    }
    return f;
  }
};

// Multipliers of the inner shed-minimizing LP.  Line families are indexed by
// line and stay zero on lines outside the pre-event topology; bus families
// stay zero where the bus has no DG (lambda5/6) or no demand (lambda9).
struct DualCertificate {
  std::vector<double> mu1, mu2;                       // balance rows, free
  std::vector<double> lambda1, lambda2;               // flow limits
  std::vector<double> lambda3, lambda4;               // voltage drop, upper / lower
  std::vector<double> lambda5, lambda6;               // DG limits
  std::vector<double> lambda7, lambda8;               // voltage min / max
  std::vector<double> lambda9;                        // shed ratio <= 1
  std::vector<double> eta1, eta2, eta3, eta4;         // linearized products
};

struct ShockParams {
  double budget_bits = 10.0;
  double epsilon = 1e-3;
  // Bound on the multipliers that meet u in products; 0 picks
  // 10 * max_j c_j Pld_j.
  double m2 = 0.0;
  // Bounds on the flow-limit multipliers ($/kW and $/kVar); 0 picks 1.1 times
  // the largest marginal shed price, c_j and c_j Pld_j / Qld_j.
  double m_flow_p = 0.0;
  double m_flow_q = 0.0;
  int max_audit_rounds = 12;
  int t = 0;  // event hour
  milp::MilpOptions milp{0.0, 1e-7};
};

struct ShockModel {
  MilpProblem problem;
  double m2 = 0.0;
  double m_flow_p = 0.0;
  double m_flow_q = 0.0;
  double m1 = 0.0;
  std::vector<bool> in_topology;  // line closed before the event
  std::vector<int> u;
  std::vector<int> mu1, mu2, l1, l2, l3, l4, l5, l6, l7, l8, l9, e1, e2, e3, e4;
};

// Largest price of one kW (or kVar) of unserved demand: shedding it costs
// c_j per kW, or c_j Pld_j / Qld_j per kVar when reactive supply binds.
inline std::pair<double, double> marginal_shed_prices(const grid::Network& net) {
  double p = 0.0, q = 0.0;
  for (const auto& b : net.buses) {
    if (b.p_kw > 0) p = std::max(p, b.shed_cost);
    if (b.q_kvar > 0) q = std::max(q, b.shed_cost * b.p_kw / b.q_kvar);
  }
  return {std::max(p, 1.0), std::max(q, 1.0)};
}

inline double default_m2(const grid::Network& net, int t) {
  double m = 0.0;
  const double mult = net.demand_multiplier(t);
  for (const auto& b : net.buses) m = std::max(m, b.shed_cost * b.p_kw * mult);
  return 10.0 * std::max(m, 1.0);
}

// Single-level max problem over (u, mu, lambda, eta): the dual of the inner
// shed LP for damage u, with each product of u and a multiplier replaced by a
// big-M linearized eta, plus the budget row and epsilon * sum(u).
inline ShockModel build_shock_milp(const grid::Network& net, const std::vector<double>& weights,
                                   const ShockParams& prm) {
  if (static_cast<int>(weights.size()) != net.num_lines()) {
    throw std::invalid_argument("weight vector length does not match line count");
  }
  ShockModel m;
  MilpProblem& p = m.problem;
  p.set_objective_sense(milp::ObjSense::kMaximize);
  m.m2 = prm.m2 > 0 ? prm.m2 : default_m2(net, prm.t);
  m.m1 = opf::voltage_big_m(net);
  const double mult = net.demand_multiplier(prm.t);
  const double sb = net.bases.s_base_kw();
  const int nl = net.num_lines();
  const int nb = net.num_buses();
  const double M = m.m2;
  const auto [price_p, price_q] = marginal_shed_prices(net);
  m.m_flow_p = prm.m_flow_p > 0 ? prm.m_flow_p : 1.1 * price_p;
  m.m_flow_q = prm.m_flow_q > 0 ? prm.m_flow_q : 1.1 * price_q;
  const double MP = m.m_flow_p, MQ = m.m_flow_q;

  std::vector<Term> budget;
  for (int l = 0; l < nl; ++l) {
    const auto& ln = net.lines[l];
    const bool eligible = weights[l] <= prm.budget_bits;
    m.u.push_back(p.add_variable("u_" + ln.id, 0.0, eligible ? 1.0 : 0.0, VarKind::kBinary,
                                 prm.epsilon));
    if (eligible && weights[l] != 0) budget.push_back({m.u[l], weights[l]});
    m.in_topology.push_back(!ln.normally_open);
  }
  p.add_constraint("budget", std::move(budget), RowSense::kLessEqual, prm.budget_bits);

  for (int b = 0; b < nb; ++b) {
    const auto& bus = net.buses[b];
    m.mu1.push_back(p.add_variable("mu1_" + bus.id, -kInf, kInf, VarKind::kContinuous,
                                   bus.p_kw * mult));
    m.mu2.push_back(p.add_variable("mu2_" + bus.id, -kInf, kInf, VarKind::kContinuous,
                                   bus.q_kvar * mult));
    const bool dg = net.dg_p_max(b) > 0 || net.dg_q_max(b) > 0;
    m.l5.push_back(dg ? p.add_variable("l5_" + bus.id, 0, kInf, VarKind::kContinuous,
                                       -net.dg_p_max(b))
                      : -1);
    m.l6.push_back(dg ? p.add_variable("l6_" + bus.id, 0, kInf, VarKind::kContinuous,
                                       -net.dg_q_max(b))
                      : -1);
    m.l7.push_back(p.add_variable("l7_" + bus.id, 0, kInf, VarKind::kContinuous, bus.v_min));
    m.l8.push_back(p.add_variable("l8_" + bus.id, 0, kInf, VarKind::kContinuous, -bus.v_max));
    const bool load = bus.p_kw > 0 || bus.q_kvar > 0;
    m.l9.push_back(load ? p.add_variable("l9_" + bus.id, 0, kInf, VarKind::kContinuous, -1.0)
                        : -1);
  }
  for (int l = 0; l < nl; ++l) {
    const auto& ln = net.lines[l];
    if (!m.in_topology[l]) {
      for (auto* v : {&m.l1, &m.l2, &m.l3, &m.l4, &m.e1, &m.e2, &m.e3, &m.e4}) v->push_back(-1);
      continue;
    }
    m.l1.push_back(p.add_variable("l1_" + ln.id, 0, MP));
    m.l2.push_back(p.add_variable("l2_" + ln.id, 0, MQ));
    m.l3.push_back(p.add_variable("l3_" + ln.id, 0, M));
    m.l4.push_back(p.add_variable("l4_" + ln.id, 0, M));
    m.e1.push_back(p.add_variable("e1_" + ln.id, 0, kInf, VarKind::kContinuous, -ln.p_max_kw));
    m.e2.push_back(p.add_variable("e2_" + ln.id, 0, kInf, VarKind::kContinuous, -ln.q_max_kvar));
    m.e3.push_back(p.add_variable("e3_" + ln.id, 0, kInf, VarKind::kContinuous, -m.m1));
    m.e4.push_back(p.add_variable("e4_" + ln.id, 0, kInf, VarKind::kContinuous, -m.m1));
    // eta1 = (1 - u) lambda1 and eta2 likewise; eta3 = u lambda3, eta4 = u lambda4.
    p.add_constraint("e1_" + ln.id, {{m.e1[l], 1}, {m.l1[l], -1}, {m.u[l], MP}},
                     RowSense::kGreaterEqual, 0.0);
    p.add_constraint("e2_" + ln.id, {{m.e2[l], 1}, {m.l2[l], -1}, {m.u[l], MQ}},
                     RowSense::kGreaterEqual, 0.0);
    p.add_constraint("e3_" + ln.id, {{m.e3[l], 1}, {m.l3[l], -1}, {m.u[l], -M}},
                     RowSense::kGreaterEqual, -M);
    p.add_constraint("e4_" + ln.id, {{m.e4[l], 1}, {m.l4[l], -1}, {m.u[l], -M}},
                     RowSense::kGreaterEqual, -M);
    // Stationarity on P and Q of the line.
    const double a = ln.r_pu / sb;
    const double x = ln.x_pu / sb;
    p.add_constraint("dP_" + ln.id,
                     {{m.mu1[ln.to], 1}, {m.mu1[ln.from], -1}, {m.l1[l], -1}, {m.l3[l], -a},
                      {m.l4[l], a}},
                     RowSense::kLessEqual, 0.0);
    p.add_constraint("dQ_" + ln.id,
                     {{m.mu2[ln.to], 1}, {m.mu2[ln.from], -1}, {m.l2[l], -1}, {m.l3[l], -x},
                      {m.l4[l], x}},
                     RowSense::kLessEqual, 0.0);
  }
  for (int b = 0; b < nb; ++b) {
    const auto& bus = net.buses[b];
    std::vector<Term> dv{{m.l7[b], 1}, {m.l8[b], -1}};
    for (int l : net.lines_into(b)) {
      if (!m.in_topology[l]) continue;
      dv.push_back({m.l3[l], -1});
      dv.push_back({m.l4[l], 1});
    }
    for (int l : net.lines_out_of(b)) {
      if (!m.in_topology[l]) continue;
      dv.push_back({m.l3[l], 1});
      dv.push_back({m.l4[l], -1});
    }
    p.add_constraint("dV_" + bus.id, std::move(dv), RowSense::kEqual, 0.0);
    if (m.l5[b] >= 0) {
      p.add_constraint("dPg_" + bus.id, {{m.mu1[b], 1}, {m.l5[b], -1}}, RowSense::kLessEqual, 0);
      p.add_constraint("dQg_" + bus.id, {{m.mu2[b], 1}, {m.l6[b], -1}}, RowSense::kLessEqual, 0);
    }
    if (m.l9[b] >= 0) {
      const double pld = bus.p_kw * mult;
      const double qld = bus.q_kvar * mult;
      std::vector<Term> dr{{m.l9[b], -1}};
      if (pld != 0) dr.push_back({m.mu1[b], pld});
      if (qld != 0) dr.push_back({m.mu2[b], qld});
      p.add_constraint("drho_" + bus.id, std::move(dr), RowSense::kLessEqual,
                       bus.shed_cost * pld);
    }
  }
  return m;
}

inline DualCertificate extract_certificate(const ShockModel& m, const std::vector<double>& x) {
  auto take = [&](const std::vector<int>& idx) {
    std::vector<double> v;
    for (int j : idx) v.push_back(j >= 0 ? x[j] : 0.0);
    return v;
  };
  DualCertificate c;
  c.mu1 = take(m.mu1);
  c.mu2 = take(m.mu2);
  c.lambda1 = take(m.l1);
  c.lambda2 = take(m.l2);
  c.lambda3 = take(m.l3);
  c.lambda4 = take(m.l4);
  c.lambda5 = take(m.l5);
  c.lambda6 = take(m.l6);
  c.lambda7 = take(m.l7);
  c.lambda8 = take(m.l8);
  c.lambda9 = take(m.l9);
  c.eta1 = take(m.e1);
  c.eta2 = take(m.e2);
  c.eta3 = take(m.e3);
  c.eta4 = take(m.e4);
  return c;
}

// Dual objective of the inner LP for damage u, with the products evaluated
// exactly instead of through eta.
inline double dual_value(const grid::Network& net, const std::vector<int>& u,
                         const DualCertificate& c, int t = 0) {
  const double mult = net.demand_multiplier(t);
  const double m1 = opf::voltage_big_m(net);
  double d = 0.0;
  for (int b = 0; b < net.num_buses(); ++b) {
    const auto& bus = net.buses[b];
    d += bus.p_kw * mult * c.mu1[b] + bus.q_kvar * mult * c.mu2[b];
    d -= net.dg_p_max(b) * c.lambda5[b] + net.dg_q_max(b) * c.lambda6[b];
    d += bus.v_min * c.lambda7[b] - bus.v_max * c.lambda8[b] - c.lambda9[b];
  }
  for (int l = 0; l < net.num_lines(); ++l) {
    const auto& ln = net.lines[l];
    d -= (1 - u[l]) * (ln.p_max_kw * c.lambda1[l] + ln.q_max_kvar * c.lambda2[l]);
    d -= m1 * u[l] * (c.lambda3[l] + c.lambda4[l]);
  }
  return d;
}

// Largest violation of dual feasibility (stationarity and signs), measured in
// the units of each row.
inline double stationarity_residual(const grid::Network& net, const DualCertificate& c,
                                    int t = 0) {
  const double mult = net.demand_multiplier(t);
  const double sb = net.bases.s_base_kw();
  double r = 0.0;
  auto le0 = [&](double v) { r = std::max(r, v); };
  for (int l = 0; l < net.num_lines(); ++l) {
    const auto& ln = net.lines[l];
    if (ln.normally_open) continue;
    const double a = ln.r_pu / sb, x = ln.x_pu / sb;
    le0(c.mu1[ln.to] - c.mu1[ln.from] - c.lambda1[l] - a * c.lambda3[l] + a * c.lambda4[l]);
    le0(c.mu2[ln.to] - c.mu2[ln.from] - c.lambda2[l] - x * c.lambda3[l] + x * c.lambda4[l]);
  }
  for (int b = 0; b < net.num_buses(); ++b) {
    const auto& bus = net.buses[b];
    double dv = c.lambda7[b] - c.lambda8[b];
    for (int l : net.lines_into(b)) {
      if (!net.lines[l].normally_open) dv += c.lambda4[l] - c.lambda3[l];
    }
    for (int l : net.lines_out_of(b)) {
      if (!net.lines[l].normally_open) dv += c.lambda3[l] - c.lambda4[l];
    }
    r = std::max(r, std::abs(dv));
    if (net.dg_p_max(b) > 0 || net.dg_q_max(b) > 0) {
      le0(c.mu1[b] - c.lambda5[b]);
      le0(c.mu2[b] - c.lambda6[b]);
    }
    if (bus.p_kw > 0 || bus.q_kvar > 0) {
      const double pld = bus.p_kw * mult, qld = bus.q_kvar * mult;
      le0(pld * c.mu1[b] + qld * c.mu2[b] - c.lambda9[b] - bus.shed_cost * pld);
    }
  }
  for (const auto* fam : {&c.lambda1, &c.lambda2, &c.lambda3, &c.lambda4, &c.lambda5,
                          &c.lambda6, &c.lambda7, &c.lambda8, &c.lambda9, &c.eta1, &c.eta2,
                          &c.eta3, &c.eta4}) {
    for (double v : *fam) le0(-v);
  }
  return r;
}

struct InnerResponse {
  opf::OperationState state;
  double cost = 0.0;
};

class StageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The operator's response right after the event: minimum shed cost with the
// damaged lines out, switches untouched and normally open lines open.
inline InnerResponse inner_response_lp(const grid::Network& net, const std::vector<int>& u,
                                       int t = 0) {
  if (static_cast<int>(u.size()) != net.num_lines()) {
    throw std::invalid_argument("damage vector length does not match line count");
  }
  opf::StepOptions opt;
  opt.switches = opf::SwitchMode::kOpen;
  opt.radiality = false;
  opt.fixed_u = u;
  for (int l = 0; l < net.num_lines(); ++l) {
    if (net.lines[l].normally_open) opt.fixed_u[l] = 1;
  }
  MilpProblem p;
  const auto sv = opf::build_operation_step(p, net, t, opt);
  const auto sol = milp::solve_lp(p);
  if (sol.status != milp::SolveStatus::kOptimal) {
    throw StageFailure(std::string("inner response LP: ") + milp::to_string(sol.status));
  }
  InnerResponse r;
  r.state = opf::extract_state(net, sv, sol.x);
  r.state.u = u;
  r.cost = sol.objective;
  return r;
}

struct ShockResult {
  DamageScenario scenario;
  DualCertificate certificate;
  double objective = 0.0;     // MILP objective: dual value + epsilon * failures
  double dual_objective = 0.0;
  double m2 = 0.0;
  double m_flow_p = 0.0;
  double m_flow_q = 0.0;
  int audit_doublings = 0;
  bool bound_active = false;  // a product multiplier still sits at M2
  long nodes = 0;
};

// Solves the shock MILP; when any multiplier that meets u in a product sits at
// its M2 bound, M2 is doubled and the solve repeated.
// Lowers each flow-limit multiplier to what stationarity needs and cancels
// the common part of each voltage pair, then recomputes eta as the exact
// products.  The dual value is unchanged; what remains at a bound is needed.
inline void normalize_certificate(const grid::Network& net, const std::vector<int>& u,
                                  DualCertificate& c) {
  const double sb = net.bases.s_base_kw();
  for (int l = 0; l < net.num_lines(); ++l) {
    const auto& ln = net.lines[l];
    if (ln.normally_open) continue;
    const double common = std::min(c.lambda3[l], c.lambda4[l]);
    c.lambda3[l] -= common;
    c.lambda4[l] -= common;
    const double a = ln.r_pu / sb, x = ln.x_pu / sb;
    c.lambda1[l] = std::max(0.0, c.mu1[ln.to] - c.mu1[ln.from] - a * c.lambda3[l] +
                                     a * c.lambda4[l]);
    c.lambda2[l] = std::max(0.0, c.mu2[ln.to] - c.mu2[ln.from] - x * c.lambda3[l] +
                                     x * c.lambda4[l]);
    c.eta1[l] = (1 - u[l]) * c.lambda1[l];
    c.eta2[l] = (1 - u[l]) * c.lambda2[l];
    c.eta3[l] = u[l] * c.lambda3[l];
    c.eta4[l] = u[l] * c.lambda4[l];
  }
}

// Among the optimal multipliers for the chosen damage, the one with the
// smallest bound-scaled sum of the product multipliers (an LP with u fixed
// and the dual value held at its optimum).  Falls back to `x` if the LP
// fails.
inline DualCertificate least_certificate(const ShockModel& m, const std::vector<int>& u,
                                         double objective, const std::vector<double>& x) {
  MilpProblem p = m.problem;
  std::vector<Term> value;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.objective()[j] != 0) value.push_back({j, p.objective()[j]});
    p.set_objective(j, 0.0);
  }
  for (std::size_t l = 0; l < u.size(); ++l) p.set_bounds(m.u[l], u[l], u[l]);
  p.add_constraint("dual_value", std::move(value), RowSense::kGreaterEqual,
                   objective - p.objective_offset() - 1e-9 * std::max(1.0, std::abs(objective)));
  p.set_objective_sense(milp::ObjSense::kMinimize);
  for (std::size_t l = 0; l < u.size(); ++l) {
    if (m.l1[l] < 0) continue;
    p.set_objective(m.l1[l], 1.0 / m.m_flow_p);
    p.set_objective(m.l2[l], 1.0 / m.m_flow_q);
    p.set_objective(m.l3[l], 1.0 / m.m2);
    p.set_objective(m.l4[l], 1.0 / m.m2);
  }
  const auto sol = milp::solve_lp(p);
  return extract_certificate(m, sol.status == milp::SolveStatus::kOptimal ? sol.x : x);
}

// Solves the shock MILP.  Audit: after normalizing the certificate, any
// multiplier still at its bound means the bound may have cut off the true
// dual, so the bounds are doubled and the solve repeated.
inline ShockResult solve_shock(const grid::Network& net, const std::vector<double>& weights,
                               const ShockParams& prm) {
  ShockParams cur = prm;
  ShockResult res;
  for (int round = 0;; ++round) {
    const ShockModel m = build_shock_milp(net, weights, cur);
    const auto sol = milp::solve_milp(m.problem, cur.milp);
    if (!sol.ok()) throw StageFailure(std::string("shock MILP: ") + milp::to_string(sol.status));
    res.nodes += sol.nodes;
    res.m2 = m.m2;
    res.m_flow_p = m.m_flow_p;
    res.m_flow_q = m.m_flow_q;
    res.objective = sol.objective;
    res.scenario.u.assign(net.num_lines(), 0);
    res.scenario.weight_used = 0.0;
    for (int l = 0; l < net.num_lines(); ++l) {
      res.scenario.u[l] = sol.x[m.u[l]] > 0.5;
      if (res.scenario.u[l]) res.scenario.weight_used += weights[l];
    }
    res.certificate = least_certificate(m, res.scenario.u, sol.objective, sol.x);
    normalize_certificate(net, res.scenario.u, res.certificate);
    const auto& c = res.certificate;
    bool at_bound = false;
    for (int l = 0; l < net.num_lines(); ++l) {
      at_bound = at_bound || c.lambda1[l] >= m.m_flow_p * (1 - 1e-6) ||
                 c.lambda2[l] >= m.m_flow_q * (1 - 1e-6) ||
                 std::max(c.lambda3[l], c.lambda4[l]) >= m.m2 * (1 - 1e-6);
    }
    res.dual_objective = dual_value(net, res.scenario.u, res.certificate, cur.t);
    res.scenario.damage_cost = sol.objective;
    res.bound_active = at_bound;
    if (!at_bound || round >= cur.max_audit_rounds) break;
    cur.m2 = m.m2 * 2;
    cur.m_flow_p = m.m_flow_p * 2;
    cur.m_flow_q = m.m_flow_q * 2;
    ++res.audit_doublings;
  }
  return res;
}

struct OracleResult {
  DamageScenario scenario;
  double objective = 0.0;
  long subsets = 0;
};

// Enumerates every damage set within the budget, solving the inner LP for
// each, and returns the maximizer of shed cost + epsilon * failures.
inline OracleResult oracle_enumerate_shock(const grid::Network& net,
                                           const std::vector<double>& weights, double budget,
                                           double epsilon = 1e-3, int t = 0,
                                           int max_lines = 20) {
  std::vector<int> eligible;
  for (int l = 0; l < net.num_lines(); ++l) {
    if (weights[l] <= budget) eligible.push_back(l);
  }
  if (static_cast<int>(eligible.size()) > max_lines) {
    throw std::invalid_argument("enumeration oracle: " + std::to_string(eligible.size()) +
                                " eligible lines exceed the limit of " +
                                std::to_string(max_lines));
  }
  std::map<std::vector<int>, double> cache;  // keyed by damage on closed lines
  OracleResult best;
  best.objective = -kInf;
  std::vector<int> u(net.num_lines(), 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t k, double used) {
    if (k == eligible.size()) {
      std::vector<int> key = u;
      for (int l = 0; l < net.num_lines(); ++l) {
        if (net.lines[l].normally_open) key[l] = 0;
      }
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, inner_response_lp(net, key, t).cost).first;
      int n = 0;
      for (int v : u) n += v;
      const double obj = it->second + epsilon * n;
      ++best.subsets;
      if (obj > best.objective) {
        best.objective = obj;
        best.scenario.u = u;
        best.scenario.weight_used = used;
        best.scenario.damage_cost = obj;
      }
      return;
    }
    const int l = eligible[k];
    rec(k + 1, used);
    if (used + weights[l] <= budget + 1e-9) {
      u[l] = 1;
      rec(k + 1, used + weights[l]);
      u[l] = 0;
    }
  };
  rec(0, 0.0);
  return best;
}

}  // namespace resilience::shock
