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
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "resilience/grid/network.hpp"
#include "resilience/grid/radial.hpp"
#include "resilience/milp/branch_and_bound.hpp"
#include "resilience/opf/operation.hpp"
#include "resilience/pipeline/metrics.hpp"

namespace resilience::restoration {

using milp::MilpProblem;
using milp::RowSense;
using milp::Term;
using milp::VarKind;
using opf::OperationState;
using opf::SwitchMode;
using opf::TimeGrid;

class StageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not enough crew-hours before t_c to repair every failed line.
class RecoveryInfeasible : public StageFailure {
 public:
  RecoveryInfeasible(const std::string& what, int deficit)
      : StageFailure(what), deficit_crew_hours(deficit) {}
  int deficit_crew_hours;
};

struct RecoveryCosts {
  double c_rp = 560.0;  // $ per crew-hour
  double c_tr = 10.0;   // $ per crew dispatch
};

// Crew-hours are integral, so a line with E expected crew-hours needs
// ceil(E) of them.  Values within 1e-9 of an integer are snapped first.
inline int required_crew_hours(double e) {
  const double r = std::round(e);
  return static_cast<int>(std::abs(e - r) < 1e-9 ? r : std::ceil(e));
}

struct RepairSchedule {
  int t_r = 0;
  int crews = 0;                             // n
  std::vector<int> lines;                    // failed line indices
  std::vector<double> expected_hours;        // E[r] per failed line
  std::vector<std::vector<int>> r;           // [line][hour - t_r]
  std::vector<std::vector<int>> delta;
  std::vector<std::vector<int>> damaged;     // u per failed line and hour

  int hours() const { return r.empty() ? 0 : static_cast<int>(r.front().size()); }
  // First hour (absolute) with the line back in service, -1 if never.
  int restored_at(int k) const {
    for (int h = 0; h < hours(); ++h) {
      if (damaged[k][h] == 0) return t_r + h;
    }
    return -1;
  }
  int crew_hours(int k) const { return std::accumulate(r[k].begin(), r[k].end(), 0); }
  int total_crew_hours() const {
    int s = 0;
    for (std::size_t k = 0; k < r.size(); ++k) s += crew_hours(static_cast<int>(k));
    return s;
  }
  int total_travel() const {
    int s = 0;
    for (const auto& d : delta) s += std::accumulate(d.begin(), d.end(), 0);
    return s;
  }
};

// Independent integer check of the crew rules: crew limit per hour,
// completion before restoring, all lines repaired, travel indicators equal
// to crew increases, repaired lines staying repaired.
inline std::vector<std::string> verify_schedule(const RepairSchedule& s) {
  std::vector<std::string> bad;
  const int nk = static_cast<int>(s.lines.size());
  const int nh = s.hours();
  if (static_cast<int>(s.r.size()) != nk || static_cast<int>(s.delta.size()) != nk ||
      static_cast<int>(s.damaged.size()) != nk ||
      static_cast<int>(s.expected_hours.size()) != nk) {
    return {"schedule arrays do not match the failed-line count"};
  }
  for (int h = 0; h < nh; ++h) {
    int used = 0;
    for (int k = 0; k < nk; ++k) used += s.r[k][h];
    if (used > s.crews) {
      bad.push_back("hour " + std::to_string(s.t_r + h) + ": " + std::to_string(used) +
                    " crews assigned, " + std::to_string(s.crews) + " available");
    }
  }
  for (int k = 0; k < nk; ++k) {
    const std::string tag = "line #" + std::to_string(s.lines[k]);
    if (static_cast<int>(s.r[k].size()) != nh || static_cast<int>(s.delta[k].size()) != nh ||
        static_cast<int>(s.damaged[k].size()) != nh) {
      bad.push_back(tag + ": ragged hour arrays");
      continue;
    }
    const int need = required_crew_hours(s.expected_hours[k]);
    int cum = 0, prev = 0;
    for (int h = 0; h < nh; ++h) {
      const int r = s.r[k][h];
      cum += r;
      const std::string at = tag + " hour " + std::to_string(s.t_r + h);
      if (r < 0 || r > s.crews) bad.push_back(at + ": crew count out of range");
      if (s.delta[k][h] != (r > prev ? 1 : 0)) bad.push_back(at + ": travel flag inconsistent");
      if (s.damaged[k][h] != 0 && s.damaged[k][h] != 1) bad.push_back(at + ": status not 0/1");
      if (s.damaged[k][h] == 0 && cum < need) bad.push_back(at + ": restored before repair");
      if (h > 0 && s.damaged[k][h] > s.damaged[k][h - 1]) bad.push_back(at + ": fails again");
      prev = r;
    }
    if (cum < need) bad.push_back(tag + ": not repaired by the control time");
    if (nh > 0 && s.damaged[k][nh - 1] != 0) bad.push_back(tag + ": still out at the control time");
  }
  return bad;
}

struct StageResult {
  double objective = 0.0;
  double shed_cost = 0.0;
  double repair_cost = 0.0;
  double travel_cost = 0.0;
  std::vector<OperationState> states;  // one per hour, in time order
  std::vector<double> performance;     // percent per hour
  RepairSchedule schedule;             // recovery only
  std::vector<std::string> cut_log;    // lazily added cycle cuts
  long nodes = 0;
};

// ---------------------------------------------------------------------------
// One operating hour with fixed damage.

struct HourSolution {
  OperationState state;
  double cost = 0.0;
  long nodes = 0;
  std::vector<std::string> cut_log;
};

inline milp::MilpOptions hour_milp_options() {
  milp::MilpOptions o;
  o.rel_gap = 1e-9;
  o.abs_gap = 1e-6;
  return o;
}

// Minimum shed cost of hour t with damage u; switches and flows are chosen
// freely (or with switches frozen).  Any cycle in the energized topology is
// cut off and the hour re-solved.
inline HourSolution solve_operation_hour(const grid::Network& net, const std::vector<int>& u,
                                         int t, SwitchMode mode) {
  opf::StepOptions opt;
  opt.switches = mode;
  opt.fixed_u = u;
  MilpProblem p;
  const auto sv = opf::build_operation_step(p, net, t, opt);
  HourSolution out;
  for (int round = 0;; ++round) {
    const auto sol = milp::solve_milp(p, hour_milp_options());
    out.nodes += sol.nodes;
    if (!sol.ok()) {
      throw StageFailure("hour " + std::to_string(t) + " operation MILP: " +
                         milp::to_string(sol.status));
    }
    out.state = opf::extract_state(net, sv, sol.x);
    std::vector<bool> closed(net.num_lines());
    for (int l = 0; l < net.num_lines(); ++l) closed[l] = out.state.y[l] == 0;
    const auto rep = grid::check_radial(net, closed, out.state.parent_is_from);
    if (rep.radial) {
      out.cost = opf::state_shed_cost(net, out.state);
      return out;
    }
    if (rep.cycles.empty() || round > 4 * net.num_lines()) {
      throw StageFailure("hour " + std::to_string(t) + " topology not radial: " +
                         rep.violations.front());
    }
    for (const auto& cyc : rep.cycles) {
      const std::string name = "cycle" + std::to_string(out.cut_log.size()) + "_t" +
                               std::to_string(t);
      opf::add_cycle_cut(p, sv, cyc, name);
      std::string msg = "hour " + std::to_string(t) + ": cut cycle";
      for (int l : cyc) msg += " " + net.lines[l].id;
      out.cut_log.push_back(msg);
    }
  }
}

// Memo of hour solutions keyed by damage, demand multiplier and switch mode.
// Safe to share between threads; entries are never moved or erased.
class HourCache {
 public:
  explicit HourCache(const grid::Network& net) : net_(net) {}

  const HourSolution& get(const std::vector<int>& u, int t, SwitchMode mode) {
    Key key{u, net_.demand_multiplier(t), static_cast<int>(mode)};
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    HourSolution h = solve_operation_hour(net_, u, t, mode);
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, fresh] = memo_.emplace(std::move(key), std::move(h));
    solves_ += fresh;
    return it->second;
  }
  long solves() const {
    std::lock_guard<std::mutex> lock(mu_);
    return solves_;
  }

 private:
  using Key = std::tuple<std::vector<int>, double, int>;
  const grid::Network& net_;
  mutable std::mutex mu_;
  std::map<Key, HourSolution> memo_;
  long solves_ = 0;
};

// Copy of a cached hour relabelled to hour t.
inline OperationState at_hour(const HourSolution& h, int t) {
  OperationState st = h.state;
  st.t = t;
  return st;
}

// ---------------------------------------------------------------------------
// Self-healing: hours t_e + 1 .. t_r - 1 with the shock damage in place.

inline StageResult solve_self_healing(const grid::Network& net, const std::vector<int>& u,
                                      const TimeGrid& grid, SwitchMode mode = SwitchMode::kFree,
                                      HourCache* cache = nullptr) {
  if (!grid.valid()) throw std::invalid_argument("time grid needs t_e < t_r < t_c");
  if (static_cast<int>(u.size()) != net.num_lines()) {
    throw std::invalid_argument("damage vector length does not match line count");
  }
  HourCache local(net);
  HourCache& hc = cache ? *cache : local;
  StageResult res;
  for (int t = grid.t_e + 1; t < grid.t_r; ++t) {
    const HourSolution& h = hc.get(u, t, mode);
    res.states.push_back(at_hour(h, t));
    res.shed_cost += h.cost;
    res.performance.push_back(pipeline::performance(net, h.state.rho, t));
    res.nodes += h.nodes;
    for (const auto& m : h.cut_log) res.cut_log.push_back(m);
  }
  res.objective = res.shed_cost;
  return res;
}

// ---------------------------------------------------------------------------
// Recovery: crew scheduling rows shared by the full and decomposed models.

struct ScheduleVars {
  std::vector<std::vector<int>> r, delta, u;  // [failed line][hour - t_r]
};

// Adds, for each failed line k and recovery hour t:
//   sum_k r_kt <= n
//   sum_{m<=t} r_km >= E_k (1 - u_kt)           (restored only once repaired)
//   u_kt <= u_k,t-1,  u_k,t_c = 0
//   r_k,t-1 - r_kt <= M3 (1 - delta_kt) - eps2  (delta = 1 only on an increase)
//   r_k,t-1 - r_kt >= -M3 delta_kt              (an increase needs delta = 1)
//   sum_t r_kt >= E_k
// with r_k,t_r-1 = 0, M3 = n + 1, eps2 = 1/2, and c_rp r + c_tr delta in the
// objective.  `u_var(k, t)` supplies an existing status variable or -1.
inline ScheduleVars add_repair_schedule(MilpProblem& p, const grid::Network& net,
                                        const std::vector<int>& failed,
                                        const std::vector<double>& expected, const TimeGrid& g,
                                        int n, const RecoveryCosts& c,
                                        const std::function<int(int, int)>& u_var) {
  const int nk = static_cast<int>(failed.size());
  const int nh = g.recovery_hours();
  const double m3 = n + 1.0;
  const double eps2 = 0.5;
  ScheduleVars sv;
  sv.r.assign(nk, std::vector<int>(nh));
  sv.delta = sv.u = sv.r;
  for (int k = 0; k < nk; ++k) {
    const auto& id = net.lines[failed[k]].id;
    for (int h = 0; h < nh; ++h) {
      const int t = g.t_r + h;
      sv.r[k][h] = p.add_variable(opf::step_name("r", id, t), 0.0, n, VarKind::kInteger, c.c_rp);
      sv.delta[k][h] =
          p.add_variable(opf::step_name("delta", id, t), 0.0, 1.0, VarKind::kBinary, c.c_tr);
      int uv = u_var(k, t);
      if (uv < 0) uv = p.add_variable(opf::step_name("u", id, t), 0.0, 1.0, VarKind::kBinary);
      sv.u[k][h] = uv;
    }
    p.set_bounds(sv.u[k][nh - 1], 0.0, 0.0);
  }
  for (int h = 0; h < nh; ++h) {
    const int t = g.t_r + h;
    std::vector<Term> crew;
    for (int k = 0; k < nk; ++k) crew.push_back({sv.r[k][h], 1.0});
    if (!crew.empty()) {
      p.add_constraint("crews_t" + std::to_string(t), std::move(crew), RowSense::kLessEqual, n);
    }
  }
  for (int k = 0; k < nk; ++k) {
    const auto& id = net.lines[failed[k]].id;
    const double e = expected[k];
    std::vector<Term> cum;
    for (int h = 0; h < nh; ++h) {
      const int t = g.t_r + h;
      cum.push_back({sv.r[k][h], 1.0});
      std::vector<Term> done = cum;
      done.push_back({sv.u[k][h], e});
      p.add_constraint(opf::step_name("done", id, t), std::move(done), RowSense::kGreaterEqual, e);
      if (h > 0) {
        p.add_constraint(opf::step_name("mono", id, t),
                         {{sv.u[k][h], 1.0}, {sv.u[k][h - 1], -1.0}}, RowSense::kLessEqual, 0.0);
      }
      std::vector<Term> tr{{sv.r[k][h], -1.0}, {sv.delta[k][h], m3}};
      if (h > 0) tr.push_back({sv.r[k][h - 1], 1.0});
      p.add_constraint(opf::step_name("travelA", id, t), tr, RowSense::kLessEqual, m3 - eps2);
      p.add_constraint(opf::step_name("travelB", id, t), std::move(tr), RowSense::kGreaterEqual,
                       0.0);
    }
    p.add_constraint("repaired_" + id, std::move(cum), RowSense::kGreaterEqual, e);
  }
  return sv;
}

inline void check_recovery_inputs(const grid::Network& net, const std::vector<int>& failed,
                                  const std::vector<double>& expected, const TimeGrid& g, int n) {
  if (!g.valid()) throw std::invalid_argument("time grid needs t_e < t_r < t_c");
  if (failed.size() != expected.size()) {
    throw std::invalid_argument("one expected repair time per failed line is required");
  }
  if (n < 0) throw std::invalid_argument("crew count must be >= 0");
  for (std::size_t k = 0; k < failed.size(); ++k) {
    if (failed[k] < 0 || failed[k] >= net.num_lines()) {
      throw std::invalid_argument("failed line index out of range");
    }
    if (!(expected[k] > 0.0)) throw std::invalid_argument("expected repair time must be > 0");
  }
  long need = 0;
  for (double e : expected) need += required_crew_hours(e);
  const long have = static_cast<long>(n) * g.recovery_hours();
  if (need > have) {
    throw RecoveryInfeasible("recovery infeasible: " + std::to_string(need) +
                                 " crew-hours needed, " + std::to_string(have) +
                                 " available before the control time (deficit " +
                                 std::to_string(need - have) + ")",
                             static_cast<int>(need - have));
  }
}

inline RepairSchedule extract_schedule(const ScheduleVars& sv, const std::vector<int>& failed,
                                       const std::vector<double>& expected, const TimeGrid& g,
                                       int n, const std::vector<double>& x) {
  RepairSchedule s;
  s.t_r = g.t_r;
  s.crews = n;
  s.lines = failed;
  s.expected_hours = expected;
  auto bits = [&](const std::vector<std::vector<int>>& idx) {
    std::vector<std::vector<int>> out(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (int j : idx[k]) out[k].push_back(static_cast<int>(std::lround(x[j])));
    }
    return out;
  };
  s.r = bits(sv.r);
  s.delta = bits(sv.delta);
  s.damaged = bits(sv.u);
  return s;
}

// Damage vector of one recovery hour: shock damage with the repaired lines
// restored.
inline std::vector<int> damage_at(const std::vector<int>& u0, const RepairSchedule& s, int h) {
  std::vector<int> u = u0;
  for (std::size_t k = 0; k < s.lines.size(); ++k) u[s.lines[k]] = s.damaged[k][h];
  return u;
}

// ---------------------------------------------------------------------------
// Full recovery MILP: scheduling rows plus one operation step per hour, with
// the failed lines' status variables shared between them.

struct RecoveryModel {
  MilpProblem problem;
  std::vector<int> failed;
  std::vector<double> expected;
  std::vector<int> damage;
  TimeGrid grid;
  int crews = 0;
  RecoveryCosts costs;
  ScheduleVars schedule;
  std::vector<opf::StepVars> steps;
};

inline RecoveryModel build_recovery_milp(const grid::Network& net, const std::vector<int>& damage,
                                         const std::vector<double>& expected,
                                         const TimeGrid& g, int n, const RecoveryCosts& c = {},
                                         SwitchMode mode = SwitchMode::kFree) {
  if (static_cast<int>(damage.size()) != net.num_lines()) {
    throw std::invalid_argument("damage vector length does not match line count");
  }
  RecoveryModel m;
  for (int l = 0; l < net.num_lines(); ++l) {
    if (damage[l]) m.failed.push_back(l);
  }
  check_recovery_inputs(net, m.failed, expected, g, n);
  m.expected = expected;
  m.damage = damage;
  m.grid = g;
  m.crews = n;
  m.costs = c;
  for (int t = g.t_r; t <= g.t_c; ++t) {
    opf::StepOptions opt;
    opt.switches = mode;
    auto sv = opf::build_operation_step(m.problem, net, t, opt);
    for (int l = 0; l < net.num_lines(); ++l) {
      if (!damage[l]) m.problem.set_bounds(sv.u[l], 0.0, 0.0);
    }
    m.steps.push_back(std::move(sv));
  }
  m.schedule = add_repair_schedule(m.problem, net, m.failed, expected, g, n, c, [&](int k, int t) {
    return m.steps[t - g.t_r].u[m.failed[k]];
  });
  return m;
}

// Recovery trajectory bookkeeping shared by both solution paths.
inline void finish_recovery(const grid::Network& net, StageResult& res, const RecoveryCosts& c) {
  res.repair_cost = c.c_rp * res.schedule.total_crew_hours();
  res.travel_cost = c.c_tr * res.schedule.total_travel();
  res.shed_cost = 0.0;
  res.performance.clear();
  for (const auto& st : res.states) {
    res.shed_cost += opf::state_shed_cost(net, st);
    res.performance.push_back(pipeline::performance(net, st.rho, st.t));
  }
  res.objective = res.shed_cost + res.repair_cost + res.travel_cost;
}

inline StageResult solve_recovery(const grid::Network& net, RecoveryModel& m,
                                  milp::MilpOptions opt = hour_milp_options()) {
  StageResult res;
  for (int round = 0;; ++round) {
    const auto sol = milp::solve_milp(m.problem, opt);
    res.nodes += sol.nodes;
    if (!sol.ok()) throw StageFailure(std::string("recovery MILP: ") + milp::to_string(sol.status));
    res.states.clear();
    bool cut = false;
    for (const auto& sv : m.steps) {
      auto st = opf::extract_state(net, sv, sol.x);
      std::vector<bool> closed(net.num_lines());
      for (int l = 0; l < net.num_lines(); ++l) closed[l] = st.y[l] == 0;
      const auto rep = grid::check_radial(net, closed, st.parent_is_from);
      if (!rep.radial && rep.cycles.empty()) {
        throw StageFailure("hour " + std::to_string(sv.t) + " topology not radial: " +
                           rep.violations.front());
      }
      for (const auto& cyc : rep.cycles) {
        const std::string name = "cycle" + std::to_string(res.cut_log.size()) + "_t" +
                                 std::to_string(sv.t);
        opf::add_cycle_cut(m.problem, sv, cyc, name);
        std::string msg = "hour " + std::to_string(sv.t) + ": cut cycle";
        for (int l : cyc) msg += " " + net.lines[l].id;
        res.cut_log.push_back(msg);
        cut = true;
      }
      res.states.push_back(std::move(st));
    }
    if (cut && round < 4 * net.num_lines()) continue;
    if (cut) throw StageFailure("recovery MILP: cycle cuts did not converge");
    res.schedule = extract_schedule(m.schedule, m.failed, m.expected, m.grid, m.crews, sol.x);
    break;
  }
  finish_recovery(net, res, m.costs);
  return res;
}

// ---------------------------------------------------------------------------
// Decomposed recovery.  Hours interact only through the line statuses, so
// the operation part of an hour reduces to shed(S, t): the least shed cost
// with the subset S of failed lines still out.  The schedule MILP picks one
// subset per hour through weights w_St with sum_S w_St = 1 and
// sum_{S ni k} w_St = u_kt, which are integral whenever u is.

inline constexpr int kMaxDecomposedLines = 10;

struct ShedTable {
  std::vector<int> failed;
  // [hour - t_r][subset mask] -> hour solution
  std::vector<std::vector<const HourSolution*>> hour;
};

inline ShedTable build_shed_table(const grid::Network& net, const std::vector<int>& damage,
                                  const std::vector<int>& failed, const TimeGrid& g,
                                  SwitchMode mode, HourCache& cache) {
  ShedTable tab;
  tab.failed = failed;
  const int nk = static_cast<int>(failed.size());
  const std::uint32_t subsets = 1u << nk;
  for (int t = g.t_r; t <= g.t_c; ++t) {
    std::vector<const HourSolution*> row(subsets);
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      std::vector<int> u = damage;
      for (int k = 0; k < nk; ++k) u[failed[k]] = (mask >> k) & 1u;
      row[mask] = &cache.get(u, t, mode);
    }
    tab.hour.push_back(std::move(row));
  }
  return tab;
}

// Crew assignment that works through the lines in `order`, each hour giving
// every crew to the earliest unfinished line that can use it.  With `split`
// false a finishing line's spare crews wait for the next hour instead.
inline RepairSchedule list_schedule(const std::vector<int>& failed,
                                    const std::vector<double>& expected, const TimeGrid& g,
                                    int n, const std::vector<int>& order, bool split) {
  const int nk = static_cast<int>(failed.size());
  const int nh = g.recovery_hours();
  RepairSchedule s;
  s.t_r = g.t_r;
  s.crews = n;
  s.lines = failed;
  s.expected_hours = expected;
  s.r.assign(nk, std::vector<int>(nh, 0));
  s.delta = s.r;
  s.damaged.assign(nk, std::vector<int>(nh, 1));
  std::vector<int> left(nk);
  for (int k = 0; k < nk; ++k) left[k] = required_crew_hours(expected[k]);
  for (int h = 0; h < nh; ++h) {
    int avail = n;
    for (int k : order) {
      if (avail == 0) break;
      if (left[k] == 0) continue;
      const int give = std::min(avail, left[k]);
      s.r[k][h] = give;
      left[k] -= give;
      avail -= give;
      if (!split) break;
    }
    for (int k = 0; k < nk; ++k) {
      s.delta[k][h] = s.r[k][h] > (h > 0 ? s.r[k][h - 1] : 0) ? 1 : 0;
      s.damaged[k][h] = left[k] == 0 ? 0 : 1;
    }
  }
  return s;
}

inline double schedule_cost(const ShedTable& tab, const RepairSchedule& s,
                            const RecoveryCosts& c) {
  double cost = c.c_rp * s.total_crew_hours() + c.c_tr * s.total_travel();
  for (int h = 0; h < s.hours(); ++h) {
    std::uint32_t mask = 0;
    for (std::size_t k = 0; k < s.lines.size(); ++k) {
      if (s.damaged[k][h]) mask |= 1u << k;
    }
    cost += tab.hour[h][mask]->cost;
  }
  return cost;
}

// Best list schedule over all line orders (or, for many lines, over a
// pairwise-swap neighbourhood of the benefit-per-crew-hour order).
inline RepairSchedule heuristic_schedule(const ShedTable& tab, const std::vector<double>& expected,
                                         const TimeGrid& g, int n, const RecoveryCosts& c) {
  const auto& failed = tab.failed;
  const int nk = static_cast<int>(failed.size());
  RepairSchedule best;
  double best_cost = milp::kInf;
  auto consider = [&](const std::vector<int>& order) {
    for (bool split : {true, false}) {
      auto s = list_schedule(failed, expected, g, n, order, split);
      if (!verify_schedule(s).empty()) continue;
      const double v = schedule_cost(tab, s, c);
      if (v < best_cost) {
        best_cost = v;
        best = std::move(s);
      }
    }
  };
  std::vector<int> order(nk);
  std::iota(order.begin(), order.end(), 0);
  if (nk <= 6) {
    do consider(order);
    while (std::next_permutation(order.begin(), order.end()));
  } else {
    const std::uint32_t all = (1u << nk) - 1;
    std::vector<double> gain(nk);
    for (int k = 0; k < nk; ++k) {
      gain[k] = (tab.hour[0][all]->cost - tab.hour[0][all & ~(1u << k)]->cost) /
                required_crew_hours(expected[k]);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return gain[a] > gain[b]; });
    consider(order);
    for (int i = 0; i < nk; ++i) {
      for (int j = i + 1; j < nk; ++j) {
        auto o = order;
        std::swap(o[i], o[j]);
        consider(o);
      }
    }
  }
  return best;
}

struct DecomposedRecovery {
  MilpProblem problem;
  ScheduleVars schedule;
  std::vector<std::vector<int>> weight;  // [hour - t_r][mask]
};

inline DecomposedRecovery build_scheduling_milp(const grid::Network& net, const ShedTable& tab,
                                                const std::vector<double>& expected,
                                                const TimeGrid& g, int n,
                                                const RecoveryCosts& c) {
  DecomposedRecovery d;
  const auto& failed = tab.failed;
  const int nk = static_cast<int>(failed.size());
  d.schedule = add_repair_schedule(d.problem, net, failed, expected, g, n, c,
                                   [](int, int) { return -1; });
  const std::uint32_t subsets = 1u << nk;
  for (int h = 0; h < g.recovery_hours(); ++h) {
    const int t = g.t_r + h;
    std::vector<int> w(subsets);
    std::vector<Term> sum;
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      w[mask] = d.problem.add_variable("w" + std::to_string(mask) + "_t" + std::to_string(t), 0.0,
                                       1.0, VarKind::kContinuous, tab.hour[h][mask]->cost);
      sum.push_back({w[mask], 1.0});
    }
    d.problem.add_constraint("wsum_t" + std::to_string(t), std::move(sum), RowSense::kEqual, 1.0);
    for (int k = 0; k < nk; ++k) {
      std::vector<Term> marg{{d.schedule.u[k][h], -1.0}};
      for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        if ((mask >> k) & 1u) marg.push_back({w[mask], 1.0});
      }
      d.problem.add_constraint(opf::step_name("wmarg", net.lines[failed[k]].id, t),
                               std::move(marg), RowSense::kEqual, 0.0);
    }
    d.weight.push_back(std::move(w));
  }
  return d;
}

// Point of the scheduling MILP matching a given schedule.
inline std::vector<double> scheduling_point(const DecomposedRecovery& d, const RepairSchedule& s) {
  std::vector<double> x(d.problem.num_vars(), 0.0);
  for (std::size_t k = 0; k < s.lines.size(); ++k) {
    for (int h = 0; h < s.hours(); ++h) {
      x[d.schedule.r[k][h]] = s.r[k][h];
      x[d.schedule.delta[k][h]] = s.delta[k][h];
      x[d.schedule.u[k][h]] = s.damaged[k][h];
    }
  }
  for (int h = 0; h < s.hours(); ++h) {
    std::uint32_t mask = 0;
    for (std::size_t k = 0; k < s.lines.size(); ++k) {
      if (s.damaged[k][h]) mask |= 1u << k;
    }
    x[d.weight[h][mask]] = 1.0;
  }
  return x;
}

// True when repairing a line never raises the shed cost of any hour, so a
// repaired line is best put back in service at once.
inline bool shed_is_monotone(const ShedTable& tab, double tol = 1e-6) {
  const int nk = static_cast<int>(tab.failed.size());
  for (const auto& row : tab.hour) {
    for (std::uint32_t mask = 0; mask < row.size(); ++mask) {
      for (int k = 0; k < nk; ++k) {
        if (((mask >> k) & 1u) &&
            row[mask & ~(1u << k)]->cost > row[mask]->cost + tol * std::max(1.0, row[mask]->cost)) {
          return false;
        }
      }
    }
  }
  return true;
}

struct ScheduleSearch {
  RepairSchedule schedule;
  double cost = milp::kInf;
  long expansions = 0;
};

// Exact shortest-path search over the schedule model.  A node is (hour,
// remaining crew-hours, crews of the previous hour, restored set); an hour's
// move assigns crews, restores lines and pays shed + c_rp r + c_tr delta.
// Assigning a line more crew-hours than it still needs never pays when
// c_rp, c_tr >= 0 (trimming the surplus at its last hour keeps every row),
// so moves stay within the remaining need.  The bound adds c_rp times the
// remaining work, one dispatch per idle unfinished line, and for every later
// hour the cheapest shed set whose complement the crews could have finished
// by then.  `upper` prunes nodes that cannot beat a known schedule.
inline ScheduleSearch search_schedule(const ShedTable& tab, const std::vector<double>& expected,
                                      const TimeGrid& g, int n, const RecoveryCosts& c,
                                      double upper = milp::kInf) {
  const int nk = static_cast<int>(tab.failed.size());
  const int nh = g.recovery_hours();
  const std::uint32_t all = (1u << nk) - 1;
  const bool monotone = shed_is_monotone(tab);
  std::vector<int> need(nk);
  for (int k = 0; k < nk; ++k) need[k] = required_crew_hours(expected[k]);
  std::vector<double> tail(nh + 1, 0.0);  // shed with nothing out, hours h..end
  for (int h = nh - 1; h >= 0; --h) tail[h] = tail[h + 1] + tab.hour[h][0]->cost;
  bool constant_hours = true;
  for (int h = 1; h < nh; ++h) {
    for (std::uint32_t m = 0; m <= all; ++m) {
      constant_hours = constant_hours && tab.hour[h][m]->cost == tab.hour[0][m]->cost;
    }
  }

  struct Node {
    int h;
    std::vector<int> w, pr;
    std::uint32_t out;  // failed lines not yet back in service
  };
  auto key_of = [&](const Node& s) {
    std::string key;
    key.reserve(4 * nk + 6);
    auto put = [&](int v) {
      key.push_back(static_cast<char>(v & 0xff));
      key.push_back(static_cast<char>((v >> 8) & 0xff));
    };
    put(s.h);
    put(static_cast<int>(s.out));
    for (int v : s.w) put(v);
    for (int v : s.pr) put(v);
    return key;
  };
  auto bound = [&](const Node& s) {
    int left = 0;
    double b = 0.0;
    for (int k = 0; k < nk; ++k) {
      left += s.w[k];
      if (s.w[k] > 0 && s.pr[k] == 0) b += c.c_tr;
      if (s.w[k] > n * (nh - s.h)) return milp::kInf;
    }
    if (left > n * (nh - s.h)) return milp::kInf;
    b += c.c_rp * left;
    // Subsets D of the lines still out, restorable once the crews have put
    // in work(D) more hours.
    std::vector<std::pair<int, std::uint32_t>> done;
    for (std::uint32_t d = s.out;; d = (d - 1) & s.out) {
      int work = 0;
      for (int k = 0; k < nk; ++k) {
        if ((d >> k) & 1u) work += s.w[k];
      }
      done.push_back({work, d});
      if (d == 0) break;
    }
    std::sort(done.begin(), done.end());
    if (constant_hours) {
      double best = milp::kInf;
      std::size_t i = 0;
      for (int j = 0; s.h + j < nh; ++j) {
        while (i < done.size() && done[i].first <= n * (j + 1)) {
          best = std::min(best, tab.hour[0][s.out & ~done[i].second]->cost);
          ++i;
        }
        if (i == done.size() && best == tab.hour[0][0]->cost) {
          b += tail[s.h + j];
          break;
        }
        b += best;
      }
    } else {
      for (int j = 0; s.h + j < nh; ++j) {
        double best = milp::kInf;
        for (const auto& [work, d] : done) {
          if (work > n * (j + 1)) break;
          best = std::min(best, tab.hour[s.h + j][s.out & ~d]->cost);
        }
        b += best;
      }
    }
    return b;
  };

  struct Entry {
    Node node;
    double gcost;
    long parent;
    std::vector<int> r;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, double> best_g;
  using Item = std::pair<double, long>;  // f, entry id
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const double slack = 1e-9 * std::max(1.0, std::abs(upper));

  Node start{0, need, std::vector<int>(nk, 0), all};
  entries.push_back({start, 0.0, -1, {}});
  best_g[key_of(start)] = 0.0;
  open.push({bound(start), 0});

  ScheduleSearch out;
  long goal = -1;
  std::vector<int> r(nk);
  while (!open.empty()) {
    const auto [f, id] = open.top();
    open.pop();
    const Entry cur = entries[id];
    if (cur.node.h == nh) {
      goal = id;
      out.cost = cur.gcost;
      break;
    }
    if (cur.gcost > best_g[key_of(cur.node)]) continue;
    ++out.expansions;
    const Node& s = cur.node;
    // Enumerate crew vectors with sum <= n and r_k <= w_k.
    std::function<void(int, int)> assign = [&](int k, int avail) {
      if (k < nk) {
        const int top = std::min(avail, s.w[k]);
        for (int v = 0; v <= top; ++v) {
          r[k] = v;
          assign(k + 1, avail - v);
        }
        return;
      }
      Node nx{s.h + 1, s.w, r, s.out};
      double step = 0.0;
      std::uint32_t fresh = 0;  // repaired lines still out of service
      for (int j = 0; j < nk; ++j) {
        nx.w[j] -= r[j];
        step += c.c_rp * r[j] + (r[j] > s.pr[j] ? c.c_tr : 0.0);
        if (nx.w[j] == 0 && ((s.out >> j) & 1u)) fresh |= 1u << j;
      }
      auto push = [&](std::uint32_t restore) {
        Node m = nx;
        m.out = s.out & ~restore;
        if (nx.h == nh && m.out != 0) return;
        double gc = cur.gcost + step + tab.hour[s.h][m.out]->cost;
        if (m.out == 0) {
          // Nothing left to do: the rest of the window is fixed.
          gc += tail[nx.h];
          m.h = nh;
          std::fill(m.w.begin(), m.w.end(), 0);
          std::fill(m.pr.begin(), m.pr.end(), 0);
        }
        const double lb = m.h == nh ? 0.0 : bound(m);
        if (gc + lb > upper + slack) return;
        const std::string key = key_of(m);
        auto it = best_g.find(key);
        if (it != best_g.end() && it->second <= gc) return;
        best_g[key] = gc;
        entries.push_back({std::move(m), gc, id, r});
        open.push({gc + lb, static_cast<long>(entries.size()) - 1});
      };
      if (monotone) {
        push(fresh);
      } else {
        for (std::uint32_t sub = fresh;; sub = (sub - 1) & fresh) {
          push(sub);
          if (sub == 0) break;
        }
      }
    };
    assign(0, n);
  }
  if (goal < 0) return out;

  std::vector<long> path;
  for (long e = goal; entries[e].parent >= 0; e = entries[e].parent) path.push_back(e);
  std::reverse(path.begin(), path.end());
  RepairSchedule& sch = out.schedule;
  sch.t_r = g.t_r;
  sch.crews = n;
  sch.lines = tab.failed;
  sch.expected_hours = expected;
  sch.r.assign(nk, std::vector<int>(nh, 0));
  sch.delta = sch.r;
  sch.damaged.assign(nk, std::vector<int>(nh, 0));
  int h = 0;
  for (long e : path) {
    const std::uint32_t o = entries[e].node.out;
    for (int k = 0; k < nk; ++k) {
      sch.r[k][h] = entries[e].r[k];
      sch.damaged[k][h] = (o >> k) & 1u;
    }
    ++h;
  }
  for (int k = 0; k < nk; ++k) {
    for (int t = 0; t < nh; ++t) {
      sch.delta[k][t] = sch.r[k][t] > (t > 0 ? sch.r[k][t - 1] : 0) ? 1 : 0;
    }
  }
  return out;
}

enum class ScheduleSolver {
  kSearch,  // exact shortest-path search
  kMilp,    // branch and bound on the scheduling MILP
};

struct RecoveryOptions {
  SwitchMode switches = SwitchMode::kFree;
  ScheduleSolver solver = ScheduleSolver::kSearch;
  milp::MilpOptions milp = hour_milp_options();
};

// Recovery with the operation of each hour taken from the shed table.  The
// schedule comes from the exact search (seeded with the best list schedule as
// an upper bound) or from the scheduling MILP warm-started the same way.
inline StageResult solve_recovery_decomposed(const grid::Network& net,
                                             const std::vector<int>& damage,
                                             const std::vector<double>& expected,
                                             const TimeGrid& g, int n, const RecoveryCosts& c = {},
                                             const RecoveryOptions& opt = {},
                                             HourCache* cache = nullptr) {
  if (static_cast<int>(damage.size()) != net.num_lines()) {
    throw std::invalid_argument("damage vector length does not match line count");
  }
  if (c.c_rp < 0 || c.c_tr < 0) throw std::invalid_argument("crew costs must be >= 0");
  std::vector<int> failed;
  for (int l = 0; l < net.num_lines(); ++l) {
    if (damage[l]) failed.push_back(l);
  }
  check_recovery_inputs(net, failed, expected, g, n);
  if (static_cast<int>(failed.size()) > kMaxDecomposedLines) {
    throw StageFailure("recovery: " + std::to_string(failed.size()) +
                       " failed lines exceed the supported " +
                       std::to_string(kMaxDecomposedLines));
  }
  HourCache local(net);
  HourCache& hc = cache ? *cache : local;
  const ShedTable tab = build_shed_table(net, damage, failed, g, opt.switches, hc);
  const RepairSchedule seed = heuristic_schedule(tab, expected, g, n, c);
  StageResult res;
  if (opt.solver == ScheduleSolver::kSearch) {
    const double ub = seed.lines.empty() ? milp::kInf : schedule_cost(tab, seed, c);
    auto found = search_schedule(tab, expected, g, n, c, ub);
    res.nodes = found.expansions;
    if (found.cost == milp::kInf) throw StageFailure("recovery: schedule search found no schedule");
    res.schedule = std::move(found.schedule);
  } else {
    auto d = build_scheduling_milp(net, tab, expected, g, n, c);
    milp::MilpOptions mo = opt.milp;
    if (!seed.lines.empty()) mo.initial_solution = scheduling_point(d, seed);
    const auto sol = milp::solve_milp(d.problem, mo);
    if (!sol.ok()) throw StageFailure(std::string("recovery MILP: ") + milp::to_string(sol.status));
    res.nodes = sol.nodes;
    res.schedule = extract_schedule(d.schedule, failed, expected, g, n, sol.x);
  }
  for (int h = 0; h < g.recovery_hours(); ++h) {
    std::uint32_t mask = 0;
    for (std::size_t k = 0; k < failed.size(); ++k) {
      if (res.schedule.damaged[k][h]) mask |= 1u << k;
    }
    const HourSolution& hs = *tab.hour[h][mask];
    res.states.push_back(at_hour(hs, g.t_r + h));
    for (const auto& msg : hs.cut_log) res.cut_log.push_back(msg);
  }
  finish_recovery(net, res, c);
  return res;
}

}  // namespace resilience::restoration
