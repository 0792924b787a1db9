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

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "resilience/dicde/dicde.hpp"
#include "resilience/grid/case_io.hpp"
#include "resilience/hazard/failure.hpp"
#include "resilience/pipeline/metrics.hpp"
#include "resilience/repair/poisson_binomial.hpp"
#include "resilience/restoration/restoration.hpp"
#include "resilience/shock/shock.hpp"

namespace resilience::pipeline {

using nlohmann::json;
using opf::SwitchMode;
using opf::TimeGrid;

// Bad input: unreadable files, invalid values, mismatched reports.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Mode { kFull, kShockOnly, kEvaluatePlan, kNoHardening, kFrozenSwitch };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::kFull: return "full";
    case Mode::kShockOnly: return "shock-only";
    case Mode::kEvaluatePlan: return "evaluate-plan";
    case Mode::kNoHardening: return "no-hardening-baseline";
    case Mode::kFrozenSwitch: return "frozen-switch-baseline";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::kFull, Mode::kShockOnly, Mode::kEvaluatePlan, Mode::kNoHardening,
                 Mode::kFrozenSwitch}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + s + "'");
}

struct CostCoefficients {
  double c_h = 3350.0;          // $ per replaced pole
  std::optional<double> c_ld;   // $/kWh for every bus; unset keeps the case values
  double c_rp = 560.0;          // $ per crew-hour
  double c_tr = 10.0;           // $ per crew dispatch
};

struct RunConfig {
  std::string case_path = std::string(RESILIENCE_DATA_DIR) + "/ieee33.json";
  std::string hazard_path = std::string(RESILIENCE_DATA_DIR) + "/hazard.json";
  double budget_hardening = 50.0;   // poles
  double budget_uncertainty = 10.0; // bits
  int crews = 3;
  double repair_hours_per_pole = 9.0;
  TimeGrid grid;
  dicde::DeParams de;
  CostCoefficients costs;
  Mode mode = Mode::kFull;
  std::vector<int> plan;  // evaluate-plan, shock-only, frozen-switch-baseline
  std::string out_dir = ".";

  void validate() const {
    if (budget_hardening < 0 || budget_uncertainty < 0) throw ConfigError("budgets must be >= 0");
    if (crews < 0) throw ConfigError("crew count must be >= 0");
    if (!(repair_hours_per_pole > 0)) throw ConfigError("repair hours per pole must be > 0");
    if (!grid.valid()) throw ConfigError("time grid needs t_e < t_r < t_c");
    if (costs.c_h < 0 || costs.c_rp < 0 || costs.c_tr < 0 || (costs.c_ld && *costs.c_ld < 0)) {
      throw ConfigError("cost coefficients must be >= 0");
    }
    try {
      de.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

// Applies the keys present in a JSON config object.
inline void apply_config_json(RunConfig& c, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{
      "case", "hazard", "budget_hardening", "budget_uncertainty", "crews",
      "repair_hours_per_pole", "t_e", "t_r", "t_c", "n_p", "f_s", "c_r", "n_g", "seed",
      "threads", "c_h", "c_ld", "c_rp", "c_tr", "mode", "plan", "out"};
  for (const auto& [k, v] : doc.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  try {
    if (doc.contains("case")) c.case_path = doc["case"].get<std::string>();
    if (doc.contains("hazard")) c.hazard_path = doc["hazard"].get<std::string>();
    if (doc.contains("budget_hardening")) c.budget_hardening = doc["budget_hardening"].get<double>();
    if (doc.contains("budget_uncertainty")) {
      c.budget_uncertainty = doc["budget_uncertainty"].get<double>();
    }
    if (doc.contains("crews")) c.crews = doc["crews"].get<int>();
    if (doc.contains("repair_hours_per_pole")) {
      c.repair_hours_per_pole = doc["repair_hours_per_pole"].get<double>();
    }
    if (doc.contains("t_e")) c.grid.t_e = doc["t_e"].get<int>();
    if (doc.contains("t_r")) c.grid.t_r = doc["t_r"].get<int>();
    if (doc.contains("t_c")) c.grid.t_c = doc["t_c"].get<int>();
    if (doc.contains("n_p")) c.de.n_p = doc["n_p"].get<int>();
    if (doc.contains("f_s")) c.de.f_s = doc["f_s"].get<double>();
    if (doc.contains("c_r")) c.de.c_r = doc["c_r"].get<double>();
    if (doc.contains("n_g")) c.de.n_g = doc["n_g"].get<int>();
    if (doc.contains("seed")) c.de.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("threads")) c.de.threads = doc["threads"].get<int>();
    if (doc.contains("c_h")) c.costs.c_h = doc["c_h"].get<double>();
    if (doc.contains("c_ld")) c.costs.c_ld = doc["c_ld"].get<double>();
    if (doc.contains("c_rp")) c.costs.c_rp = doc["c_rp"].get<double>();
    if (doc.contains("c_tr")) c.costs.c_tr = doc["c_tr"].get<double>();
    if (doc.contains("mode")) c.mode = parse_mode(doc["mode"].get<std::string>());
    if (doc.contains("plan")) c.plan = doc["plan"].get<std::vector<int>>();
    if (doc.contains("out")) c.out_dir = doc["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline json config_to_json(const RunConfig& c) {
  json j{{"case", c.case_path},
         {"hazard", c.hazard_path},
         {"budget_hardening", c.budget_hardening},
         {"budget_uncertainty", c.budget_uncertainty},
         {"crews", c.crews},
         {"repair_hours_per_pole", c.repair_hours_per_pole},
         {"t_e", c.grid.t_e},
         {"t_r", c.grid.t_r},
         {"t_c", c.grid.t_c},
         {"n_p", c.de.n_p},
         {"f_s", c.de.f_s},
         {"c_r", c.de.c_r},
         {"n_g", c.de.n_g},
         {"seed", c.de.seed},
         {"c_h", c.costs.c_h},
         {"c_rp", c.costs.c_rp},
         {"c_tr", c.costs.c_tr},
         {"mode", to_string(c.mode)}};
  if (c.costs.c_ld) j["c_ld"] = *c.costs.c_ld;
  if (!c.plan.empty()) j["plan"] = c.plan;
  return j;
}

// Everything an evaluation needs that does not depend on the plan.
class Context {
 public:
  explicit Context(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    try {
      net_ = grid::load_case(cfg_.case_path);
      hazard_ = hazard::load_hazard_config(cfg_.hazard_path);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (cfg_.costs.c_ld) {
      for (auto& b : net_.buses) b.shed_cost = *cfg_.costs.c_ld;
    }
    table_ = hazard::compute_pole_table(net_, hazard_.wind, hazard_.calibrated(),
                                        hazard_.quadrature, false);
    cache_ = std::make_unique<restoration::HourCache>(net_);
  }

  const RunConfig& config() const { return cfg_; }
  const grid::Network& network() const { return net_; }
  const hazard::PoleProbabilityTable& pole_table() const { return table_; }
  restoration::HourCache& cache() { return *cache_; }

  std::vector<int> plan_upper_bounds() const {
    std::vector<int> ub;
    for (const auto& l : net_.lines) ub.push_back(static_cast<int>(l.poles.size()));
    return ub;
  }

 private:
  RunConfig cfg_;
  grid::Network net_;
  hazard::HazardConfig hazard_;
  hazard::PoleProbabilityTable table_;
  std::unique_ptr<restoration::HourCache> cache_;
};

struct PlanEvaluation {
  std::vector<int> plan;
  int poles_replaced = 0;
  double violation = 0.0;
  SwitchMode switches = SwitchMode::kFree;
  bool stages_run = false;
  hazard::LineFailureProfile profile;
  shock::ShockResult shock;
  opf::OperationState event_state;
  std::vector<double> expected_hours;  // per failed line
  restoration::StageResult self_heal;
  restoration::StageResult recovery;
  double cost_hardening = 0.0;
  double cost_damage = 0.0;
  double cost_self_heal = 0.0;
  double cost_recovery = 0.0;
  double total = 0.0;
  std::vector<double> curve;  // t_e .. t_c - 1
  double final_performance = 0.0;
  double resilience = 0.0;
  double seconds = 0.0;
};

inline double hardening_violation(const std::vector<int>& x, double budget) {
  double s = 0.0;
  for (int v : x) s += v;
  return std::max(0.0, s - budget);
}

// Hardening, shock, self-healing and recovery for one plan.  With
// `stop_if_infeasible` a plan over the hardening budget only gets its cost
// and violation (selection never reads the objective of such a plan).
inline PlanEvaluation evaluate_plan(Context& ctx, const std::vector<int>& x,
                                    SwitchMode switches = SwitchMode::kFree,
                                    bool stop_if_infeasible = false) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cfg = ctx.config();
  const auto& net = ctx.network();
  PlanEvaluation ev;
  ev.plan = x;
  ev.switches = switches;
  ev.profile = hazard::apply_hardening(net, x, ctx.pole_table());
  for (int v : x) ev.poles_replaced += v;
  ev.violation = hardening_violation(x, cfg.budget_hardening);
  ev.cost_hardening = cfg.costs.c_h * ev.poles_replaced;
  if (stop_if_infeasible && ev.violation > 0) {
    ev.total = std::numeric_limits<double>::infinity();
    return ev;
  }
  shock::ShockParams sp;
  sp.budget_bits = cfg.budget_uncertainty;
  sp.t = cfg.grid.t_e;
  ev.shock = shock::solve_shock(net, ev.profile.weight, sp);
  const auto& u = ev.shock.scenario.u;
  ev.event_state = shock::inner_response_lp(net, u, cfg.grid.t_e).state;
  ev.cost_damage = ev.shock.dual_objective;
  ev.self_heal = restoration::solve_self_healing(net, u, cfg.grid, switches, &ctx.cache());
  for (int l : ev.shock.scenario.failed_lines()) {
    ev.expected_hours.push_back(
        repair::expected_repair_time(ev.profile.pole_probs[l], cfg.repair_hours_per_pole));
  }
  restoration::RecoveryOptions ro;
  ro.switches = switches;
  ev.recovery = restoration::solve_recovery_decomposed(
      net, u, ev.expected_hours, cfg.grid, cfg.crews, {cfg.costs.c_rp, cfg.costs.c_tr}, ro,
      &ctx.cache());
  ev.cost_self_heal = ev.self_heal.objective;
  ev.cost_recovery = ev.recovery.objective;
  ev.total = ev.cost_hardening + ev.cost_damage + ev.cost_self_heal + ev.cost_recovery;
  ev.curve.push_back(performance(net, ev.event_state.rho, cfg.grid.t_e));
  ev.curve.insert(ev.curve.end(), ev.self_heal.performance.begin(), ev.self_heal.performance.end());
  ev.curve.insert(ev.curve.end(), ev.recovery.performance.begin(),
                  ev.recovery.performance.end() - 1);
  ev.final_performance = ev.recovery.performance.back();
  ev.resilience = resilience_index(ev.curve);
  ev.stages_run = true;
  ev.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ev;
}

// Shock stage alone for one plan.
inline PlanEvaluation evaluate_shock(Context& ctx, const std::vector<int>& x) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cfg = ctx.config();
  PlanEvaluation ev;
  ev.plan = x;
  ev.profile = hazard::apply_hardening(ctx.network(), x, ctx.pole_table());
  for (int v : x) ev.poles_replaced += v;
  ev.violation = hardening_violation(x, cfg.budget_hardening);
  ev.cost_hardening = cfg.costs.c_h * ev.poles_replaced;
  shock::ShockParams sp;
  sp.budget_bits = cfg.budget_uncertainty;
  sp.t = cfg.grid.t_e;
  ev.shock = shock::solve_shock(ctx.network(), ev.profile.weight, sp);
  ev.cost_damage = ev.shock.dual_objective;
  ev.event_state = shock::inner_response_lp(ctx.network(), ev.shock.scenario.u, cfg.grid.t_e).state;
  ev.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return ev;
}

// ---------------------------------------------------------------------------
// Reports.

inline const char* switch_label(SwitchMode m) {
  return m == SwitchMode::kFrozen ? "frozen" : "reconfigurable";
}

inline json schedule_to_json(const grid::Network& net, const restoration::RepairSchedule& s) {
  json out = json::array();
  for (std::size_t k = 0; k < s.lines.size(); ++k) {
    const int kk = static_cast<int>(k);
    out.push_back({{"line", net.lines[s.lines[k]].id},
                   {"expected_crew_hours", s.expected_hours[k]},
                   {"required_crew_hours", restoration::required_crew_hours(s.expected_hours[k])},
                   {"assigned_crew_hours", s.crew_hours(kk)},
                   {"dispatches", std::accumulate(s.delta[k].begin(), s.delta[k].end(), 0)},
                   {"restored_hour", s.restored_at(kk)},
                   {"restored_step", s.restored_at(kk) - s.t_r + 1},
                   {"crews", s.r[k]}});
  }
  return out;
}

inline json evaluation_to_json(const Context& ctx, const PlanEvaluation& ev) {
  const auto& net = ctx.network();
  const auto& g = ctx.config().grid;
  json j;
  j["case"] = net.name;
  j["switches"] = switch_label(ev.switches);
  j["plan"] = ev.plan;
  j["poles_replaced"] = ev.poles_replaced;
  j["hardening_violation"] = ev.violation;
  json failed = json::array();
  json weights = json::array();
  for (int l : ev.shock.scenario.failed_lines()) {
    failed.push_back(net.lines[l].id);
    weights.push_back(ev.profile.weight[l]);
  }
  j["damage"] = {{"failed_lines", failed},
                 {"weights_bits", weights},
                 {"budget_bits", ctx.config().budget_uncertainty},
                 {"budget_used_bits", ev.shock.scenario.weight_used},
                 {"damage_cost", ev.shock.dual_objective},
                 {"shock_objective", ev.shock.objective},
                 {"audit_doublings", ev.shock.audit_doublings},
                 {"dual_bound_active", ev.shock.bound_active},
                 {"nodes", ev.shock.nodes}};
  j["costs"] = {{"hardening", ev.cost_hardening},
                {"damage", ev.cost_damage},
                {"load_shedding", ev.cost_self_heal},
                {"recovery", ev.cost_recovery},
                {"recovery_shedding", ev.recovery.shed_cost},
                {"recovery_repair", ev.recovery.repair_cost},
                {"recovery_travel", ev.recovery.travel_cost},
                {"total", ev.total}};
  j["resilience_percent"] = ev.resilience;
  j["final_performance_percent"] = ev.final_performance;
  json curve = json::array();
  for (std::size_t h = 0; h < ev.curve.size(); ++h) {
    curve.push_back({{"hour", g.t_e + static_cast<int>(h)}, {"performance", ev.curve[h]}});
  }
  j["curve"] = curve;
  j["grid"] = {{"t_e", g.t_e}, {"t_r", g.t_r}, {"t_c", g.t_c}};
  j["repairs"] = schedule_to_json(net, ev.recovery.schedule);
  json ties = json::array();
  if (!ev.self_heal.states.empty()) {
    const auto& st = ev.self_heal.states.front();
    for (int l = 0; l < net.num_lines(); ++l) {
      if (net.lines[l].normally_open && st.y[l] == 0) ties.push_back(net.lines[l].id);
    }
  }
  j["self_healing_closed_ties"] = ties;
  json cuts = ev.self_heal.cut_log;
  for (const auto& c : ev.recovery.cut_log) cuts.push_back(c);
  j["cycle_cuts"] = cuts;
  j["evaluation_seconds"] = ev.seconds;
  return j;
}

inline json shock_to_json(const Context& ctx, const PlanEvaluation& ev) {
  json j = evaluation_to_json(ctx, ev);
  for (const char* k : {"costs", "resilience_percent", "final_performance_percent", "curve",
                        "repairs", "self_healing_closed_ties", "cycle_cuts", "switches"}) {
    j.erase(k);
  }
  j["costs"] = {{"hardening", ev.cost_hardening}, {"damage", ev.cost_damage}};
  j["event_performance_percent"] = performance(ctx.network(), ev.event_state.rho,
                                               ctx.config().grid.t_e);
  return j;
}

inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

inline std::string curve_csv(const std::vector<double>& curve, int t_e) {
  std::string s = "hour,performance_percent\n";
  for (std::size_t h = 0; h < curve.size(); ++h) {
    s += std::to_string(t_e + static_cast<int>(h)) + "," + num(curve[h]) + "\n";
  }
  return s;
}

inline std::vector<double> read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<double> v;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  return v;
}

// One row per failed line and recovery step until the line is back in
// service.
inline std::string repairs_csv(const grid::Network& net, const restoration::RepairSchedule& s) {
  std::string out = "step,hour,line,crews,cumulative_crew_hours,expected_crew_hours,restored\n";
  for (std::size_t k = 0; k < s.lines.size(); ++k) {
    int cum = 0;
    for (int h = 0; h < s.hours(); ++h) {
      cum += s.r[k][h];
      out += std::to_string(h + 1) + "," + std::to_string(s.t_r + h) + "," +
             net.lines[s.lines[k]].id + "," + std::to_string(s.r[k][h]) + "," +
             std::to_string(cum) + "," + num(s.expected_hours[k]) + "," +
             (s.damaged[k][h] ? "0" : "1") + "\n";
      if (!s.damaged[k][h]) break;
    }
  }
  return out;
}

inline std::string trace_csv(const std::vector<dicde::TraceRow>& trace) {
  std::string s = "generation,best,median,min_violation,infeasible\n";
  for (const auto& r : trace) {
    s += std::to_string(r.generation) + "," + num(r.best) + "," + num(r.median) + "," +
         num(r.min_violation) + "," + std::to_string(r.infeasible) + "\n";
  }
  return s;
}

struct RunOutcome {
  json report;
  std::optional<PlanEvaluation> evaluation;
  std::optional<dicde::DeResult> search;
};

// Executes the configured mode and writes report.json, curve.csv,
// repairs.csv and (for a search) trace.csv into cfg.out_dir.
inline RunOutcome run_pipeline(const RunConfig& cfg,
                               const std::function<void(const std::string&)>& log = {}) {
  Context ctx(cfg);
  const auto& net = ctx.network();
  const auto ub = ctx.plan_upper_bounds();
  auto say = [&](const std::string& m) {
    if (log) log(m);
  };
  std::vector<int> plan = cfg.plan;
  if (plan.empty()) plan.assign(net.num_lines(), 0);
  if (static_cast<int>(plan.size()) != net.num_lines()) {
    throw ConfigError("plan has " + std::to_string(plan.size()) + " entries, case has " +
                      std::to_string(net.num_lines()) + " lines");
  }
  for (int l = 0; l < net.num_lines(); ++l) {
    if (plan[l] < 0 || plan[l] > ub[l]) {
      throw ConfigError("plan entry for line " + net.lines[l].id + " outside [0, " +
                        std::to_string(ub[l]) + "]");
    }
  }
  RunOutcome out;
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  const std::filesystem::path dir(cfg.out_dir);

  if (cfg.mode == Mode::kShockOnly) {
    const auto ev = evaluate_shock(ctx, plan);
    out.report = shock_to_json(ctx, ev);
    out.report["mode"] = to_string(cfg.mode);
    out.report["config"] = config_to_json(cfg);
    write_text(dir / "report.json", out.report.dump(2) + "\n");
    out.evaluation = ev;
    return out;
  }

  SwitchMode sw = SwitchMode::kFree;
  if (cfg.mode == Mode::kNoHardening) plan.assign(net.num_lines(), 0);
  if (cfg.mode == Mode::kFrozenSwitch) sw = SwitchMode::kFrozen;
  if (cfg.mode == Mode::kFull) {
    auto fitness = [&](const std::vector<int>& x) {
      const auto ev = evaluate_plan(ctx, x, SwitchMode::kFree, true);
      return dicde::Evaluation{ev.total, ev.violation, ""};
    };
    out.search = dicde::run(cfg.de, ub, fitness, [&](const dicde::TraceRow& r) {
      say("generation " + std::to_string(r.generation) + ": best " + num(r.best) +
          ", infeasible " + std::to_string(r.infeasible));
    });
    plan = out.search->best.x;
    if (!out.search->warning.empty()) say("warning: " + out.search->warning);
    write_text(dir / "trace.csv", trace_csv(out.search->trace));
  }
  const auto ev = evaluate_plan(ctx, plan, sw);
  out.report = evaluation_to_json(ctx, ev);
  out.report["mode"] = to_string(cfg.mode);
  out.report["config"] = config_to_json(cfg);
  if (out.search) {
    out.report["search"] = {{"evaluations", out.search->evaluations},
                            {"cache_hits", out.search->cache_hits},
                            {"feasible", out.search->feasible},
                            {"failures", out.search->failures},
                            {"warning", out.search->warning},
                            {"generations", static_cast<int>(out.search->trace.size()) - 1}};
  }
  write_text(dir / "report.json", out.report.dump(2) + "\n");
  write_text(dir / "curve.csv", curve_csv(ev.curve, cfg.grid.t_e));
  write_text(dir / "repairs.csv", repairs_csv(net, ev.recovery.schedule));
  out.evaluation = ev;
  return out;
}

// ---------------------------------------------------------------------------
// Stage models for external solvers.  Cycle cuts are added lazily during a
// solve, so the exported self-healing and recovery models carry only the
// spanning-forest rows.

enum class Stage { kShock, kSelfHeal, kRecovery };

inline Stage parse_stage(const std::string& s) {
  if (s == "shock") return Stage::kShock;
  if (s == "self-heal") return Stage::kSelfHeal;
  if (s == "recovery") return Stage::kRecovery;
  throw ConfigError("unknown stage '" + s + "'");
}

inline milp::MilpProblem stage_milp(Context& ctx, const std::vector<int>& x, Stage stage,
                                    SwitchMode switches = SwitchMode::kFree) {
  const auto& cfg = ctx.config();
  const auto& net = ctx.network();
  const auto prof = hazard::apply_hardening(net, x, ctx.pole_table());
  shock::ShockParams sp;
  sp.budget_bits = cfg.budget_uncertainty;
  sp.t = cfg.grid.t_e;
  if (stage == Stage::kShock) return shock::build_shock_milp(net, prof.weight, sp).problem;
  const auto sh = shock::solve_shock(net, prof.weight, sp);
  const auto& u = sh.scenario.u;
  if (stage == Stage::kSelfHeal) {
    milp::MilpProblem p;
    opf::StepOptions opt;
    opt.switches = switches;
    opt.fixed_u = u;
    for (int t = cfg.grid.t_e + 1; t < cfg.grid.t_r; ++t) opf::build_operation_step(p, net, t, opt);
    return p;
  }
  std::vector<double> expected;
  for (int l : sh.scenario.failed_lines()) {
    expected.push_back(repair::expected_repair_time(prof.pole_probs[l], cfg.repair_hours_per_pole));
  }
  return restoration::build_recovery_milp(net, u, expected, cfg.grid, cfg.crews,
                                          {cfg.costs.c_rp, cfg.costs.c_tr}, switches)
      .problem;
}

// ---------------------------------------------------------------------------
// Side-by-side comparison of two reports of the same case and time grid.

struct Comparison {
  std::vector<std::string> metric;
  std::vector<double> a, b;
  std::string csv() const {
    std::string s = "metric,a,b,b_minus_a\n";
    for (std::size_t i = 0; i < metric.size(); ++i) {
      s += metric[i] + "," + num(a[i]) + "," + num(b[i]) + "," + num(b[i] - a[i]) + "\n";
    }
    return s;
  }
  double get(const std::string& m, bool first) const {
    for (std::size_t i = 0; i < metric.size(); ++i) {
      if (metric[i] == m) return first ? a[i] : b[i];
    }
    throw std::out_of_range("no metric '" + m + "'");
  }
};

inline Comparison compare_reports(const json& ra, const json& rb) {
  try {
    if (ra.at("case") != rb.at("case")) {
      throw ConfigError("reports are for different cases");
    }
    if (ra.at("grid") != rb.at("grid")) throw ConfigError("reports use different time grids");
    Comparison c;
    auto add = [&](const std::string& name, const json& va, const json& vb) {
      c.metric.push_back(name);
      c.a.push_back(va.get<double>());
      c.b.push_back(vb.get<double>());
    };
    for (const char* k : {"hardening", "damage", "load_shedding", "recovery", "total"}) {
      add(std::string("cost_") + k, ra.at("costs").at(k), rb.at("costs").at(k));
    }
    add("resilience_percent", ra.at("resilience_percent"), rb.at("resilience_percent"));
    add("poles_replaced", ra.at("poles_replaced"), rb.at("poles_replaced"));
    const auto& ca = ra.at("curve");
    const auto& cb = rb.at("curve");
    if (ca.size() != cb.size()) throw ConfigError("curves differ in length");
    for (std::size_t h = 0; h < ca.size(); ++h) {
      add("performance_h" + std::to_string(ca[h].at("hour").get<int>()), ca[h].at("performance"),
          cb[h].at("performance"));
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

}  // namespace resilience::pipeline
