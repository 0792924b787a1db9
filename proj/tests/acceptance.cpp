// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.  Details for each criterion go to stderr as it runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "de_problems.hpp"
#include "oracles.hpp"
#include "random_networks.hpp"
#include "resilience/dicde/dicde.hpp"
#include "resilience/grid/case_io.hpp"
#include "resilience/grid/poles.hpp"
#include "resilience/grid/radial.hpp"
#include "resilience/hazard/failure.hpp"
#include "resilience/milp/branch_and_bound.hpp"
#include "resilience/opf/operation.hpp"
#include "resilience/pipeline/pipeline.hpp"
#include "resilience/repair/poisson_binomial.hpp"
#include "resilience/shock/shock.hpp"

namespace rg = resilience::grid;
namespace rh = resilience::hazard;
namespace rm = resilience::milp;
namespace ro = resilience::opf;
namespace rr = resilience::repair;
namespace rs = resilience::shock;
namespace pl = resilience::pipeline;
namespace de = resilience::dicde;

namespace {

// Tolerances and budgets, one place.
constexpr double kShockTol = 1e-6;
constexpr double kDualityTol = 1e-6;
constexpr double kRepairExactTol = 1e-10;
constexpr double kRepairMcRelTol = 0.005;
constexpr double kPmfTol = 1e-12;
constexpr double kMomentTol = 1e-10;
constexpr double kMilpTol = 1e-8;
constexpr double kAnchorTol = 1e-3;
constexpr double kShockSuiteSeconds = 120;
constexpr double kRepairSeconds = 30;
constexpr double kMilpSeconds = 300;
constexpr double kSearchSeconds = 600;
constexpr double kEvaluateSeconds = 10;
constexpr int kDeHitsNeeded = 19;  // 95 % of 20

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string data(const std::string& name) { return std::string(RESILIENCE_DATA_DIR) + "/" + name; }

// ---------------------------------------------------------------------------
// 1 and 2: shock MILP against enumeration, dual certificate against the
// fixed-damage LP.

struct ShockSuite {
  double max_objective_gap = 0.0;
  double max_duality_gap = 0.0;
  double max_stationarity = 0.0;
  double seconds = 0.0;
  int cases = 0;
};

ShockSuite run_shock_suite() {
  ShockSuite s;
  std::mt19937_64 rng(2026);
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < 50; ++k) {
    const auto c = oracle::random_shock_case(rng);
    rs::ShockParams prm;
    prm.budget_bits = c.budget;
    const auto r = rs::solve_shock(c.net, c.weights, prm);
    const auto o = rs::oracle_enumerate_shock(c.net, c.weights, c.budget);
    const double scale = std::max(1.0, std::abs(o.objective));
    s.max_objective_gap = std::max(s.max_objective_gap, std::abs(r.objective - o.objective) / scale);
    const double inner = rs::inner_response_lp(c.net, r.scenario.u).cost;
    s.max_duality_gap = std::max(s.max_duality_gap, std::abs(inner - r.dual_objective) /
                                                        std::max(1.0, std::abs(inner)));
    s.max_stationarity =
        std::max(s.max_stationarity, rs::stationarity_residual(c.net, r.certificate));
    ++s.cases;
  }
  s.seconds = seconds_since(t0);
  return s;
}

// ---------------------------------------------------------------------------
// 3: expected repair time against the enumerated conditional mean and
// sampling.

Outcome repair_time_certification() {
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h_r = 9.0;
  double worst_exact = 0.0, worst_mc = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    std::vector<double> p(n);
    for (double& x : p) x = 0.02 + 0.6 * unit(rng);
    // Conditional mean of the failure count given at least one failure.
    double mass = 0.0, weighted = 0.0;
    for (int mask = 1; mask < (1 << n); ++mask) {
      double pr = 1.0;
      for (int i = 0; i < n; ++i) pr *= (mask >> i & 1) ? p[i] : 1.0 - p[i];
      mass += pr;
      weighted += pr * __builtin_popcount(mask);
    }
    const double exact = h_r * weighted / mass;
    const double e = rr::expected_repair_time(p, h_r);
    worst_exact = std::max(worst_exact, std::abs(e - exact));
    // 10^6 accepted samples of the count conditioned on at least one failure.
    long long total = 0;
    for (int accepted = 0; accepted < 1000000;) {
      int k = 0;
      for (int i = 0; i < n; ++i) k += unit(rng) < p[i];
      if (k == 0) continue;
      total += k;
      ++accepted;
    }
    const double mc = h_r * static_cast<double>(total) / 1e6;
    worst_mc = std::max(worst_mc, std::abs(mc - e) / e);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_exact <= kRepairExactTol && worst_mc <= kRepairMcRelTol && secs < kRepairSeconds;
  o.detail = "100 vectors, max |E - exact| " + fmt(worst_exact) + " (<= 1e-10), max sampling error " +
             fmt(100 * worst_mc) + " % (<= 0.5 %), " + fmt(secs) + " s (< 30 s)";
  return o;
}

// ---------------------------------------------------------------------------
// 4: Poisson binomial pmf against subset enumeration.

Outcome poisson_binomial_exactness() {
  std::mt19937_64 rng(56);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_pmf = 0.0, worst_sum = 0.0, worst_moment = 0.0;
  int vectors = 0;
  for (int n = 0; n <= 15; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<double> p(n);
      for (double& x : p) x = rep == 3 ? std::round(unit(rng)) : unit(rng);
      std::vector<double> ref(n + 1, 0.0);
      for (int mask = 0; mask < (1 << n); ++mask) {
        double pr = 1.0;
        for (int i = 0; i < n; ++i) pr *= (mask >> i & 1) ? p[i] : 1.0 - p[i];
        ref[__builtin_popcount(mask)] += pr;
      }
      const auto pmf = rr::pb_pmf(p);
      double sum = 0.0, mean = 0.0, var = 0.0;
      for (int k = 0; k <= n; ++k) {
        worst_pmf = std::max(worst_pmf, std::abs(pmf[k] - ref[k]));
        sum += pmf[k];
      }
      for (double x : p) {
        mean += x;
        var += x * (1 - x);
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      worst_moment = std::max({worst_moment, std::abs(rr::pmf_mean(pmf) - mean),
                               std::abs(rr::pmf_variance(pmf) - var)});
      ++vectors;
    }
  }
  Outcome o;
  o.pass = worst_pmf <= kPmfTol && worst_sum <= kPmfTol && worst_moment <= kMomentTol;
  o.detail = std::to_string(vectors) + " vectors n <= 15, max pmf error " + fmt(worst_pmf) +
             ", max |sum - 1| " + fmt(worst_sum) + " (<= 1e-12), max moment error " +
             fmt(worst_moment) + " (<= 1e-10)";
  return o;
}

// ---------------------------------------------------------------------------
// 5: branch and bound against enumeration.

Outcome milp_kernel() {
  std::mt19937_64 rng(200);
  int feasible = 0, mismatches = 0;
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const int nd = 1 + static_cast<int>(rng() % 12);
    const int nc = static_cast<int>(rng() % 3);
    auto p = oracle::random_problem(rng, nc, nd, 1 + static_cast<int>(rng() % 4), nd <= 6);
    const auto ref = oracle::milp_by_enumeration(p);
    const auto s = rm::solve_milp(p);
    if (!ref.feasible) {
      mismatches += s.status != rm::SolveStatus::kInfeasible;
      continue;
    }
    ++feasible;
    if (!s.ok() || !rm::check_feasibility(p, s.x).feasible(1e-6)) {
      ++mismatches;
      continue;
    }
    const double gap = std::abs(s.objective - ref.objective);
    worst = std::max(worst, gap);
    mismatches += gap > kMilpTol;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = mismatches == 0 && secs < kMilpSeconds;
  o.detail = "200 problems (" + std::to_string(feasible) + " feasible), " +
             std::to_string(mismatches) + " mismatches, max objective gap " + fmt(worst) +
             " (<= 1e-8), " + fmt(secs) + " s (< 300 s)";
  return o;
}

// ---------------------------------------------------------------------------
// 6: y = u OR s and gamma = u AND s for every binary combination.

Outcome linking_truth_tables() {
  const auto net = rg::parse_case_text(R"({
    "buses": [{"id": "1", "root": true}, {"id": "2", "p_kw": 10}],
    "dg_units": [{"bus": "1", "p_max_kw": 100, "q_max_kvar": 100}],
    "defaults": {"p_max_kw": 100, "q_max_kvar": 100},
    "lines": [{"from": 1, "to": 2, "r_pu": 0.01, "x_pu": 0.01}],
    "switches": [{"line": "1-2", "normally_open": false}]})");
  int wrong = 0, checks = 0;
  for (int u : {0, 1}) {
    for (int s : {0, 1}) {
      rm::MilpProblem p;
      ro::StepOptions opt;
      opt.switches = ro::SwitchMode::kFree;
      opt.fixed_u = {u};
      const auto sv = ro::build_operation_step(p, net, 0, opt);
      p.set_bounds(sv.s[0], s, s);
      for (int var : {sv.y[0], sv.gamma[0]}) {
        for (double dir : {1.0, -1.0}) {
          for (int j = 0; j < p.num_vars(); ++j) p.set_objective(j, 0.0);
          p.set_objective(var, dir);
          const auto sol = rm::solve_milp(p);
          const double expect = var == sv.y[0] ? (u || s) : (u && s);
          wrong += !sol.ok() || sol.x[var] != expect;
          ++checks;
        }
      }
    }
  }
  Outcome o;
  o.pass = wrong == 0;
  o.detail = std::to_string(checks) + " min/max probes over u, s in {0, 1}, " +
             std::to_string(wrong) + " wrong";
  return o;
}

// ---------------------------------------------------------------------------
// 7, 8, 10: the shipped 33-bus case.

struct Ieee33Runs {
  double evaluate_seconds = 0.0;
  double search_seconds = 0.0;
  pl::PlanEvaluation unhardened, unhardened_frozen, hardened, hardened_frozen;
  bool search_feasible = false;
};

Ieee33Runs run_ieee33() {
  pl::RunConfig cfg;
  cfg.de.n_p = 8;
  cfg.de.n_g = 20;
  pl::Context ctx(cfg);
  const std::vector<int> zero(ctx.network().num_lines(), 0);
  Ieee33Runs r;
  auto t0 = std::chrono::steady_clock::now();
  {
    // A fresh context so the timing includes every stage solve.
    pl::Context fresh(cfg);
    r.unhardened = pl::evaluate_plan(fresh, zero);
    r.evaluate_seconds = seconds_since(t0);
  }
  std::cerr << "  33-bus single evaluation " << r.evaluate_seconds << " s" << std::endl;
  const std::string out = (std::filesystem::temp_directory_path() / "acceptance_ieee33").string();
  cfg.mode = pl::Mode::kFull;
  cfg.out_dir = out;
  t0 = std::chrono::steady_clock::now();
  const auto run = pl::run_pipeline(cfg, [](const std::string& m) { std::cerr << "  " << m << std::endl; });
  r.search_seconds = seconds_since(t0);
  r.search_feasible = run.search && run.search->feasible;
  r.hardened = *run.evaluation;
  r.unhardened_frozen = pl::evaluate_plan(ctx, zero, ro::SwitchMode::kFrozen);
  r.hardened_frozen = pl::evaluate_plan(ctx, r.hardened.plan, ro::SwitchMode::kFrozen);
  std::filesystem::remove_all(out);
  return r;
}

Outcome radiality(const rg::Network& net, const Ieee33Runs& r) {
  int steps = 0, bad = 0;
  std::size_t cuts = 0;
  auto check = [&](const ro::OperationState& st) {
    std::vector<bool> closed(net.num_lines());
    for (int l = 0; l < net.num_lines(); ++l) closed[l] = st.y[l] == 0;
    const auto rep = st.parent_is_from.empty() ? rg::check_radial(net, closed)
                                               : rg::check_radial(net, closed, st.parent_is_from);
    bad += !rep.radial;
    ++steps;
  };
  for (const auto* ev : {&r.unhardened, &r.unhardened_frozen, &r.hardened, &r.hardened_frozen}) {
    check(ev->event_state);
    for (const auto& st : ev->self_heal.states) check(st);
    for (const auto& st : ev->recovery.states) check(st);
    cuts += ev->self_heal.cut_log.size() + ev->recovery.cut_log.size();
    for (const auto& m : ev->self_heal.cut_log) std::cerr << "  cut: " << m << std::endl;
    for (const auto& m : ev->recovery.cut_log) std::cerr << "  cut: " << m << std::endl;
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = std::to_string(steps) + " solved hours over 4 runs, " + std::to_string(bad) +
             " non-radial, " + std::to_string(cuts) + " cycle cuts logged";
  return o;
}

Outcome orderings(const Ieee33Runs& r) {
  const auto& h = r.hardened;
  const auto& u = r.unhardened;
  const auto& hf = r.hardened_frozen;
  const auto& uf = r.unhardened_frozen;
  const bool cost_h = h.total < u.total;
  const bool res_h = h.resilience > u.resilience;
  const bool cost_s = h.total < hf.total && u.total < uf.total;
  const bool res_s = h.resilience > hf.resilience && u.resilience > uf.resilience;
  Outcome o;
  o.pass = r.search_feasible && cost_h && res_h && cost_s && res_s;
  o.detail = "total $ hardened " + fmt(h.total) + " < unhardened " + fmt(u.total) +
             "; reconfigurable " + fmt(h.total) + " < frozen " + fmt(hf.total) +
             " (unhardened " + fmt(u.total) + " < " + fmt(uf.total) + "); resilience % " +
             fmt(h.resilience) + " > " + fmt(u.resilience) + ", " + fmt(h.resilience) + " > " +
             fmt(hf.resilience) + " (" + fmt(u.resilience) + " > " + fmt(uf.resilience) +
             "); " + std::to_string(h.poles_replaced) + " poles replaced";
  return o;
}

Outcome runtimes(const Ieee33Runs& r) {
  Outcome o;
  o.pass = r.search_seconds < kSearchSeconds && r.evaluate_seconds < kEvaluateSeconds;
  o.detail = "search n_p = 8, n_g = 20: " + fmt(r.search_seconds) + " s (< 600 s); single evaluate " +
             fmt(r.evaluate_seconds) + " s (< 10 s)";
  return o;
}

// ---------------------------------------------------------------------------
// 9: the search on an integer problem with a known optimum.

Outcome de_sanity() {
  const oracle::Quadratic q;
  const double opt = q.optimum();
  int hits = 0;
  for (int seed = 1; seed <= 20; ++seed) {
    de::DeParams prm;
    prm.n_p = 20;
    prm.n_g = 100;
    prm.seed = static_cast<std::uint64_t>(seed);
    prm.threads = 1;
    const auto r = de::run(prm, q.upper, q);
    hits += r.feasible && std::abs(r.best.objective - opt) < 1e-9;
  }
  Outcome o;
  o.pass = hits >= kDeHitsNeeded;
  o.detail = "optimum " + fmt(opt) + " of 10^5 points found in " + std::to_string(hits) +
             "/20 seeded runs (>= 19)";
  return o;
}

// ---------------------------------------------------------------------------
// 11: calibration anchor and hazard integral against sampling.

Outcome fragility_calibration() {
  const auto cfg = rh::load_hazard_config(data("hazard.json"));
  const auto f = cfg.calibrated();
  const double anchor = rh::direction_averaged_prob(f, cfg.anchor->cls, 0.0, cfg.anchor->height_m,
                                                    cfg.anchor->area_m2, 150.0);
  rg::Sampler s(2024);
  const rg::PoleSynthesisParams prm;
  const int draws = 1000000;
  int outside = 0;
  double worst_sigmas = 0.0;
  for (int i = 0; i < 20; ++i) {
    const rg::Pole pole = rg::sample_pole(s, prm);
    const double exact = rh::pole_failure_prob(pole, cfg.wind, f, cfg.quadrature, false).prob;
    rg::Sampler mc(100 + i);
    int fails = 0;
    for (int k = 0; k < draws; ++k) {
      const double v = cfg.wind.scale_mph * std::pow(-std::log1p(-mc.uniform()), 1.0 / cfg.wind.shape);
      const double th = 2.0 * M_PI * mc.uniform();
      fails += mc.uniform() < f.prob(pole, 0.7, v, th);
    }
    const double est = static_cast<double>(fails) / draws;
    const double sigma = std::sqrt(std::max(exact * (1 - exact), 1e-12) / draws);
    worst_sigmas = std::max(worst_sigmas, std::abs(est - exact) / sigma);
    outside += std::abs(est - exact) > 3 * sigma + 1e-6;
  }
  Outcome o;
  o.pass = std::abs(anchor - 0.113) <= kAnchorTol && outside == 0;
  o.detail = "new class-3 pole at 150 mph " + fmt(anchor) + " (0.113 +- 1e-3); 20 poles x 10^6 draws, " +
             std::to_string(outside) + " outside 3 sigma (worst " + fmt(worst_sigmas) + " sigma)";
  return o;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> rows(11);
  auto record = [&](int k, const std::string& name, const std::function<Outcome()>& fn) {
    std::cerr << "criterion " << k << ": " << name << std::endl;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    rows[k - 1] = {name, o};
    std::cerr << "  " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << std::endl;
  };

  ShockSuite shock;
  record(1, "shock MILP equals enumeration", [&] {
    shock = run_shock_suite();
    Outcome o;
    o.pass = shock.max_objective_gap <= kShockTol && shock.seconds < kShockSuiteSeconds;
    o.detail = std::to_string(shock.cases) + " random feeders, max relative gap " +
               fmt(shock.max_objective_gap) + " (<= 1e-6), " + fmt(shock.seconds) + " s (< 120 s)";
    return o;
  });
  record(2, "strong duality of the inner response", [&] {
    Outcome o;
    o.pass = shock.cases == 50 && shock.max_duality_gap <= kDualityTol &&
             shock.max_stationarity <= kDualityTol;
    o.detail = "max |LP cost - dual value| " + fmt(shock.max_duality_gap) +
               " (<= 1e-6), max stationarity residual " + fmt(shock.max_stationarity);
    return o;
  });
  record(3, "expected repair time", repair_time_certification);
  record(4, "Poisson binomial pmf", poisson_binomial_exactness);
  record(5, "MILP kernel equals enumeration", milp_kernel);
  record(6, "status linking truth tables", linking_truth_tables);

  Ieee33Runs runs;
  bool runs_ok = false;
  std::string runs_error;
  try {
    std::cerr << "33-bus pipeline runs" << std::endl;
    runs = run_ieee33();
    runs_ok = true;
  } catch (const std::exception& e) {
    runs_error = std::string("exception: ") + e.what();
  }
  const auto net = rg::load_case(data("ieee33.json"));
  auto from_runs = [&](const std::function<Outcome()>& fn) {
    return [&, fn] { return runs_ok ? fn() : Outcome{false, runs_error}; };
  };
  record(7, "radial operation on the 33-bus case", from_runs([&] { return radiality(net, runs); }));
  record(8, "cost and resilience orderings", from_runs([&] { return orderings(runs); }));
  record(9, "search finds a known optimum", de_sanity);
  record(10, "desk-scale runtime", from_runs([&] { return runtimes(runs); }));
  record(11, "fragility calibration", fragility_calibration);

  int failed = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& [name, o] = rows[k];
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (k + 1) << " " << name << ": " << o.detail
              << "\n";
    failed += !o.pass;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << (11 - failed) << "/11" << std::endl;
  return failed ? 1 : 0;
}
