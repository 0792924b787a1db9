#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "resilience/milp/lp_format.hpp"
#include "resilience/pipeline/metrics.hpp"
#include "resilience/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
namespace pl = resilience::pipeline;
namespace rg = resilience::grid;

namespace {

// Two laterals from the substation joined by a normally open tie, a small
// DG at the end of the second lateral.
const char* kFeeder = R"({
  "name": "tiny",
  "bases": {"voltage_kv": 12.66, "power_mva": 10.0},
  "defaults": {"p_max_kw": 2000, "q_max_kvar": 2000},
  "buses": [{"id": "1", "root": true}, {"id": "2", "p_kw": 200, "q_kvar": 80},
            {"id": "3", "p_kw": 300, "q_kvar": 100}, {"id": "4", "p_kw": 100, "q_kvar": 50},
            {"id": "5", "p_kw": 250, "q_kvar": 90}],
  "lines": [{"id": "1-2", "from": "1", "to": "2", "r_ohm": 0.3, "x_ohm": 0.2, "length_m": 500},
            {"id": "2-3", "from": "2", "to": "3", "r_ohm": 0.3, "x_ohm": 0.2, "length_m": 400},
            {"id": "1-4", "from": "1", "to": "4", "r_ohm": 0.3, "x_ohm": 0.2, "length_m": 600},
            {"id": "4-5", "from": "4", "to": "5", "r_ohm": 0.3, "x_ohm": 0.2, "length_m": 300},
            {"id": "3-5", "from": "3", "to": "5", "r_ohm": 0.5, "x_ohm": 0.5, "length_m": 200}],
  "switches": [{"line": "3-5", "normally_open": true}],
  "dg_units": [{"bus": "1", "p_max_kw": 5000, "q_max_kvar": 5000},
               {"bus": "5", "p_max_kw": 300, "q_max_kvar": 300}]
})";

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pipeline_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.json") << kFeeder;
    cfg_.case_path = (dir_ / "tiny.json").string();
    cfg_.budget_hardening = 6;
    cfg_.budget_uncertainty = 4;
    cfg_.grid = {0, 4, 16};
    cfg_.out_dir = (dir_ / "out").string();
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  pl::RunConfig cfg_;
};

rg::Network uniform(int n) {
  std::string buses = R"([{"id": "0", "root": true})";
  std::string lines = "[";
  for (int b = 1; b <= n; ++b) {
    buses += R"(, {"id": ")" + std::to_string(b) + R"(", "p_kw": 100, "q_kvar": 10})";
    lines += std::string(b > 1 ? ", " : "") + R"({"from": "0", "to": ")" + std::to_string(b) +
             R"(", "r_pu": 0.01, "x_pu": 0.01, "p_max_kw": 500, "q_max_kvar": 500})";
  }
  return rg::parse_case_text(R"({"buses": )" + buses + "], \"lines\": " + lines +
                             R"(], "dg_units": [{"bus": "0", "p_max_kw": 1000, "q_max_kvar": 1000}]})");
}

}  // namespace

TEST(Performance, NothingShedIsFull) {
  const auto net = uniform(4);
  EXPECT_DOUBLE_EQ(pl::performance(net, std::vector<double>(5, 0.0)), 100.0);
}

TEST(Performance, EverythingShedIsZero) {
  const auto net = uniform(4);
  EXPECT_DOUBLE_EQ(pl::performance(net, std::vector<double>(5, 1.0)), 0.0);
}

TEST(Performance, HalfOfUniformLoadIsFifty) {
  const auto net = uniform(4);
  EXPECT_DOUBLE_EQ(pl::performance(net, {0.0, 1.0, 1.0, 0.0, 0.0}), 50.0);
  EXPECT_DOUBLE_EQ(pl::performance(net, {0.0, 0.5, 0.5, 0.5, 0.5}), 50.0);
}

TEST(Performance, NoDemandCountsAsFull) {
  const auto net = rg::parse_case_text(R"({
    "buses": [{"id": "a", "root": true}, {"id": "b"}],
    "lines": [{"from": "a", "to": "b", "r_pu": 0.01, "x_pu": 0.01, "p_max_kw": 10, "q_max_kvar": 10}],
    "dg_units": [{"bus": "a", "p_max_kw": 10, "q_max_kvar": 10}]})");
  EXPECT_DOUBLE_EQ(pl::performance(net, {0.0, 1.0}), 100.0);
  EXPECT_THROW(pl::performance(net, {0.0}), std::invalid_argument);
}

TEST(Resilience, ConstantCurves) {
  EXPECT_DOUBLE_EQ(pl::resilience_index(std::vector<double>(72, 100.0)), 100.0);
  EXPECT_DOUBLE_EQ(pl::resilience_index(std::vector<double>(72, 40.0)), 40.0);
}

TEST(Resilience, HalfWindowOutIsFifty) {
  std::vector<double> curve(72, 100.0);
  std::fill(curve.begin(), curve.begin() + 36, 0.0);
  EXPECT_DOUBLE_EQ(pl::resilience_index(curve), 50.0);
  EXPECT_THROW(pl::resilience_index({}), std::invalid_argument);
}

TEST(Config, DefaultsValidate) {
  pl::RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.budget_hardening, 50.0);
  EXPECT_EQ(c.budget_uncertainty, 10.0);
  EXPECT_EQ(c.crews, 3);
  EXPECT_EQ(c.repair_hours_per_pole, 9.0);
  EXPECT_EQ(c.de.n_p, 20);
  EXPECT_EQ(c.costs.c_h, 3350.0);
  EXPECT_EQ(c.costs.c_rp, 560.0);
  EXPECT_EQ(c.costs.c_tr, 10.0);
}

TEST(Config, RejectsBadValues) {
  auto bad = [](auto edit) {
    pl::RunConfig c;
    edit(c);
    EXPECT_THROW(c.validate(), pl::ConfigError);
  };
  bad([](pl::RunConfig& c) { c.budget_hardening = -1; });
  bad([](pl::RunConfig& c) { c.budget_uncertainty = -0.5; });
  bad([](pl::RunConfig& c) { c.crews = -1; });
  bad([](pl::RunConfig& c) { c.grid = {5, 5, 10}; });
  bad([](pl::RunConfig& c) { c.grid = {0, 10, 4}; });
  bad([](pl::RunConfig& c) { c.de.n_p = 2; });
  bad([](pl::RunConfig& c) { c.costs.c_ld = -1.0; });
}

TEST(Config, JsonKeysApplyAndUnknownKeysFail) {
  pl::RunConfig c;
  pl::apply_config_json(c, nlohmann::json::parse(
                               R"({"crews": 5, "t_r": 12, "n_g": 7, "mode": "shock-only", "c_ld": 20})"));
  EXPECT_EQ(c.crews, 5);
  EXPECT_EQ(c.grid.t_r, 12);
  EXPECT_EQ(c.de.n_g, 7);
  EXPECT_EQ(c.mode, pl::Mode::kShockOnly);
  EXPECT_EQ(*c.costs.c_ld, 20.0);
  EXPECT_THROW(pl::apply_config_json(c, nlohmann::json::parse(R"({"crew": 5})")), pl::ConfigError);
  EXPECT_THROW(pl::apply_config_json(c, nlohmann::json::parse(R"({"crews": "x"})")),
               pl::ConfigError);
  pl::RunConfig back;
  pl::apply_config_json(back, pl::config_to_json(c));
  EXPECT_EQ(pl::config_to_json(back), pl::config_to_json(c));
}

TEST(Config, ModeNamesRoundTrip) {
  for (auto m : {pl::Mode::kFull, pl::Mode::kShockOnly, pl::Mode::kEvaluatePlan,
                 pl::Mode::kNoHardening, pl::Mode::kFrozenSwitch}) {
    EXPECT_EQ(pl::parse_mode(pl::to_string(m)), m);
  }
  EXPECT_THROW(pl::parse_mode("everything"), pl::ConfigError);
}

TEST_F(PipelineTest, MissingCaseIsConfigError) {
  cfg_.case_path = (dir_ / "missing.json").string();
  EXPECT_THROW(pl::Context{cfg_}, pl::ConfigError);
}

TEST_F(PipelineTest, OverBudgetPlanReportsViolation) {
  pl::Context ctx(cfg_);
  std::vector<int> x(ctx.network().num_lines(), 0);
  const auto ub = ctx.plan_upper_bounds();
  int left = static_cast<int>(cfg_.budget_hardening) + 5;
  for (int l = 0; l < ctx.network().num_lines() && left > 0; ++l) {
    x[l] = std::min(ub[l], left);
    left -= x[l];
  }
  ASSERT_EQ(left, 0);
  const auto ev = pl::evaluate_plan(ctx, x, resilience::opf::SwitchMode::kFree, true);
  EXPECT_DOUBLE_EQ(ev.violation, 5.0);
  EXPECT_FALSE(ev.stages_run);
  EXPECT_DOUBLE_EQ(ev.cost_hardening, cfg_.costs.c_h * (cfg_.budget_hardening + 5));
}

TEST_F(PipelineTest, ReportTotalsAndCurveRoundTrip) {
  cfg_.mode = pl::Mode::kNoHardening;
  const auto out = pl::run_pipeline(cfg_);
  const auto& r = out.report;
  const auto& c = r["costs"];
  const double sum = c["hardening"].get<double>() + c["damage"].get<double>() +
                     c["load_shedding"].get<double>() + c["recovery"].get<double>();
  EXPECT_NEAR(sum, c["total"].get<double>(), 1e-6);
  EXPECT_NEAR(c["recovery_shedding"].get<double>() + c["recovery_repair"].get<double>() +
                  c["recovery_travel"].get<double>(),
              c["recovery"].get<double>(), 1e-6);
  EXPECT_EQ(c["hardening"].get<double>(), 0.0);
  EXPECT_FALSE(r["damage"]["failed_lines"].empty());

  const auto curve = pl::read_curve_csv(cfg_.out_dir + "/curve.csv");
  ASSERT_EQ(static_cast<int>(curve.size()), cfg_.grid.t_c - cfg_.grid.t_e);
  for (double v : curve) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
  }
  EXPECT_NEAR(pl::resilience_index(curve), r["resilience_percent"].get<double>(), 1e-12);
  EXPECT_TRUE(fs::exists(cfg_.out_dir + "/repairs.csv"));
  EXPECT_FALSE(fs::exists(cfg_.out_dir + "/trace.csv"));
  EXPECT_EQ(pl::load_json(cfg_.out_dir + "/report.json"), r);
}

TEST_F(PipelineTest, RepairsTableMatchesSchedule) {
  cfg_.mode = pl::Mode::kEvaluatePlan;
  const auto out = pl::run_pipeline(cfg_);
  std::ifstream in(cfg_.out_dir + "/repairs.csv");
  std::string line;
  std::getline(in, line);
  int restored_rows = 0;
  while (std::getline(in, line)) {
    if (line.back() == '1') ++restored_rows;
  }
  EXPECT_EQ(restored_rows, static_cast<int>(out.report["repairs"].size()));
  for (const auto& rep : out.report["repairs"]) {
    EXPECT_GE(rep["assigned_crew_hours"].get<int>(), rep["required_crew_hours"].get<int>());
    EXPECT_LE(rep["restored_hour"].get<int>(), cfg_.grid.t_c);
  }
}

TEST_F(PipelineTest, EvaluationIsDeterministic) {
  cfg_.mode = pl::Mode::kEvaluatePlan;
  auto a = pl::run_pipeline(cfg_).report;
  auto b = pl::run_pipeline(cfg_).report;
  a.erase("evaluation_seconds");
  b.erase("evaluation_seconds");
  EXPECT_EQ(a, b);
}

TEST_F(PipelineTest, BaselineIgnoresGivenPlan) {
  pl::Context ctx(cfg_);
  cfg_.plan.assign(ctx.network().num_lines(), 1);
  cfg_.mode = pl::Mode::kNoHardening;
  const auto r = pl::run_pipeline(cfg_).report;
  EXPECT_EQ(r["poles_replaced"].get<int>(), 0);
  cfg_.mode = pl::Mode::kEvaluatePlan;
  EXPECT_EQ(pl::run_pipeline(cfg_).report["poles_replaced"].get<int>(),
            ctx.network().num_lines());
}

TEST_F(PipelineTest, PlanOutsideBoxIsConfigError) {
  cfg_.mode = pl::Mode::kEvaluatePlan;
  cfg_.plan = {1, 2};
  EXPECT_THROW(pl::run_pipeline(cfg_), pl::ConfigError);
  cfg_.plan.assign(5, 0);
  cfg_.plan[0] = -1;
  EXPECT_THROW(pl::run_pipeline(cfg_), pl::ConfigError);
}

TEST_F(PipelineTest, ShockOnlyReportsDamageWithoutRestoration) {
  cfg_.mode = pl::Mode::kShockOnly;
  const auto r = pl::run_pipeline(cfg_).report;
  EXPECT_TRUE(r.contains("damage"));
  EXPECT_FALSE(r.contains("curve"));
  EXPECT_LE(r["damage"]["budget_used_bits"].get<double>(), cfg_.budget_uncertainty + 1e-9);
  EXPECT_FALSE(r["damage"]["dual_bound_active"].get<bool>());
}

TEST_F(PipelineTest, ReconfigurationNoWorseThanFrozen) {
  cfg_.mode = pl::Mode::kEvaluatePlan;
  const auto free = pl::run_pipeline(cfg_).report;
  cfg_.mode = pl::Mode::kFrozenSwitch;
  const auto frozen = pl::run_pipeline(cfg_).report;
  const auto cmp = pl::compare_reports(frozen, free);
  EXPECT_LE(cmp.get("cost_total", false), cmp.get("cost_total", true) + 1e-6);
  EXPECT_GE(cmp.get("resilience_percent", false), cmp.get("resilience_percent", true) - 1e-9);
  EXPECT_EQ(cmp.get("cost_damage", false), cmp.get("cost_damage", true));
}

TEST_F(PipelineTest, IdenticalReportsCompareToZero) {
  cfg_.mode = pl::Mode::kEvaluatePlan;
  const auto r = pl::run_pipeline(cfg_).report;
  const auto cmp = pl::compare_reports(r, r);
  ASSERT_GT(cmp.metric.size(), 7u);
  for (std::size_t i = 0; i < cmp.metric.size(); ++i) EXPECT_EQ(cmp.a[i], cmp.b[i]) << cmp.metric[i];
  EXPECT_NE(cmp.csv().find("cost_total"), std::string::npos);
}

TEST_F(PipelineTest, MismatchedReportsRejected) {
  cfg_.mode = pl::Mode::kEvaluatePlan;
  const auto r = pl::run_pipeline(cfg_).report;
  auto other_case = r;
  other_case["case"] = "other";
  EXPECT_THROW(pl::compare_reports(r, other_case), pl::ConfigError);
  auto other_grid = r;
  other_grid["grid"]["t_c"] = 99;
  EXPECT_THROW(pl::compare_reports(r, other_grid), pl::ConfigError);
  auto broken = r;
  broken.erase("costs");
  EXPECT_THROW(pl::compare_reports(r, broken), pl::ConfigError);
}

TEST_F(PipelineTest, SmallSearchBeatsNoHardening) {
  cfg_.mode = pl::Mode::kNoHardening;
  const auto base = pl::run_pipeline(cfg_).report;
  cfg_.mode = pl::Mode::kFull;
  cfg_.de.n_p = 6;
  cfg_.de.n_g = 6;
  const auto out = pl::run_pipeline(cfg_);
  ASSERT_TRUE(out.search);
  EXPECT_TRUE(out.search->feasible);
  EXPECT_LE(out.report["poles_replaced"].get<int>(), cfg_.budget_hardening);
  EXPECT_LE(out.report["costs"]["total"].get<double>(), base["costs"]["total"].get<double>() + 1e-6);
  EXPECT_TRUE(fs::exists(cfg_.out_dir + "/trace.csv"));
  EXPECT_EQ(static_cast<int>(out.search->trace.size()), cfg_.de.n_g + 1);
}

TEST_F(PipelineTest, StageModelsExport) {
  pl::Context ctx(cfg_);
  const std::vector<int> x(ctx.network().num_lines(), 0);
  for (auto s : {pl::Stage::kShock, pl::Stage::kSelfHeal, pl::Stage::kRecovery}) {
    const auto p = pl::stage_milp(ctx, x, s);
    EXPECT_GT(p.num_vars(), 0);
    std::istringstream text(resilience::milp::to_lp_string(p));
    const auto back = resilience::milp::read_lp(text);
    EXPECT_EQ(back.num_vars(), p.num_vars());
    EXPECT_EQ(back.num_rows(), p.num_rows());
  }
  EXPECT_THROW(pl::parse_stage("everything"), pl::ConfigError);
}
