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

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "resilience/grid/case_io.hpp"
#include "resilience/milp/lp_format.hpp"
#include "resilience/pipeline/pipeline.hpp"

namespace pl = resilience::pipeline;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

// Parses "3,0,1,..." or "@file" where the file holds a JSON array or a
// report with a "plan" entry.
std::vector<int> parse_plan(const std::string& text) {
  if (text.empty()) return {};
  if (text[0] == '@') {
    const json doc = pl::load_json(text.substr(1));
    try {
      return doc.is_array() ? doc.get<std::vector<int>>() : doc.at("plan").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw pl::ConfigError("plan file: " + std::string(e.what()));
    }
  }
  std::vector<int> plan;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      plan.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw pl::ConfigError("bad plan entry '" + item + "'");
    }
  }
  return plan;
}

// Flags that mirror RunConfig.  Values given on the command line override
// the config file, which overrides the defaults.
class ConfigFlags {
 public:
  void attach(CLI::App* app, bool with_de) {
    app->add_option("--config", config_file_, "JSON config file")->check(CLI::ExistingFile);
    flag(app, "--case", "case file", &pl::RunConfig::case_path);
    flag(app, "--hazard", "hazard config file", &pl::RunConfig::hazard_path);
    flag(app, "--budget-hardening", "pole replacement budget B_H", &pl::RunConfig::budget_hardening);
    flag(app, "--budget-uncertainty", "uncertainty budget B_U in bits",
         &pl::RunConfig::budget_uncertainty);
    flag(app, "--crews", "repair crews", &pl::RunConfig::crews);
    flag(app, "--repair-hours", "crew-hours per failed pole h_r",
         &pl::RunConfig::repair_hours_per_pole);
    nested(app, "--t-e", "event hour", &pl::RunConfig::grid, &opf_grid::t_e);
    nested(app, "--t-r", "recovery start hour", &pl::RunConfig::grid, &opf_grid::t_r);
    nested(app, "--t-c", "control hour", &pl::RunConfig::grid, &opf_grid::t_c);
    nested(app, "--c-h", "$ per replaced pole", &pl::RunConfig::costs, &costs::c_h);
    nested(app, "--c-rp", "$ per crew-hour", &pl::RunConfig::costs, &costs::c_rp);
    nested(app, "--c-tr", "$ per crew dispatch", &pl::RunConfig::costs, &costs::c_tr);
    auto* cld = app->add_option("--c-ld", c_ld_, "$/kWh shed at every bus");
    setters_.push_back([this, cld](pl::RunConfig& c) {
      if (cld->count()) c.costs.c_ld = c_ld_;
    });
    flag(app, "--out", "output directory", &pl::RunConfig::out_dir);
    nested(app, "--threads", "evaluation threads, 0 = hardware", &pl::RunConfig::de, &de::threads);
    if (with_de) {
      nested(app, "--n-p", "DE population", &pl::RunConfig::de, &de::n_p);
      nested(app, "--f-s", "DE scale factor", &pl::RunConfig::de, &de::f_s);
      nested(app, "--c-r", "DE crossover rate", &pl::RunConfig::de, &de::c_r);
      nested(app, "--n-g", "DE generations", &pl::RunConfig::de, &de::n_g);
      nested(app, "--seed", "DE seed", &pl::RunConfig::de, &de::seed);
    }
  }

  pl::RunConfig build() const {
    pl::RunConfig c;
    if (!config_file_.empty()) pl::apply_config_json(c, pl::load_json(config_file_));
    for (const auto& s : setters_) s(c);
    return c;
  }

 private:
  using opf_grid = resilience::opf::TimeGrid;
  using costs = pl::CostCoefficients;
  using de = resilience::dicde::DeParams;

  template <typename T>
  void flag(CLI::App* app, const std::string& name, const std::string& help,
            T pl::RunConfig::*field) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, help);
    setters_.push_back([opt, value, field](pl::RunConfig& c) {
      if (opt->count()) c.*field = *value;
    });
  }

  template <typename S, typename T>
  void nested(CLI::App* app, const std::string& name, const std::string& help,
              S pl::RunConfig::*outer, T S::*field) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, help);
    setters_.push_back([opt, value, outer, field](pl::RunConfig& c) {
      if (opt->count()) (c.*outer).*field = *value;
    });
  }

  std::string config_file_;
  double c_ld_ = 0.0;
  std::vector<std::function<void(pl::RunConfig&)>> setters_;
};

void print_summary(const json& r) {
  std::cout << std::setprecision(10);
  std::cout << "case " << r.value("case", "") << ", mode " << r.value("mode", "") << "\n";
  if (r.contains("damage")) {
    std::cout << "failed lines:";
    for (const auto& l : r["damage"]["failed_lines"]) std::cout << " " << l.get<std::string>();
    std::cout << "\n";
  }
  for (const auto& [k, v] : r["costs"].items()) {
    std::cout << "  " << k << ": " << v.get<double>() << "\n";
  }
  if (r.contains("resilience_percent")) {
    std::cout << "resilience: " << r["resilience_percent"].get<double>() << " %\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hardening, shock and restoration planning for distribution feeders"};
  app.require_subcommand(1);

  ConfigFlags run_flags, eval_flags, shock_flags, export_flags;
  std::string mode = "full", plan_text, stage = "shock", lp_path = "model.lp", solve_with;
  bool frozen = false, quiet = false;
  std::vector<std::string> reports;
  std::string compare_out;

  auto* run = app.add_subcommand("run", "run a pipeline mode");
  run_flags.attach(run, true);
  run->add_option("--mode", mode, "full | shock-only | evaluate-plan | no-hardening-baseline | "
                                  "frozen-switch-baseline");
  run->add_option("--plan", plan_text, "poles replaced per line: a,b,... or @file");
  run->add_flag("--quiet", quiet, "no per-generation progress");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate one hardening plan");
  eval_flags.attach(evaluate, false);
  evaluate->add_option("--plan", plan_text, "poles replaced per line: a,b,... or @file");
  evaluate->add_flag("--frozen", frozen, "keep tie switches in their normal state");

  auto* shock = app.add_subcommand("shock", "worst-case damage for one hardening plan");
  shock_flags.attach(shock, false);
  shock->add_option("--plan", plan_text, "poles replaced per line: a,b,... or @file");

  auto* compare = app.add_subcommand("compare", "compare two report.json files");
  compare->add_option("reports", reports, "report files")->required()->expected(2);
  compare->add_option("--out", compare_out, "CSV output path (stdout if omitted)");

  auto* exp = app.add_subcommand("export-milp", "write a stage model in LP format");
  export_flags.attach(exp, false);
  exp->add_option("--stage", stage, "shock | self-heal | recovery");
  exp->add_option("--plan", plan_text, "poles replaced per line: a,b,... or @file");
  exp->add_option("--lp", lp_path, "output LP file");
  exp->add_option("--solve-with", solve_with,
                  "external solver command with {lp} and {sol} placeholders");
  exp->add_flag("--frozen", frozen, "keep tie switches in their normal state");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compare) {
      const auto c = pl::compare_reports(pl::load_json(reports[0]), pl::load_json(reports[1]));
      if (compare_out.empty()) {
        std::cout << c.csv();
      } else {
        pl::write_text(compare_out, c.csv());
      }
      return 0;
    }
    if (*exp) {
      auto cfg = export_flags.build();
      cfg.validate();
      pl::Context ctx(cfg);
      auto plan = parse_plan(plan_text);
      if (plan.empty()) plan.assign(ctx.network().num_lines(), 0);
      const auto sw = frozen ? resilience::opf::SwitchMode::kFrozen
                             : resilience::opf::SwitchMode::kFree;
      const auto p = pl::stage_milp(ctx, plan, pl::parse_stage(stage), sw);
      resilience::milp::write_lp_file(p, lp_path);
      std::cout << "wrote " << lp_path << " (" << p.num_vars() << " variables, "
                << p.num_rows() << " rows)\n";
      if (!solve_with.empty()) {
        const auto dir = std::filesystem::path(lp_path).parent_path();
        const auto sol = resilience::milp::solve_external(p, solve_with,
                                                          dir.empty() ? "." : dir.string());
        if (!sol.ok()) {
          std::cerr << "external solve failed: " << resilience::milp::to_string(sol.status)
                    << "\n";
          return kExitStage;
        }
        std::cout << "external objective " << std::setprecision(12) << sol.objective << "\n";
      }
      return 0;
    }

    pl::RunConfig cfg;
    if (*run) {
      cfg = run_flags.build();
      if (run->get_option("--mode")->count()) cfg.mode = pl::parse_mode(mode);
    } else if (*evaluate) {
      cfg = eval_flags.build();
      cfg.mode = frozen ? pl::Mode::kFrozenSwitch : pl::Mode::kEvaluatePlan;
    } else {
      cfg = shock_flags.build();
      cfg.mode = pl::Mode::kShockOnly;
    }
    if (!plan_text.empty()) cfg.plan = parse_plan(plan_text);
    const auto out = pl::run_pipeline(cfg, [&](const std::string& m) {
      if (!quiet) std::cerr << m << "\n";
    });
    print_summary(out.report);
    std::cout << "report written to " << cfg.out_dir << "/report.json\n";
    return 0;
  } catch (const pl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const resilience::grid::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const resilience::grid::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kExitStage;
  }
}
