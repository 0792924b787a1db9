#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "resilience/milp/branch_and_bound.hpp"
#include "resilience/milp/duality.hpp"
#include "resilience/milp/lp_format.hpp"

namespace rm = resilience::milp;

namespace {

rm::MilpProblem knapsack() {
  rm::MilpProblem p;
  p.set_objective_sense(rm::ObjSense::kMaximize);
  const int a = p.add_variable("a", 0, 1, rm::VarKind::kBinary, 3.0);
  const int b = p.add_variable("b", 0, 1, rm::VarKind::kBinary, 2.0);
  p.add_constraint("cap", {{a, 2.0}, {b, 1.0}}, rm::RowSense::kLessEqual, 2.0);
  return p;
}

}  // namespace

TEST(SolveLp, BoxMaximum) {
  rm::MilpProblem p;
  p.set_objective_sense(rm::ObjSense::kMaximize);
  const int x = p.add_variable("x", 0, rm::kInf, rm::VarKind::kContinuous, 1.0);
  const int y = p.add_variable("y", 0, rm::kInf, rm::VarKind::kContinuous, 1.0);
  p.add_constraint("cx", {{x, 1.0}}, rm::RowSense::kLessEqual, 1.0);
  p.add_constraint("cy", {{y, 1.0}}, rm::RowSense::kLessEqual, 1.0);
  const auto s = rm::solve_lp(p);
  ASSERT_EQ(s.status, rm::SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, 2.0, 1e-12);
  EXPECT_NEAR(s.x[x], 1.0, 1e-12);
  EXPECT_NEAR(s.x[y], 1.0, 1e-12);
}

TEST(SolveLp, ContradictoryBoundsAreInfeasible) {
  rm::MilpProblem p;
  const int x = p.add_variable("x", -rm::kInf, rm::kInf, rm::VarKind::kContinuous, 1.0);
  p.add_constraint("lo", {{x, 1.0}}, rm::RowSense::kGreaterEqual, 3.0);
  p.add_constraint("hi", {{x, 1.0}}, rm::RowSense::kLessEqual, 2.0);
  EXPECT_EQ(rm::solve_lp(p).status, rm::SolveStatus::kInfeasible);
}

TEST(SolveLp, DetectsUnboundedRay) {
  rm::MilpProblem p;
  const int x = p.add_variable("x", 0, rm::kInf, rm::VarKind::kContinuous, -1.0);
  const int y = p.add_variable("y", 0, rm::kInf, rm::VarKind::kContinuous, 0.0);
  p.add_constraint("r", {{x, 1.0}, {y, -1.0}}, rm::RowSense::kLessEqual, 1.0);
  EXPECT_EQ(rm::solve_lp(p).status, rm::SolveStatus::kUnbounded);
}

TEST(SolveLp, RandomInstancesMatchVertexEnumeration) {
  std::mt19937_64 rng(7);
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    auto p = oracle::random_problem(rng, n, 0, 2 + static_cast<int>(rng() % 4), false);
    const auto ref = oracle::lp_by_vertices(p, std::vector<double>(n, std::nan("")));
    const auto s = rm::solve_lp(p);
    if (!ref.feasible) {
      EXPECT_EQ(s.status, rm::SolveStatus::kInfeasible) << rm::to_lp_string(p);
      continue;
    }
    ASSERT_EQ(s.status, rm::SolveStatus::kOptimal) << rm::to_lp_string(p);
    EXPECT_NEAR(s.objective, ref.objective, 1e-8) << rm::to_lp_string(p);
    EXPECT_TRUE(rm::check_feasibility(p, s.x).feasible(1e-9));
    const auto d = rm::strong_duality_check(p, s.x, s.row_duals);
    EXPECT_TRUE(d.holds(1e-8)) << "gap " << d.objective_gap << " sign "
                               << d.max_dual_sign_violation << " cs "
                               << d.max_complementarity;
    ++solved;
  }
  EXPECT_GT(solved, 100);
}

TEST(SolveMilp, Knapsack) {
  const auto s = rm::solve_milp(knapsack());
  ASSERT_EQ(s.status, rm::SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, 3.0, 1e-12);
  EXPECT_NEAR(s.x[0], 1.0, 0.0);
  EXPECT_NEAR(s.x[1], 0.0, 0.0);
}

TEST(SolveMilp, IntegralRelaxationNeedsNoBranching) {
  rm::MilpProblem p;
  p.set_objective_sense(rm::ObjSense::kMaximize);
  const int a = p.add_variable("a", 0, 1, rm::VarKind::kBinary, 1.0);
  const int b = p.add_variable("b", 0, 1, rm::VarKind::kBinary, 1.0);
  p.add_constraint("c", {{a, 1.0}, {b, 1.0}}, rm::RowSense::kLessEqual, 1.0);
  const auto s = rm::solve_milp(p);
  const auto r = rm::solve_lp(p);
  ASSERT_EQ(s.status, rm::SolveStatus::kOptimal);
  EXPECT_EQ(s.nodes, 1);
  EXPECT_NEAR(s.objective, r.objective, 1e-12);
}

TEST(SolveMilp, RandomInstancesMatchEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 150; ++trial) {
    const int nd = 1 + static_cast<int>(rng() % 8);
    const int nc = static_cast<int>(rng() % 3);
    auto p = oracle::random_problem(rng, nc, nd, 1 + static_cast<int>(rng() % 4), true);
    const auto ref = oracle::milp_by_enumeration(p);
    const auto s = rm::solve_milp(p);
    if (!ref.feasible) {
      EXPECT_EQ(s.status, rm::SolveStatus::kInfeasible) << rm::to_lp_string(p);
      continue;
    }
    ASSERT_EQ(s.status, rm::SolveStatus::kOptimal) << rm::to_lp_string(p);
    EXPECT_NEAR(s.objective, ref.objective, 1e-8) << rm::to_lp_string(p);
    EXPECT_TRUE(rm::check_feasibility(p, s.x).feasible(1e-6));
  }
}

TEST(SolveMilp, IncumbentHistoryIsMonotone) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    auto p = oracle::random_problem(rng, 2, 10, 5, true);
    const auto s = rm::solve_milp(p);
    const double sgn = p.objective_sense() == rm::ObjSense::kMaximize ? -1.0 : 1.0;
    for (std::size_t k = 1; k < s.incumbent_history.size(); ++k) {
      EXPECT_LE(sgn * s.incumbent_history[k], sgn * s.incumbent_history[k - 1] + 1e-9);
    }
  }
}

TEST(LpFormat, KnapsackRoundTrip) {
  const auto p = knapsack();
  const std::string text = rm::to_lp_string(p);
  std::istringstream is(text);
  const auto q = rm::read_lp(is);
  EXPECT_EQ(rm::to_lp_string(q), text);
  ASSERT_EQ(q.num_vars(), 2);
  EXPECT_EQ(q.var(0).kind, rm::VarKind::kBinary);
  EXPECT_EQ(q.objective_sense(), rm::ObjSense::kMaximize);
  EXPECT_DOUBLE_EQ(q.row(0).rhs, 2.0);
}

TEST(LpFormat, EmptyObjectiveIsWritten) {
  rm::MilpProblem p;
  const int x = p.add_variable("x", -1.5, 2.0);
  p.add_constraint("c", {{x, 1.0}}, rm::RowSense::kGreaterEqual, -1.0);
  const std::string text = rm::to_lp_string(p);
  EXPECT_NE(text.find(" obj: \n"), std::string::npos);
  std::istringstream is(text);
  const auto q = rm::read_lp(is);
  EXPECT_EQ(rm::to_lp_string(q), text);
  EXPECT_DOUBLE_EQ(q.var(0).lb, -1.5);
}

TEST(LpFormat, RandomProblemsRoundTripExactly) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = oracle::random_problem(rng, 3, 4, 5, true);
    p.set_objective_offset(trial % 2 ? -2.5 : 0.0);
    p.set_bounds(0, 0, rm::kInf);
    const std::string text = rm::to_lp_string(p);
    std::istringstream is(text);
    const auto q = rm::read_lp(is);
    EXPECT_EQ(rm::to_lp_string(q), text);
    EXPECT_DOUBLE_EQ(q.objective_offset(), p.objective_offset());
  }
}

TEST(LpFormat, ReadsForeignLayout) {
  std::istringstream is(
      "\\ hand written\nmaximize\n  profit: 3 a + 2b\nst\n  2 a + b <= 2\n"
      "  c2: - a - b >= -5\nbounds\n  b <= 1\ngeneral\n  a\nend\n");
  const auto p = rm::read_lp(is);
  ASSERT_EQ(p.num_vars(), 2);
  EXPECT_EQ(p.num_rows(), 2);
  EXPECT_EQ(p.var(p.find("a")).kind, rm::VarKind::kInteger);
  EXPECT_DOUBLE_EQ(p.var(p.find("b")).ub, 1.0);
  EXPECT_DOUBLE_EQ(p.row(1).rhs, -5.0);
}

TEST(StrongDuality, PerturbedDualsAreFlagged) {
  rm::MilpProblem p;
  const int x = p.add_variable("x", 0, rm::kInf, rm::VarKind::kContinuous, 2.0);
  const int y = p.add_variable("y", 0, rm::kInf, rm::VarKind::kContinuous, 3.0);
  p.add_constraint("d", {{x, 1.0}, {y, 1.0}}, rm::RowSense::kGreaterEqual, 4.0);
  p.add_constraint("e", {{x, 1.0}}, rm::RowSense::kLessEqual, 3.0);
  const auto s = rm::solve_lp(p);
  ASSERT_EQ(s.status, rm::SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, 9.0, 1e-12);
  EXPECT_TRUE(rm::strong_duality_check(p, s.x, s.row_duals).holds());
  auto bad = s.row_duals;
  bad[0] += 0.5;
  EXPECT_FALSE(rm::strong_duality_check(p, s.x, bad).holds());
}

TEST(StrongDuality, RedundantRowKeepsEqualObjectives) {
  // The same cover row twice makes the optimal dual non-unique.
  rm::MilpProblem p;
  const int x = p.add_variable("x", 0, 5, rm::VarKind::kContinuous, 1.0);
  const int y = p.add_variable("y", 0, 5, rm::VarKind::kContinuous, 1.0);
  p.add_constraint("a", {{x, 1.0}, {y, 1.0}}, rm::RowSense::kGreaterEqual, 2.0);
  p.add_constraint("b", {{x, 1.0}, {y, 1.0}}, rm::RowSense::kGreaterEqual, 2.0);
  p.add_constraint("c", {{x, 2.0}, {y, 2.0}}, rm::RowSense::kGreaterEqual, 4.0);
  const auto s = rm::solve_lp(p);
  ASSERT_EQ(s.status, rm::SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, 2.0, 1e-12);
  const auto d = rm::strong_duality_check(p, s.x, s.row_duals);
  EXPECT_TRUE(d.holds(1e-9));
  EXPECT_NEAR(d.dual_objective, 2.0, 1e-9);
}

TEST(FeasibilityCheck, ReportsWorstRow) {
  const auto p = knapsack();
  const auto r = rm::check_feasibility(p, {1.0, 1.0});
  EXPECT_FALSE(r.feasible());
  EXPECT_EQ(r.worst_row, 0);
  EXPECT_NEAR(r.max_row_violation, 0.5, 1e-12);
}
