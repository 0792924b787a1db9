#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "de_problems.hpp"
#include "resilience/dicde/dicde.hpp"

namespace de = resilience::dicde;

namespace {

std::vector<de::Individual> constant_population(int n, int d) {
  std::vector<de::Individual> pop;
  for (int i = 0; i < n; ++i) pop.push_back({std::vector<int>(d, i), double(i), 0.0});
  return pop;
}

}  // namespace

TEST(Repair, RoundsThenClamps) {
  EXPECT_EQ(de::repair({-3.0, 7.0, 2.4, 2.6}, {5, 5, 5, 5}), (std::vector<int>{0, 5, 2, 3}));
  EXPECT_EQ(de::repair({6.0 + 2}, {6}), (std::vector<int>{6}));
}

TEST(Params, Validation) {
  de::DeParams p;
  EXPECT_NO_THROW(p.validate());
  p.n_p = 3;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.f_s = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.c_r = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Offspring, ZeroScaleGivesBaseVectorAfterCrossover) {
  const auto pop = constant_population(6, 8);
  de::DeParams prm;
  prm.f_s = 0.0;
  prm.c_r = 0.5;
  const std::vector<int> upper(8, 10);
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto t = de::make_trial(pop, 2, 0, de::Strategy::kRand1, prm, upper, rng);
    std::set<int> values(t.begin(), t.end());
    values.erase(2);
    // Everything not inherited from the parent comes from one base vector.
    ASSERT_EQ(values.size(), 1u);
    EXPECT_NE(*values.begin(), 2);
  }
}

TEST(Offspring, FullCrossoverTakesTheWholeMutant) {
  const auto pop = constant_population(6, 8);
  de::DeParams prm;
  prm.f_s = 0.0;
  prm.c_r = 1.0;
  std::mt19937_64 rng(3);
  const auto t = de::make_trial(pop, 4, 0, de::Strategy::kRand1, prm, std::vector<int>(8, 10), rng);
  EXPECT_EQ(std::set<int>(t.begin(), t.end()).size(), 1u);
  EXPECT_NE(t.front(), 4);
}

TEST(Offspring, ZeroCrossoverChangesExactlyOneComponent) {
  const auto pop = constant_population(6, 8);
  de::DeParams prm;
  prm.c_r = 0.0;
  std::mt19937_64 rng(9);
  const auto t = de::make_trial(pop, 1, 0, de::Strategy::kRand2, prm, std::vector<int>(8, 100), rng);
  int changed = 0;
  for (int v : t) changed += v != 1;
  EXPECT_LE(changed, 1);
}

TEST(Offspring, ThreePerParentAndReproducible) {
  std::vector<de::Individual> pop;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 7; ++i) {
    std::vector<int> x(6);
    for (auto& v : x) v = static_cast<int>(rng() % 10);
    pop.push_back({x, double(i), 0.0});
  }
  de::DeParams prm;
  const std::vector<int> upper(6, 9);
  const auto a = de::generate_offspring(pop, prm, upper, 4);
  const auto b = de::generate_offspring(pop, prm, upper, 4);
  EXPECT_EQ(a.size(), 21u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, de::generate_offspring(pop, prm, upper, 5));
  int differs = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    differs += a[k] != pop[k / 3].x;
    for (std::size_t j = 0; j < a[k].size(); ++j) {
      EXPECT_GE(a[k][j], 0);
      EXPECT_LE(a[k][j], 9);
    }
  }
  EXPECT_GT(differs, 0);
}

TEST(Select, AllFeasibleKeepsLowestObjectives) {
  std::vector<de::Individual> pool;
  for (double f : {5.0, 1.0, 4.0, 2.0, 3.0}) pool.push_back({{0}, f, 0.0});
  const auto s = de::select(pool, 3);
  EXPECT_EQ(s[0].objective, 1.0);
  EXPECT_EQ(s[1].objective, 2.0);
  EXPECT_EQ(s[2].objective, 3.0);
}

TEST(Select, AllInfeasibleKeepsLowestViolations) {
  std::vector<de::Individual> pool;
  for (double v : {5.0, 1.0, 4.0, 2.0}) pool.push_back({{0}, -100.0 * v, v});
  const auto s = de::select(pool, 2);
  EXPECT_EQ(s[0].violation, 1.0);
  EXPECT_EQ(s[1].violation, 2.0);
}

TEST(Select, TiesKeepInsertionOrder) {
  std::vector<de::Individual> pool{{{1}, 2.0, 0.0}, {{2}, 2.0, 0.0}, {{3}, 2.0, 0.0}};
  const auto s = de::select(pool, 2);
  EXPECT_EQ(s[0].x, std::vector<int>{1});
  EXPECT_EQ(s[1].x, std::vector<int>{2});
}

TEST(Select, ClonesRankBehindDistinctVectors) {
  std::vector<de::Individual> pool{{{1}, 1.0, 0.0}, {{1}, 1.0, 0.0}, {{2}, 5.0, 0.0}};
  const auto s = de::select(pool, 2);
  EXPECT_EQ(s[1].x, std::vector<int>{2});
  EXPECT_EQ(de::select(pool, 3)[2].x, std::vector<int>{1});
  // A feasible clone still outranks a distinct infeasible vector.
  pool.push_back({{3}, 0.0, 2.0});
  EXPECT_EQ(de::select(pool, 3)[2].x, std::vector<int>{1});
}

TEST(Select, NeverDropsFeasibleForInfeasible) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<de::Individual> pool;
    for (int i = 0; i < 16; ++i) {
      pool.push_back({{i % 11}, 100 * unit(rng), unit(rng) < 0.5 ? 0.0 : 10 * unit(rng)});
    }
    const auto s = de::select(pool, 4);
    int feasible_in_pool = 0, feasible_kept = 0;
    for (const auto& ind : pool) feasible_in_pool += ind.feasible();
    for (const auto& ind : s) feasible_kept += ind.feasible();
    EXPECT_EQ(feasible_kept, std::min(4, feasible_in_pool));
  }
}

TEST(Evaluator, CachesAndRecordsFailures) {
  int calls = 0;
  de::Evaluator ev(
      [&](const std::vector<int>& x) -> de::Evaluation {
        ++calls;
        if (x[0] == 7) throw std::runtime_error("stage failed");
        return {double(x[0]), 0.0, ""};
      },
      1);
  const auto a = ev.evaluate({{1}, {2}, {1}, {7}});
  EXPECT_EQ(calls, 3);
  EXPECT_TRUE(std::isinf(a[3].objective));
  ev.evaluate({{2}, {3}});
  EXPECT_EQ(calls, 4);
  EXPECT_EQ(ev.cache_hits(), 2);
  ASSERT_EQ(ev.failures().size(), 1u);
  EXPECT_EQ(ev.failures()[0], "stage failed");
}

TEST(Run, ZeroGenerationsReturnsBestInitial) {
  const oracle::Quadratic q;
  de::DeParams prm;
  prm.n_p = 10;
  prm.n_g = 0;
  const auto r = de::run(prm, q.upper, q);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.evaluations, 10);
  if (r.feasible) EXPECT_DOUBLE_EQ(r.best.objective, r.trace[0].best);
}

TEST(Run, FindsQuadraticOptimumInNineteenOfTwentySeeds) {
  const oracle::Quadratic q;
  const double opt = q.optimum();
  int hits = 0;
  for (int seed = 1; seed <= 20; ++seed) {
    de::DeParams prm;
    prm.n_p = 20;
    prm.n_g = 100;
    prm.seed = seed;
    prm.threads = 1;
    const auto r = de::run(prm, q.upper, q);
    hits += r.feasible && std::abs(r.best.objective - opt) < 1e-9;
    for (std::size_t g = 1; g < r.trace.size(); ++g) {
      EXPECT_LE(r.trace[g].best, r.trace[g - 1].best);
    }
  }
  std::cout << "optimum " << opt << " found in " << hits << "/20 runs\n";
  EXPECT_GE(hits, 19);
}

TEST(Run, SameSeedSameRunAcrossThreadCounts) {
  const oracle::Quadratic q;
  de::DeParams prm;
  prm.n_p = 8;
  prm.n_g = 15;
  prm.seed = 42;
  prm.threads = 1;
  const auto a = de::run(prm, q.upper, q);
  prm.threads = 4;
  const auto b = de::run(prm, q.upper, q);
  EXPECT_EQ(a.best.x, b.best.x);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t g = 0; g < a.trace.size(); ++g) {
    EXPECT_EQ(a.trace[g].best, b.trace[g].best);
    EXPECT_EQ(a.trace[g].median, b.trace[g].median);
  }
}

TEST(Run, InfeasibleEverywhereReturnsLeastViolating) {
  de::DeParams prm;
  prm.n_p = 6;
  prm.n_g = 10;
  const auto r = de::run(prm, {5, 5}, [](const std::vector<int>& x) {
    return de::Evaluation{0.0, 1.0 + x[0] + x[1], ""};
  });
  EXPECT_FALSE(r.feasible);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_EQ(r.best.x, (std::vector<int>{0, 0}));
}
