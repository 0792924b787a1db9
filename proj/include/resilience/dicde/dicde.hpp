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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace resilience::dicde {

struct DeParams {
  int n_p = 20;      // population size
  double f_s = 0.8;  // scale factor
  double c_r = 0.7;  // crossover rate
  int n_g = 400;     // generations
  std::uint64_t seed = 1;
  int threads = 0;   // 0: one per hardware thread

  void validate() const {
    if (n_p < 4) throw std::invalid_argument("population size must be >= 4");
    if (!(f_s > 0.0 && f_s <= 2.0)) {
      throw std::invalid_argument("scale factor must lie in (0, 2]");
    }
    if (!(c_r >= 0.0 && c_r <= 1.0)) throw std::invalid_argument("crossover rate must lie in [0, 1]");
    if (n_g < 0) throw std::invalid_argument("generation count must be >= 0");
  }
};

struct Evaluation {
  double objective = std::numeric_limits<double>::infinity();
  double violation = 0.0;
  std::string error;  // non-empty when the evaluation failed
};

struct Individual {
  std::vector<int> x;
  double objective = std::numeric_limits<double>::infinity();
  double violation = 0.0;

  bool feasible() const { return violation <= 0.0; }
};

// Deb's feasibility rules: feasible beats infeasible, then lower objective
// among feasible, lower violation among infeasible.
inline bool deb_better(const Individual& a, const Individual& b) {
  if (a.feasible() != b.feasible()) return a.feasible();
  if (a.feasible()) return a.objective < b.objective;
  return a.violation < b.violation;
}

enum class Strategy { kRand1, kCurrentToBest1, kRand2 };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kRand1: return "rand/1/bin";
    case Strategy::kCurrentToBest1: return "current-to-best/1/bin";
    case Strategy::kRand2: return "rand/2/bin";
  }
  return "?";
}

// Round to nearest, then clamp into [0, upper].
inline std::vector<int> repair(const std::vector<double>& v, const std::vector<int>& upper) {
  std::vector<int> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double r = std::round(v[j]);
    out[j] = static_cast<int>(std::clamp(r, 0.0, static_cast<double>(upper[j])));
  }
  return out;
}

// Per-individual stream so a generation's trials do not depend on the order
// in which anything else draws.
inline std::mt19937_64 stream(std::uint64_t seed, int generation, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(generation), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

// Distinct indices different from `self` while the population allows it.
inline std::vector<int> pick_others(int n, int self, int count, std::mt19937_64& rng) {
  std::vector<int> pool;
  for (int i = 0; i < n; ++i) {
    if (i != self) pool.push_back(i);
  }
  std::vector<int> out;
  for (int c = 0; c < count; ++c) {
    if (pool.empty()) {
      for (int i = 0; i < n; ++i) {
        if (i != self) pool.push_back(i);
      }
    }
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    const std::size_t k = d(rng);
    out.push_back(pool[k]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

// One trial vector for parent i: mutation, binomial crossover (one component
// always from the mutant), repair.
inline std::vector<int> make_trial(const std::vector<Individual>& pop, int i, int best,
                                   Strategy s, const DeParams& prm,
                                   const std::vector<int>& upper, std::mt19937_64& rng) {
  const int n = static_cast<int>(pop.size());
  const int d = static_cast<int>(upper.size());
  const auto& xi = pop[i].x;
  std::vector<double> v(d);
  const double f = prm.f_s;
  switch (s) {
    case Strategy::kRand1: {
      const auto r = pick_others(n, i, 3, rng);
      for (int j = 0; j < d; ++j) {
        v[j] = pop[r[0]].x[j] + f * (pop[r[1]].x[j] - pop[r[2]].x[j]);
      }
      break;
    }
    case Strategy::kCurrentToBest1: {
      const auto r = pick_others(n, i, 2, rng);
      for (int j = 0; j < d; ++j) {
        v[j] = xi[j] + f * (pop[best].x[j] - xi[j]) + f * (pop[r[0]].x[j] - pop[r[1]].x[j]);
      }
      break;
    }
    case Strategy::kRand2: {
      const auto r = pick_others(n, i, 5, rng);
      for (int j = 0; j < d; ++j) {
        v[j] = pop[r[0]].x[j] + f * (pop[r[1]].x[j] - pop[r[2]].x[j]) +
               f * (pop[r[3]].x[j] - pop[r[4]].x[j]);
      }
      break;
    }
  }
  std::uniform_int_distribution<int> pick_j(0, d - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int forced = d > 0 ? pick_j(rng) : 0;
  std::vector<double> trial(d);
  for (int j = 0; j < d; ++j) {
    trial[j] = (j == forced || unit(rng) < prm.c_r) ? v[j] : xi[j];
  }
  return repair(trial, upper);
}

inline int best_index(const std::vector<Individual>& pop) {
  int b = 0;
  for (int i = 1; i < static_cast<int>(pop.size()); ++i) {
    if (deb_better(pop[i], pop[b])) b = i;
  }
  return b;
}

// Three trials per parent, one per strategy, in parent order.
inline std::vector<std::vector<int>> generate_offspring(const std::vector<Individual>& pop,
                                                        const DeParams& prm,
                                                        const std::vector<int>& upper,
                                                        int generation) {
  const int best = best_index(pop);
  std::vector<std::vector<int>> out;
  out.reserve(3 * pop.size());
  for (int i = 0; i < static_cast<int>(pop.size()); ++i) {
    auto rng = stream(prm.seed, generation, i);
    for (Strategy s : {Strategy::kRand1, Strategy::kCurrentToBest1, Strategy::kRand2}) {
      out.push_back(make_trial(pop, i, best, s, prm, upper, rng));
    }
  }
  return out;
}

// Keeps the n best under Deb's rules; ties keep the earlier individual.
// Within the feasible and within the infeasible group, repeated copies of a
// vector rank behind every distinct one so clones do not crowd out the
// population.
inline std::vector<Individual> select(const std::vector<Individual>& pool, int n) {
  std::vector<int> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return deb_better(pool[a], pool[b]); });
  std::vector<int> ranked;
  std::map<std::vector<int>, bool> seen;
  for (bool feasible : {true, false}) {
    std::vector<int> repeats;
    for (int i : order) {
      if (pool[i].feasible() != feasible) continue;
      if (seen.emplace(pool[i].x, true).second) {
        ranked.push_back(i);
      } else {
        repeats.push_back(i);
      }
    }
    ranked.insert(ranked.end(), repeats.begin(), repeats.end());
  }
  std::vector<Individual> out;
  for (int k = 0; k < n && k < static_cast<int>(ranked.size()); ++k) out.push_back(pool[ranked[k]]);
  return out;
}

using EvalFn = std::function<Evaluation(const std::vector<int>&)>;

// Memoized, parallel evaluation.  The evaluation function must be safe to
// call from several threads at once.
class Evaluator {
 public:
  Evaluator(EvalFn fn, int threads) : fn_(std::move(fn)), threads_(threads) {
    if (threads_ <= 0) threads_ = std::max(1u, std::thread::hardware_concurrency());
  }

  std::vector<Individual> evaluate(const std::vector<std::vector<int>>& xs) {
    std::vector<const std::vector<int>*> todo;
    {
      std::map<std::vector<int>, bool> queued;
      for (const auto& x : xs) {
        if (!cache_.count(x) && !queued.count(x)) {
          queued[x] = true;
          todo.push_back(&x);
        }
      }
    }
    std::vector<Evaluation> results(todo.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t k = next++; k < todo.size(); k = next++) {
        try {
          results[k] = fn_(*todo[k]);
        } catch (const std::exception& e) {
          results[k].objective = std::numeric_limits<double>::infinity();
          results[k].error = e.what();
        }
      }
    };
    const int nt = std::min<int>(threads_, static_cast<int>(todo.size()));
    if (nt <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nt; ++t) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }
    for (std::size_t k = 0; k < todo.size(); ++k) {
      if (!results[k].error.empty()) {
        failures_.push_back(results[k].error);
        if (std::isfinite(results[k].objective)) {
          results[k].objective = std::numeric_limits<double>::infinity();
        }
      }
      cache_[*todo[k]] = results[k];
    }
    evaluations_ += static_cast<long>(todo.size());
    hits_ += static_cast<long>(xs.size() - todo.size());
    std::vector<Individual> out;
    for (const auto& x : xs) {
      const Evaluation& e = cache_.at(x);
      out.push_back({x, e.objective, std::max(0.0, e.violation)});
    }
    return out;
  }

  long evaluations() const { return evaluations_; }
  long cache_hits() const { return hits_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  EvalFn fn_;
  int threads_;
  std::map<std::vector<int>, Evaluation> cache_;
  long evaluations_ = 0;
  long hits_ = 0;
  std::vector<std::string> failures_;
};

struct TraceRow {
  int generation = 0;
  double best = 0.0;        // best objective among feasible, inf if none
  double median = 0.0;      // median objective of the feasible individuals, inf if none
  double min_violation = 0.0;
  int infeasible = 0;       // individuals violating the constraint
};

struct DeResult {
  Individual best;
  bool feasible = false;
  std::vector<TraceRow> trace;
  long evaluations = 0;
  long cache_hits = 0;
  std::vector<std::string> failures;
  std::string warning;
};

inline TraceRow trace_row(int g, const std::vector<Individual>& pop) {
  TraceRow r;
  r.generation = g;
  r.best = std::numeric_limits<double>::infinity();
  r.min_violation = std::numeric_limits<double>::infinity();
  std::vector<double> obj;
  for (const auto& ind : pop) {
    if (ind.feasible()) r.best = std::min(r.best, ind.objective);
    if (!ind.feasible()) ++r.infeasible;
    r.min_violation = std::min(r.min_violation, ind.violation);
    if (ind.feasible()) obj.push_back(ind.objective);
  }
  if (obj.empty()) {
    r.median = std::numeric_limits<double>::infinity();
    return r;
  }
  std::sort(obj.begin(), obj.end());
  const std::size_t m = obj.size() / 2;
  r.median = obj.size() % 2 ? obj[m] : 0.5 * (obj[m - 1] + obj[m]);
  return r;
}

// Initial population drawn uniformly from the box, then n_g generations of
// three trials per parent and selection over parents plus trials.
inline DeResult run(const DeParams& prm, const std::vector<int>& upper, const EvalFn& fn,
                    const std::function<void(const TraceRow&)>& on_generation = {}) {
  prm.validate();
  for (int u : upper) {
    if (u < 0) throw std::invalid_argument("upper bounds must be >= 0");
  }
  Evaluator ev(fn, prm.threads);
  std::vector<std::vector<int>> init;
  for (int i = 0; i < prm.n_p; ++i) {
    auto rng = stream(prm.seed, -1, i);
    std::vector<int> x(upper.size());
    for (std::size_t j = 0; j < upper.size(); ++j) {
      x[j] = std::uniform_int_distribution<int>(0, upper[j])(rng);
    }
    init.push_back(std::move(x));
  }
  std::vector<Individual> pop = ev.evaluate(init);
  DeResult res;
  res.trace.push_back(trace_row(0, pop));
  if (on_generation) on_generation(res.trace.back());
  for (int g = 1; g <= prm.n_g; ++g) {
    auto trials = ev.evaluate(generate_offspring(pop, prm, upper, g));
    std::vector<Individual> pool = pop;
    pool.insert(pool.end(), trials.begin(), trials.end());
    pop = select(pool, prm.n_p);
    res.trace.push_back(trace_row(g, pop));
    if (on_generation) on_generation(res.trace.back());
  }
  res.best = pop[best_index(pop)];
  res.feasible = res.best.feasible();
  if (!res.feasible) res.warning = "no feasible individual found; returning the least violating";
  res.evaluations = ev.evaluations();
  res.cache_hits = ev.cache_hits();
  res.failures = ev.failures();
  return res;
}

}  // namespace resilience::dicde
