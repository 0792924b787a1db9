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

#include <cmath>
#include <stdexcept>
#include <vector>

namespace resilience::repair {

// Exact pmf of the number of successes among independent Bernoulli trials
// with probabilities `probs`, by iterative convolution.  Entry k is P(N = k).
inline std::vector<double> pb_pmf(const std::vector<double>& probs) {
  if (probs.size() > 10000) throw std::invalid_argument("too many trials for exact pmf");
  std::vector<double> pmf{1.0};
  pmf.reserve(probs.size() + 1);
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
    pmf.push_back(0.0);
    for (std::size_t k = pmf.size() - 1; k > 0; --k) {
      pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    }
    pmf[0] *= 1.0 - p;
  }
  return pmf;
}

// Distribution of N given N >= 1.  Entry i is P(N = i + 1 | N >= 1).
inline std::vector<double> pb_conditional_geq1(const std::vector<double>& pmf) {
  if (pmf.empty()) throw std::invalid_argument("empty pmf");
  double tail = 0.0;
  for (std::size_t k = 1; k < pmf.size(); ++k) tail += pmf[k];
  if (!(tail > 0.0)) throw std::domain_error("cannot condition on N >= 1: event has probability 0");
  std::vector<double> out(pmf.begin() + 1, pmf.end());
  for (double& v : out) v /= tail;
  return out;
}

inline double pmf_mean(const std::vector<double>& pmf, int first_count = 0) {
  double m = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) m += (first_count + static_cast<double>(k)) * pmf[k];
  return m;
}

inline double pmf_variance(const std::vector<double>& pmf, int first_count = 0) {
  const double m = pmf_mean(pmf, first_count);
  double v = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const double d = first_count + static_cast<double>(k) - m;
    v += d * d * pmf[k];
  }
  return v;
}

// Expected crew-hours to repair a line known to have failed:
//     h_r * E[N | N >= 1] = h_r * sum(p) / (1 - prod(1 - p)).
inline double expected_repair_time(const std::vector<double>& probs, double h_r) {
  double sum = 0.0;
  double log_none = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
    sum += p;
    log_none += std::log1p(-p);
  }
  const double fail = -std::expm1(log_none);
  if (!(fail > 0.0)) throw std::domain_error("line with all-zero pole probabilities cannot fail");
  return h_r * sum / fail;
}

}  // namespace resilience::repair
