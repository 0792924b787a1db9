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

#include <stdexcept>
#include <vector>

#include "resilience/grid/network.hpp"

namespace resilience::pipeline {

// Share of demand served in one hour, percent: 100 (1 - sum rho Pld / sum Pld).
// Zero total demand counts as fully served.
inline double performance(const grid::Network& net, const std::vector<double>& rho, int t = 0) {
  if (static_cast<int>(rho.size()) != net.num_buses()) {
    throw std::invalid_argument("shed vector length does not match bus count");
  }
  const double mult = net.demand_multiplier(t);
  double total = 0.0, shed = 0.0;
  for (int b = 0; b < net.num_buses(); ++b) {
    total += net.buses[b].p_kw * mult;
    shed += rho[b] * net.buses[b].p_kw * mult;
  }
  if (total <= 0.0) return 100.0;
  return 100.0 * (1.0 - shed / total);
}

// Area under a step performance curve divided by the window length.  The
// curve holds one value per unit interval [t, t + 1), t = t_e .. t_c - 1.
inline double resilience_index(const std::vector<double>& curve) {
  if (curve.empty()) throw std::invalid_argument("empty performance curve");
  double area = 0.0;
  for (double v : curve) area += v;
  return area / static_cast<double>(curve.size());
}

}  // namespace resilience::pipeline
