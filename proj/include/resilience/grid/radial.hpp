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

#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "resilience/grid/network.hpp"

namespace resilience::grid {

struct ForestReport {
  bool radial = true;
  // Each cycle is the list of energized lines forming it.
  std::vector<std::vector<int>> cycles;
  // Components holding a load bus and more than one root (bus lists).
  std::vector<std::vector<int>> multi_root_components;
  // Buses with more than one parent under a supplied orientation.
  std::vector<int> multi_parent_buses;
  std::vector<std::string> violations;
};

namespace detail {

inline int find_root(std::vector<int>& uf, int a) {
  while (uf[a] != a) {
    uf[a] = uf[uf[a]];
    a = uf[a];
  }
  return a;
}

}  // namespace detail

// `closed[l]` is true when line l is energized.  The energized subgraph must
// be a forest and no component with load may hold two roots.
inline ForestReport check_radial(const Network& net, const std::vector<bool>& closed) {
  ForestReport rep;
  const int nb = net.num_buses();
  const int nl = net.num_lines();
  if (static_cast<int>(closed.size()) != nl) {
    rep.radial = false;
    rep.violations.push_back("status vector length does not match line count");
    return rep;
  }
  std::vector<int> uf(nb);
  std::iota(uf.begin(), uf.end(), 0);
  std::vector<int> tree_lines;
  std::vector<int> extra;
  for (int l = 0; l < nl; ++l) {
    if (!closed[l]) continue;
    const int a = detail::find_root(uf, net.lines[l].from);
    const int b = detail::find_root(uf, net.lines[l].to);
    if (a == b) {
      extra.push_back(l);
    } else {
      uf[a] = b;
      tree_lines.push_back(l);
    }
  }
  // Each non-forest edge closes exactly one fundamental cycle.
  if (!extra.empty()) {
    std::vector<std::vector<int>> adj(nb);
    for (int l : tree_lines) {
      adj[net.lines[l].from].push_back(l);
      adj[net.lines[l].to].push_back(l);
    }
    for (int e : extra) {
      const int src = net.lines[e].from;
      const int dst = net.lines[e].to;
      std::vector<int> via(nb, -2);
      std::queue<int> q;
      q.push(src);
      via[src] = -1;
      while (!q.empty() && via[dst] == -2) {
        const int b = q.front();
        q.pop();
        for (int l : adj[b]) {
          const int o = net.lines[l].from == b ? net.lines[l].to : net.lines[l].from;
          if (via[o] == -2) {
            via[o] = l;
            q.push(o);
          }
        }
      }
      std::vector<int> cyc{e};
      for (int b = dst; via[b] >= 0;) {
        const int l = via[b];
        cyc.push_back(l);
        b = net.lines[l].from == b ? net.lines[l].to : net.lines[l].from;
      }
      std::string msg = "cycle through lines";
      for (int l : cyc) msg += " " + net.lines[l].id;
      rep.violations.push_back(msg);
      rep.cycles.push_back(std::move(cyc));
    }
  }
  std::vector<std::vector<int>> comp(nb);
  for (int b = 0; b < nb; ++b) comp[detail::find_root(uf, b)].push_back(b);
  for (const auto& c : comp) {
    int n_roots = 0;
    bool has_load = false;
    for (int b : c) {
      n_roots += net.buses[b].is_root ? 1 : 0;
      has_load = has_load || net.buses[b].p_kw > 0 || net.buses[b].q_kvar > 0;
    }
    if (n_roots > 1 && has_load) {
      rep.violations.push_back("component with " + std::to_string(n_roots) +
                               " roots around bus " + net.buses[c.front()].id);
      rep.multi_root_components.push_back(c);
    }
  }
  rep.radial = rep.violations.empty();
  return rep;
}

// Same check plus an explicit orientation: parent_is_from[l] says whether the
// from-bus is the parent of the to-bus on energized line l.  Roots may not
// have parents and no bus may have two.
inline ForestReport check_radial(const Network& net, const std::vector<bool>& closed,
                                 const std::vector<bool>& parent_is_from) {
  ForestReport rep = check_radial(net, closed);
  if (static_cast<int>(parent_is_from.size()) != net.num_lines()) {
    rep.radial = false;
    rep.violations.push_back("orientation vector length does not match line count");
    return rep;
  }
  std::vector<int> parents(net.num_buses(), 0);
  for (int l = 0; l < net.num_lines(); ++l) {
    if (!closed[l]) continue;
    const int child = parent_is_from[l] ? net.lines[l].to : net.lines[l].from;
    ++parents[child];
  }
  for (int b = 0; b < net.num_buses(); ++b) {
    if (parents[b] > 1 || (parents[b] > 0 && net.buses[b].is_root)) {
      rep.multi_parent_buses.push_back(b);
      rep.violations.push_back("bus " + net.buses[b].id + " has " +
                               std::to_string(parents[b]) + " parents" +
                               (net.buses[b].is_root ? " (root)" : ""));
    }
  }
  rep.radial = rep.violations.empty();
  return rep;
}

// Energized status of the base topology: normally open lines off.
inline std::vector<bool> base_status(const Network& net) {
  std::vector<bool> s(net.num_lines());
  for (int l = 0; l < net.num_lines(); ++l) s[l] = !net.lines[l].normally_open;
  return s;
}

}  // namespace resilience::grid
