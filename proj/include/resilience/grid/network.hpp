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

#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace resilience::grid {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Pole {
  int cls = 3;                  // ANSI class 1..7
  double height_m = 12.0;
  double age_y = 0.0;
  double span_m = 43.9;
  double conductor_diameter_in = 0.563;
  int n_conductors = 3;

  // Wind-loaded conductor area carried by the pole, m^2.
  double conductor_area_m2() const {
    return conductor_diameter_in * 0.0254 * span_m * n_conductors;
  }
};

struct Bus {
  std::string id;
  double p_kw = 0.0;
  double q_kvar = 0.0;
  double shed_cost = 17.4;  // $/kWh
  bool is_root = false;
  double v_min = 0.95;
  double v_max = 1.05;
};

struct Line {
  std::string id;
  int from = -1;  // reference orientation: flows are nonnegative from -> to
  int to = -1;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double p_max_kw = 0.0;
  double q_max_kvar = 0.0;
  bool has_switch = false;
  bool normally_open = false;
  double length_m = 0.0;
  double azimuth_rad = 0.0;
  std::vector<Pole> poles;
};

struct DgUnit {
  int bus = -1;
  double p_max_kw = 0.0;
  double q_max_kvar = 0.0;
};

struct Bases {
  double voltage_kv = 12.66;
  double power_mva = 10.0;

  double z_base_ohm() const { return voltage_kv * voltage_kv / power_mva; }
  double s_base_kw() const { return power_mva * 1000.0; }
};

// Static distribution network.  Immutable once validated; the reference
// orientation of each line is its (from, to) order in the case file.
class Network {
 public:
  std::string name;
  Bases bases;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<DgUnit> dgs;
  // Per-hour demand multipliers; empty means constant demand.
  std::vector<double> load_profile;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_lines() const { return static_cast<int>(lines.size()); }

  int bus_index(const std::string& id) const {
    auto it = bus_lookup_.find(id);
    return it == bus_lookup_.end() ? -1 : it->second;
  }
  int line_index(const std::string& id) const {
    auto it = line_lookup_.find(id);
    return it == line_lookup_.end() ? -1 : it->second;
  }
  // Line between two buses in either orientation, or -1.
  int line_between(int a, int b) const {
    auto it = pair_lookup_.find(std::minmax(a, b));
    return it == pair_lookup_.end() ? -1 : it->second;
  }

  const std::vector<int>& lines_into(int bus) const { return into_.at(bus); }
  const std::vector<int>& lines_out_of(int bus) const { return out_.at(bus); }

  // Parent bus under the base (normally closed) topology, -1 for roots and
  // for buses only reachable through normally open lines.
  int parent(int bus) const { return parent_.at(bus); }
  const std::vector<int>& children(int bus) const { return children_.at(bus); }

  double dg_p_max(int bus) const { return dg_p_.at(bus); }
  double dg_q_max(int bus) const { return dg_q_.at(bus); }
  bool has_dg(int bus) const { return dg_p_.at(bus) > 0.0 || dg_q_.at(bus) > 0.0; }

  double demand_multiplier(int hour) const {
    if (load_profile.empty()) return 1.0;
    return load_profile[static_cast<std::size_t>(hour) % load_profile.size()];
  }
  double total_p_kw(int hour = 0) const {
    double s = 0.0;
    for (const Bus& b : buses) s += b.p_kw;
    return s * demand_multiplier(hour);
  }

  std::vector<int> roots() const {
    std::vector<int> r;
    for (int i = 0; i < num_buses(); ++i) {
      if (buses[i].is_root) r.push_back(i);
    }
    return r;
  }

  int total_poles() const {
    int n = 0;
    for (const Line& l : lines) n += static_cast<int>(l.poles.size());
    return n;
  }

  // Rebuilds indexes and checks every invariant; throws ValidationError.
  void finalize() {
    bus_lookup_.clear();
    line_lookup_.clear();
    pair_lookup_.clear();
    if (buses.empty()) throw ValidationError("network has no buses");
    for (int i = 0; i < num_buses(); ++i) {
      const Bus& b = buses[i];
      if (!bus_lookup_.emplace(b.id, i).second) {
        throw ValidationError("duplicate bus id '" + b.id + "'");
      }
      if (b.p_kw < 0 || b.q_kvar < 0) {
        throw ValidationError("bus '" + b.id + "': demands must be >= 0");
      }
      if (!(b.v_min < b.v_max)) {
        throw ValidationError("bus '" + b.id + "': voltage_min must be < voltage_max");
      }
      if (b.shed_cost < 0) {
        throw ValidationError("bus '" + b.id + "': shed cost must be >= 0");
      }
    }
    if (roots().empty()) throw ValidationError("no root bus flagged");
    into_.assign(num_buses(), {});
    out_.assign(num_buses(), {});
    for (int l = 0; l < num_lines(); ++l) {
      Line& ln = lines[l];
      if (!line_lookup_.emplace(ln.id, l).second) {
        throw ValidationError("duplicate line id '" + ln.id + "'");
      }
      if (ln.from < 0 || ln.to < 0 || ln.from >= num_buses() || ln.to >= num_buses()) {
        throw ValidationError("line '" + ln.id + "' references an unknown bus");
      }
      if (ln.from == ln.to) throw ValidationError("line '" + ln.id + "' is a self loop");
      if (!pair_lookup_.emplace(std::minmax(ln.from, ln.to), l).second) {
        throw ValidationError("duplicate line between buses '" + buses[ln.from].id +
                              "' and '" + buses[ln.to].id + "'");
      }
      if (ln.r_pu < 0 || ln.x_pu < 0) {
        throw ValidationError("line '" + ln.id + "': R and X must be >= 0");
      }
      if (!(ln.p_max_kw > 0) || !(ln.q_max_kvar > 0)) {
        throw ValidationError("line '" + ln.id + "': flow limits must be > 0");
      }
      if (ln.length_m < 0) throw ValidationError("line '" + ln.id + "': negative length");
      if (ln.normally_open && !ln.has_switch) {
        throw ValidationError("line '" + ln.id + "': normally open line needs a switch");
      }
      for (const Pole& p : ln.poles) {
        if (p.cls < 1 || p.cls > 7) {
          throw ValidationError("line '" + ln.id + "': pole class outside 1..7");
        }
        if (!(p.height_m > 0) || !(p.age_y >= 0) || !(p.span_m > 0)) {
          throw ValidationError("line '" + ln.id + "': pole height/span must be > 0, age >= 0");
        }
      }
      into_[ln.to].push_back(l);
      out_[ln.from].push_back(l);
    }
    dg_p_.assign(num_buses(), 0.0);
    dg_q_.assign(num_buses(), 0.0);
    for (const DgUnit& g : dgs) {
      if (g.bus < 0 || g.bus >= num_buses()) throw ValidationError("DG at unknown bus");
      if (g.p_max_kw < 0 || g.q_max_kvar < 0) {
        throw ValidationError("DG at bus '" + buses[g.bus].id + "': capacities must be >= 0");
      }
      dg_p_[g.bus] += g.p_max_kw;
      dg_q_[g.bus] += g.q_max_kvar;
    }
    for (double m : load_profile) {
      if (!(m >= 0)) throw ValidationError("load profile multipliers must be >= 0");
    }
    build_tree();
  }

 private:
  void build_tree() {
    // Connectivity over all lines.
    std::vector<std::vector<int>> adj(num_buses());
    for (int l = 0; l < num_lines(); ++l) {
      adj[lines[l].from].push_back(l);
      adj[lines[l].to].push_back(l);
    }
    std::vector<char> seen(num_buses(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
      const int b = q.front();
      q.pop();
      for (int l : adj[b]) {
        const int o = lines[l].from == b ? lines[l].to : lines[l].from;
        if (!seen[o]) {
          seen[o] = 1;
          ++reached;
          q.push(o);
        }
      }
    }
    if (reached != num_buses()) throw ValidationError("network graph is not connected");

    // Base topology (normally open lines removed) must be a forest whose
    // reference orientation points away from the roots.
    parent_.assign(num_buses(), -1);
    children_.assign(num_buses(), {});
    std::vector<int> in_count(num_buses(), 0);
    for (const Line& ln : lines) {
      if (ln.normally_open) continue;
      if (buses[ln.to].is_root) {
        throw ValidationError("line '" + ln.id + "' points into root bus '" +
                              buses[ln.to].id + "'");
      }
      if (++in_count[ln.to] > 1) {
        throw ValidationError("bus '" + buses[ln.to].id +
                              "' has more than one parent in the base topology");
      }
      parent_[ln.to] = ln.from;
      children_[ln.from].push_back(ln.to);
    }
    // Every bus must trace back to a root without revisiting.
    for (int b = 0; b < num_buses(); ++b) {
      int cur = b;
      int steps = 0;
      while (parent_[cur] >= 0) {
        cur = parent_[cur];
        if (++steps > num_buses()) {
          throw ValidationError("base topology contains a cycle");
        }
      }
      if (!buses[cur].is_root) {
        throw ValidationError("bus '" + buses[b].id +
                              "' is not fed from a root in the base topology");
      }
    }
  }

  std::map<std::string, int> bus_lookup_;
  std::map<std::string, int> line_lookup_;
  std::map<std::pair<int, int>, int> pair_lookup_;
  std::vector<std::vector<int>> into_;
  std::vector<std::vector<int>> out_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<double> dg_p_;
  std::vector<double> dg_q_;
};

}  // namespace resilience::grid
