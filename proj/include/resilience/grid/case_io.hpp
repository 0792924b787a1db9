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
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "resilience/grid/network.hpp"
#include "resilience/grid/poles.hpp"

namespace resilience::grid {

// Malformed text or a field of the wrong type/missing.  `where` is either
// "line L, column C" or a JSON pointer to the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& key, const std::string& ptr) {
  if (!obj.is_object()) throw ParseError(ptr, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(ptr + "/" + key, "missing required field");
  return *it;
}

inline double number(const json& v, const std::string& ptr) {
  if (!v.is_number()) throw ParseError(ptr, "expected a number");
  return v.get<double>();
}

inline double number_or(const json& obj, const std::string& key, double dflt,
                        const std::string& ptr) {
  auto it = obj.find(key);
  return it == obj.end() ? dflt : number(*it, ptr + "/" + key);
}

inline bool bool_or(const json& obj, const std::string& key, bool dflt, const std::string& ptr) {
  auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_boolean()) throw ParseError(ptr + "/" + key, "expected true or false");
  return it->get<bool>();
}

// Bus and line ids may be written as strings or integers.
inline std::string id_of(const json& v, const std::string& ptr) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(ptr, "expected a string or integer id");
}

inline std::string locate(const std::string& text, std::size_t byte) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

// Builds and validates a Network from case JSON (schema in docs/case_schema.json).
// Per-unit impedances are given directly (r_pu/x_pu) or converted from ohms
// with the declared bases.  Poles come from poles[] when present, otherwise
// they are synthesized with pole_synthesis.seed.
inline Network parse_case(const nlohmann::json& doc) {
  using detail::json;
  using detail::number;
  using detail::number_or;
  using detail::require;
  Network net;
  if (!doc.is_object()) throw ParseError("/", "case must be a JSON object");
  if (auto it = doc.find("name"); it != doc.end() && it->is_string()) {
    net.name = it->get<std::string>();
  }
  if (auto it = doc.find("bases"); it != doc.end()) {
    net.bases.voltage_kv = number(require(*it, "voltage_kv", "/bases"), "/bases/voltage_kv");
    net.bases.power_mva = number(require(*it, "power_mva", "/bases"), "/bases/power_mva");
    if (!(net.bases.voltage_kv > 0) || !(net.bases.power_mva > 0)) {
      throw ValidationError("bases must be positive");
    }
  }
  const json empty = json::object();
  const json& defaults = doc.contains("defaults") ? doc.at("defaults") : empty;
  const double vmin = number_or(defaults, "voltage_min_pu", 0.95, "/defaults");
  const double vmax = number_or(defaults, "voltage_max_pu", 1.05, "/defaults");
  const double shed = number_or(defaults, "shed_cost_usd_per_kwh", 17.4, "/defaults");
  const double pmax = number_or(defaults, "p_max_kw", -1.0, "/defaults");
  const double qmax = number_or(defaults, "q_max_kvar", -1.0, "/defaults");

  const json& buses = require(doc, "buses", "");
  if (!buses.is_array()) throw ParseError("/buses", "expected an array");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string ptr = "/buses/" + std::to_string(i);
    const json& b = buses[i];
    Bus bus;
    bus.id = detail::id_of(require(b, "id", ptr), ptr + "/id");
    bus.p_kw = number_or(b, "p_kw", 0.0, ptr);
    bus.q_kvar = number_or(b, "q_kvar", 0.0, ptr);
    bus.is_root = detail::bool_or(b, "root", false, ptr);
    bus.shed_cost = number_or(b, "shed_cost_usd_per_kwh", shed, ptr);
    bus.v_min = number_or(b, "voltage_min_pu", vmin, ptr);
    bus.v_max = number_or(b, "voltage_max_pu", vmax, ptr);
    net.buses.push_back(bus);
  }
  auto bus_ref = [&](const json& v, const std::string& ptr) {
    const std::string id = detail::id_of(v, ptr);
    for (int k = 0; k < static_cast<int>(net.buses.size()); ++k) {
      if (net.buses[k].id == id) return k;
    }
    throw ValidationError(ptr + ": unknown bus '" + id + "'");
  };

  const double zb = net.bases.z_base_ohm();
  const json& lines = require(doc, "lines", "");
  if (!lines.is_array()) throw ParseError("/lines", "expected an array");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string ptr = "/lines/" + std::to_string(i);
    const json& l = lines[i];
    Line ln;
    ln.from = bus_ref(require(l, "from", ptr), ptr + "/from");
    ln.to = bus_ref(require(l, "to", ptr), ptr + "/to");
    ln.id = l.contains("id") ? detail::id_of(l.at("id"), ptr + "/id")
                             : net.buses[ln.from].id + "-" + net.buses[ln.to].id;
    if (l.contains("r_pu") || l.contains("x_pu")) {
      ln.r_pu = number(require(l, "r_pu", ptr), ptr + "/r_pu");
      ln.x_pu = number(require(l, "x_pu", ptr), ptr + "/x_pu");
    } else {
      ln.r_pu = number(require(l, "r_ohm", ptr), ptr + "/r_ohm") / zb;
      ln.x_pu = number(require(l, "x_ohm", ptr), ptr + "/x_ohm") / zb;
    }
    ln.p_max_kw = l.contains("p_max_kw") ? number(l.at("p_max_kw"), ptr + "/p_max_kw") : pmax;
    ln.q_max_kvar =
        l.contains("q_max_kvar") ? number(l.at("q_max_kvar"), ptr + "/q_max_kvar") : qmax;
    if (ln.p_max_kw < 0 || ln.q_max_kvar < 0) {
      if (!l.contains("p_max_kw") && pmax < 0) {
        throw ParseError(ptr + "/p_max_kw", "missing and no default given");
      }
      if (!l.contains("q_max_kvar") && qmax < 0) {
        throw ParseError(ptr + "/q_max_kvar", "missing and no default given");
      }
    }
    ln.length_m = number_or(l, "length_m", 0.0, ptr);
    ln.azimuth_rad = number_or(l, "azimuth_deg", 0.0, ptr) * M_PI / 180.0;
    net.lines.push_back(ln);
  }
  auto line_ref = [&](const json& v, const std::string& ptr) {
    const std::string id = detail::id_of(v, ptr);
    for (int k = 0; k < static_cast<int>(net.lines.size()); ++k) {
      if (net.lines[k].id == id) return k;
    }
    throw ValidationError(ptr + ": unknown line '" + id + "'");
  };

  if (auto it = doc.find("switches"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string ptr = "/switches/" + std::to_string(i);
      const json& s = (*it)[i];
      Line& ln = net.lines[line_ref(require(s, "line", ptr), ptr + "/line")];
      if (ln.has_switch) throw ValidationError(ptr + ": line '" + ln.id + "' listed twice");
      ln.has_switch = true;
      ln.normally_open = detail::bool_or(s, "normally_open", false, ptr);
    }
  }
  if (auto it = doc.find("dg_units"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string ptr = "/dg_units/" + std::to_string(i);
      const json& g = (*it)[i];
      DgUnit dg;
      dg.bus = bus_ref(require(g, "bus", ptr), ptr + "/bus");
      dg.p_max_kw = number(require(g, "p_max_kw", ptr), ptr + "/p_max_kw");
      dg.q_max_kvar = number(require(g, "q_max_kvar", ptr), ptr + "/q_max_kvar");
      net.dgs.push_back(dg);
    }
  }
  if (auto it = doc.find("load_profile"); it != doc.end()) {
    if (!it->is_array()) throw ParseError("/load_profile", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      net.load_profile.push_back(number((*it)[i], "/load_profile/" + std::to_string(i)));
    }
  }

  net.finalize();

  if (auto it = doc.find("poles"); it != doc.end()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string ptr = "/poles/" + std::to_string(i);
      const json& p = (*it)[i];
      Line& ln = net.lines[line_ref(require(p, "line", ptr), ptr + "/line")];
      Pole pole;
      pole.cls = static_cast<int>(number(require(p, "class", ptr), ptr + "/class"));
      pole.height_m = number(require(p, "height_m", ptr), ptr + "/height_m");
      pole.age_y = number(require(p, "age_y", ptr), ptr + "/age_y");
      pole.span_m = number_or(p, "span_m", 43.9, ptr);
      pole.conductor_diameter_in = number_or(p, "conductor_diameter_in", 0.563, ptr);
      pole.n_conductors = static_cast<int>(number_or(p, "n_conductors", 3, ptr));
      ln.poles.push_back(pole);
    }
    for (const Line& ln : net.lines) {
      if (ln.poles.empty()) throw ValidationError("line '" + ln.id + "' has no poles");
    }
  } else {
    std::uint64_t seed = kDefaultPoleSeed;
    if (auto ps = doc.find("pole_synthesis"); ps != doc.end() && ps->contains("seed")) {
      seed = ps->at("seed").get<std::uint64_t>();
    }
    net = synthesize_poles(std::move(net), seed);
  }
  net.finalize();
  return net;
}

inline Network parse_case_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(detail::locate(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  try {
    return parse_case(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("/", e.what());
  }
}

inline Network load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open case file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case_text(ss.str());
}

// Serializes the network, including its pole inventory, so a synthesized
// case can be frozen to disk.
inline nlohmann::json case_to_json(const Network& net) {
  using nlohmann::json;
  json doc;
  doc["name"] = net.name;
  doc["bases"] = {{"voltage_kv", net.bases.voltage_kv}, {"power_mva", net.bases.power_mva}};
  json buses = json::array();
  for (const Bus& b : net.buses) {
    buses.push_back({{"id", b.id},
                     {"p_kw", b.p_kw},
                     {"q_kvar", b.q_kvar},
                     {"root", b.is_root},
                     {"shed_cost_usd_per_kwh", b.shed_cost},
                     {"voltage_min_pu", b.v_min},
                     {"voltage_max_pu", b.v_max}});
  }
  doc["buses"] = buses;
  json lines = json::array();
  json switches = json::array();
  json poles = json::array();
  for (const Line& l : net.lines) {
    lines.push_back({{"id", l.id},
                     {"from", net.buses[l.from].id},
                     {"to", net.buses[l.to].id},
                     {"r_pu", l.r_pu},
                     {"x_pu", l.x_pu},
                     {"p_max_kw", l.p_max_kw},
                     {"q_max_kvar", l.q_max_kvar},
                     {"length_m", l.length_m},
                     {"azimuth_deg", l.azimuth_rad * 180.0 / M_PI}});
    if (l.has_switch) switches.push_back({{"line", l.id}, {"normally_open", l.normally_open}});
    for (const Pole& p : l.poles) {
      poles.push_back({{"line", l.id},
                       {"class", p.cls},
                       {"height_m", p.height_m},
                       {"age_y", p.age_y},
                       {"span_m", p.span_m},
                       {"conductor_diameter_in", p.conductor_diameter_in},
                       {"n_conductors", p.n_conductors}});
    }
  }
  doc["lines"] = lines;
  doc["switches"] = switches;
  json dgs = json::array();
  for (const DgUnit& g : net.dgs) {
    dgs.push_back({{"bus", net.buses[g.bus].id},
                   {"p_max_kw", g.p_max_kw},
                   {"q_max_kvar", g.q_max_kvar}});
  }
  doc["dg_units"] = dgs;
  if (!net.load_profile.empty()) doc["load_profile"] = net.load_profile;
  doc["poles"] = poles;
  return doc;
}

}  // namespace resilience::grid
