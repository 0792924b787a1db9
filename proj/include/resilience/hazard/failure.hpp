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
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "resilience/grid/network.hpp"
#include "resilience/hazard/fragility.hpp"

namespace resilience::hazard {

struct PoleProbability {
  double prob = 0.0;
  // |coarse - refined| when refinement was requested, else 0.
  double refinement_delta = 0.0;
  bool precision_warning = false;
};

// Integrates h(v) against the speed density over [0, v_cut], v_cut being the
// (1 - tail_mass) quantile.  A point-mass hazard evaluates h there.
inline double integrate_speed(const WindHazard& hz, const Quadrature& q,
                              const std::function<double(double)>& h) {
  hz.validate();
  q.validate();
  if (hz.point_mass_mph) return h(*hz.point_mass_mph);
  const double vcut = hz.quantile(1.0 - q.tail_mass);
  const GaussLegendre gl(q.speed_nodes);
  double total = 0.0;
  for (std::size_t k = 0; k < gl.x.size(); ++k) {
    const double v = 0.5 * vcut * (gl.x[k] + 1.0);
    total += gl.w[k] * 0.5 * vcut * hz.pdf(v) * h(v);
  }
  return std::clamp(total, 0.0, 1.0);
}

// Integrates an arbitrary fragility(v, theta) over speed and direction, with
// equal-weight direction midpoints.
inline double integrate_hazard(const WindHazard& hz, const Quadrature& q,
                               const std::function<double(double, double)>& fragility) {
  q.validate();
  const std::vector<double> th = direction_nodes(q.direction_nodes);
  return integrate_speed(hz, q, [&](double v) {
    double s = 0.0;
    for (double t : th) s += fragility(v, t);
    return s / q.direction_nodes;
  });
}

// Annual failure probability of one pole under the surrogate.  With `refine`
// the integral is repeated at doubled node counts and a precision warning is
// raised when the two differ by more than 1e-6.
inline PoleProbability pole_failure_prob(const grid::Pole& pole, const WindHazard& hz,
                                         const FragilitySurrogate& f, const Quadrature& q = {},
                                         bool refine = false) {
  auto run = [&](const Quadrature& qq) {
    const DirectionRule rule(qq.direction_nodes, f.direction_floor);
    const double m = f.base_median(pole.cls, pole.age_y, pole.height_m, pole.conductor_area_m2());
    return integrate_speed(hz, qq, [&](double v) {
      if (v <= 0) return 0.0;
      return rule.average([&](double pr) {
        return standard_normal_cdf(std::log(v * std::pow(pr, f.exposure_exponent) / m) /
                                   f.dispersion);
      });
    });
  };
  PoleProbability r;
  r.prob = run(q);
  if (refine && !hz.point_mass_mph) {
    r.refinement_delta = std::abs(run(q.refined()) - r.prob);
    r.precision_warning = r.refinement_delta > 1e-6;
  }
  return r;
}

// 1 - prod(1 - p), accumulated in log space so tiny probabilities survive.
inline double line_failure_prob(const std::vector<double>& pole_probs) {
  double s = 0.0;
  for (double p : pole_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("pole probability outside [0,1]");
    s += std::log1p(-p);
  }
  return -std::expm1(s);
}

inline constexpr double kWeightCapBits = 30.0;

// Surprise of a line failure in bits, floored at 2^-30 so the cap is 30.
inline double uncertainty_weight(double p) {
  return -std::log2(std::max(p, std::exp2(-kWeightCapBits)));
}

// Per-pole probabilities for the as-is poles and for each pole replaced by a
// new pole of the same class, height and span.  Computed once per network.
struct PoleProbabilityTable {
  std::vector<std::vector<double>> current;
  std::vector<std::vector<double>> renewed;
  int precision_warnings = 0;
  double max_refinement_delta = 0.0;
};

inline PoleProbabilityTable compute_pole_table(const grid::Network& net, const WindHazard& hz,
                                               const FragilitySurrogate& f,
                                               const Quadrature& q = {}, bool refine = true) {
  PoleProbabilityTable t;
  t.current.resize(net.num_lines());
  t.renewed.resize(net.num_lines());
  for (int l = 0; l < net.num_lines(); ++l) {
    const grid::Line& ln = net.lines[l];
    for (const grid::Pole& p : ln.poles) {
      const PoleProbability a = pole_failure_prob(p, hz, f, q, refine);
      grid::Pole fresh = p;
      fresh.age_y = 0.0;
      const PoleProbability b = pole_failure_prob(fresh, hz, f, q, refine);
      t.current[l].push_back(a.prob);
      t.renewed[l].push_back(std::min(b.prob, a.prob));
      t.precision_warnings += a.precision_warning + b.precision_warning;
      t.max_refinement_delta =
          std::max({t.max_refinement_delta, a.refinement_delta, b.refinement_delta});
    }
  }
  return t;
}

struct LineFailureProfile {
  std::vector<std::vector<double>> pole_probs;  // post-hardening
  std::vector<double> line_prob;
  std::vector<double> weight;  // bits
};

class HardeningError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Replaces, on each line, the x[l] poles with the highest failure probability
// (ties broken by position) and recomputes the line profile.
inline LineFailureProfile apply_hardening(const grid::Network& net, const std::vector<int>& x,
                                          const PoleProbabilityTable& table) {
  if (static_cast<int>(x.size()) != net.num_lines()) {
    throw HardeningError("hardening plan length does not match line count");
  }
  LineFailureProfile out;
  for (int l = 0; l < net.num_lines(); ++l) {
    const auto& cur = table.current[l];
    const int n = static_cast<int>(cur.size());
    if (x[l] < 0 || x[l] > n) {
      throw HardeningError("line '" + net.lines[l].id + "': " + std::to_string(x[l]) +
                           " replacements requested for " + std::to_string(n) + " poles");
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cur[a] > cur[b]; });
    std::vector<double> p = cur;
    for (int k = 0; k < x[l]; ++k) p[order[k]] = table.renewed[l][order[k]];
    const double lp = line_failure_prob(p);
    out.pole_probs.push_back(std::move(p));
    out.line_prob.push_back(lp);
    out.weight.push_back(uncertainty_weight(lp));
  }
  return out;
}

struct HazardConfig {
  WindHazard wind;
  FragilitySurrogate fragility;
  Quadrature quadrature;
  std::optional<CalibrationAnchor> anchor;

  // Fragility after calibration to the anchor, if one is configured.
  FragilitySurrogate calibrated() const {
    return anchor ? calibrate_surrogate(*anchor, fragility, quadrature.direction_nodes)
                  : fragility;
  }
};

inline HazardConfig parse_hazard_config(const nlohmann::json& doc) {
  HazardConfig c;
  auto num = [](const nlohmann::json& o, const char* k, double d) {
    return o.contains(k) ? o.at(k).get<double>() : d;
  };
  if (doc.contains("wind")) {
    const auto& w = doc.at("wind");
    c.wind.scale_mph = num(w, "weibull_scale_mph", c.wind.scale_mph);
    c.wind.shape = num(w, "weibull_shape", c.wind.shape);
  }
  if (doc.contains("fragility")) {
    const auto& f = doc.at("fragility");
    auto& s = c.fragility;
    s.median_ref_mph = num(f, "median_ref_mph", s.median_ref_mph);
    s.dispersion = num(f, "dispersion", s.dispersion);
    s.age_rate_per_y = num(f, "age_rate_per_year", s.age_rate_per_y);
    s.exposure_exponent = num(f, "exposure_exponent", s.exposure_exponent);
    s.direction_floor = num(f, "direction_floor", s.direction_floor);
    if (f.contains("class_design_load_lbf")) {
      const auto& a = f.at("class_design_load_lbf");
      if (!a.is_array() || a.size() != 7) {
        throw std::invalid_argument("class_design_load_lbf needs 7 entries");
      }
      for (int k = 0; k < 7; ++k) s.class_load_lbf[k] = a[k].get<double>();
    }
    s.ref_class = static_cast<int>(num(f, "reference_class", s.ref_class));
    s.ref_area_m2 = num(f, "reference_area_m2", s.ref_area_m2);
    s.ref_height_m = num(f, "reference_height_m", s.ref_height_m);
    if (f.contains("anchor")) {
      const auto& a = f.at("anchor");
      CalibrationAnchor an;
      an.cls = static_cast<int>(num(a, "class", an.cls));
      an.age_y = num(a, "age_y", an.age_y);
      an.speed_mph = num(a, "speed_mph", an.speed_mph);
      an.target_prob = num(a, "probability", an.target_prob);
      an.height_m = num(a, "height_m", an.height_m);
      an.area_m2 = num(a, "area_m2", an.area_m2);
      c.anchor = an;
    }
  }
  if (doc.contains("quadrature")) {
    const auto& q = doc.at("quadrature");
    c.quadrature.speed_nodes = static_cast<int>(num(q, "speed_nodes", c.quadrature.speed_nodes));
    c.quadrature.direction_nodes =
        static_cast<int>(num(q, "direction_nodes", c.quadrature.direction_nodes));
    c.quadrature.tail_mass = num(q, "tail_mass", c.quadrature.tail_mass);
  }
  c.wind.validate();
  c.fragility.validate();
  c.quadrature.validate();
  return c;
}

inline HazardConfig load_hazard_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hazard config '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("hazard config '" + path + "': " + e.what());
  }
  return parse_hazard_config(doc);
}

}  // namespace resilience::hazard
