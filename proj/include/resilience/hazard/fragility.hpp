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
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "resilience/grid/network.hpp"

namespace resilience::hazard {

// Annual hurricane wind at a site: Weibull speed (mph) and uniform direction.
// A point mass replaces the Weibull when set; used to probe the integrator.
struct WindHazard {
  double scale_mph = 45.4;
  double shape = 1.2;
  std::optional<double> point_mass_mph;

  void validate() const {
    if (point_mass_mph) {
      if (!(*point_mass_mph >= 0)) throw std::invalid_argument("point-mass speed must be >= 0");
      return;
    }
    if (!(scale_mph > 0) || !(shape > 0)) {
      throw std::invalid_argument("Weibull scale and shape must be positive");
    }
  }
  double pdf(double v) const {
    if (v < 0) return 0.0;
    const double z = v / scale_mph;
    return shape / scale_mph * std::pow(z, shape - 1.0) * std::exp(-std::pow(z, shape));
  }
  double cdf(double v) const {
    return v <= 0 ? 0.0 : -std::expm1(-std::pow(v / scale_mph, shape));
  }
  double quantile(double q) const {
    return scale_mph * std::pow(-std::log1p(-q), 1.0 / shape);
  }
};

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Lognormal fragility in wind speed.  The median speed capacity of a pole is
//     m = m_ref * sqrt(L_class / L_ref) * exp(-age_rate * age) / exposure^k
// with exposure = (A_C * H * proj) / (A_ref * H_ref) and
// proj = max(|sin(theta - theta_line)|, direction_floor), and
//     Pr(F | v) = Phi(ln(v / m) / dispersion).
struct FragilitySurrogate {
  double median_ref_mph = 167.5;
  double dispersion = 0.2;
  double age_rate_per_y = 0.005;
  double exposure_exponent = 0.5;
  double direction_floor = 0.2;
  // Horizontal design load per class (lbf), classes 1..7.
  std::array<double, 7> class_load_lbf{4500, 3700, 3000, 2400, 1900, 1500, 1200};
  int ref_class = 3;
  double ref_area_m2 = 3 * 0.563 * 0.0254 * 43.9;
  double ref_height_m = 13.6;

  void validate() const {
    if (!(median_ref_mph > 0) || !(dispersion > 0) || !(age_rate_per_y >= 0) ||
        !(exposure_exponent >= 0) || !(direction_floor > 0 && direction_floor <= 1) ||
        !(ref_area_m2 > 0) || !(ref_height_m > 0) || ref_class < 1 || ref_class > 7) {
      throw std::invalid_argument("invalid fragility surrogate parameters");
    }
    for (double l : class_load_lbf) {
      if (!(l > 0)) throw std::invalid_argument("class design loads must be positive");
    }
  }

  double projection(double rel_theta) const {
    return std::max(std::abs(std::sin(rel_theta)), direction_floor);
  }

  // Median capacity ignoring the direction term (projection = 1).
  double base_median(int cls, double age_y, double height_m, double area_m2) const {
    const double exposure = (area_m2 * height_m) / (ref_area_m2 * ref_height_m);
    return median_ref_mph * std::sqrt(class_load_lbf[cls - 1] / class_load_lbf[ref_class - 1]) *
           std::exp(-age_rate_per_y * age_y) / std::pow(exposure, exposure_exponent);
  }

  double prob(int cls, double age_y, double height_m, double area_m2, double v,
              double rel_theta) const {
    if (v <= 0) return 0.0;
    const double m = base_median(cls, age_y, height_m, area_m2) /
                     std::pow(projection(rel_theta), exposure_exponent);
    return standard_normal_cdf(std::log(v / m) / dispersion);
  }

  double prob(const grid::Pole& p, double line_azimuth, double v, double theta) const {
    return prob(p.cls, p.age_y, p.height_m, p.conductor_area_m2(), v, theta - line_azimuth);
  }
};

struct Quadrature {
  int speed_nodes = 128;
  int direction_nodes = 36;
  double tail_mass = 1e-6;  // v_cut is the (1 - tail_mass) speed quantile

  void validate() const {
    if (speed_nodes < 2 || direction_nodes < 2) {
      throw std::invalid_argument("quadrature node counts must be >= 2");
    }
    if (!(tail_mass > 0 && tail_mass < 1)) throw std::invalid_argument("tail mass must be in (0,1)");
  }
  Quadrature refined() const { return {2 * speed_nodes, 2 * direction_nodes, tail_mass}; }
};

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;

  explicit GaussLegendre(int n) {
    const std::vector<double> pos = boost::math::legendre_p_zeros<double>(n);
    auto add = [&](double xi) {
      const double d = boost::math::legendre_p_prime(n, xi);
      x.push_back(xi);
      w.push_back(2.0 / ((1.0 - xi * xi) * d * d));
    };
    for (double z : pos) {
      add(z);
      if (z != 0.0) add(-z);
    }
  }
};

// Equal-weight direction midpoints on [0, 2 pi).
inline std::vector<double> direction_nodes(int n) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = (k + 0.5) * 2.0 * M_PI / n;
  return t;
}

// Averages g(proj(theta)) over a uniform direction, where
// proj = max(|sin(theta - theta_line)|, floor).  By symmetry this is
//     (2/pi) [asin(floor) g(floor) + int_{asin(floor)}^{pi/2} g(sin phi) dphi]
// for every line azimuth.  The floor puts a kink in the integrand, so the
// smooth part gets its own Gauss-Legendre rule; equal-spaced directions would
// converge only quadratically.
struct DirectionRule {
  std::vector<double> proj;
  std::vector<double> weight;  // sums to 1

  DirectionRule(int n, double floor) {
    const double a = std::asin(std::min(floor, 1.0));
    proj.push_back(std::min(floor, 1.0));
    weight.push_back(a * 2.0 / M_PI);
    if (a < M_PI / 2) {
      const GaussLegendre gl(n);
      const double half = 0.5 * (M_PI / 2 - a);
      for (std::size_t k = 0; k < gl.x.size(); ++k) {
        proj.push_back(std::sin(a + half * (gl.x[k] + 1.0)));
        weight.push_back(gl.w[k] * half * 2.0 / M_PI);
      }
    }
  }

  template <class G>
  double average(G&& g) const {
    double s = 0.0;
    for (std::size_t k = 0; k < proj.size(); ++k) s += weight[k] * g(proj[k]);
    return s;
  }
};

// Direction-averaged fragility at a fixed speed.
inline double direction_averaged_prob(const FragilitySurrogate& f, int cls, double age_y,
                                      double height_m, double area_m2, double v,
                                      int n_directions = 36) {
  if (v <= 0) return 0.0;
  const DirectionRule rule(n_directions, f.direction_floor);
  const double m = f.base_median(cls, age_y, height_m, area_m2);
  return rule.average([&](double pr) {
    return standard_normal_cdf(std::log(v * std::pow(pr, f.exposure_exponent) / m) / f.dispersion);
  });
}

struct CalibrationAnchor {
  int cls = 3;
  double age_y = 0.0;
  double speed_mph = 150.0;
  double target_prob = 0.113;
  double height_m = 13.6;
  double area_m2 = 3 * 0.563 * 0.0254 * 43.9;
};

class CalibrationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Solves for median_ref_mph so the direction-averaged failure probability at
// the anchor equals its target.  The probability is strictly decreasing in
// the median, so bisection on log(median) converges.
inline FragilitySurrogate calibrate_surrogate(const CalibrationAnchor& a,
                                              FragilitySurrogate base = {},
                                              int n_directions = 36) {
  if (!(a.target_prob > 0.0 && a.target_prob < 1.0)) {
    throw CalibrationError("anchor probability must lie strictly inside (0, 1)");
  }
  if (!(a.speed_mph > 0)) throw CalibrationError("anchor speed must be positive");
  base.validate();
  auto at = [&](double log_m) {
    base.median_ref_mph = std::exp(log_m);
    return direction_averaged_prob(base, a.cls, a.age_y, a.height_m, a.area_m2, a.speed_mph,
                                   n_directions);
  };
  double lo = std::log(a.speed_mph) - 40.0 * base.dispersion - 10.0;
  double hi = std::log(a.speed_mph) + 40.0 * base.dispersion + 10.0;
  if (!(at(lo) > a.target_prob && at(hi) < a.target_prob)) {
    throw CalibrationError("anchor probability not attainable by the surrogate family");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid) > a.target_prob) lo = mid;
    else hi = mid;
  }
  base.median_ref_mph = std::exp(0.5 * (lo + hi));
  return base;
}

}  // namespace resilience::hazard
