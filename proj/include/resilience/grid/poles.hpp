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
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "resilience/grid/network.hpp"

namespace resilience::grid {

// Portable samplers over mt19937_64.  The standard library distributions are
// implementation-defined, which would make pole inventories differ between
// toolchains for the same seed.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Lognormal parameterized by its own mean and standard deviation.
  double lognormal_mean_sd(double mean, double sd) {
    const double s2 = std::log1p((sd / mean) * (sd / mean));
    return std::exp(std::log(mean) - 0.5 * s2 + std::sqrt(s2) * normal());
  }

  template <std::size_t N>
  int categorical(const std::array<double, N>& pmf) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      acc += pmf[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(N) - 1;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Wood pole population statistics: class frequencies and per-class height
// moments for classes 1..7, lognormal age and span.
struct PoleSynthesisParams {
  std::array<double, 7> class_pmf{0.0075, 0.0527, 0.2043, 0.1925, 0.5137, 0.0176, 0.0117};
  std::array<double, 7> height_mean_m{21.6, 16.1, 13.6, 12.3, 10.9, 9.5, 9.2};
  std::array<double, 7> height_sd_m{7.1, 2.9, 1.4, 0.7, 1.3, 0.9, 0.7};
  double age_mean_y = 45.0;
  double age_sd_y = 20.0;
  double span_mean_m = 43.9;
  double span_cov = 0.25;
  double conductor_diameter_in = 0.563;
  int n_conductors = 3;

  void validate() const {
    double s = 0.0;
    for (double p : class_pmf) {
      if (!(p >= 0.0)) throw std::invalid_argument("pole class pmf has a negative entry");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::invalid_argument("pole class pmf sums to " + std::to_string(s) + ", not 1");
    }
    for (int k = 0; k < 7; ++k) {
      if (!(height_mean_m[k] > 0) || !(height_sd_m[k] >= 0)) {
        throw std::invalid_argument("pole height parameters must be positive");
      }
    }
    if (!(age_mean_y > 0) || !(age_sd_y >= 0) || !(span_mean_m > 0) || !(span_cov >= 0)) {
      throw std::invalid_argument("pole age/span parameters must be positive");
    }
  }
};

// Seed for which the shipped 33-bus case carries 485 poles.
inline constexpr std::uint64_t kDefaultPoleSeed = 2094;

inline Pole sample_pole(Sampler& s, const PoleSynthesisParams& prm) {
  Pole p;
  const int k = s.categorical(prm.class_pmf);
  p.cls = k + 1;
  p.height_m = s.lognormal_mean_sd(prm.height_mean_m[k], prm.height_sd_m[k]);
  p.age_y = s.lognormal_mean_sd(prm.age_mean_y, prm.age_sd_y);
  p.span_m = s.lognormal_mean_sd(prm.span_mean_m, prm.span_cov * prm.span_mean_m);
  p.conductor_diameter_in = prm.conductor_diameter_in;
  p.n_conductors = prm.n_conductors;
  return p;
}

// Number of poles on a line of the given length: a first guess from the mean
// span, a realized mean span over that many draws, then
// max(1, round(length / realized mean span)).
inline int sample_pole_count(Sampler& s, double length_m, const PoleSynthesisParams& prm) {
  const int n0 = std::max(1, static_cast<int>(std::lround(length_m / prm.span_mean_m)));
  double sum = 0.0;
  for (int i = 0; i < n0; ++i) {
    sum += s.lognormal_mean_sd(prm.span_mean_m, prm.span_cov * prm.span_mean_m);
  }
  const double mean_span = sum / n0;
  return std::max(1, static_cast<int>(std::lround(length_m / mean_span)));
}

// Replaces every line's pole inventory.  Lines are visited in file order
// from one stream, so the result depends only on (network, seed, params).
inline Network synthesize_poles(Network net, std::uint64_t seed,
                                const PoleSynthesisParams& prm = {}) {
  prm.validate();
  Sampler s(seed);
  for (Line& ln : net.lines) {
    const int count = sample_pole_count(s, ln.length_m, prm);
    ln.poles.clear();
    ln.poles.reserve(count);
    for (int i = 0; i < count; ++i) ln.poles.push_back(sample_pole(s, prm));
  }
  return net;
}

}  // namespace resilience::grid
