// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "mmlab/model.hpp"
#include "mmlab/pde.hpp"

namespace testsupport {

using namespace mmlab;

// Weibull/exp desk-scale model used across the suites: strongly reverting
// directions, decaying trade intensity with weak-side dominance. The Weibull
// scale keeps that branch extinguished well before the truncation quantile,
// so the frozen-tail closure and the survival-ratio trend limit agree there.
inline ModelParams weibull_exp_model(double horizon = 10.0, double eta = 0.0) {
  return ModelParams(
      /*delta=*/0.5, /*alpha=*/-0.75, RenewalDist::weibull(1.5, 1.2), RenewalDist::exponential(1.0),
      TradeIntensitySpec::exp_decay(0.5, 2.0, 1.5), /*rho=*/-0.5,
      FillDist::from_probs({0.35, 0.40, 0.25}), FillDist::from_probs({0.20, 0.45, 0.35}),
      /*lot_size=*/2, /*fee=*/0.05, eta, horizon);
}

// Fully symmetric model: mu = 0, theta = 0, both sides identical.
inline ModelParams symmetric_model(double horizon = 10.0, double rate = 1.0) {
  return ModelParams(0.5, 0.0, RenewalDist::exponential(rate), RenewalDist::exponential(rate),
                     TradeIntensitySpec::constant(1.2), 0.0, FillDist::from_probs({0.3, 0.4, 0.3}),
                     FillDist::from_probs({0.3, 0.4, 0.3}), 2, 0.02, 0.0, horizon);
}

// Large fee keeps both barriers strictly negative: no posting is ever optimal.
inline ModelParams never_active_model(double horizon = 6.0) {
  return ModelParams(0.5, -0.3, RenewalDist::exponential(1.0), RenewalDist::exponential(0.8),
                     TradeIntensitySpec::constant(1.0), -0.2, FillDist::from_probs({0.3, 0.4, 0.3}),
                     FillDist::from_probs({0.25, 0.5, 0.25}), 2, 1.0, 0.0, horizon);
}

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSE mean_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double s = 0.0, s2 = 0.0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  MeanSE m;
  m.mean = s / n;
  const double var = std::max(0.0, (s2 - n * m.mean * m.mean) / (n - 1.0));
  m.se = std::sqrt(var / n);
  return m;
}

// one-sample Kolmogorov-Smirnov statistic against a CDF
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max(d, std::abs(F - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
  }
  return d;
}

// two-sample Kolmogorov-Smirnov statistic
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// 1% critical value scale: reject if D > ks_crit_1pct(n) (one sample)
inline double ks_crit_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }
inline double ks_two_sample_crit_1pct(std::size_t n, std::size_t m) {
  return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

// chi-square 99% quantiles for small degrees of freedom
inline double chi2_crit_1pct(int df) {
  static const double table[] = {0.0,    6.635,  9.210,  11.345, 13.277, 15.086,
                                 16.812, 18.475, 20.090, 21.666, 23.209};
  return table[df];
}

struct SolvedModel {
  GridSpec grid;
  ValueGrid theta;
  BarrierPair barriers;
  ValueGrid omega;
  ValueGrid zeta1;
  ValueGrid zeta0;
};

inline SolvedModel solve_model(const ModelParams& params, double dt) {
  GridSpec grid = GridSpec::make(dt, params.horizon(), params.s_max());
  ValueGrid theta = solve_theta(params, grid);
  BarrierPair g = barrier_G(params, theta);
  ValueGrid omega = solve_omega(params, g.plus, g.minus);
  ValueGrid z1 = solve_zeta1(params, g.plus, g.minus);
  ValueGrid z0 = solve_zeta0(params, g.plus, g.minus, z1);
  return {grid, std::move(theta), std::move(g), std::move(omega), std::move(z1), std::move(z0)};
}

// Occurrence/exposure hazard estimate in a window around s0 from raw
// unconditional draws of (B, S). The draw callable must be independent of
// the hazard formula under test (hand-rolled inverse transforms).
struct HazardOracle {
  double h_plus;
  double h_minus;
};

inline HazardOracle empirical_hazard(const std::function<std::pair<int, double>(Rng&)>& draw, double s0, double width,
                                     int n_draws, std::uint64_t seed) {
  Rng rng(seed);
  const double lo = s0 - 0.5 * width;
  const double hi = s0 + 0.5 * width;
  double exposure = 0.0;
  long n_plus = 0, n_minus = 0;
  for (int i = 0; i < n_draws; ++i) {
    const auto [b, s] = draw(rng);
    if (s > lo) exposure += std::min(s, hi) - lo;
    if (s > lo && s <= hi) {
      (b > 0 ? n_plus : n_minus) += 1;
    }
  }
  return {static_cast<double>(n_plus) / exposure, static_cast<double>(n_minus) / exposure};
}

}  // namespace testsupport
