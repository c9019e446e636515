// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace mmlab {

// Inter-arrival law F of one renewal class. Continuous with a density,
// F(0) = 0. The empirical family is a step CDF with linear interpolation
// between knots, i.e. a piecewise-constant density.
class RenewalDist {
 public:
  enum class Family { Exponential, Weibull, Gamma, Empirical };

  static RenewalDist exponential(double rate);
  static RenewalDist weibull(double shape, double scale);
  static RenewalDist gamma(double shape, double scale);
  // knots: (s_i, F_i) with s_0 = 0, F_0 = 0, F strictly reaching 1 at the
  // last knot, both coordinates nondecreasing.
  static RenewalDist empirical(std::vector<double> s, std::vector<double> F);

  Family family() const { return family_; }
  const std::vector<double>& raw_params() const { return params_; }

  double cdf(double s) const;
  double pdf(double s) const;
  double survival(double s) const { return 1.0 - cdf(s); }
  // Inverse CDF; u in [0,1). Family-agnostic bracketing + bisection.
  double quantile(double u) const;
  double mean() const;

  // Construction-time checks: cdf(0)=0, monotone, density integrates to 1.
  void validate() const;

  std::string family_name() const;

 private:
  RenewalDist(Family f, std::vector<double> params) : family_(f), params_(std::move(params)) {}

  Family family_;
  // exponential: {rate}; weibull: {shape, scale}; gamma: {shape, scale};
  // empirical: {s_0..s_n, F_0..F_n} concatenated.
  std::vector<double> params_;
};

// Bisection solve of cdf(x) = u on [lo, hi]; used by the conditional
// renewal sampler so that every family goes through the same exact path.
double bisect_cdf(const RenewalDist& d, double target, double lo, double hi, double tol = 1e-12);

}  // namespace mmlab
