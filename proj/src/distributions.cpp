// SPDX-License-Identifier: Apache-2.0
#include "mmlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "mmlab/errors.hpp"

namespace mmlab {

RenewalDist RenewalDist::exponential(double rate) {
  if (!(rate > 0.0)) throw SchemaError("exponential rate must be > 0");
  return RenewalDist(Family::Exponential, {rate});
}

RenewalDist RenewalDist::weibull(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw SchemaError("weibull parameters must be > 0");
  return RenewalDist(Family::Weibull, {shape, scale});
}

RenewalDist RenewalDist::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw SchemaError("gamma parameters must be > 0");
  return RenewalDist(Family::Gamma, {shape, scale});
}

RenewalDist RenewalDist::empirical(std::vector<double> s, std::vector<double> F) {
  if (s.size() != F.size() || s.size() < 2) throw SchemaError("empirical CDF needs matching knot vectors, >= 2 knots");
  if (s.front() != 0.0 || F.front() != 0.0) throw SchemaError("empirical CDF must start at (0, 0)");
  if (std::abs(F.back() - 1.0) > 1e-12) throw SchemaError("empirical CDF must reach 1 at the last knot");
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] <= s[i - 1] || F[i] < F[i - 1]) throw SchemaError("empirical CDF knots must be increasing");
  }
  std::vector<double> params = s;
  params.insert(params.end(), F.begin(), F.end());
  return RenewalDist(Family::Empirical, std::move(params));
}

double RenewalDist::cdf(double s) const {
  if (s <= 0.0) return 0.0;
  switch (family_) {
    case Family::Exponential:
      return -std::expm1(-params_[0] * s);
    case Family::Weibull:
      return -std::expm1(-std::pow(s / params_[1], params_[0]));
    case Family::Gamma:
      return boost::math::gamma_p(params_[0], s / params_[1]);
    case Family::Empirical: {
      const std::size_t n = params_.size() / 2;
      const double* xs = params_.data();
      const double* Fs = params_.data() + n;
      if (s >= xs[n - 1]) return 1.0;
      const auto it = std::upper_bound(xs, xs + n, s);
      const std::size_t k = static_cast<std::size_t>(it - xs);  // xs[k-1] <= s < xs[k]
      const double w = (s - xs[k - 1]) / (xs[k] - xs[k - 1]);
      return Fs[k - 1] + w * (Fs[k] - Fs[k - 1]);
    }
  }
  return 0.0;
}

double RenewalDist::pdf(double s) const {
  if (s < 0.0) return 0.0;
  switch (family_) {
    case Family::Exponential:
      return params_[0] * std::exp(-params_[0] * s);
    case Family::Weibull: {
      const double k = params_[0], lam = params_[1];
      if (s == 0.0) return k > 1.0 ? 0.0 : (k == 1.0 ? 1.0 / lam : std::numeric_limits<double>::infinity());
      const double z = s / lam;
      return (k / lam) * std::pow(z, k - 1.0) * std::exp(-std::pow(z, k));
    }
    case Family::Gamma: {
      const double k = params_[0], th = params_[1];
      if (s == 0.0) return k > 1.0 ? 0.0 : (k == 1.0 ? 1.0 / th : std::numeric_limits<double>::infinity());
      return std::exp((k - 1.0) * std::log(s) - s / th - std::lgamma(k) - k * std::log(th));
    }
    case Family::Empirical: {
      const std::size_t n = params_.size() / 2;
      const double* xs = params_.data();
      const double* Fs = params_.data() + n;
      if (s >= xs[n - 1]) return 0.0;
      const auto it = std::upper_bound(xs, xs + n, s);
      const std::size_t k = it == xs ? 1 : static_cast<std::size_t>(it - xs);
      return (Fs[k] - Fs[k - 1]) / (xs[k] - xs[k - 1]);
    }
  }
  return 0.0;
}

double RenewalDist::quantile(double u) const {
  if (u < 0.0 || u >= 1.0) throw SamplerFailure("quantile argument outside [0,1)");
  if (u == 0.0) return 0.0;
  switch (family_) {
    case Family::Exponential:
      return -std::log1p(-u) / params_[0];
    case Family::Weibull:
      return params_[1] * std::pow(-std::log1p(-u), 1.0 / params_[0]);
    case Family::Gamma:
      return params_[1] * boost::math::gamma_p_inv(params_[0], u);
    case Family::Empirical: {
      const std::size_t n = params_.size() / 2;
      const double* xs = params_.data();
      const double* Fs = params_.data() + n;
      const auto it = std::lower_bound(Fs, Fs + n, u);
      std::size_t k = static_cast<std::size_t>(it - Fs);
      if (k == 0) k = 1;
      // flat CDF segments map to their left edge
      if (Fs[k] == Fs[k - 1]) return xs[k - 1];
      const double w = (u - Fs[k - 1]) / (Fs[k] - Fs[k - 1]);
      return xs[k - 1] + w * (xs[k] - xs[k - 1]);
    }
  }
  return 0.0;
}

double RenewalDist::mean() const {
  switch (family_) {
    case Family::Exponential:
      return 1.0 / params_[0];
    case Family::Weibull:
      return params_[1] * std::tgamma(1.0 + 1.0 / params_[0]);
    case Family::Gamma:
      return params_[0] * params_[1];
    case Family::Empirical: {
      // integral of the survival function, exact for piecewise-linear F
      const std::size_t n = params_.size() / 2;
      const double* xs = params_.data();
      const double* Fs = params_.data() + n;
      double m = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        m += (xs[k] - xs[k - 1]) * (1.0 - 0.5 * (Fs[k] + Fs[k - 1]));
      }
      return m;
    }
  }
  return 0.0;
}

void RenewalDist::validate() const {
  if (cdf(0.0) != 0.0) throw SchemaError("renewal distribution must satisfy F(0)=0");
  const double far = quantile(1.0 - 1e-10);
  if (cdf(far) < 1.0 - 1e-8) throw SchemaError("CDF does not reach 1");
  // Simpson on interior quantile segments, where the density is smooth even
  // for families with an endpoint singularity; together with F -> 1 this
  // pins the normalization to 1e-8.
  if (family_ == Family::Empirical) {
    // piecewise-constant density: the knot-partition integral is exact
    const std::size_t n = params_.size() / 2;
    const double* xs = params_.data();
    double acc = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      acc += pdf(0.5 * (xs[k - 1] + xs[k])) * (xs[k] - xs[k - 1]);
    }
    if (std::abs(acc - 1.0) > 1e-12) throw SchemaError("empirical density does not integrate to 1");
  } else {
    const double quantiles[] = {0.05, 0.2, 0.5, 0.8, 0.95};
    double acc = 0.0;
    for (int seg = 0; seg + 1 < 5; ++seg) {
      const double a = quantile(quantiles[seg]);
      const double b = quantile(quantiles[seg + 1]);
      const int n = 2000;  // even
      const double h = (b - a) / n;
      double sum = pdf(a) + pdf(b);
      for (int i = 1; i < n; ++i) sum += pdf(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
      acc += sum * h / 3.0;
    }
    if (std::abs(acc - 0.9) > 1e-8) throw SchemaError("density does not integrate to the CDF increment");
  }
  double prev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double c = cdf(far * i / 200.0);
    if (c < prev - 1e-15) throw SchemaError("CDF is not nondecreasing");
    prev = c;
  }
}

std::string RenewalDist::family_name() const {
  switch (family_) {
    case Family::Exponential: return "exponential";
    case Family::Weibull: return "weibull";
    case Family::Gamma: return "gamma";
    case Family::Empirical: return "empirical";
  }
  return "?";
}

double bisect_cdf(const RenewalDist& d, double target, double lo, double hi, double tol) {
  double flo = d.cdf(lo) - target;
  if (flo > 0.0) return lo;
  // expand until the bracket contains the root
  int guard = 0;
  while (d.cdf(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 200) throw SamplerFailure("CDF bracket expansion failed");
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (d.cdf(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace mmlab
