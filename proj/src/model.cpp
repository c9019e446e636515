// SPDX-License-Identifier: Apache-2.0
#include "mmlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "mmlab/errors.hpp"

namespace mmlab {

namespace {
constexpr double kTailQuantile = 1e-4;   // grid truncation mass
constexpr double kSurvivalFloor = 1e-12;
}  // namespace

TradeIntensitySpec TradeIntensitySpec::constant(double lam0) {
  if (!(lam0 >= 0.0)) throw SchemaError("constant intensity must be >= 0");
  return TradeIntensitySpec(Family::Constant, {lam0});
}

TradeIntensitySpec TradeIntensitySpec::exp_decay(double lam0, double a, double k) {
  if (!(lam0 >= 0.0) || !(a >= 0.0) || !(k > 0.0)) throw SchemaError("exp_decay needs lam0 >= 0, a >= 0, k > 0");
  return TradeIntensitySpec(Family::ExpDecay, {lam0, a, k});
}

TradeIntensitySpec TradeIntensitySpec::table(std::vector<double> s, std::vector<double> lam) {
  if (s.size() != lam.size() || s.size() < 2) throw SchemaError("intensity table needs matching vectors, >= 2 knots");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(lam[i] >= 0.0)) throw SchemaError("intensity table values must be >= 0");
    if (i > 0 && s[i] <= s[i - 1]) throw SchemaError("intensity table abscissae must be increasing");
  }
  std::vector<double> p = s;
  p.insert(p.end(), lam.begin(), lam.end());
  return TradeIntensitySpec(Family::Table, std::move(p));
}

double TradeIntensitySpec::value(double s) const {
  switch (family_) {
    case Family::Constant:
      return params_[0];
    case Family::ExpDecay:
      return params_[0] + params_[1] * std::exp(-params_[2] * std::max(s, 0.0));
    case Family::Table: {
      const std::size_t n = params_.size() / 2;
      const double* xs = params_.data();
      const double* ys = params_.data() + n;
      if (s <= xs[0]) return ys[0];
      if (s >= xs[n - 1]) return ys[n - 1];
      const auto it = std::upper_bound(xs, xs + n, s);
      const std::size_t k = static_cast<std::size_t>(it - xs);
      const double w = (s - xs[k - 1]) / (xs[k] - xs[k - 1]);
      return ys[k - 1] + w * (ys[k] - ys[k - 1]);
    }
  }
  return 0.0;
}

double TradeIntensitySpec::max_over(double s_hi) const {
  switch (family_) {
    case Family::Constant:
      return params_[0];
    case Family::ExpDecay:
      return params_[0] + params_[1];  // decreasing in s
    case Family::Table: {
      const std::size_t n = params_.size() / 2;
      const double* xs = params_.data();
      const double* ys = params_.data() + n;
      double m = value(s_hi);
      for (std::size_t i = 0; i < n && xs[i] <= s_hi; ++i) m = std::max(m, ys[i]);
      return std::max(m, ys[0]);
    }
  }
  return 0.0;
}

double TradeIntensitySpec::integral(double s0, double s1) const {
  if (s1 <= s0) return 0.0;
  switch (family_) {
    case Family::Constant:
      return params_[0] * (s1 - s0);
    case Family::ExpDecay: {
      const double lam0 = params_[0], a = params_[1], k = params_[2];
      return lam0 * (s1 - s0) - (a / k) * std::exp(-k * s0) * std::expm1(-k * (s1 - s0));
    }
    case Family::Table: {
      // exact integral of the piecewise-linear interpolant
      const std::size_t n = params_.size() / 2;
      const double* xs = params_.data();
      double acc = 0.0;
      double lo = s0;
      for (std::size_t k = 0; k <= n && lo < s1; ++k) {
        const double seg_hi = (k < n) ? std::min(xs[k], s1) : s1;
        if (seg_hi > lo) {
          acc += 0.5 * (value(lo) + value(seg_hi)) * (seg_hi - lo);
          lo = seg_hi;
        }
      }
      return acc;
    }
  }
  return 0.0;
}

FillDist::FillDist(std::vector<double> probs) : probs_(std::move(probs)) {
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    m1_ += static_cast<double>(k) * probs_[k];
    m2_ += static_cast<double>(k) * static_cast<double>(k) * probs_[k];
  }
}

FillDist FillDist::from_probs(std::vector<double> probs) {
  if (probs.size() < 2) throw SchemaError("fill distribution needs support {0,...,L} with L >= 1");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw SchemaError("fill probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw SchemaError("fill probabilities must sum to 1");
  return FillDist(std::move(probs));
}

int FillDist::sample(Rng& rng) const {
  double u = rng.uniform();
  double acc = 0.0;
  const int last = max_fill();
  for (int k = 0; k < last; ++k) {
    acc += probs_[static_cast<std::size_t>(k)];
    if (u < acc) return k;
  }
  return last;
}

ModelParams::ModelParams(double delta, double alpha, RenewalDist dist_plus, RenewalDist dist_minus,
                         TradeIntensitySpec lambda_spec, double rho, FillDist fill_plus, FillDist fill_minus,
                         int lot_size, double fee, double eta, double horizon)
    : delta_(delta),
      alpha_(alpha),
      dist_plus_(std::move(dist_plus)),
      dist_minus_(std::move(dist_minus)),
      lambda_spec_(std::move(lambda_spec)),
      rho_(rho),
      fill_plus_(std::move(fill_plus)),
      fill_minus_(std::move(fill_minus)),
      lot_(lot_size),
      fee_(fee),
      eta_(eta),
      horizon_(horizon) {
  if (!(delta_ > 0.0)) throw SchemaError("delta must be > 0");
  if (!(alpha_ >= -1.0 && alpha_ < 1.0)) throw SchemaError("alpha must lie in [-1, 1)");
  if (!(rho_ > -1.0 && rho_ < 1.0)) throw SchemaError("rho must lie in (-1, 1)");
  if (lot_ < 1) throw SchemaError("lot size must be >= 1");
  if (!(fee_ >= 0.0)) throw SchemaError("fee must be >= 0");
  if (!(eta_ >= 0.0)) throw SchemaError("eta must be >= 0");
  if (!(horizon_ > 0.0)) throw SchemaError("horizon must be > 0");
  if (fill_plus_.max_fill() != lot_ || fill_minus_.max_fill() != lot_)
    throw SchemaError("fill distributions must be supported on {0,...,L}");
  dist_plus_.validate();
  dist_minus_.validate();

  // truncation point of the s-axis: mixture quantile 1 - 1e-4
  const double target = 1.0 - kTailQuantile;
  double hi = std::max(dist_plus_.quantile(target), dist_minus_.quantile(target)) + 1.0;
  while (mixture_cdf(hi) < target) hi *= 2.0;
  double lo = 0.0;
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (mixture_cdf(mid) < target ? lo : hi) = mid;
  }
  s_max_ = 0.5 * (lo + hi);
  lambda_max_ = lambda_spec_.max_over(s_max_);
}

ModelParams ModelParams::with_eta(double eta) const {
  ModelParams p = *this;
  if (!(eta >= 0.0)) throw SchemaError("eta must be >= 0");
  p.eta_ = eta;
  return p;
}

ModelParams ModelParams::with_horizon(double horizon) const {
  if (!(horizon > 0.0)) throw SchemaError("horizon must be > 0");
  ModelParams p = *this;
  p.horizon_ = horizon;
  return p;
}

double ModelParams::mixture_cdf(double s) const {
  return side_weight(+1) * dist_plus_.cdf(s) + side_weight(-1) * dist_minus_.cdf(s);
}

double ModelParams::mixture_pdf(double s) const {
  return side_weight(+1) * dist_plus_.pdf(s) + side_weight(-1) * dist_minus_.pdf(s);
}

double ModelParams::mean_interarrival() const {
  return side_weight(+1) * dist_plus_.mean() + side_weight(-1) * dist_minus_.mean();
}

double ModelParams::hazard(int side, double s) const {
  const double sc = clamp_s(s);
  const double surv = 1.0 - mixture_cdf(sc);
  if (surv < kSurvivalFloor) throw TailUnderflow("survival below machine-safe floor inside the truncated axis");
  return side_weight(side) * dist(side).pdf(sc) / surv;
}

ModelParams::DriftVol ModelParams::drift_vol(double s) const {
  const double hp = hazard(+1, s);
  const double hm = hazard(-1, s);
  return {hp - hm, hp + hm};
}

double ModelParams::tilde_alpha(double s) const {
  const double sc = clamp_s(s);
  const double surv = 1.0 - mixture_cdf(sc);
  if (surv < kSurvivalFloor) throw TailUnderflow("survival below machine-safe floor inside the truncated axis");
  return (side_weight(+1) * dist_plus_.survival(sc) - side_weight(-1) * dist_minus_.survival(sc)) / surv;
}

double ModelParams::theta_infinity(double s) const {
  return 2.0 * delta_ * tilde_alpha(s) / (1.0 - alpha_);
}

double ModelParams::sigma2_bound() const {
  const int n = 4096;
  double m = 0.0;
  for (int i = 0; i <= n; ++i) {
    const auto dv = drift_vol(s_max_ * i / n);
    m = std::max(m, dv.sigma2);
  }
  return m;
}

ModelParams::JumpDraw ModelParams::sample_next_jump(int direction, double s, Rng& rng) const {
  if (!(s >= 0.0)) throw SamplerFailure("elapsed time must be >= 0");
  const double surv_mix = 1.0 - mixture_cdf(s);
  if (surv_mix < kSurvivalFloor) throw SamplerFailure("conditioning event has vanishing probability");
  // Bayes: P(B = + | S > s) = w+ (1 - F+(s)) / (1 - F(s))
  const double p_plus = side_weight(+1) * dist_plus_.survival(s) / surv_mix;
  const int b = rng.sign_bernoulli(p_plus);
  const RenewalDist& d = dist(b);
  const double fs = d.cdf(s);
  const double target = fs + rng.uniform() * (1.0 - fs);
  double wait;
  if (target >= 1.0) {
    // u rounded into the closed tail; retreat to the largest representable quantile
    wait = std::max(d.quantile(1.0 - kSurvivalFloor) - s, 0.0) + kSurvivalFloor;
  } else {
    const double hit = bisect_cdf(d, target, s, s + d.mean() + 1.0);
    wait = std::max(hit - s, 1e-15);
  }
  return {wait, b * direction, b};
}

}  // namespace mmlab
