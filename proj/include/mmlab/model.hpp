// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mmlab/distributions.hpp"
#include "mmlab/rng.hpp"

namespace mmlab {

// Conditional intensity lambda(s) of the trade flow as a function of the
// elapsed time since the last price move.
class TradeIntensitySpec {
 public:
  enum class Family { Constant, ExpDecay, Table };

  static TradeIntensitySpec constant(double lam0);
  // lam0 + a * exp(-k s)
  static TradeIntensitySpec exp_decay(double lam0, double a, double k);
  // linear interpolation between knots, constant beyond the ends
  static TradeIntensitySpec table(std::vector<double> s, std::vector<double> lam);

  Family family() const { return family_; }
  const std::vector<double>& raw_params() const { return params_; }

  double value(double s) const;
  double max_over(double s_hi) const;
  // integral of lambda over [s0, s1], closed form per family
  double integral(double s0, double s1) const;

 private:
  TradeIntensitySpec(Family f, std::vector<double> p) : family_(f), params_(std::move(p)) {}
  Family family_;
  std::vector<double> params_;
};

// Distribution of the executed quantity on {0, ..., L} when a trade hits a
// posted order, with its first two moments cached.
class FillDist {
 public:
  static FillDist from_probs(std::vector<double> probs);

  int max_fill() const { return static_cast<int>(probs_.size()) - 1; }
  double prob(int k) const { return probs_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& probs() const { return probs_; }
  double moment1() const { return m1_; }
  double moment2() const { return m2_; }
  int sample(Rng& rng) const;

 private:
  explicit FillDist(std::vector<double> probs);
  std::vector<double> probs_;
  double m1_ = 0.0;
  double m2_ = 0.0;
};

// All primitives of the price/trade model plus the agent constants.
// Immutable after construction; evaluation methods are const and
// thread-safe. Everything indexed by +/- refers to the strong/weak side
// relative to the last price direction, not to ask/bid.
class ModelParams {
 public:
  ModelParams(double delta, double alpha, RenewalDist dist_plus, RenewalDist dist_minus,
              TradeIntensitySpec lambda_spec, double rho, FillDist fill_plus, FillDist fill_minus,
              int lot_size, double fee, double eta, double horizon);

  double delta() const { return delta_; }
  double alpha() const { return alpha_; }
  double rho() const { return rho_; }
  int lot_size() const { return lot_; }
  double fee() const { return fee_; }
  double eta() const { return eta_; }
  double horizon() const { return horizon_; }
  const RenewalDist& dist(int side) const { return side > 0 ? dist_plus_ : dist_minus_; }
  const FillDist& fill(int side) const { return side > 0 ? fill_plus_ : fill_minus_; }
  const TradeIntensitySpec& lambda_spec() const { return lambda_spec_; }

  ModelParams with_eta(double eta) const;
  ModelParams with_horizon(double horizon) const;

  // Mass (1 +/- alpha)/2 of the direction chain.
  double side_weight(int side) const { return 0.5 * (1.0 + side * alpha_); }

  // F = w+ F+ + w- F-, the law of the unconditional inter-arrival times.
  double mixture_cdf(double s) const;
  double mixture_pdf(double s) const;
  double mean_interarrival() const;

  // s-axis truncation at the F-quantile 1 - 1e-4; evaluations freeze there.
  double s_max() const { return s_max_; }
  double clamp_s(double s) const { return s < s_max_ ? s : s_max_; }

  // h_{+/-}(s) = w_{+/-} f_{+/-}(s) / (1 - F(s)), frozen beyond s_max.
  double hazard(int side, double s) const;
  // (mu, sigma2) = (h+ - h-, h+ + h-)
  struct DriftVol {
    double mu;
    double sigma2;
  };
  DriftVol drift_vol(double s) const;

  // Conditional mean of the next jump sign given survival to elapsed time s.
  double tilde_alpha(double s) const;
  // Large-horizon limit of the trend indicator: 2 delta tilde_alpha / (1 - alpha).
  double theta_infinity(double s) const;

  // lambda(s) frozen beyond s_max, and its bound over the truncated axis.
  double lambda_at(double s) const { return lambda_spec_.value(clamp_s(s)); }
  double lambda_max() const { return lambda_max_; }

  // Numerical sup of sigma2 over the truncated grid (thinning/stability bound).
  double sigma2_bound() const;

  struct JumpDraw {
    double wait;        // strictly positive residual time to the next jump
    int direction;      // new price direction, +/-1
    int concordance;    // B = new_direction * old_direction
  };
  // Exact conditional draw given the current direction and elapsed time s.
  JumpDraw sample_next_jump(int direction, double s, Rng& rng) const;

 private:
  double delta_;
  double alpha_;
  RenewalDist dist_plus_;
  RenewalDist dist_minus_;
  TradeIntensitySpec lambda_spec_;
  double rho_;
  FillDist fill_plus_;
  FillDist fill_minus_;
  int lot_;
  double fee_;
  double eta_;
  double horizon_;
  double s_max_;
  double lambda_max_;
};

// Markov state of the price: direction and elapsed time, with the price kept
// on the tick grid as an integer count of 2-delta moves from the opening.
struct MarketState {
  double t = 0.0;
  std::int64_t ticks = 0;
  int direction = +1;
  double s = 0.0;

  double price(double p0, double delta) const { return p0 + 2.0 * delta * static_cast<double>(ticks); }
};

struct PortfolioState {
  double cash = 0.0;
  std::int64_t inventory = 0;

  std::int64_t strong_inventory(int direction) const { return direction * inventory; }
};

}  // namespace mmlab
