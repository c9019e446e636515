// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mmlab/model.hpp"
#include "mmlab/order_flow.hpp"

namespace mmlab {

// Estimators work on the tape alone: elapsed times are rebuilt from the
// JUMP rows, never read from the state_s column, so a real exchange tape
// with only (time, kind, direction, price) calibrates the same way.

struct AlphaEstimate {
  double value = 0.0;
  double se = 0.0;
  long n_pairs = 0;
};

// Sample mean of B_n = J_n J_{n-1} over consecutive jumps.
AlphaEstimate estimate_alpha(const EventTape& tape);

struct HazardBin {
  double s_lo = 0.0, s_hi = 0.0;  // elapsed-time range of the bin
  double q_lo = 0.0, q_hi = 0.0;  // pooled renewal-quantile range
  double exposure = 0.0;          // total at-risk time spent in the bin
  long events_plus = 0, events_minus = 0;
  double h_plus = 0.0, se_plus = 0.0;
  double h_minus = 0.0, se_minus = 0.0;
};

struct RenewalEstimate {
  std::optional<RenewalDist> f_plus;   // empirical CDF of concordant spells
  std::optional<RenewalDist> f_minus;  // empirical CDF of discordant spells
  long n_plus = 0, n_minus = 0;
  std::vector<HazardBin> bins;  // occurrence/exposure hazards on quantile bins
};

// Empirical F_{+/-} split by the sign of B_n, and binned hazard curves on
// the renewal-quantile axis with >= 30 events per bin where possible.
RenewalEstimate estimate_renewal(const EventTape& tape);

struct LambdaFit {
  double lam0 = 0.0;
  double a = 0.0;
  double k = 0.0;
  double loglik = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::array<double, 3> se{0.0, 0.0, 0.0};  // from observed-information curvature
  long n_trades = 0;
  double window = 0.0;
};

// MLE of lambda(s) = lam0 + a exp(-k s) for the trade flow, with the
// compensator integrated in closed form per inter-jump segment.
LambdaFit estimate_lambda_mle(const EventTape& tape);

struct RhoEstimate {
  double value = 0.0;
  double se = 0.0;
  long n = 0;
};

// Sample mean of Z_k I_{theta_k-} over trades with a preceding jump.
RhoEstimate estimate_rho(const EventTape& tape);

struct VarthetaEstimate {
  std::vector<double> probs_plus;   // on {0,...,L}
  std::vector<double> probs_minus;
  long trades_plus = 0, trades_minus = 0;
};

// Fill-size distributions from an always-posted backtest tape, counting
// trades and agent fills per inter-jump interval and removing the
// jump-caused execution through the indicator corrections.
VarthetaEstimate estimate_vartheta(const EventTape& tape, int lot_size);

struct CalibrationReport {
  AlphaEstimate alpha;
  RenewalEstimate renewal;
  LambdaFit lambda;
  RhoEstimate rho;
  std::optional<VarthetaEstimate> vartheta;
};

// Runs every estimator that the tape supports.
CalibrationReport calibrate(const EventTape& tape, std::optional<int> lot_size = std::nullopt);

}  // namespace mmlab
