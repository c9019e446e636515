// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mmlab/model.hpp"
#include "mmlab/order_flow.hpp"
#include "mmlab/policy.hpp"

namespace mmlab {

struct BacktestConfig {
  int n_paths = 1;
  std::uint64_t seed = 1;
  PolicyFn policy;
  double t0 = 0.0;
  double p0 = 100.0;
  int i0 = +1;
  double s0 = 0.0;
  double x0 = 0.0;
  std::int64_t y0 = 0;
  // quotes are refreshed at event times and at these deterministic times;
  // 0 disables checkpoints (state-independent policies don't need them)
  double checkpoint_dt = 0.0;
  bool record_tapes = false;
};

struct BacktestReport {
  int n_paths = 0;
  double eta = 0.0;
  double mean_utility = 0.0;  // X_T + Y_T P_T - eta Y_T^2
  double se_utility = 0.0;
  double mean_terminal_inventory = 0.0;
  double var_terminal_inventory = 0.0;
  std::int64_t fill_events_trade = 0;
  std::int64_t fill_events_jump = 0;
  std::int64_t lots_trade = 0;
  std::int64_t lots_jump = 0;
  // populated when record_tapes is set, one entry per path
  std::vector<EventTape> tapes;
  struct Terminal {
    double cash;
    std::int64_t inventory;
    double price;
  };
  std::vector<Terminal> terminals;
};

// Event-driven Monte Carlo over independent paths with per-path RNG
// substreams; identical seed gives an identical report.
BacktestReport run_backtest(const BacktestConfig& config, const ModelParams& params);

// Recompute (X_T, Y_T) from a recorded tape alone. Rows carry the pre-event
// mid-price, so the bookkeeping reproduces the engine bit for bit.
struct ReplayResult {
  double cash;
  std::int64_t inventory;
};
ReplayResult replay_tape(const EventTape& tape, const ModelParams& params, double x0, std::int64_t y0);

struct FunctionalEstimate {
  double mean = 0.0;
  double se = 0.0;
  double mean_resets = 0.0;  // average number of s -> 0 renewals seen
};

// Feynman-Kac evaluation of E[ integral_t0^T f(u, S_u) du ] where S is the
// elapsed-time process alone (resets at rate sigma2(S)).
FunctionalEstimate oracle_elapsed_time_functional(const ModelParams& params,
                                                  const std::function<double(double, double)>& integrand, double t0,
                                                  double s0, int n_paths, std::uint64_t seed,
                                                  double quad_dt = 0.01);

struct InventoryMoments {
  double mean_y = 0.0;   // E[Y_T] starting from 0 inventory, direction +1
  double se_y = 0.0;
  double mean_q2 = 0.0;  // E[Q_T^2] = E[Y_T^2]
  double se_q2 = 0.0;
};

// Terminal inventory moments under a feedback policy; the probabilistic
// counterparts of zeta1 and zeta0.
InventoryMoments oracle_inventory_moments(const ModelParams& params, const PolicyFn& policy, double t0, double s0,
                                          int n_paths, std::uint64_t seed, double checkpoint_dt);

struct UtilityCurveRow {
  std::string policy;
  double eta;
  double mean_utility;
  double se_utility;
};

// Backtests hold / always-on / eta0-optimal / approximate / exact policies
// across risk aversions, all with common random numbers.
std::vector<UtilityCurveRow> utility_curve(const ModelParams& params, const BarrierPair& barriers,
                                           const AdjustmentField& adj, const std::vector<double>& etas, int q_max,
                                           const BacktestConfig& base_config);

}  // namespace mmlab
