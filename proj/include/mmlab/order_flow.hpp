// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmlab/model.hpp"
#include "mmlab/rng.hpp"

namespace mmlab {

// One realized trajectory of the price state over [t0, t0 + horizon]:
// jump times with post-jump directions, plus the initial condition.
struct PricePath {
  double t0 = 0.0;
  double horizon = 0.0;
  int dir0 = +1;
  double s0 = 0.0;

  struct Jump {
    double time;
    int direction;  // post-jump direction
  };
  std::vector<Jump> jumps;

  // Elapsed time and direction just before t (left limits).
  double s_before(double t) const;
  int dir_before(double t) const;
  // integral of lambda(S_u) du over [a, b] under this path
  double intensity_integral(const ModelParams& params, double a, double b) const;
};

PricePath simulate_price_path(const ModelParams& params, double t0, int dir0, double s0, double horizon, Rng& rng);

struct TradeEvent {
  double time;
  int side;         // Z_k: +1 trade at best ask, -1 at best bid
  int concordance;  // Gamma_k = Z_k * I_{t-}
};

// (1 +/- rho)/2 * lambda(s): intensity of the concordant/discordant flow.
double side_intensity(const ModelParams& params, int side, double s);

// Marked Cox trade flow subordinated to the price path, by thinning against
// the cached bound lambda_max.
std::vector<TradeEvent> simulate_trades(const PricePath& path, const ModelParams& params, Rng& rng);

// Draw an executed quantity from a fill distribution.
int draw_fill(const FillDist& dist, Rng& rng);

// One row of the merged event tape. `fill` is the agent fill size when the
// tape comes from a backtest, 0 otherwise. `state_s` and `price` are left
// limits: the elapsed time and mid-price just before the event.
struct TapeRow {
  double time;
  enum class Kind { Jump, Trade } kind;
  int direction;  // jump direction for JUMP rows, trade side Z for TRADE rows
  int fill;
  double state_s;
  double price;
};

using EventTape = std::vector<TapeRow>;

// Price jumps and trades merged in time order (no agent, zero fills).
EventTape make_event_tape(const PricePath& path, const std::vector<TradeEvent>& trades, const ModelParams& params,
                          double p0);

std::string tape_to_csv(const EventTape& tape);
EventTape tape_from_csv(const std::string& text);

}  // namespace mmlab
