// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmlab/grid.hpp"
#include "mmlab/model.hpp"

namespace mmlab {

// Backward solvers for the (t,s) transport equations of the model. All of
// them march along the characteristic dt = ds: the value at (t, s) is
// updated from (t + dt, s + dt) plus dt times the reaction and nonlocal
// s -> 0 terms read from the t + dt row. At s = s_max the characteristic
// leaves the lattice and the closure freezes coefficients and values there.

// Trend indicator theta: expected terminal price seen from (t, s) per unit
// of the current direction; terminal condition theta(T, .) = 0.
ValueGrid solve_theta(const ModelParams& params, const GridSpec& grid);

struct BarrierPair {
  ValueGrid plus;
  ValueGrid minus;
};

// Per-side quoting payoff G_{+/-}(t,s) =
//   lambda_{+/-}(s) (delta - eps -/+ theta(t,s)) vartheta1_{+/-}
//   - h_{+/-}(s) (delta + eps + theta(t,0)) L
BarrierPair barrier_G(const ModelParams& params, const ValueGrid& theta);

struct BarrierSplit {
  ValueGrid trd_plus;
  ValueGrid trd_minus;
  ValueGrid jmp_plus;
  ValueGrid jmp_minus;
};
BarrierSplit barrier_split(const ModelParams& params, const ValueGrid& theta);

// Pointwise pieces of the barrier, also usable for degenerate cases.
double barrier_trade_part(double lambda_side, double theta_ts, double delta, double eps, double vartheta1, int side);
double barrier_jump_part(double h_side, double theta_t0, double delta, double eps, int lot_size);

// Stationary barrier built from theta_infinity; the large-horizon limit of
// G_{+/-}(0, s).
double barrier_infinity(const ModelParams& params, int side, double s);

// Expected market-making gain above holding, for the zero risk aversion
// optimum; omega >= 0, omega(T, .) = 0.
ValueGrid solve_omega(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus);

// First-order (in inventory) term of the small-eta expansion: expected
// terminal inventory deviation under the eta = 0 feedback policy.
ValueGrid solve_zeta1(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus);

// Zeroth-order term: expected squared terminal strong inventory from 0
// under the eta = 0 feedback policy.
ValueGrid solve_zeta0(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus,
                      const ValueGrid& zeta1);

struct ZetaSolveOptions {
  // re-solve with doubled q_max and compare on the inner half-range
  bool check_q_range = false;
  double q_range_tol = 1e-3;
};

// Exact risk deformation zeta(t,s,q): backward marching of the q-coupled
// obstacle system with per-node minimization over posting one lot or not.
// Terminal condition eta q^2; lookups beyond |q| <= q_max use the quadratic
// extension of ZetaField.
ZetaField solve_zeta_exact(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus, int q_max,
                           const ZetaSolveOptions& options = {});

}  // namespace mmlab
