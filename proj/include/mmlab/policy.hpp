// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>

#include "mmlab/grid.hpp"
#include "mmlab/model.hpp"
#include "mmlab/pde.hpp"

namespace mmlab {

// Limit order posted (1) or not (0) on the strong / weak side.
struct QuoteDecision {
  int ell_plus = 0;
  int ell_minus = 0;

  bool operator==(const QuoteDecision&) const = default;
};

// A_{+/-}, B_{+/-}: inventory-independent and inventory-linear barrier
// adjustments of the small-eta policy. B is nonnegative by construction.
struct AdjustmentField {
  ValueGrid a_plus;
  ValueGrid a_minus;
  ValueGrid b_plus;
  ValueGrid b_minus;
};

// eta = 0 feedback control: post where the barrier is strictly positive.
QuoteDecision control_eta0(const ValueGrid& g_plus, const ValueGrid& g_minus, double t, double s);

AdjustmentField adjustments(const ModelParams& params, const ValueGrid& zeta1);

// Small-eta control: post on side +/- where G > eta (A -/+ 2 B q).
QuoteDecision control_approx(const ValueGrid& g_plus, const ValueGrid& g_minus, const AdjustmentField& adj,
                             double eta, double t, double s, long q);

// <C_{+/-}, zeta>(t,s,q): exact barrier adjustment read off the solved
// deformation field; inventory lookups past the solved range go through the
// quadratic extension.
double exact_adjustment(const ZetaField& zeta, const ModelParams& params, int side, int it, int js, long q);

// Exact control: post on side +/- where G > <C_{+/-}, zeta>. Requires
// |q| + L <= q_max; throws QRangeExceeded otherwise.
QuoteDecision control_exact(const ZetaField& zeta, const ValueGrid& g_plus, const ValueGrid& g_minus,
                            const ModelParams& params, double t, double s, long q);

// Feedback policies as callables on (t, elapsed time, strong inventory).
using PolicyFn = std::function<QuoteDecision(double t, double s, long q)>;

PolicyFn make_hold_policy();
PolicyFn make_always_on_policy();
PolicyFn make_eta0_policy(std::shared_ptr<const BarrierPair> g);
PolicyFn make_approx_policy(std::shared_ptr<const BarrierPair> g, std::shared_ptr<const AdjustmentField> adj,
                            double eta);
PolicyFn make_exact_policy(std::shared_ptr<const ZetaField> zeta, std::shared_ptr<const BarrierPair> g,
                           const ModelParams& params);

}  // namespace mmlab
