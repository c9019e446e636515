// SPDX-License-Identifier: Apache-2.0
#include "mmlab/policy.hpp"

#include <cmath>
#include <utility>

namespace mmlab {

QuoteDecision control_eta0(const ValueGrid& g_plus, const ValueGrid& g_minus, double t, double s) {
  const int it = g_plus.grid().nearest_t(t);
  const int js = g_plus.grid().nearest_s(s);
  return {g_plus.at(it, js) > 0.0 ? 1 : 0, g_minus.at(it, js) > 0.0 ? 1 : 0};
}

AdjustmentField adjustments(const ModelParams& params, const ValueGrid& zeta1) {
  const GridSpec& grid = zeta1.grid();
  AdjustmentField adj{ValueGrid(FieldTag::APlus, grid), ValueGrid(FieldTag::AMinus, grid),
                      ValueGrid(FieldTag::BPlus, grid), ValueGrid(FieldTag::BMinus, grid)};
  const double L = params.lot_size();
  const double m1p = params.fill(+1).moment1();
  const double m1m = params.fill(-1).moment1();
  const double m2p = params.fill(+1).moment2();
  const double m2m = params.fill(-1).moment2();
  for (int j = 0; j < grid.ns; ++j) {
    const double s = grid.s_at(j);
    const double hp = params.hazard(+1, s);
    const double hm = params.hazard(-1, s);
    const double lam = params.lambda_at(s);
    const double lp = 0.5 * (1.0 + params.rho()) * lam;
    const double lm = 0.5 * (1.0 - params.rho()) * lam;
    for (int i = 0; i <= grid.nt; ++i) {
      const double z1_reset = zeta1.at(i, 0);
      const double z1 = zeta1.at(i, j);
      adj.a_plus.at(i, j) = hp * L * (L - 2.0 * z1_reset) + lp * (m2p - 2.0 * z1 * m1p);
      adj.a_minus.at(i, j) = hm * L * (L - 2.0 * z1_reset) + lm * (m2m + 2.0 * z1 * m1m);
      adj.b_plus.at(i, j) = hp * L + lp * m1p;
      adj.b_minus.at(i, j) = hm * L + lm * m1m;
    }
  }
  return adj;
}

QuoteDecision control_approx(const ValueGrid& g_plus, const ValueGrid& g_minus, const AdjustmentField& adj,
                             double eta, double t, double s, long q) {
  const int it = g_plus.grid().nearest_t(t);
  const int js = g_plus.grid().nearest_s(s);
  const double qd = static_cast<double>(q);
  const double thr_plus = eta * (adj.a_plus.at(it, js) - 2.0 * adj.b_plus.at(it, js) * qd);
  const double thr_minus = eta * (adj.a_minus.at(it, js) + 2.0 * adj.b_minus.at(it, js) * qd);
  return {g_plus.at(it, js) > thr_plus ? 1 : 0, g_minus.at(it, js) > thr_minus ? 1 : 0};
}

double exact_adjustment(const ZetaField& zeta, const ModelParams& params, int side, int it, int js, long q) {
  const double s = zeta.grid().s_at(js);
  const double h = params.hazard(side, s);
  const double lam = 0.5 * (1.0 + side * params.rho()) * params.lambda_at(s);
  const FillDist& fd = params.fill(side);
  // lookups past the solved range use the quadratic extension of the field
  const double jump_term =
      zeta.at_extended(it, 0, side * q - params.lot_size()) - zeta.at_extended(it, 0, side * q);
  double trade_term = 0.0;
  const double base = zeta.at_extended(it, js, q);
  for (int f = 0; f <= params.lot_size(); ++f) {
    trade_term += fd.prob(f) * (zeta.at_extended(it, js, q - side * f) - base);
  }
  return h * jump_term + lam * trade_term;
}

QuoteDecision control_exact(const ZetaField& zeta, const ValueGrid& g_plus, const ValueGrid& g_minus,
                            const ModelParams& params, double t, double s, long q) {
  if (std::labs(q) + params.lot_size() > zeta.q_max()) {
    throw QRangeExceeded("control query needs zeta beyond the solved inventory range");
  }
  const int it = g_plus.grid().nearest_t(t);
  const int js = g_plus.grid().nearest_s(s);
  QuoteDecision d;
  d.ell_plus = g_plus.at(it, js) > exact_adjustment(zeta, params, +1, it, js, q) ? 1 : 0;
  d.ell_minus = g_minus.at(it, js) > exact_adjustment(zeta, params, -1, it, js, q) ? 1 : 0;
  return d;
}

PolicyFn make_hold_policy() {
  return [](double, double, long) { return QuoteDecision{0, 0}; };
}

PolicyFn make_always_on_policy() {
  return [](double, double, long) { return QuoteDecision{1, 1}; };
}

PolicyFn make_eta0_policy(std::shared_ptr<const BarrierPair> g) {
  return [g](double t, double s, long) { return control_eta0(g->plus, g->minus, t, s); };
}

PolicyFn make_approx_policy(std::shared_ptr<const BarrierPair> g, std::shared_ptr<const AdjustmentField> adj,
                            double eta) {
  return [g, adj, eta](double t, double s, long q) { return control_approx(g->plus, g->minus, *adj, eta, t, s, q); };
}

PolicyFn make_exact_policy(std::shared_ptr<const ZetaField> zeta, std::shared_ptr<const BarrierPair> g,
                           const ModelParams& params) {
  auto p = std::make_shared<ModelParams>(params);
  // backtest paths can stray past the solved inventory range; out there the
  // decision saturates through the quadratic extension instead of failing
  return [zeta, g, p](double t, double s, long q) {
    const int it = g->plus.grid().nearest_t(t);
    const int js = g->plus.grid().nearest_s(s);
    QuoteDecision d;
    d.ell_plus = g->plus.at(it, js) > exact_adjustment(*zeta, *p, +1, it, js, q) ? 1 : 0;
    d.ell_minus = g->minus.at(it, js) > exact_adjustment(*zeta, *p, -1, it, js, q) ? 1 : 0;
    return d;
  };
}

}  // namespace mmlab
