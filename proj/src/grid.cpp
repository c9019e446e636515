// SPDX-License-Identifier: Apache-2.0
#include "mmlab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "mmlab/model.hpp"

namespace mmlab {

GridSpec GridSpec::make(double dt, double horizon, double s_max) {
  if (!(dt > 0.0) || !(horizon > 0.0) || !(s_max > 0.0)) throw SchemaError("grid steps and extents must be > 0");
  GridSpec g;
  g.dt = dt;
  g.horizon = horizon;
  g.s_max = s_max;
  const double steps = horizon / dt;
  g.nt = static_cast<int>(std::llround(steps));
  if (g.nt < 1 || std::abs(steps - g.nt) > 1e-9 * steps) throw SchemaError("dt must divide the horizon");
  g.ns = static_cast<int>(std::ceil(s_max / dt - 1e-12)) + 1;
  return g;
}

int GridSpec::nearest_t(double t) const {
  if (t < -1e-12 || t > horizon * (1.0 + 1e-12) + 1e-12) throw OutOfGrid("t outside [0, horizon]");
  return std::clamp(static_cast<int>(std::llround(t / dt)), 0, nt);
}

int GridSpec::nearest_s(double s) const {
  if (s < 0.0) throw OutOfGrid("s must be >= 0");
  return std::clamp(static_cast<int>(std::llround(s / dt)), 0, ns - 1);
}

void check_stability(const ModelParams& params, const GridSpec& grid) {
  double m = 0.0;
  for (int j = 0; j < grid.ns; ++j) {
    m = std::max(m, params.drift_vol(grid.s_at(j)).sigma2);
  }
  const double rate = m + params.lambda_max();
  if (!(grid.dt * rate <= 0.5)) {
    throw StabilityViolation("dt * (sigma2_max + lambda_max) = " + std::to_string(grid.dt * rate) + " exceeds 1/2");
  }
}

std::string field_tag_name(FieldTag tag) {
  switch (tag) {
    case FieldTag::Theta: return "theta";
    case FieldTag::Omega: return "omega";
    case FieldTag::Zeta1: return "zeta1";
    case FieldTag::Zeta0: return "zeta0";
    case FieldTag::GPlus: return "g_plus";
    case FieldTag::GMinus: return "g_minus";
    case FieldTag::GTrdPlus: return "g_trd_plus";
    case FieldTag::GTrdMinus: return "g_trd_minus";
    case FieldTag::GJmpPlus: return "g_jmp_plus";
    case FieldTag::GJmpMinus: return "g_jmp_minus";
    case FieldTag::APlus: return "a_plus";
    case FieldTag::AMinus: return "a_minus";
    case FieldTag::BPlus: return "b_plus";
    case FieldTag::BMinus: return "b_minus";
  }
  return "?";
}

double ValueGrid::value(double t, double s) const {
  return at(grid_.nearest_t(t), grid_.nearest_s(s));
}

double ZetaField::value(double t, double s, long q) const {
  return at_extended(grid_.nearest_t(t), grid_.nearest_s(s), q);
}

}  // namespace mmlab
