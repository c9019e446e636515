// SPDX-License-Identifier: Apache-2.0
#include "mmlab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace mmlab {

namespace {

// per-node model coefficients; the marching solvers read them at the
// midpoint of the characteristic segment [s_j, s_j + dt], which removes the
// leading coefficient-variation error of the explicit step
struct Coeffs {
  std::vector<double> h_plus, h_minus, lam_plus, lam_minus, mu, sigma2;

  Coeffs(const ModelParams& params, const GridSpec& grid, double offset) {
    const int ns = grid.ns;
    h_plus.resize(ns);
    h_minus.resize(ns);
    lam_plus.resize(ns);
    lam_minus.resize(ns);
    mu.resize(ns);
    sigma2.resize(ns);
    for (int j = 0; j < ns; ++j) {
      const double s = grid.s_at(j) + offset;
      h_plus[j] = params.hazard(+1, s);
      h_minus[j] = params.hazard(-1, s);
      const double lam = params.lambda_at(s);
      lam_plus[j] = 0.5 * (1.0 + params.rho()) * lam;
      lam_minus[j] = 0.5 * (1.0 - params.rho()) * lam;
      mu[j] = h_plus[j] - h_minus[j];
      sigma2[j] = h_plus[j] + h_minus[j];
    }
  }

  static Coeffs nodal(const ModelParams& params, const GridSpec& grid) { return Coeffs(params, grid, 0.0); }
  static Coeffs midstep(const ModelParams& params, const GridSpec& grid) {
    return Coeffs(params, grid, 0.5 * grid.dt);
  }

  double h(int side, int j) const { return side > 0 ? h_plus[j] : h_minus[j]; }
  double lam(int side, int j) const { return side > 0 ? lam_plus[j] : lam_minus[j]; }
};

// Backward march of (d/dt + d/ds) phi = a(s) phi(t,s) + b(s) phi(t,0) + c(t,s)
// with phi(T,.) = 0. The source c is read at the already-solved row.
ValueGrid march_linear(FieldTag tag, const GridSpec& grid, const std::vector<double>& a, const std::vector<double>& b,
                       const std::function<double(int, int)>& c) {
  ValueGrid phi(tag, grid);
  const int ns = grid.ns;
  const double dt = grid.dt;
  for (int i = grid.nt - 1; i >= 0; --i) {
    const int ip = i + 1;
    const double phi0 = phi.at(ip, 0);
    for (int j = 0; j < ns; ++j) {
      const int jp = std::min(j + 1, ns - 1);
      const double up = phi.at(ip, jp);
      phi.at(i, j) = up - dt * (a[j] * up + b[j] * phi0 + c(ip, j));
    }
  }
  return phi;
}

}  // namespace

ValueGrid solve_theta(const ModelParams& params, const GridSpec& grid) {
  check_stability(params, grid);
  const Coeffs k = Coeffs::midstep(params, grid);
  std::vector<double> b(grid.ns);
  for (int j = 0; j < grid.ns; ++j) b[j] = -k.mu[j];
  const double two_delta = 2.0 * params.delta();
  return march_linear(FieldTag::Theta, grid, k.sigma2, b,
                      [&](int, int j) { return -two_delta * k.mu[j]; });
}

double barrier_trade_part(double lambda_side, double theta_ts, double delta, double eps, double vartheta1, int side) {
  return lambda_side * (delta - eps - side * theta_ts) * vartheta1;
}

double barrier_jump_part(double h_side, double theta_t0, double delta, double eps, int lot_size) {
  return h_side * (delta + eps + theta_t0) * lot_size;
}

BarrierPair barrier_G(const ModelParams& params, const ValueGrid& theta) {
  const GridSpec& grid = theta.grid();
  const Coeffs k = Coeffs::nodal(params, grid);
  BarrierPair out{ValueGrid(FieldTag::GPlus, grid), ValueGrid(FieldTag::GMinus, grid)};
  const double delta = params.delta();
  const double eps = params.fee();
  const int L = params.lot_size();
  for (int i = 0; i <= grid.nt; ++i) {
    const double th0 = theta.at(i, 0);
    for (int j = 0; j < grid.ns; ++j) {
      const double th = theta.at(i, j);
      out.plus.at(i, j) = barrier_trade_part(k.lam_plus[j], th, delta, eps, params.fill(+1).moment1(), +1) -
                          barrier_jump_part(k.h_plus[j], th0, delta, eps, L);
      out.minus.at(i, j) = barrier_trade_part(k.lam_minus[j], th, delta, eps, params.fill(-1).moment1(), -1) -
                           barrier_jump_part(k.h_minus[j], th0, delta, eps, L);
    }
  }
  return out;
}

BarrierSplit barrier_split(const ModelParams& params, const ValueGrid& theta) {
  const GridSpec& grid = theta.grid();
  const Coeffs k = Coeffs::nodal(params, grid);
  BarrierSplit out{ValueGrid(FieldTag::GTrdPlus, grid), ValueGrid(FieldTag::GTrdMinus, grid),
                   ValueGrid(FieldTag::GJmpPlus, grid), ValueGrid(FieldTag::GJmpMinus, grid)};
  const double delta = params.delta();
  const double eps = params.fee();
  const int L = params.lot_size();
  for (int i = 0; i <= grid.nt; ++i) {
    const double th0 = theta.at(i, 0);
    for (int j = 0; j < grid.ns; ++j) {
      const double th = theta.at(i, j);
      out.trd_plus.at(i, j) = barrier_trade_part(k.lam_plus[j], th, delta, eps, params.fill(+1).moment1(), +1);
      out.trd_minus.at(i, j) = barrier_trade_part(k.lam_minus[j], th, delta, eps, params.fill(-1).moment1(), -1);
      out.jmp_plus.at(i, j) = barrier_jump_part(k.h_plus[j], th0, delta, eps, L);
      out.jmp_minus.at(i, j) = barrier_jump_part(k.h_minus[j], th0, delta, eps, L);
    }
  }
  return out;
}

double barrier_infinity(const ModelParams& params, int side, double s) {
  const double lam = 0.5 * (1.0 + side * params.rho()) * params.lambda_at(s);
  const double h = params.hazard(side, s);
  return barrier_trade_part(lam, params.theta_infinity(s), params.delta(), params.fee(),
                            params.fill(side).moment1(), side) -
         barrier_jump_part(h, params.theta_infinity(0.0), params.delta(), params.fee(), params.lot_size());
}

ValueGrid solve_omega(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus) {
  const GridSpec& grid = g_plus.grid();
  check_stability(params, grid);
  const Coeffs k = Coeffs::midstep(params, grid);
  std::vector<double> b(grid.ns);
  for (int j = 0; j < grid.ns; ++j) b[j] = -k.sigma2[j];
  return march_linear(FieldTag::Omega, grid, k.sigma2, b, [&](int i, int j) {
    return -(std::max(g_plus.at(i, j), 0.0) + std::max(g_minus.at(i, j), 0.0));
  });
}

ValueGrid solve_zeta1(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus) {
  const GridSpec& grid = g_plus.grid();
  check_stability(params, grid);
  const Coeffs k = Coeffs::midstep(params, grid);
  std::vector<double> b(grid.ns);
  for (int j = 0; j < grid.ns; ++j) b[j] = -k.mu[j];
  const double L = params.lot_size();
  const double m1p = params.fill(+1).moment1();
  const double m1m = params.fill(-1).moment1();
  return march_linear(FieldTag::Zeta1, grid, k.sigma2, b, [&](int i, int j) {
    double src = 0.0;
    if (g_plus.at(i, j) > 0.0) src += k.h_plus[j] * L + k.lam_plus[j] * m1p;
    if (g_minus.at(i, j) > 0.0) src -= k.h_minus[j] * L + k.lam_minus[j] * m1m;
    return src;
  });
}

ValueGrid solve_zeta0(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus,
                      const ValueGrid& zeta1) {
  const GridSpec& grid = g_plus.grid();
  check_stability(params, grid);
  const Coeffs k = Coeffs::midstep(params, grid);
  std::vector<double> b(grid.ns);
  for (int j = 0; j < grid.ns; ++j) b[j] = -k.sigma2[j];
  const double L = params.lot_size();
  const double m1p = params.fill(+1).moment1();
  const double m1m = params.fill(-1).moment1();
  const double m2p = params.fill(+1).moment2();
  const double m2m = params.fill(-1).moment2();
  const int ns = grid.ns;
  // zeta1 enters the source at the nodes the marching scheme actually
  // touches (transported node and the s=0 reset), which keeps the quadratic
  // ansatz identity exact on the lattice.
  return march_linear(FieldTag::Zeta0, grid, k.sigma2, b, [&](int i, int j) {
    const int jp = std::min(j + 1, ns - 1);
    const double z1_reset = zeta1.at(i, 0);
    const double z1_here = zeta1.at(i, jp);
    double src = 0.0;
    if (g_plus.at(i, j) > 0.0) {
      src += k.h_plus[j] * L * (L - 2.0 * z1_reset) + k.lam_plus[j] * (m2p - 2.0 * m1p * z1_here);
    }
    if (g_minus.at(i, j) > 0.0) {
      src += k.h_minus[j] * L * (L - 2.0 * z1_reset) + k.lam_minus[j] * (m2m + 2.0 * m1m * z1_here);
    }
    return -src;
  });
}

ZetaField solve_zeta_exact(const ModelParams& params, const ValueGrid& g_plus, const ValueGrid& g_minus, int q_max,
                           const ZetaSolveOptions& options) {
  const GridSpec& grid = g_plus.grid();
  check_stability(params, grid);
  if (q_max < 2 * params.lot_size()) throw QRangeTooSmall("q_max must cover at least two lots");
  const Coeffs k = Coeffs::midstep(params, grid);
  const double eta = params.eta();
  const int L = params.lot_size();
  const double dt = grid.dt;
  const int ns = grid.ns;

  ZetaField zeta(grid, q_max, eta);
  for (long q = -q_max; q <= q_max; ++q) {
    const double vq = eta * static_cast<double>(q) * static_cast<double>(q);
    for (int j = 0; j < ns; ++j) zeta.at(grid.nt, j, q) = vq;
  }

  for (int i = grid.nt - 1; i >= 0; --i) {
    const int ip = i + 1;
    for (int j = 0; j < ns; ++j) {
      const int jp = std::min(j + 1, ns - 1);
      for (long q = -q_max; q <= q_max; ++q) {
        const double base = zeta.at(ip, jp, q);
        double acc = base;
        for (int nu : {+1, -1}) {
          const double g = (nu > 0 ? g_plus : g_minus).at(ip, j);
          const double gpos = std::max(g, 0.0);
          const double h = k.h(nu, j);
          const double lam = k.lam(nu, j);
          const FillDist& fd = params.fill(nu);
          // stay out of the book: only the direction flip acts on q
          const double opt0 = h * (zeta.at_extended(ip, 0, nu * q) - base) + gpos;
          // post one lot: jump clears it entirely, a trade fills k ~ vartheta
          double trade = 0.0;
          for (int f = 0; f <= L; ++f) {
            trade += fd.prob(f) * (zeta.at_extended(ip, jp, q - nu * f) - base);
          }
          const double opt1 = h * (zeta.at_extended(ip, 0, nu * q - L) - base) + lam * trade + gpos - g;
          acc += dt * (opt1 < opt0 ? opt1 : opt0);
        }
        zeta.at(i, j, q) = acc;
      }
    }
  }

  if (options.check_q_range) {
    ZetaSolveOptions inner;  // no recursive re-check
    const ZetaField wide = solve_zeta_exact(params, g_plus, g_minus, 2 * q_max, inner);
    // clamp contamination decays quickly away from the boundary rows, so the
    // queryable inner half-range is what must be clean
    const long q_in = (q_max + 1) / 2;
    double worst = 0.0;
    for (int i = 0; i <= grid.nt; ++i) {
      for (int j = 0; j < ns; ++j) {
        for (long q = -q_in; q <= q_in; ++q) {
          worst = std::max(worst, std::abs(zeta.at(i, j, q) - wide.at(i, j, q)));
        }
      }
    }
    const double tol = options.q_range_tol * std::max(1.0, eta * static_cast<double>(q_max) * q_max);
    if (worst > tol) {
      throw QRangeTooSmall("inventory truncation changes |q| <= " + std::to_string(q_in) + " values by " +
                           std::to_string(worst));
    }
  }
  return zeta;
}

}  // namespace mmlab
