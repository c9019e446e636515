// SPDX-License-Identifier: Apache-2.0
#include "mmlab/backtest.hpp"

#include <algorithm>
#include <cmath>

#include "mmlab/errors.hpp"
#include "mmlab/pde.hpp"

namespace mmlab {

namespace {

struct PathResult {
  double cash;
  std::int64_t inventory;
  double price;
  double utility;
  std::int64_t fill_events_trade = 0;
  std::int64_t fill_events_jump = 0;
  std::int64_t lots_trade = 0;
  std::int64_t lots_jump = 0;
  EventTape tape;
};

QuoteDecision ask_policy(const PolicyFn& policy, double t, double s, long q) {
  try {
    return policy(t, s, q);
  } catch (const OutOfGrid& e) {
    throw PolicyUndefined(std::string("policy cannot answer at the reached state: ") + e.what());
  } catch (const QRangeExceeded& e) {
    throw PolicyUndefined(std::string("policy cannot answer at the reached state: ") + e.what());
  }
}

PathResult simulate_one_path(const BacktestConfig& cfg, const ModelParams& params, Rng& rng) {
  const double t_end = params.horizon();
  const double delta = params.delta();
  const double eps = params.fee();
  const int L = params.lot_size();
  const double lam_bound = params.lambda_max();

  PathResult out{};
  double t = cfg.t0;
  std::int64_t ticks = 0;
  int dir = cfg.i0;
  double anchor = cfg.t0 - cfg.s0;  // time of the last price move
  double cash = cfg.x0;
  std::int64_t inv = cfg.y0;

  auto price = [&]() { return cfg.p0 + 2.0 * delta * static_cast<double>(ticks); };
  auto elapsed = [&](double at) { return at - anchor; };

  QuoteDecision quote = ask_policy(cfg.policy, t, elapsed(t), dir * inv);

  auto jump_draw = params.sample_next_jump(dir, elapsed(t), rng);
  double t_jump = t + jump_draw.wait;
  double t_prop = lam_bound > 0.0 ? t + rng.exponential(lam_bound) : t_end + 1.0;
  double t_check = cfg.checkpoint_dt > 0.0 ? (std::floor(t / cfg.checkpoint_dt) + 1.0) * cfg.checkpoint_dt
                                           : t_end + 1.0;

  while (true) {
    const double t_next = std::min({t_jump, t_prop, t_check, t_end});
    if (t_next >= t_end) break;

    if (t_next == t_jump) {
      const double s_pre = elapsed(t_jump);
      const int b = jump_draw.concordance;
      const int new_dir = jump_draw.direction;
      int fill = 0;
      if ((b > 0 ? quote.ell_plus : quote.ell_minus) == 1) {
        fill = L;  // the big order clears the posted lot at the pre-jump quote
        cash += static_cast<double>(L) * (new_dir * price() + delta - eps);
        inv -= static_cast<std::int64_t>(L) * new_dir;
        out.fill_events_jump += 1;
        out.lots_jump += L;
      }
      if (cfg.record_tapes) {
        out.tape.push_back({t_jump, TapeRow::Kind::Jump, new_dir, fill, s_pre, price()});
      }
      ticks += new_dir;
      dir = new_dir;
      anchor = t_jump;
      t = t_jump;
      quote = ask_policy(cfg.policy, t, 0.0, dir * inv);
      jump_draw = params.sample_next_jump(dir, 0.0, rng);
      t_jump = t + jump_draw.wait;
    } else if (t_next == t_prop) {
      t = t_prop;
      const double s_now = elapsed(t);
      const double lam = params.lambda_at(s_now);
      if (lam > lam_bound * (1.0 + 1e-12)) throw ThinningBoundViolated("lambda exceeds the thinning bound");
      if (rng.uniform() * lam_bound < lam) {
        const int gamma = rng.sign_bernoulli(0.5 * (1.0 + params.rho()));
        const int z = gamma * dir;
        int fill = 0;
        if ((gamma > 0 ? quote.ell_plus : quote.ell_minus) == 1) {
          fill = params.fill(gamma).sample(rng);
          if (fill > 0) {
            cash += static_cast<double>(fill) * (z * price() + delta - eps);
            inv -= static_cast<std::int64_t>(fill) * z;
            out.fill_events_trade += 1;
            out.lots_trade += fill;
          }
        }
        if (cfg.record_tapes) {
          out.tape.push_back({t, TapeRow::Kind::Trade, z, fill, s_now, price()});
        }
        quote = ask_policy(cfg.policy, t, s_now, dir * inv);
      }
      t_prop = t + rng.exponential(lam_bound);
    } else {
      t = t_check;
      quote = ask_policy(cfg.policy, t, elapsed(t), dir * inv);
      t_check += cfg.checkpoint_dt;
    }
  }

  out.cash = cash;
  out.inventory = inv;
  out.price = price();
  const double y = static_cast<double>(inv);
  out.utility = cash + y * out.price - params.eta() * y * y;
  return out;
}

}  // namespace

BacktestReport run_backtest(const BacktestConfig& cfg, const ModelParams& params) {
  if (cfg.n_paths < 1) throw SchemaError("n_paths must be >= 1");
  if (!cfg.policy) throw PolicyUndefined("no policy handle configured");
  BacktestReport rep;
  rep.n_paths = cfg.n_paths;
  rep.eta = params.eta();

  double sum_u = 0.0, sum_u2 = 0.0, sum_y = 0.0, sum_y2 = 0.0;
  for (int p = 0; p < cfg.n_paths; ++p) {
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(p));
    PathResult r = simulate_one_path(cfg, params, rng);
    sum_u += r.utility;
    sum_u2 += r.utility * r.utility;
    const double y = static_cast<double>(r.inventory);
    sum_y += y;
    sum_y2 += y * y;
    rep.fill_events_trade += r.fill_events_trade;
    rep.fill_events_jump += r.fill_events_jump;
    rep.lots_trade += r.lots_trade;
    rep.lots_jump += r.lots_jump;
    if (cfg.record_tapes) {
      rep.tapes.push_back(std::move(r.tape));
      rep.terminals.push_back({r.cash, r.inventory, r.price});
    }
  }
  const double n = static_cast<double>(cfg.n_paths);
  rep.mean_utility = sum_u / n;
  rep.mean_terminal_inventory = sum_y / n;
  const double var_u = std::max(0.0, sum_u2 / n - rep.mean_utility * rep.mean_utility);
  rep.se_utility = cfg.n_paths > 1 ? std::sqrt(var_u / (n - 1.0)) : 0.0;
  rep.var_terminal_inventory = std::max(0.0, sum_y2 / n - rep.mean_terminal_inventory * rep.mean_terminal_inventory);
  return rep;
}

ReplayResult replay_tape(const EventTape& tape, const ModelParams& params, double x0, std::int64_t y0) {
  const double delta = params.delta();
  const double eps = params.fee();
  double cash = x0;
  std::int64_t inv = y0;
  for (const auto& r : tape) {
    if (r.fill == 0) continue;
    // pre-event price is on the tape; the trade side / jump direction fixes
    // both the execution price and the inventory move
    cash += static_cast<double>(r.fill) * (r.direction * r.price + delta - eps);
    inv -= static_cast<std::int64_t>(r.fill) * r.direction;
  }
  return {cash, inv};
}

FunctionalEstimate oracle_elapsed_time_functional(const ModelParams& params,
                                                  const std::function<double(double, double)>& integrand, double t0,
                                                  double s0, int n_paths, std::uint64_t seed, double quad_dt) {
  const double t_end = params.horizon();
  double sum = 0.0, sum2 = 0.0, resets = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(p));
    double acc = 0.0;
    double t = t0;
    double s = s0;
    while (t < t_end) {
      const auto draw = params.sample_next_jump(+1, s, rng);
      const double seg_end = std::min(t + draw.wait, t_end);
      // midpoint rule along the deterministic drift of S
      double u = t;
      while (u < seg_end) {
        const double h = std::min(quad_dt, seg_end - u);
        acc += h * integrand(u + 0.5 * h, s + (u - t) + 0.5 * h);
        u += h;
      }
      if (t + draw.wait >= t_end) break;
      t += draw.wait;
      s = 0.0;
      resets += 1.0;
    }
    sum += acc;
    sum2 += acc * acc;
  }
  const double n = static_cast<double>(n_paths);
  FunctionalEstimate est;
  est.mean = sum / n;
  const double var = std::max(0.0, sum2 / n - est.mean * est.mean);
  est.se = n_paths > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  est.mean_resets = resets / n;
  return est;
}

InventoryMoments oracle_inventory_moments(const ModelParams& params, const PolicyFn& policy, double t0, double s0,
                                          int n_paths, std::uint64_t seed, double checkpoint_dt) {
  BacktestConfig cfg;
  cfg.n_paths = 1;
  cfg.policy = policy;
  cfg.t0 = t0;
  cfg.s0 = s0;
  cfg.i0 = +1;
  cfg.p0 = 0.0;
  cfg.x0 = 0.0;
  cfg.y0 = 0;
  cfg.checkpoint_dt = checkpoint_dt;

  double sum_y = 0.0, sum_y2 = 0.0, sum_y4 = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(p));
    PathResult r = simulate_one_path(cfg, params, rng);
    const double y = static_cast<double>(r.inventory);
    sum_y += y;
    sum_y2 += y * y;
    sum_y4 += y * y * y * y;
  }
  const double n = static_cast<double>(n_paths);
  InventoryMoments m;
  m.mean_y = sum_y / n;
  m.mean_q2 = sum_y2 / n;
  const double var_y = std::max(0.0, sum_y2 / n - m.mean_y * m.mean_y);
  const double var_q2 = std::max(0.0, sum_y4 / n - m.mean_q2 * m.mean_q2);
  m.se_y = n_paths > 1 ? std::sqrt(var_y / (n - 1.0)) : 0.0;
  m.se_q2 = n_paths > 1 ? std::sqrt(var_q2 / (n - 1.0)) : 0.0;
  return m;
}

std::vector<UtilityCurveRow> utility_curve(const ModelParams& params, const BarrierPair& barriers,
                                           const AdjustmentField& adj, const std::vector<double>& etas, int q_max,
                                           const BacktestConfig& base_config) {
  auto g = std::make_shared<BarrierPair>(barriers);
  auto a = std::make_shared<AdjustmentField>(adj);
  std::vector<UtilityCurveRow> rows;
  for (double eta : etas) {
    const ModelParams p_eta = params.with_eta(eta);
    auto run = [&](const std::string& name, const PolicyFn& policy) {
      BacktestConfig cfg = base_config;
      cfg.policy = policy;
      const BacktestReport rep = run_backtest(cfg, p_eta);
      rows.push_back({name, eta, rep.mean_utility, rep.se_utility});
    };
    run("hold", make_hold_policy());
    run("always_on", make_always_on_policy());
    run("eta0_optimal", make_eta0_policy(g));
    run("approx", make_approx_policy(g, a, eta));
    if (eta > 0.0) {
      auto zeta = std::make_shared<ZetaField>(solve_zeta_exact(p_eta, g->plus, g->minus, q_max));
      run("exact", make_exact_policy(zeta, g, p_eta));
    } else {
      run("exact", make_eta0_policy(g));  // zeta vanishes at eta = 0
    }
  }
  return rows;
}

}  // namespace mmlab
