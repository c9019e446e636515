// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <memory>

#include "mmlab/backtest.hpp"
#include "mmlab/errors.hpp"
#include "support.hpp"

using namespace mmlab;
using namespace testsupport;

namespace {

BacktestConfig base_config(const PolicyFn& policy, int n_paths, std::uint64_t seed, double dt) {
  BacktestConfig cfg;
  cfg.n_paths = n_paths;
  cfg.seed = seed;
  cfg.policy = policy;
  cfg.p0 = 100.0;
  cfg.i0 = +1;
  cfg.s0 = 0.4;
  cfg.checkpoint_dt = dt;
  return cfg;
}

}  // namespace

TEST_CASE("hold policy with zero inventory leaves the wealth untouched") {
  auto p = weibull_exp_model(6.0);
  BacktestConfig cfg = base_config(make_hold_policy(), 200, 7, 0.0);
  cfg.x0 = 3.25;
  const auto rep = run_backtest(cfg, p);
  CHECK(rep.mean_utility == 3.25);
  CHECK(rep.se_utility == 0.0);
  CHECK(rep.fill_events_trade == 0);
  CHECK(rep.fill_events_jump == 0);
}

TEST_CASE("hold policy recovers the hold value x0 + y p0 + q theta - eta y^2") {
  auto p = weibull_exp_model(8.0, 0.1);
  const auto f = solve_model(p, 0.02);
  BacktestConfig cfg = base_config(make_hold_policy(), 20000, 8, 0.0);
  cfg.y0 = 3;
  const auto rep = run_backtest(cfg, p);
  const double v_hold =
      cfg.x0 + 3.0 * cfg.p0 + 3.0 * f.theta.value(0.0, cfg.s0) - p.eta() * 9.0;
  // the discrete theta carries an O(dt) bias of its own
  CHECK(std::abs(rep.mean_utility - v_hold) <= 3.0 * rep.se_utility + 0.05);
}

TEST_CASE("eta0 optimal policy earns omega above holding") {
  auto p = weibull_exp_model(8.0);
  const auto f = solve_model(p, 0.02);
  auto g = std::make_shared<BarrierPair>(f.barriers);
  BacktestConfig cfg = base_config(make_eta0_policy(g), 20000, 9, f.grid.dt);
  const auto rep = run_backtest(cfg, p);
  // hold value from (x0 = 0, y0 = 0) is zero, so the gap is the mean itself
  double source_scale = 0.0;
  for (int j = 0; j < f.grid.ns; ++j) {
    source_scale = std::max(source_scale, std::max(f.barriers.plus.at(0, j), 0.0) +
                                              std::max(f.barriers.minus.at(0, j), 0.0));
  }
  const double slack = 5.0 * f.grid.dt * source_scale;
  CHECK(std::abs(rep.mean_utility - f.omega.value(0.0, cfg.s0)) <= 3.0 * rep.se_utility + slack);
}

TEST_CASE("elapsed-time oracle: constant integrand and Poisson resets") {
  auto p = symmetric_model(6.0, 1.4);  // sigma2 = 1.4 everywhere
  const auto est = oracle_elapsed_time_functional(
      p, [](double, double) { return 2.5; }, 1.0, 0.3, 400, 10);
  CHECK(est.mean == doctest::Approx(2.5 * 5.0).epsilon(1e-9));
  CHECK(est.se == doctest::Approx(0.0).epsilon(1e-12));

  const auto est2 = oracle_elapsed_time_functional(
      p, [](double, double) { return 0.0; }, 0.0, 0.0, 20000, 11);
  const double lam = 1.4 * 6.0;
  CHECK(std::abs(est2.mean_resets - lam) <= 3.0 * std::sqrt(lam / 20000.0));
}

TEST_CASE("inventory oracle: trivial and symmetric cases") {
  auto p = symmetric_model(6.0);
  const auto z = oracle_inventory_moments(p, make_hold_policy(), 0.0, 0.2, 500, 12, 0.05);
  CHECK(z.mean_y == 0.0);
  CHECK(z.mean_q2 == 0.0);

  const auto f = solve_model(p, 0.05);
  auto g = std::make_shared<BarrierPair>(f.barriers);
  const auto z2 = oracle_inventory_moments(p, make_eta0_policy(g), 0.0, 0.2, 20000, 13, f.grid.dt);
  CHECK(std::abs(z2.mean_y) <= 3.0 * z2.se_y + 1e-12);
}

TEST_CASE("utility curve: optimality orderings and the exact hold shift") {
  auto p = weibull_exp_model(6.0);
  const auto f = solve_model(p, 0.02);
  const auto adj = adjustments(p, f.zeta1);
  BacktestConfig cfg = base_config({}, 4000, 14, f.grid.dt);
  cfg.y0 = 2;
  const auto rows = utility_curve(p, f.barriers, adj, {0.0, 0.01}, 4 * p.lot_size(), cfg);

  auto find = [&](const std::string& name, double eta) {
    for (const auto& r : rows) {
      if (r.policy == name && r.eta == eta) return r;
    }
    REQUIRE(false);
    return rows[0];
  };
  const auto hold0 = find("hold", 0.0);
  const auto always0 = find("always_on", 0.0);
  const auto opt0 = find("eta0_optimal", 0.0);
  CHECK(opt0.mean_utility >= hold0.mean_utility - 3.0 * std::hypot(opt0.se_utility, hold0.se_utility));
  CHECK(opt0.mean_utility >= always0.mean_utility - 3.0 * std::hypot(opt0.se_utility, always0.se_utility));

  const auto approx1 = find("approx", 0.01);
  const auto exact1 = find("exact", 0.01);
  CHECK(exact1.mean_utility >= approx1.mean_utility - 3.0 * std::hypot(exact1.se_utility, approx1.se_utility));

  // identical paths: the hold utility drops by exactly eta * y0^2, up to
  // cancellation noise in the two O(p0) means
  const auto hold1 = find("hold", 0.01);
  CHECK(hold0.mean_utility - hold1.mean_utility == doctest::Approx(0.01 * 4.0).epsilon(1e-9));
}

TEST_CASE("exact risk-averse policy earns omega minus the deformation") {
  const double eta = 0.05;
  auto p = weibull_exp_model(6.0, eta);
  const auto f = solve_model(p, 0.02);
  auto g = std::make_shared<BarrierPair>(f.barriers);
  auto zeta = std::make_shared<ZetaField>(solve_zeta_exact(p, f.barriers.plus, f.barriers.minus, 4 * p.lot_size()));
  BacktestConfig cfg = base_config(make_exact_policy(zeta, g, p), 20000, 19, f.grid.dt);
  const auto rep = run_backtest(cfg, p);
  const double expected = f.omega.value(0.0, cfg.s0) - zeta->value(0.0, cfg.s0, 0);
  double source_scale = 0.0;
  for (int j = 0; j < f.grid.ns; ++j) {
    source_scale = std::max(source_scale, std::max(f.barriers.plus.at(0, j), 0.0) +
                                              std::max(f.barriers.minus.at(0, j), 0.0));
  }
  CHECK(std::abs(rep.mean_utility - expected) <= 3.0 * rep.se_utility + 5.0 * f.grid.dt * source_scale);
}

TEST_CASE("path invariants: tick grid, jump fills, replay, reproducibility") {
  auto p = weibull_exp_model(6.0);
  const auto f = solve_model(p, 0.02);
  auto g = std::make_shared<BarrierPair>(f.barriers);
  BacktestConfig cfg = base_config(make_always_on_policy(), 64, 15, f.grid.dt);
  cfg.record_tapes = true;
  const auto rep = run_backtest(cfg, p);
  REQUIRE(rep.tapes.size() == 64);
  REQUIRE(rep.terminals.size() == 64);

  for (std::size_t k = 0; k < rep.tapes.size(); ++k) {
    const auto& tape = rep.tapes[k];
    double expected_price = cfg.p0;  // pre-event price of the next row
    for (const auto& row : tape) {
      CHECK(row.price == expected_price);
      const double ticks = (row.price - cfg.p0) / (2.0 * p.delta());
      CHECK(std::abs(ticks - std::llround(ticks)) < 1e-9);
      if (row.kind == TapeRow::Kind::Jump) {
        CHECK((row.fill == 0 || row.fill == p.lot_size()));
        expected_price = row.price + 2.0 * p.delta() * row.direction;
      }
    }
    const auto replay = replay_tape(tape, p, cfg.x0, cfg.y0);
    CHECK(replay.cash == rep.terminals[k].cash);
    CHECK(replay.inventory == rep.terminals[k].inventory);
  }

  const auto rep2 = run_backtest(cfg, p);
  CHECK(rep2.mean_utility == rep.mean_utility);
  CHECK(rep2.se_utility == rep.se_utility);
  CHECK(rep2.fill_events_trade == rep.fill_events_trade);
  CHECK(rep2.fill_events_jump == rep.fill_events_jump);

  BacktestConfig cfg3 = cfg;
  cfg3.seed = 16;
  const auto rep3 = run_backtest(cfg3, p);
  CHECK(rep3.mean_utility != rep.mean_utility);
}

TEST_CASE("a policy that cannot answer raises PolicyUndefined") {
  auto p_short = weibull_exp_model(4.0);
  const auto f = solve_model(p_short, 0.02);  // fields only cover [0, 4]
  auto g = std::make_shared<BarrierPair>(f.barriers);
  auto p_long = weibull_exp_model(8.0);
  BacktestConfig cfg = base_config(make_eta0_policy(g), 4, 17, 0.02);
  CHECK_THROWS_AS(run_backtest(cfg, p_long), PolicyUndefined);
}
