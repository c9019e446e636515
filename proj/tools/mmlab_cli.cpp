// SPDX-License-Identifier: Apache-2.0
//
// Command-line front door: simulate tapes, solve the value fields, export
// policies, backtest, calibrate from tapes, and compile report tables.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmlab/backtest.hpp"
#include "mmlab/calibrate.hpp"
#include "mmlab/errors.hpp"
#include "mmlab/io.hpp"
#include "mmlab/pde.hpp"
#include "mmlab/policy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmlab;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<double> eta;
  std::optional<double> grid_dt;
};

RunConfig load_with_overrides(const CommonOpts& o) {
  RunConfig cfg = load_config(o.config_path);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.backtest.seed = *o.seed;
  }
  if (o.paths) cfg.backtest.n_paths = *o.paths;
  if (o.eta) cfg.params = cfg.params.with_eta(*o.eta);
  if (o.grid_dt) {
    cfg.grid_dt = *o.grid_dt;
    cfg.backtest.checkpoint_dt = *o.grid_dt;
  }
  return cfg;
}

fs::path ensure_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

GridSpec grid_for(const RunConfig& cfg) {
  return GridSpec::make(cfg.grid_dt, cfg.params.horizon(), cfg.params.s_max());
}

struct SolvedFields {
  ValueGrid theta;
  BarrierPair barriers;
  ValueGrid omega;
  ValueGrid zeta1;
  ValueGrid zeta0;
};

SolvedFields solve_all(const RunConfig& cfg) {
  const GridSpec grid = grid_for(cfg);
  ValueGrid theta = solve_theta(cfg.params, grid);
  BarrierPair g = barrier_G(cfg.params, theta);
  ValueGrid omega = solve_omega(cfg.params, g.plus, g.minus);
  ValueGrid z1 = solve_zeta1(cfg.params, g.plus, g.minus);
  ValueGrid z0 = solve_zeta0(cfg.params, g.plus, g.minus, z1);
  return {std::move(theta), std::move(g), std::move(omega), std::move(z1), std::move(z0)};
}

void write_field(const ValueGrid& grid, const fs::path& out, const std::string& stem, const std::string& hash) {
  write_grid(grid, (out / (stem + ".csv")).string(), (out / (stem + ".json")).string(), hash);
}

int cmd_simulate(const CommonOpts& o, double horizon_override) {
  RunConfig cfg = load_with_overrides(o);
  const fs::path out = ensure_out(o.out_dir);
  const std::string hash = params_hash(cfg.params);
  const int n = cfg.backtest.n_paths;
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["seed"] = cfg.seed;
  manifest["params_hash"] = hash;
  manifest["n_paths"] = n;
  const double horizon = horizon_override >= 0.0 ? horizon_override : cfg.params.horizon();
  manifest["horizon"] = horizon;
  json files = json::array();
  for (int p = 0; p < n; ++p) {
    EventTape tape;
    if (horizon > 0.0) {
      Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(p));
      const PricePath path =
          simulate_price_path(cfg.params, 0.0, cfg.backtest.i0, cfg.backtest.s0, horizon, rng);
      const auto trades = simulate_trades(path, cfg.params, rng);
      tape = make_event_tape(path, trades, cfg.params, cfg.backtest.p0);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "tape_%04d.csv", p);
    write_text_file((out / name).string(), tape_to_csv(tape));
    files.push_back(name);
  }
  manifest["files"] = files;
  write_text_file((out / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "wrote " << n << " tape(s) to " << out.string() << "\n";
  return 0;
}

int cmd_solve(const CommonOpts& o, bool exact, int q_max_flag, bool richardson) {
  RunConfig cfg = load_with_overrides(o);
  const fs::path out = ensure_out(o.out_dir);
  const std::string hash = params_hash(cfg.params);
  SolvedFields f = solve_all(cfg);
  write_field(f.theta, out, "theta", hash);
  write_field(f.barriers.plus, out, "g_plus", hash);
  write_field(f.barriers.minus, out, "g_minus", hash);
  write_field(f.omega, out, "omega", hash);
  write_field(f.zeta1, out, "zeta1", hash);
  write_field(f.zeta0, out, "zeta0", hash);
  if (exact && cfg.params.eta() > 0.0) {
    const int q_max = q_max_flag > 0 ? q_max_flag : cfg.q_max;
    const ZetaField zeta = solve_zeta_exact(cfg.params, f.barriers.plus, f.barriers.minus, q_max);
    write_zeta(zeta, (out / "zeta_exact.csv").string(), (out / "zeta_exact.json").string(), hash);
  }

  if (richardson) {
    // halve dt twice and measure the convergence order on shared nodes
    json conv;
    for (const char* field : {"theta", "omega"}) {
      std::vector<double> diffs;
      RunConfig c1 = cfg;
      for (int level = 0; level < 2; ++level) {
        RunConfig c2 = c1;
        c2.grid_dt = c1.grid_dt / 2.0;
        SolvedFields f1 = solve_all(c1);
        SolvedFields f2 = solve_all(c2);
        const ValueGrid& a = std::string(field) == "theta" ? f1.theta : f1.omega;
        const ValueGrid& b = std::string(field) == "theta" ? f2.theta : f2.omega;
        double worst = 0.0;
        for (int i = 0; i <= a.grid().nt; ++i) {
          for (int j = 0; j < a.grid().ns; ++j) {
            const int i2 = std::min(2 * i, b.grid().nt);
            const int j2 = std::min(2 * j, b.grid().ns - 1);
            worst = std::max(worst, std::abs(a.at(i, j) - b.at(i2, j2)));
          }
        }
        diffs.push_back(worst);
        c1 = c2;
      }
      const double order = std::log2(diffs[0] / diffs[1]);
      conv[field] = {{"dt", cfg.grid_dt}, {"diff_dt_half", diffs[0]}, {"diff_half_quarter", diffs[1]},
                     {"order", order}};
    }
    conv["schema_version"] = kSchemaVersion;
    write_text_file((out / "convergence.json").string(), conv.dump(2) + "\n");
  }
  std::cout << "solved fields written to " << out.string() << "\n";
  return 0;
}

PolicyFn select_policy(const RunConfig& cfg, const SolvedFields& f, int q_max) {
  auto g = std::make_shared<BarrierPair>(f.barriers);
  if (cfg.policy_name == "hold") return make_hold_policy();
  if (cfg.policy_name == "always_on") return make_always_on_policy();
  if (cfg.policy_name == "eta0") return make_eta0_policy(g);
  if (cfg.policy_name == "approx") {
    auto adj = std::make_shared<AdjustmentField>(adjustments(cfg.params, f.zeta1));
    return make_approx_policy(g, adj, cfg.params.eta());
  }
  if (cfg.policy_name == "exact") {
    if (cfg.params.eta() == 0.0) return make_eta0_policy(g);
    auto zeta = std::make_shared<ZetaField>(solve_zeta_exact(cfg.params, g->plus, g->minus, q_max));
    return make_exact_policy(zeta, g, cfg.params);
  }
  throw SchemaError("unknown policy: " + cfg.policy_name);
}

int cmd_backtest(const CommonOpts& o, const std::string& policy_flag) {
  RunConfig cfg = load_with_overrides(o);
  if (!policy_flag.empty()) cfg.policy_name = policy_flag;
  const fs::path out = ensure_out(o.out_dir);
  SolvedFields f = solve_all(cfg);
  cfg.backtest.policy = select_policy(cfg, f, cfg.q_max);
  const BacktestReport rep = run_backtest(cfg.backtest, cfg.params);
  json j = report_to_json(rep);
  j["policy"] = cfg.policy_name;
  j["params_hash"] = params_hash(cfg.params);
  write_text_file((out / "report.json").string(), j.dump(2) + "\n");
  if (cfg.backtest.record_tapes) {
    for (std::size_t p = 0; p < rep.tapes.size(); ++p) {
      char name[32];
      std::snprintf(name, sizeof(name), "bt_tape_%04zu.csv", p);
      write_text_file((out / name).string(), tape_to_csv(rep.tapes[p]));
    }
  }
  std::cout << "policy " << cfg.policy_name << ": mean utility " << rep.mean_utility << " +/- " << rep.se_utility
            << " (" << rep.n_paths << " paths)\n";
  return 0;
}

int cmd_calibrate(const CommonOpts& o, const std::string& tape_path, bool with_vartheta) {
  RunConfig cfg = load_with_overrides(o);
  const fs::path out = ensure_out(o.out_dir);
  const EventTape tape = tape_from_csv(read_text_file(tape_path));
  const CalibrationReport rep =
      calibrate(tape, with_vartheta ? std::optional<int>(cfg.params.lot_size()) : std::nullopt);
  json j = calibration_to_json(rep);
  j["tape"] = tape_path;
  write_text_file((out / "calibration.json").string(), j.dump(2) + "\n");

  std::string hz = "s_lo,s_hi,q_lo,q_hi,h_plus,se_plus,h_minus,se_minus,exposure\n";
  for (const auto& b : rep.renewal.bins) {
    hz += format_double(b.s_lo) + "," + format_double(b.s_hi) + "," + format_double(b.q_lo) + "," +
          format_double(b.q_hi) + "," + format_double(b.h_plus) + "," + format_double(b.se_plus) + "," +
          format_double(b.h_minus) + "," + format_double(b.se_minus) + "," + format_double(b.exposure) + "\n";
  }
  write_text_file((out / "hazard_bins.csv").string(), hz);

  std::string lc = "s,lambda_fit\n";
  const double s_hi = rep.renewal.bins.empty() ? 1.0 : rep.renewal.bins.back().s_hi;
  for (int i = 0; i <= 200; ++i) {
    const double s = s_hi * i / 200.0;
    lc += format_double(s) + "," + format_double(rep.lambda.lam0 + rep.lambda.a * std::exp(-rep.lambda.k * s)) + "\n";
  }
  write_text_file((out / "intensity_fit.csv").string(), lc);
  std::cout << "calibration written to " << out.string() << "\n";
  return 0;
}

int cmd_policy(const CommonOpts& o) {
  RunConfig cfg = load_with_overrides(o);
  const fs::path out = ensure_out(o.out_dir);
  const std::string hash = params_hash(cfg.params);
  const ValueGrid gp = read_grid((out / "g_plus.csv").string(), (out / "g_plus.json").string(), hash);
  const ValueGrid gm = read_grid((out / "g_minus.csv").string(), (out / "g_minus.json").string(), hash);
  const ValueGrid z1 = read_grid((out / "zeta1.csv").string(), (out / "zeta1.json").string(), hash);
  const GridSpec& grid = gp.grid();

  std::string reg = "t,s,ell_plus,ell_minus\n";
  for (int i = 0; i <= grid.nt; ++i) {
    for (int j = 0; j < grid.ns; ++j) {
      const QuoteDecision d = control_eta0(gp, gm, grid.t_at(i), grid.s_at(j));
      reg += format_double(grid.t_at(i)) + "," + format_double(grid.s_at(j)) + "," + std::to_string(d.ell_plus) +
             "," + std::to_string(d.ell_minus) + "\n";
    }
  }
  write_text_file((out / "region_eta0.csv").string(), reg);

  const AdjustmentField adj = adjustments(cfg.params, z1);
  const int L = cfg.params.lot_size();
  std::string regq = "t,s,q,ell_plus,ell_minus\n";
  for (int j = 0; j < grid.ns; ++j) {
    for (long q = -2 * L; q <= 2 * L; ++q) {
      const QuoteDecision d = control_approx(gp, gm, adj, cfg.params.eta(), 0.0, grid.s_at(j), q);
      regq += "0," + format_double(grid.s_at(j)) + "," + std::to_string(q) + "," + std::to_string(d.ell_plus) + "," +
              std::to_string(d.ell_minus) + "\n";
    }
  }
  write_text_file((out / "region_q.csv").string(), regq);
  std::cout << "policy regions written to " << out.string() << "\n";
  return 0;
}

int cmd_report(const CommonOpts& o) {
  RunConfig cfg = load_with_overrides(o);
  const fs::path out = ensure_out(o.out_dir);
  const std::string hash = params_hash(cfg.params);
  const ValueGrid theta = read_grid((out / "theta.csv").string(), (out / "theta.json").string(), hash);
  const ValueGrid gp = read_grid((out / "g_plus.csv").string(), (out / "g_plus.json").string(), hash);
  const ValueGrid gm = read_grid((out / "g_minus.csv").string(), (out / "g_minus.json").string(), hash);
  const ValueGrid omega = read_grid((out / "omega.csv").string(), (out / "omega.json").string(), hash);
  const ValueGrid z1 = read_grid((out / "zeta1.csv").string(), (out / "zeta1.json").string(), hash);
  const ValueGrid z0 = read_grid((out / "zeta0.csv").string(), (out / "zeta0.json").string(), hash);
  const GridSpec& grid = omega.grid();
  for (const ValueGrid* g : {&theta, &gp, &gm, &z1, &z0}) {
    if (!g->grid().same_as(grid)) throw MissingArtifact("artifacts were solved on different grids");
  }
  std::optional<ZetaField> zeta;
  if (fs::exists(out / "zeta_exact.csv")) {
    zeta = read_zeta((out / "zeta_exact.csv").string(), (out / "zeta_exact.json").string(), hash);
  }

  // omega sections over time-to-go for a few starting elapsed times
  std::string sec = "T_minus_t,s,omega\n";
  for (int j : {0, grid.ns / 4, grid.ns / 2, 3 * grid.ns / 4, grid.ns - 1}) {
    for (int i = 0; i <= grid.nt; ++i) {
      sec += format_double(grid.horizon - grid.t_at(i)) + "," + format_double(grid.s_at(j)) + "," +
             format_double(omega.at(i, j)) + "\n";
    }
  }
  write_text_file((out / "omega_sections.csv").string(), sec);

  std::string reg = "t,s,ell_plus,ell_minus\n";
  for (int i = 0; i <= grid.nt; ++i) {
    for (int j = 0; j < grid.ns; ++j) {
      const QuoteDecision d = control_eta0(gp, gm, grid.t_at(i), grid.s_at(j));
      reg += format_double(grid.t_at(i)) + "," + format_double(grid.s_at(j)) + "," + std::to_string(d.ell_plus) +
             "," + std::to_string(d.ell_minus) + "\n";
    }
  }
  write_text_file((out / "region_eta0.csv").string(), reg);

  const AdjustmentField adj = adjustments(cfg.params, z1);
  const int L = cfg.params.lot_size();
  std::string regq = "t,s,q,ell_plus,ell_minus\n";
  for (int j = 0; j < grid.ns; ++j) {
    for (long q = -2 * L; q <= 2 * L; ++q) {
      const QuoteDecision d = control_approx(gp, gm, adj, cfg.params.eta(), 0.0, grid.s_at(j), q);
      regq += "0," + format_double(grid.s_at(j)) + "," + std::to_string(q) + "," + std::to_string(d.ell_plus) + "," +
              std::to_string(d.ell_minus) + "\n";
    }
  }
  write_text_file((out / "region_q.csv").string(), regq);

  // invariant checks over the artifacts
  struct Check {
    std::string name;
    bool pass;
    std::string detail;
  };
  std::vector<Check> checks;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
  };

  double min_omega = 0.0, min_z0 = 0.0, worst_cs = 0.0, min_b = 0.0, worst_id = 0.0;
  for (int i = 0; i <= grid.nt; ++i) {
    for (int j = 0; j < grid.ns; ++j) {
      min_omega = std::min(min_omega, omega.at(i, j));
      min_z0 = std::min(min_z0, z0.at(i, j));
      worst_cs = std::max(worst_cs, z1.at(i, j) * z1.at(i, j) - z0.at(i, j));
      min_b = std::min({min_b, adj.b_plus.at(i, j), adj.b_minus.at(i, j)});
    }
  }
  add("omega_nonnegative", min_omega >= -1e-12, "min " + format_double(min_omega));
  add("zeta0_nonnegative", min_z0 >= -1e-12, "min " + format_double(min_z0));
  add("zeta1_sq_le_zeta0", worst_cs <= 1e-10, "max excess " + format_double(worst_cs));
  add("b_nonnegative", min_b >= 0.0, "min " + format_double(min_b));

  if (zeta) {
    const double eta = zeta->eta();
    double min_zeta = 0.0, worst_bound = 0.0, worst_term = 0.0, worst_cid = 0.0;
    for (int i = 0; i <= grid.nt; ++i) {
      for (int j = 0; j < grid.ns; ++j) {
        for (long q = -zeta->q_max(); q <= zeta->q_max(); ++q) {
          const double z = zeta->at(i, j, q);
          min_zeta = std::min(min_zeta, z);
          worst_bound = std::max(worst_bound, z - (omega.at(i, j) + eta * q * q));
        }
      }
    }
    for (int j = 0; j < grid.ns; ++j) {
      for (long q = -zeta->q_max(); q <= zeta->q_max(); ++q) {
        worst_term = std::max(worst_term, std::abs(zeta->at(grid.nt, j, q) - eta * q * q));
      }
    }
    // operator identity on the quadratic ansatz, away from the q clamp
    ZetaField ansatz(grid, zeta->q_max(), eta);
    for (int i = 0; i <= grid.nt; ++i) {
      for (int j = 0; j < grid.ns; ++j) {
        for (long q = -zeta->q_max(); q <= zeta->q_max(); ++q) {
          const double qd = static_cast<double>(q);
          ansatz.at(i, j, q) = eta * (qd * qd + 2.0 * qd * z1.at(i, j) + z0.at(i, j));
        }
      }
    }
    const long q_hi = std::max<long>(0, zeta->q_max() - L);
    for (int i = 0; i <= grid.nt; ++i) {
      for (int j = 0; j < grid.ns; ++j) {
        for (long q = -q_hi; q <= q_hi; ++q) {
          for (int nu : {+1, -1}) {
            const double lhs = exact_adjustment(ansatz, cfg.params, nu, i, j, q);
            const double a = nu > 0 ? adj.a_plus.at(i, j) : adj.a_minus.at(i, j);
            const double b = nu > 0 ? adj.b_plus.at(i, j) : adj.b_minus.at(i, j);
            worst_cid = std::max(worst_cid, std::abs(lhs - eta * (a - 2.0 * nu * static_cast<double>(q) * b)));
          }
        }
      }
    }
    add("zeta_nonnegative", min_zeta >= -1e-12, "min " + format_double(min_zeta));
    add("zeta_le_omega_plus_eta_q2", worst_bound <= 1e-10, "max excess " + format_double(worst_bound));
    add("zeta_terminal_row", worst_term == 0.0, "max dev " + format_double(worst_term));
    add("operator_identity", worst_cid <= 1e-10, "max residual " + format_double(worst_cid));
  }

  std::string table = "check,passed,detail\n";
  bool all = true;
  for (const auto& c : checks) {
    table += c.name + "," + (c.pass ? "PASS" : "FAIL") + "," + c.detail + "\n";
    std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << "  (" << c.detail << ")\n";
    all = all && c.pass;
  }
  write_text_file((out / "checks.csv").string(), table);
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-renewal market making laboratory"};
  app.require_subcommand(1);

  CommonOpts o;
  double horizon_override = -1.0;
  bool exact = false;
  bool richardson = false;
  bool with_vartheta = false;
  int q_max_flag = 0;
  std::string tape_path;
  std::string policy_flag;

  auto add_common = [&](CLI::App* sub, bool need_out = true) {
    sub->add_option("--config", o.config_path, "configuration JSON")->required();
    auto* outopt = sub->add_option("--out", o.out_dir, "output directory");
    if (need_out) outopt->required();
    sub->add_option("--seed", o.seed, "master seed override");
    sub->add_option("--paths", o.paths, "number of Monte Carlo paths");
    sub->add_option("--eta", o.eta, "risk aversion override");
    sub->add_option("--grid-dt", o.grid_dt, "lattice step override");
  };

  auto* sim = app.add_subcommand("simulate", "write event tapes");
  add_common(sim);
  sim->add_option("--horizon", horizon_override, "override the simulation window (0 gives empty tapes)");

  auto* solve = app.add_subcommand("solve", "solve the value fields");
  add_common(solve);
  solve->add_flag("--exact", exact, "also solve the exact risk deformation (needs eta > 0)");
  solve->add_option("--q-max", q_max_flag, "inventory truncation for the exact solve");
  solve->add_flag("--richardson", richardson, "emit a step-halving convergence summary");

  auto* bt = app.add_subcommand("backtest", "Monte Carlo backtest of a policy");
  add_common(bt);
  bt->add_option("--policy", policy_flag, "hold | always_on | eta0 | approx | exact");

  auto* cal = app.add_subcommand("calibrate", "estimate model primitives from a tape");
  add_common(cal);
  cal->add_option("--tape", tape_path, "event tape CSV")->required();
  cal->add_flag("--vartheta", with_vartheta, "estimate fill distributions (always-posted tape)");

  auto* pol = app.add_subcommand("policy", "export quoting regions from solved artifacts");
  add_common(pol);

  auto* rep = app.add_subcommand("report", "summary tables and invariant checks over artifacts");
  add_common(rep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(o, horizon_override);
    if (solve->parsed()) return cmd_solve(o, exact, q_max_flag, richardson);
    if (bt->parsed()) return cmd_backtest(o, policy_flag);
    if (cal->parsed()) return cmd_calibrate(o, tape_path, with_vartheta);
    if (pol->parsed()) return cmd_policy(o);
    if (rep->parsed()) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
