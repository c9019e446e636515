// SPDX-License-Identifier: Apache-2.0
#include "mmlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmlab/errors.hpp"

namespace mmlab {

using nlohmann::json;

namespace {

json dist_to_json(const RenewalDist& d) {
  json j;
  j["family"] = d.family_name();
  const auto& p = d.raw_params();
  switch (d.family()) {
    case RenewalDist::Family::Exponential:
      j["rate"] = p[0];
      break;
    case RenewalDist::Family::Weibull:
    case RenewalDist::Family::Gamma:
      j["shape"] = p[0];
      j["scale"] = p[1];
      break;
    case RenewalDist::Family::Empirical: {
      const std::size_t n = p.size() / 2;
      j["s"] = std::vector<double>(p.begin(), p.begin() + n);
      j["F"] = std::vector<double>(p.begin() + n, p.end());
      break;
    }
  }
  return j;
}

RenewalDist dist_from_json(const json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "exponential") return RenewalDist::exponential(j.at("rate").get<double>());
  if (fam == "weibull") return RenewalDist::weibull(j.at("shape").get<double>(), j.at("scale").get<double>());
  if (fam == "gamma") return RenewalDist::gamma(j.at("shape").get<double>(), j.at("scale").get<double>());
  if (fam == "empirical") {
    return RenewalDist::empirical(j.at("s").get<std::vector<double>>(), j.at("F").get<std::vector<double>>());
  }
  throw SchemaError("unknown renewal family: " + fam);
}

json intensity_to_json(const TradeIntensitySpec& spec) {
  json j;
  const auto& p = spec.raw_params();
  switch (spec.family()) {
    case TradeIntensitySpec::Family::Constant:
      j["family"] = "constant";
      j["lam0"] = p[0];
      break;
    case TradeIntensitySpec::Family::ExpDecay:
      j["family"] = "exp_decay";
      j["lam0"] = p[0];
      j["a"] = p[1];
      j["k"] = p[2];
      break;
    case TradeIntensitySpec::Family::Table: {
      j["family"] = "table";
      const std::size_t n = p.size() / 2;
      j["s"] = std::vector<double>(p.begin(), p.begin() + n);
      j["lam"] = std::vector<double>(p.begin() + n, p.end());
      break;
    }
  }
  return j;
}

TradeIntensitySpec intensity_from_json(const json& j) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "constant") return TradeIntensitySpec::constant(j.at("lam0").get<double>());
  if (fam == "exp_decay") {
    return TradeIntensitySpec::exp_decay(j.at("lam0").get<double>(), j.at("a").get<double>(), j.at("k").get<double>());
  }
  if (fam == "table") {
    return TradeIntensitySpec::table(j.at("s").get<std::vector<double>>(), j.at("lam").get<std::vector<double>>());
  }
  throw SchemaError("unknown intensity family: " + fam);
}

}  // namespace

json params_to_json(const ModelParams& params) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["delta"] = params.delta();
  j["alpha"] = params.alpha();
  j["dist_plus"] = dist_to_json(params.dist(+1));
  j["dist_minus"] = dist_to_json(params.dist(-1));
  j["lambda"] = intensity_to_json(params.lambda_spec());
  j["rho"] = params.rho();
  j["fill_plus"] = json{{"probs", params.fill(+1).probs()}};
  j["fill_minus"] = json{{"probs", params.fill(-1).probs()}};
  j["lot_size"] = params.lot_size();
  j["fee"] = params.fee();
  j["eta"] = params.eta();
  j["horizon"] = params.horizon();
  return j;
}

ModelParams params_from_json(const json& j) {
  // standalone documents carry their own version; a params block nested in a
  // config inherits the config's
  if (j.contains("schema_version") && j.at("schema_version").get<std::string>() != kSchemaVersion) {
    throw SchemaError("unsupported params schema version");
  }
  return ModelParams(j.at("delta").get<double>(), j.at("alpha").get<double>(), dist_from_json(j.at("dist_plus")),
                     dist_from_json(j.at("dist_minus")), intensity_from_json(j.at("lambda")),
                     j.at("rho").get<double>(),
                     FillDist::from_probs(j.at("fill_plus").at("probs").get<std::vector<double>>()),
                     FillDist::from_probs(j.at("fill_minus").at("probs").get<std::vector<double>>()),
                     j.at("lot_size").get<int>(), j.at("fee").get<double>(), j.at("eta").get<double>(),
                     j.at("horizon").get<double>());
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string params_hash(const ModelParams& params) { return fnv1a_hex(params_to_json(params).dump()); }

RunConfig config_from_json(const json& j) {
  if (j.at("schema_version").get<std::string>() != kSchemaVersion) {
    throw SchemaError("unsupported config schema version");
  }
  ModelParams params = params_from_json(j.at("params"));
  RunConfig cfg{std::move(params), 0.0, 0, {}, 0, "eta0"};
  cfg.grid_dt = j.at("grid").at("dt").get<double>();
  cfg.q_max = j.value("zeta", json::object()).value("q_max", 4 * cfg.params.lot_size());
  cfg.seed = j.value("seed", std::uint64_t{1});
  const json bt = j.value("backtest", json::object());
  cfg.backtest.n_paths = bt.value("n_paths", 1000);
  cfg.backtest.p0 = bt.value("p0", 100.0);
  cfg.backtest.i0 = bt.value("i0", +1);
  cfg.backtest.s0 = bt.value("s0", 0.0);
  cfg.backtest.x0 = bt.value("x0", 0.0);
  cfg.backtest.y0 = bt.value("y0", std::int64_t{0});
  cfg.backtest.record_tapes = bt.value("record_tapes", false);
  cfg.backtest.checkpoint_dt = bt.value("checkpoint_dt", cfg.grid_dt);
  cfg.backtest.seed = cfg.seed;
  cfg.policy_name = bt.value("policy", std::string("eta0"));
  if (cfg.backtest.i0 != +1 && cfg.backtest.i0 != -1) throw SchemaError("i0 must be +/-1");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse config " + path + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw SchemaError("bad config " + path + ": " + e.what());
  }
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

json grid_meta(const GridSpec& g) {
  return json{{"dt", g.dt}, {"horizon", g.horizon}, {"s_max", g.s_max}, {"nt", g.nt}, {"ns", g.ns}};
}

GridSpec grid_from_meta(const json& j) {
  GridSpec g;
  g.dt = j.at("dt").get<double>();
  g.horizon = j.at("horizon").get<double>();
  g.s_max = j.at("s_max").get<double>();
  g.nt = j.at("nt").get<int>();
  g.ns = j.at("ns").get<int>();
  return g;
}

FieldTag tag_from_name(const std::string& name) {
  for (FieldTag t : {FieldTag::Theta, FieldTag::Omega, FieldTag::Zeta1, FieldTag::Zeta0, FieldTag::GPlus,
                     FieldTag::GMinus, FieldTag::GTrdPlus, FieldTag::GTrdMinus, FieldTag::GJmpPlus,
                     FieldTag::GJmpMinus, FieldTag::APlus, FieldTag::AMinus, FieldTag::BPlus, FieldTag::BMinus}) {
    if (field_tag_name(t) == name) return t;
  }
  throw SchemaError("unknown field tag: " + name);
}

}  // namespace

void write_grid(const ValueGrid& grid, const std::string& csv_path, const std::string& meta_path,
                const std::string& config_hash) {
  const GridSpec& g = grid.grid();
  std::string csv = "t,s,value\n";
  csv.reserve(g.num_nodes() * 24);
  char buf[96];
  for (int i = 0; i <= g.nt; ++i) {
    for (int j = 0; j < g.ns; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", g.t_at(i), g.s_at(j), grid.at(i, j));
      csv += buf;
    }
  }
  write_text_file(csv_path, csv);
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["field"] = field_tag_name(grid.tag());
  meta["grid"] = grid_meta(g);
  meta["config_hash"] = config_hash;
  write_text_file(meta_path, meta.dump(2) + "\n");
}

ValueGrid read_grid(const std::string& csv_path, const std::string& meta_path,
                    std::optional<std::string> expect_hash) {
  json meta;
  try {
    meta = json::parse(read_text_file(meta_path));
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse grid metadata " + meta_path + ": " + e.what());
  }
  if (meta.value("schema_version", "") != kSchemaVersion) throw SchemaError("unsupported grid schema version");
  if (expect_hash && meta.value("config_hash", "") != *expect_hash) {
    throw MissingArtifact("artifact " + csv_path + " was produced under a different configuration");
  }
  ValueGrid grid(tag_from_name(meta.at("field").get<std::string>()), grid_from_meta(meta.at("grid")));
  const std::string csv = read_text_file(csv_path);
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "t,s,value") throw SchemaError("unexpected grid CSV header");
  const GridSpec& g = grid.grid();
  for (int i = 0; i <= g.nt; ++i) {
    for (int j = 0; j < g.ns; ++j) {
      if (!std::getline(in, line)) throw SchemaError("grid CSV truncated");
      double t, s, v;
      if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &t, &s, &v) != 3) throw SchemaError("malformed grid CSV row");
      grid.at(i, j) = v;
    }
  }
  return grid;
}

void write_zeta(const ZetaField& zeta, const std::string& csv_path, const std::string& meta_path,
                const std::string& config_hash) {
  const GridSpec& g = zeta.grid();
  std::string csv = "t,s,q,value\n";
  char buf[112];
  for (long q = -zeta.q_max(); q <= zeta.q_max(); ++q) {
    for (int i = 0; i <= g.nt; ++i) {
      for (int j = 0; j < g.ns; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%ld,%.17g\n", g.t_at(i), g.s_at(j), q, zeta.at(i, j, q));
        csv += buf;
      }
    }
  }
  write_text_file(csv_path, csv);
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["field"] = "zeta";
  meta["grid"] = grid_meta(g);
  meta["q_max"] = zeta.q_max();
  meta["eta"] = zeta.eta();
  meta["config_hash"] = config_hash;
  write_text_file(meta_path, meta.dump(2) + "\n");
}

ZetaField read_zeta(const std::string& csv_path, const std::string& meta_path,
                    std::optional<std::string> expect_hash) {
  json meta;
  try {
    meta = json::parse(read_text_file(meta_path));
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse zeta metadata " + meta_path + ": " + e.what());
  }
  if (meta.value("schema_version", "") != kSchemaVersion) throw SchemaError("unsupported zeta schema version");
  if (expect_hash && meta.value("config_hash", "") != *expect_hash) {
    throw MissingArtifact("artifact " + csv_path + " was produced under a different configuration");
  }
  ZetaField zeta(grid_from_meta(meta.at("grid")), meta.at("q_max").get<int>(), meta.at("eta").get<double>());
  const std::string csv = read_text_file(csv_path);
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "t,s,q,value") throw SchemaError("unexpected zeta CSV header");
  const GridSpec& g = zeta.grid();
  for (long q = -zeta.q_max(); q <= zeta.q_max(); ++q) {
    for (int i = 0; i <= g.nt; ++i) {
      for (int j = 0; j < g.ns; ++j) {
        if (!std::getline(in, line)) throw SchemaError("zeta CSV truncated");
        double t, s, v;
        long qq;
        if (std::sscanf(line.c_str(), "%lg,%lg,%ld,%lg", &t, &s, &qq, &v) != 4) {
          throw SchemaError("malformed zeta CSV row");
        }
        zeta.at(i, j, q) = v;
      }
    }
  }
  return zeta;
}

json report_to_json(const BacktestReport& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["n_paths"] = report.n_paths;
  j["eta"] = report.eta;
  j["mean_utility"] = report.mean_utility;
  j["se_utility"] = report.se_utility;
  j["mean_terminal_inventory"] = report.mean_terminal_inventory;
  j["var_terminal_inventory"] = report.var_terminal_inventory;
  j["fill_events_trade"] = report.fill_events_trade;
  j["fill_events_jump"] = report.fill_events_jump;
  j["lots_trade"] = report.lots_trade;
  j["lots_jump"] = report.lots_jump;
  return j;
}

json calibration_to_json(const CalibrationReport& rep) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["alpha"] = {{"value", rep.alpha.value}, {"se", rep.alpha.se}, {"n_pairs", rep.alpha.n_pairs}};
  j["rho"] = {{"value", rep.rho.value}, {"se", rep.rho.se}, {"n", rep.rho.n}};
  j["lambda"] = {{"lam0", rep.lambda.lam0},     {"a", rep.lambda.a},
                 {"k", rep.lambda.k},           {"loglik", rep.lambda.loglik},
                 {"grad_norm", rep.lambda.grad_norm}, {"converged", rep.lambda.converged},
                 {"se", rep.lambda.se},         {"n_trades", rep.lambda.n_trades},
                 {"window", rep.lambda.window}};
  json bins = json::array();
  for (const auto& b : rep.renewal.bins) {
    bins.push_back({{"s_lo", b.s_lo},
                    {"s_hi", b.s_hi},
                    {"q_lo", b.q_lo},
                    {"q_hi", b.q_hi},
                    {"exposure", b.exposure},
                    {"events_plus", b.events_plus},
                    {"events_minus", b.events_minus},
                    {"h_plus", b.h_plus},
                    {"se_plus", b.se_plus},
                    {"h_minus", b.h_minus},
                    {"se_minus", b.se_minus}});
  }
  j["renewal"] = {{"n_plus", rep.renewal.n_plus},
                  {"n_minus", rep.renewal.n_minus},
                  {"f_plus_defined", rep.renewal.f_plus.has_value()},
                  {"f_minus_defined", rep.renewal.f_minus.has_value()},
                  {"hazard_bins", bins}};
  if (rep.vartheta) {
    j["vartheta"] = {{"probs_plus", rep.vartheta->probs_plus},
                     {"probs_minus", rep.vartheta->probs_minus},
                     {"trades_plus", rep.vartheta->trades_plus},
                     {"trades_minus", rep.vartheta->trades_minus}};
  }
  return j;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingArtifact("cannot write " + path);
  out << text;
  if (!out) throw MissingArtifact("failed while writing " + path);
}

}  // namespace mmlab
