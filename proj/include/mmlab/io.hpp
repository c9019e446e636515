// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "mmlab/backtest.hpp"
#include "mmlab/calibrate.hpp"
#include "mmlab/grid.hpp"
#include "mmlab/model.hpp"

namespace mmlab {

inline constexpr const char* kSchemaVersion = "1";

nlohmann::json params_to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key) JSON dump.
std::string fnv1a_hex(const std::string& text);
std::string params_hash(const ModelParams& params);

struct RunConfig {
  ModelParams params;
  double grid_dt;
  int q_max;
  BacktestConfig backtest;  // policy handle filled by the subcommand
  std::uint64_t seed;
  std::string policy_name;  // hold | always_on | eta0 | approx | exact
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// ValueGrid <-> CSV (long format t,s,value) with a JSON sidecar holding the
// grid metadata and the config hash; round-trips are bit-exact.
void write_grid(const ValueGrid& grid, const std::string& csv_path, const std::string& meta_path,
                const std::string& config_hash);
ValueGrid read_grid(const std::string& csv_path, const std::string& meta_path,
                    std::optional<std::string> expect_hash = std::nullopt);

void write_zeta(const ZetaField& zeta, const std::string& csv_path, const std::string& meta_path,
                const std::string& config_hash);
ZetaField read_zeta(const std::string& csv_path, const std::string& meta_path,
                    std::optional<std::string> expect_hash = std::nullopt);

nlohmann::json report_to_json(const BacktestReport& report);
nlohmann::json calibration_to_json(const CalibrationReport& report);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// %.17g rendering used for every floating-point field in CSV output.
std::string format_double(double x);

}  // namespace mmlab
