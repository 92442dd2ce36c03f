#pragma once

/**
 * Run configuration: the JSON schema shared by the command-line tool and the
 * experiment reports.
 *
 * Parsing is strict: unknown fields are rejected (with their path) so typos
 * cannot silently fall back to defaults.  A configuration has a canonical
 * serialized form — sorted keys, defaults materialized — and a 64-bit FNV-1a
 * hash over that form with the non-semantic fields (output paths, thread
 * count) removed; reruns of the same semantic configuration therefore report
 * the same hash regardless of where the output goes or how it is threaded.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pavd/rate_model.hpp"

namespace pavd {

/// One rate sequence in a custom model: an explicit head table plus a
/// declared tail ("constant" value, "affine" intercept/slope, or "geometric"
/// amplitude/ratio).
struct TailConfig {
  std::string kind;  ///< "constant" | "affine" | "geometric"
  double value = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
  double amplitude = 0.0;
  double ratio = 0.0;
};

/// Either a builtin family name or a fully custom rate pair.
struct ModelConfig {
  std::optional<std::string> family;
  std::string name = "custom";
  std::vector<double> b_table;
  std::vector<double> d_table;
  std::optional<TailConfig> b_tail;
  std::optional<TailConfig> d_tail;
  std::optional<double> d_star;  ///< declared limiting death rate
};

/// Builds the RateModel described by a ModelConfig.
RateModel make_model(const ModelConfig& mc);

struct RunConfig {
  ModelConfig model;
  std::uint64_t seed = 1;
  std::int64_t replicas = 1000;
  std::int64_t steps = 100'000;
  std::optional<std::int64_t> until_events;
  std::optional<double> until_time;
  std::vector<std::int64_t> checkpoints;    ///< explicit checkpoint list
  std::optional<double> checkpoint_ratio;   ///< or a geometric grid ratio
  int hub_m = 1;
  int grid_points = 33;
  int threads = 1;
  std::int64_t target_surviving = 200;
  std::int64_t samples = 100'000;           ///< lifetime sample count
  std::vector<std::int64_t> n_grid;         ///< tightness sizes
  std::int64_t n_max = 4;                   ///< embedding step depth
  std::string engine = "discrete";
  std::string out;      ///< JSON report path; empty = stdout
  std::string csv_out;  ///< CSV path; empty = no CSV
};

/// Strict parse; throws SchemaError naming the offending field path.
RunConfig parse_config(const nlohmann::json& j);

/// Reads and parses a JSON file; IoError on filesystem problems.
RunConfig load_config_file(const std::string& path);

/// Canonical JSON form: every field materialized, keys sorted by nlohmann's
/// object ordering.
nlohmann::json canonical_config(const RunConfig& cfg);

/// FNV-1a 64-bit hash of the canonical form minus out/csv_out/threads.
std::uint64_t config_hash(const RunConfig& cfg);

/// Hex rendering of config_hash, as embedded in reports.
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace pavd
