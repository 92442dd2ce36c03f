#pragma once

/**
 * Output formatting: fixed-layout CSV trajectory dumps and JSON reports.
 *
 * Reports are deterministic byte-for-byte for a fixed configuration and
 * seed: keys are sorted, floating-point values use shortest round-trip
 * formatting, and everything that legitimately varies between reruns
 * (wall-clock timestamp, runtime) is confined to the single "run_meta"
 * key, so a determinism check deletes that one key and compares bytes.
 *
 * CSV layouts (one row per checkpoint/grid sample; label sentinels are -1,
 * undefined times are "nan"):
 *   discrete:  replica,n,O_n,I1..IM,maxdeg,alive,survived
 *   ctbp:      replica,t,n,O_cont,I1_cont..IM_cont,Za,Zb,W_hat
 */

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pavd/analytics.hpp"
#include "pavd/config.hpp"
#include "pavd/ctbp_sim.hpp"
#include "pavd/discrete_sim.hpp"
#include "pavd/experiments.hpp"

namespace pavd {

/// %.17g rendering (shortest exact round-trip is the JSON layer's job; CSV
/// pins the classic printf format).  NaN renders as "nan".
std::string format_double(double v);

void write_discrete_csv(std::ostream& os, const std::vector<Trajectory>& runs,
                        int hub_m);
void write_ctbp_csv(std::ostream& os, const std::vector<ContTrajectory>& runs,
                    int hub_m);

nlohmann::json to_json(const GofResult& g);
nlohmann::json to_json(const Interval& iv);
nlohmann::json to_json(const SpearmanResult& s);
nlohmann::json to_json(const MuHatResult& m);
nlohmann::json to_json(const MalthusianResult& m);
nlohmann::json to_json(const AssumptionEvidence& e);
nlohmann::json to_json(const AssumptionReport& a);
nlohmann::json to_json(const RegimeReport& r);
nlohmann::json to_json(const Centerings& c);
nlohmann::json to_json(const SurvivalReport& r);
nlohmann::json to_json(const ElderReport& r);
nlohmann::json to_json(const PersistenceReport& r);
nlohmann::json to_json(const TightnessReport& r);
nlohmann::json to_json(const EmbeddingReport& r);
nlohmann::json to_json(const LifetimeReport& r);
nlohmann::json to_json(const GrowthReport& r);

/// The common report envelope: schema_version, kind, canonical config,
/// config hash, seed, and the build identifier.
nlohmann::json report_envelope(const RunConfig& cfg, const std::string& kind);

/// Adds the only rerun-varying fields under the single "run_meta" key.
void attach_run_meta(nlohmann::json& report, double runtime_seconds);

/// Serializes with sorted keys and 2-space indentation, newline-terminated,
/// to `path` ("" or "-" writes to stdout).  Throws IoError on failure.
void write_report(const nlohmann::json& report, const std::string& path);

}  // namespace pavd
