/**
 * CSV and JSON emission.
 */

#include "pavd/emit.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <ostream>

#include "pavd/errors.hpp"

#ifndef PAVD_BUILD_ID
#define PAVD_BUILD_ID "unversioned"
#endif

namespace pavd {
namespace {

using nlohmann::json;

json verdict_json(Verdict v) { return json(to_string(v)); }

json doubles_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? json(x) : json());
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_discrete_csv(std::ostream& os, const std::vector<Trajectory>& runs,
                        int hub_m) {
  os << "replica,n,O_n";
  for (int m = 1; m <= hub_m; ++m) os << ",I" << m;
  os << ",maxdeg,alive,survived\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const Trajectory& traj = runs[r];
    for (const CheckpointRow& row : traj.rows) {
      os << r << ',' << row.n << ',' << row.oldest;
      for (int m = 0; m < hub_m; ++m) {
        os << ',' << row.top[static_cast<std::size_t>(m)];
      }
      os << ',' << row.max_degree << ',' << row.alive << ','
         << (traj.survived ? 1 : 0) << '\n';
    }
  }
}

void write_ctbp_csv(std::ostream& os, const std::vector<ContTrajectory>& runs,
                    int hub_m) {
  os << "replica,t,n,O_cont";
  for (int m = 1; m <= hub_m; ++m) os << ",I" << m << "_cont";
  os << ",Za,Zb,W_hat\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const ContRow& row : runs[r].rows) {
      os << r << ',' << format_double(row.t) << ',' << row.n << ','
         << format_double(row.oldest_birth);
      for (int m = 0; m < hub_m; ++m) {
        os << ',' << format_double(row.top_birth[static_cast<std::size_t>(m)]);
      }
      os << ',' << row.z_alive << ',' << row.z_born << ','
         << format_double(row.w_hat) << '\n';
    }
  }
}

json to_json(const GofResult& g) {
  return json{{"statistic", g.statistic},
              {"p_value", g.p_value},
              {"dof", g.dof},
              {"cells_used", g.cells_used},
              {"cells_pooled", g.cells_pooled}};
}

json to_json(const Interval& iv) { return json{{"lo", iv.lo}, {"hi", iv.hi}}; }

json to_json(const SpearmanResult& s) {
  return json{{"rho", s.rho}, {"p_value", s.p_value}, {"n", s.n}};
}

json to_json(const MuHatResult& m) {
  json j{{"value", std::isfinite(m.value) ? json(m.value) : json()},
         {"tail_bound", m.tail_bound},
         {"terms_used", m.terms_used}};
  switch (m.status) {
    case SeriesStatus::Finite: j["status"] = "finite"; break;
    case SeriesStatus::Divergent: j["status"] = "divergent"; break;
    case SeriesStatus::SlowConvergence: j["status"] = "slow_convergence"; break;
  }
  return j;
}

json to_json(const MalthusianResult& m) {
  json j{{"lambda_star", m.status == MalthusianStatus::Found ? json(m.lambda_star)
                                                             : json()},
         {"residual", m.residual},
         {"abscissa", m.abscissa},
         {"terms_used", m.terms_used}};
  switch (m.status) {
    case MalthusianStatus::Found: j["status"] = "found"; break;
    case MalthusianStatus::NoRoot: j["status"] = "no_root"; break;
    case MalthusianStatus::NotBracketed: j["status"] = "not_bracketed"; break;
  }
  return j;
}

json to_json(const AssumptionEvidence& e) {
  return json{{"verdict", verdict_json(e.verdict)},
              {"statistic", std::isfinite(e.statistic) ? json(e.statistic) : json()},
              {"detail", e.detail}};
}

json to_json(const AssumptionReport& a) {
  json j{{"finite_lifetimes", to_json(a.finite_lifetimes)},
         {"no_explosion", to_json(a.no_explosion)},
         {"clock_variance", to_json(a.clock_variance)},
         {"transform_finite", to_json(a.transform_finite)},
         {"malthusian_root", to_json(a.malthusian_root)},
         {"death_limit", a.death_limit ? json(*a.death_limit) : json()},
         {"total_rate_infimum",
          json{{"value", a.total_rate_inf.value},
               {"conclusive", a.total_rate_inf.conclusive}}}};
  if (a.malthusian) j["malthusian"] = to_json(*a.malthusian);
  return j;
}

json to_json(const RegimeReport& r) {
  return json{{"regime", to_string(r.regime)},
              {"assumptions", to_json(r.assumptions)},
              {"detail", r.detail}};
}

json to_json(const Centerings& c) {
  return json{{"label_centre", c.label_centre},
              {"degree_centre", c.degree_centre},
              {"r_value", c.r_value},
              {"k_alpha_at_r", c.k_alpha_at_r}};
}

json to_json(const SurvivalReport& r) {
  return json{{"model", r.model},
              {"engine", r.engine},
              {"replicas", r.replicas},
              {"steps", r.steps},
              {"survived", r.survived},
              {"p_hat", r.p_hat},
              {"wilson", to_json(r.wilson)},
              {"mean_death_step",
               std::isfinite(r.mean_death_step) ? json(r.mean_death_step) : json()}};
}

json to_json(const ElderReport& r) {
  return json{{"model", r.model},
              {"steps", r.steps},
              {"replicas_run", r.replicas_run},
              {"surviving", r.surviving},
              {"stability_fraction", r.stability_fraction},
              {"p_geometric", r.p_geometric},
              {"p_surv_hat", r.p_surv_hat},
              {"counts", r.counts},
              {"chi_support_one", to_json(r.chi_support_one)},
              {"chi_support_zero", to_json(r.chi_support_zero)},
              {"mle_p", r.mle_p},
              {"chi_mle", to_json(r.chi_mle)},
              {"identity_lhs", r.identity_lhs},
              {"identity_rhs", r.identity_rhs},
              {"identity_se", r.identity_se},
              {"geometric_verdict", verdict_json(r.geometric_verdict)},
              {"identity_verdict", verdict_json(r.identity_verdict)},
              {"detail", r.detail}};
}

json to_json(const PersistenceReport& r) {
  return json{{"model", r.model},
              {"steps", r.steps},
              {"hub_m", r.hub_m},
              {"replicas_run", r.replicas_run},
              {"surviving", r.surviving},
              {"n0_grid", r.n0_grid},
              {"settle_fraction", r.settle_fraction},
              {"last_change_q50", r.last_change_q50},
              {"last_change_q90", r.last_change_q90},
              {"distinct_degree_fraction", r.distinct_degree_fraction},
              {"persistence_predicted", r.persistence_predicted},
              {"verdict", verdict_json(r.verdict)},
              {"detail", r.detail}};
}

json to_json(const TightnessReport& r) {
  json rows = json::array();
  for (const TightnessRow& row : r.rows) {
    rows.push_back(json{{"n", row.n},
                        {"samples", row.samples},
                        {"label_centre", row.label_centre},
                        {"degree_centre", row.degree_centre},
                        {"o_q10", row.o_q10},
                        {"o_q50", row.o_q50},
                        {"o_q90", row.o_q90},
                        {"i_q10", row.i_q10},
                        {"i_q50", row.i_q50},
                        {"i_q90", row.i_q90},
                        {"d_q10", row.d_q10},
                        {"d_q50", row.d_q50},
                        {"d_q90", row.d_q90},
                        {"rel_q10", row.rel_q10},
                        {"rel_q50", row.rel_q50},
                        {"rel_q90", row.rel_q90},
                        {"median_log_maxdeg", row.median_log_maxdeg}});
  }
  return json{{"model", r.model},
              {"replicas_run", r.replicas_run},
              {"surviving", r.surviving},
              {"rows", rows},
              {"spread_ratio_o",
               std::isfinite(r.spread_ratio_o) ? json(r.spread_ratio_o) : json()},
              {"spread_ratio_i",
               std::isfinite(r.spread_ratio_i) ? json(r.spread_ratio_i) : json()},
              {"spread_ratio_d",
               std::isfinite(r.spread_ratio_d) ? json(r.spread_ratio_d) : json()},
              {"maxdeg_slope", r.maxdeg_slope},
              {"verdict", verdict_json(r.verdict)},
              {"detail", r.detail}};
}

json to_json(const EmbeddingReport& r) {
  json steps = json::array();
  for (const EmbeddingStepStat& s : r.per_step) {
    steps.push_back(json{{"n", s.n},
                         {"tv", s.tv},
                         {"chi", to_json(s.chi)},
                         {"exact_states", s.exact_states},
                         {"observed_states", s.observed_states}});
  }
  return json{{"model", r.model},
              {"replicas", r.replicas},
              {"n_max", r.n_max},
              {"per_step", steps},
              {"max_tv", r.max_tv},
              {"min_p", r.min_p},
              {"verdict", verdict_json(r.verdict)},
              {"detail", r.detail}};
}

json to_json(const LifetimeReport& r) {
  return json{{"model", r.model},
              {"samples", r.samples},
              {"truncated", r.truncated},
              {"d_star", r.d_star},
              {"t_grid", doubles_json(r.t_grid)},
              {"exceed", r.exceed},
              {"log_sf_hat", doubles_json(r.log_sf_hat)},
              {"prediction", doubles_json(r.prediction)},
              {"residual", doubles_json(r.residual)},
              {"block_exceed", r.block_exceed},
              {"block_z", doubles_json(r.block_z)},
              {"raw_slope", r.raw_slope},
              {"residual_slope", r.residual_slope},
              {"residual_trend", to_json(r.residual_trend)},
              {"verdict", verdict_json(r.verdict)},
              {"detail", r.detail}};
}

json to_json(const GrowthReport& r) {
  return json{{"model", r.model},
              {"target_events", r.target_events},
              {"replicas_run", r.replicas_run},
              {"surviving", r.surviving},
              {"lambda_star", r.lambda_star},
              {"cv_q50", r.cv_q50},
              {"cv_q90", r.cv_q90},
              {"w_q10", r.w_q10},
              {"w_q50", r.w_q50},
              {"w_q90", r.w_q90},
              {"frac_below_tenth", r.frac_below_tenth},
              {"frac_below_hundredth", r.frac_below_hundredth},
              {"verdict", verdict_json(r.verdict)},
              {"detail", r.detail}};
}

json report_envelope(const RunConfig& cfg, const std::string& kind) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = kind;
  j["config"] = canonical_config(cfg);
  j["config_hash"] = config_hash_hex(cfg);
  j["seed"] = cfg.seed;
  j["build"] = PAVD_BUILD_ID;
  return j;
}

void attach_run_meta(nlohmann::json& report, double runtime_seconds) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  report["run_meta"] = json{{"timestamp", buf}, {"runtime_seconds", runtime_seconds}};
}

void write_report(const nlohmann::json& report, const std::string& path) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing output file '" + path + "'");
}

}  // namespace pavd
