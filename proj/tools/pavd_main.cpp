/**
 * pavd — command-line front end.
 *
 * Subcommands:
 *   analyze            numerical analysis of a rate model (no simulation)
 *   simulate-discrete  discrete-step tree trajectories -> CSV/JSON
 *   simulate-ctbp      continuous-time trajectories -> CSV/JSON
 *   experiment <name>  elder | persistence | tightness | embedding |
 *                      lifetime | growth
 *
 * Every subcommand accepts --config FILE (strict JSON, see pavd::RunConfig)
 * and flags that override it.  Thread count resolves as: --threads flag,
 * then the PAVD_THREADS environment variable, then the config file, then 1.
 * Reports are deterministic for a fixed seed apart from the "run_meta" key.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pavd/analytics.hpp"
#include "pavd/config.hpp"
#include "pavd/ctbp_sim.hpp"
#include "pavd/discrete_sim.hpp"
#include "pavd/emit.hpp"
#include "pavd/errors.hpp"
#include "pavd/experiments.hpp"
#include "pavd/rate_model.hpp"
#include "pavd/replica_driver.hpp"

#ifndef PAVD_BUILD_ID
#define PAVD_BUILD_ID "unversioned"
#endif

namespace {

using nlohmann::json;
using namespace pavd;

std::string family_help() {
  std::string s = "builtin model family (";
  const auto& families = builtin_families();
  for (std::size_t i = 0; i < families.size(); ++i) {
    if (i) s += ", ";
    s += families[i];
  }
  s += ")";
  return s;
}

/// Option storage plus the CLI11 handles needed to detect which flags were
/// actually given (given flags override the config file).
struct Opts {
  std::string config;
  std::string model;
  std::string out;
  std::string csv_out;
  std::string engine = "discrete";
  std::uint64_t seed = 1;
  std::int64_t replicas = 1000;
  std::int64_t steps = 100'000;
  std::int64_t until_events = 10'000;
  double until_time = 0.0;
  std::int64_t samples = 1'000'000;
  std::int64_t target = 200;
  std::int64_t n_max = 4;
  int threads = 1;
  int hub_m = 1;
  int grid_points = 33;
  std::vector<std::int64_t> n_grid;
  std::vector<std::int64_t> checkpoints;
  double checkpoint_ratio = 0.0;

  CLI::Option* o_config = nullptr;
  CLI::Option* o_model = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_csv = nullptr;
  CLI::Option* o_engine = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_replicas = nullptr;
  CLI::Option* o_steps = nullptr;
  CLI::Option* o_until_events = nullptr;
  CLI::Option* o_until_time = nullptr;
  CLI::Option* o_samples = nullptr;
  CLI::Option* o_target = nullptr;
  CLI::Option* o_n_max = nullptr;
  CLI::Option* o_threads = nullptr;
  CLI::Option* o_hub_m = nullptr;
  CLI::Option* o_grid_points = nullptr;
  CLI::Option* o_n_grid = nullptr;
  CLI::Option* o_checkpoints = nullptr;
  CLI::Option* o_checkpoint_ratio = nullptr;
};

void add_common(CLI::App* cmd, Opts& o) {
  o.o_config = cmd->add_option("--config", o.config,
                               "JSON run configuration; flags override it");
  o.o_model = cmd->add_option("--model", o.model, family_help());
  o.o_seed = cmd->add_option("--seed", o.seed, "master seed");
  o.o_threads = cmd->add_option("--threads", o.threads,
                                "worker threads (results are identical at any "
                                "thread count)");
  o.o_out = cmd->add_option("--out", o.out, "JSON report path (default stdout)");
}

int env_threads() {
  const char* env = std::getenv("PAVD_THREADS");
  if (env == nullptr || *env == '\0') return -1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == nullptr || *end != '\0' || v < 0 || v > 4096) {
    throw SchemaError("PAVD_THREADS must be a nonnegative integer");
  }
  return static_cast<int>(v);
}

RunConfig resolve(const Opts& o) {
  RunConfig cfg;
  if (o.o_config->count() > 0) cfg = load_config_file(o.config);
  if (o.o_model->count() > 0) {
    cfg.model = ModelConfig{};
    cfg.model.family = o.model;
  }
  if (!cfg.model.family && !cfg.model.b_tail) {
    throw SchemaError(
        "no model specified: pass --model FAMILY or --config FILE with a "
        "\"model\" entry");
  }
  if (o.o_seed->count() > 0) cfg.seed = o.seed;
  if (o.o_out->count() > 0) cfg.out = o.out;
  if (o.o_csv != nullptr && o.o_csv->count() > 0) cfg.csv_out = o.csv_out;
  if (o.o_engine != nullptr && o.o_engine->count() > 0) cfg.engine = o.engine;
  if (o.o_replicas != nullptr && o.o_replicas->count() > 0) {
    cfg.replicas = o.replicas;
  }
  if (o.o_steps != nullptr && o.o_steps->count() > 0) cfg.steps = o.steps;
  if (o.o_until_events != nullptr && o.o_until_events->count() > 0) {
    cfg.until_events = o.until_events;
  }
  if (o.o_until_time != nullptr && o.o_until_time->count() > 0) {
    cfg.until_time = o.until_time;
  }
  if (o.o_samples != nullptr && o.o_samples->count() > 0) cfg.samples = o.samples;
  if (o.o_target != nullptr && o.o_target->count() > 0) {
    cfg.target_surviving = o.target;
  }
  if (o.o_n_max != nullptr && o.o_n_max->count() > 0) cfg.n_max = o.n_max;
  if (o.o_hub_m != nullptr && o.o_hub_m->count() > 0) cfg.hub_m = o.hub_m;
  if (o.o_grid_points != nullptr && o.o_grid_points->count() > 0) {
    cfg.grid_points = o.grid_points;
  }
  if (o.o_n_grid != nullptr && o.o_n_grid->count() > 0) cfg.n_grid = o.n_grid;
  if (o.o_checkpoints != nullptr && o.o_checkpoints->count() > 0) {
    cfg.checkpoints = o.checkpoints;
  }
  if (o.o_checkpoint_ratio != nullptr && o.o_checkpoint_ratio->count() > 0) {
    cfg.checkpoint_ratio = o.checkpoint_ratio;
  }
  if (o.o_threads->count() > 0) {
    cfg.threads = o.threads;
  } else if (const int env = env_threads(); env >= 0) {
    cfg.threads = env;
  }
  if (cfg.threads < 0) throw SchemaError("threads must be >= 0");
  return cfg;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void finish(json& report, const Timer& timer, const RunConfig& cfg) {
  attach_run_meta(report, timer.seconds());
  write_report(report, cfg.out);
}

// ---------------------------------------------------------------------------
// analyze

void run_analyze(const Opts& o) {
  const RunConfig cfg = resolve(o);
  const Timer timer;
  const RateModel model = make_model(cfg.model);
  json report = report_envelope(cfg, "analyze");
  report["model_name"] = model.name();

  const RegimeReport regime = classify_regime(model);
  report["regime"] = to_json(regime);
  const ConvergenceAbscissa ul = underline_lambda(model);
  report["underline_lambda"] = json{{"value", ul.value}, {"conclusive", ul.conclusive}};

  json offspring;
  json sf_rows = json::array();
  for (std::int64_t k : {1, 2, 3, 5, 10, 20, 50, 100}) {
    sf_rows.push_back(json{{"k", k},
                           {"sf", offspring_sf(model, k)},
                           {"log_sf", offspring_log_sf(model, k)},
                           {"log_sf_bound", offspring_log_sf_bound(model, k)}});
  }
  offspring["sf"] = sf_rows;
  offspring["p_infinite"] = prob_infinite_offspring(model);
  const ExpectedOffspring eo = expected_offspring(model);
  offspring["expected"] =
      json{{"value", eo.infinite_flag ? json() : json(eo.value)},
           {"infinite", eo.infinite_flag},
           {"terms_used", eo.terms_used}};
  report["offspring"] = offspring;

  if (regime.assumptions.malthusian &&
      regime.assumptions.malthusian->status == MalthusianStatus::Found) {
    const MalthusianResult& mr = *regime.assumptions.malthusian;
    json rows = json::array();
    if (regime.assumptions.death_limit) {
      for (double n : {1e3, 1e4, 1e5, 1e6, 1e7, 1e8}) {
        json row{{"n", n}};
        try {
          row["centerings"] = to_json(predicted_centerings(model, n, mr));
        } catch (const Error& e) {
          row["error"] = e.what();
        }
        rows.push_back(row);
      }
    }
    report["centerings"] = rows;
  }

  if (regime.assumptions.death_limit) {
    // K_alpha(t) = alpha(phi1^{-1}(t)) is only evaluable up to the largest
    // t whose preimage degree fits in the sequence cache (for affine birth
    // rates phi1 grows like log k, so the preimage is exponential in t).
    const double t_attain =
        0.999 * model.seq_at(DerivedSeq::Phi1, std::int64_t{1} << 20);
    json k_rows = json::array();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    for (double t = 0.5; t <= 1024.0 && t <= t_attain; t *= 2.0) {
      const double k = model.k_alpha(t);
      k_rows.push_back(json{{"t", t}, {"k_alpha", k}});
      lo = std::isnan(lo) ? k : std::min(lo, k);
      hi = std::isnan(hi) ? k : std::max(hi, k);
    }
    if (!k_rows.empty()) {
      report["k_alpha"] = json{{"grid", k_rows},
                               {"min", lo},
                               {"max", hi},
                               {"t_attainable", t_attain}};
    }
    json lt = json::array();
    for (double t : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      if (t > t_attain) break;
      lt.push_back(json{{"t", t},
                        {"log_sf_prediction", lifetime_logsf_prediction(model, t)}});
    }
    report["lifetime_log_sf"] = lt;
  }

  finish(report, timer, cfg);
}

// ---------------------------------------------------------------------------
// simulate-discrete

void run_simulate_discrete(const Opts& o) {
  const RunConfig cfg = resolve(o);
  const Timer timer;
  const RateModel model = make_model(cfg.model);

  std::vector<std::int64_t> checkpoints = cfg.checkpoints;
  if (checkpoints.empty()) {
    const double ratio = cfg.checkpoint_ratio
                             ? *cfg.checkpoint_ratio
                             : std::max(1.01, std::pow(static_cast<double>(cfg.steps),
                                                       1.0 / 31.0));
    checkpoints = geometric_checkpoints(cfg.steps, ratio);
  }

  std::vector<Trajectory> runs(static_cast<std::size_t>(cfg.replicas));
  for_each_replica(0, cfg.replicas, cfg.seed, cfg.threads,
                   [&](std::int64_t i, Rng& rng) {
                     runs[static_cast<std::size_t>(i)] =
                         run_discrete(model, cfg.steps, checkpoints, cfg.hub_m, rng);
                   });

  std::int64_t survived = 0;
  double final_sum = 0.0;
  for (const Trajectory& t : runs) {
    survived += t.survived ? 1 : 0;
    final_sum += static_cast<double>(t.final_n);
  }
  json report = report_envelope(cfg, "simulate_discrete");
  report["model_name"] = model.name();
  report["summary"] = json{
      {"replicas", cfg.replicas},
      {"survived", survived},
      {"mean_final_n",
       cfg.replicas > 0 ? final_sum / static_cast<double>(cfg.replicas) : 0.0},
      {"checkpoints", checkpoints}};

  if (!cfg.csv_out.empty()) {
    std::ofstream csv(cfg.csv_out, std::ios::binary);
    if (!csv) throw IoError("cannot open CSV output '" + cfg.csv_out + "'");
    write_discrete_csv(csv, runs, cfg.hub_m);
  }
  finish(report, timer, cfg);
}

// ---------------------------------------------------------------------------
// simulate-ctbp

void run_simulate_ctbp(const Opts& o) {
  const RunConfig cfg = resolve(o);
  const Timer timer;
  const RateModel model = make_model(cfg.model);

  RunCtbpSpec spec;
  if (cfg.until_time) {
    spec.mode = RunCtbpSpec::Mode::UntilTime;
    spec.target_time = *cfg.until_time;
  } else {
    spec.mode = RunCtbpSpec::Mode::UntilEvents;
    spec.target_events = cfg.until_events ? *cfg.until_events : cfg.steps;
  }
  spec.grid_points = cfg.grid_points;
  spec.hub_m = cfg.hub_m;
  const MalthusianResult mr = malthusian(model);
  if (mr.status == MalthusianStatus::Found) spec.lambda_star = mr.lambda_star;

  std::vector<ContTrajectory> runs(static_cast<std::size_t>(cfg.replicas));
  for_each_replica(0, cfg.replicas, cfg.seed, cfg.threads,
                   [&](std::int64_t i, Rng& rng) {
                     runs[static_cast<std::size_t>(i)] = run_ctbp(model, spec, rng);
                   });

  std::int64_t survived = 0;
  double events_sum = 0.0;
  double time_sum = 0.0;
  for (const ContTrajectory& t : runs) {
    survived += t.survived ? 1 : 0;
    events_sum += static_cast<double>(t.events);
    time_sum += t.end_time;
  }
  json report = report_envelope(cfg, "simulate_ctbp");
  report["model_name"] = model.name();
  report["lambda_star"] =
      mr.status == MalthusianStatus::Found ? json(mr.lambda_star) : json();
  report["summary"] = json{
      {"replicas", cfg.replicas},
      {"survived", survived},
      {"mean_events",
       cfg.replicas > 0 ? events_sum / static_cast<double>(cfg.replicas) : 0.0},
      {"mean_end_time",
       cfg.replicas > 0 ? time_sum / static_cast<double>(cfg.replicas) : 0.0}};

  if (!cfg.csv_out.empty()) {
    std::ofstream csv(cfg.csv_out, std::ios::binary);
    if (!csv) throw IoError("cannot open CSV output '" + cfg.csv_out + "'");
    write_ctbp_csv(csv, runs, cfg.hub_m);
  }
  finish(report, timer, cfg);
}

// ---------------------------------------------------------------------------
// experiment

void run_experiment(const std::string& which, const Opts& o) {
  const RunConfig cfg = resolve(o);
  const Timer timer;
  const RateModel model = make_model(cfg.model);
  json report = report_envelope(cfg, "experiment." + which);
  report["model_name"] = model.name();

  if (which == "elder") {
    report["result"] = to_json(elder_limit_test(model, cfg.target_surviving,
                                                cfg.steps, cfg.seed, cfg.threads));
  } else if (which == "persistence") {
    report["result"] =
        to_json(hub_persistence_scan(model, cfg.target_surviving, cfg.steps,
                                     cfg.hub_m, cfg.seed, cfg.threads));
  } else if (which == "tightness") {
    std::vector<std::int64_t> grid = cfg.n_grid;
    if (grid.empty()) grid = {1'000, 10'000, 100'000};
    report["result"] = to_json(
        tightness_scan(model, cfg.target_surviving, grid, cfg.seed, cfg.threads));
  } else if (which == "embedding") {
    report["result"] = to_json(embedding_equivalence(model, cfg.replicas, cfg.n_max,
                                                     cfg.seed, cfg.threads));
  } else if (which == "lifetime") {
    report["result"] =
        to_json(lifetime_tail_experiment(model, cfg.samples, cfg.seed, cfg.threads));
  } else {  // growth
    const std::int64_t events = cfg.until_events ? *cfg.until_events : cfg.steps;
    report["result"] = to_json(growth_rate_experiment(
        model, cfg.target_surviving, events, cfg.seed, cfg.threads));
  }
  finish(report, timer, cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-tree growth with vertex death: simulation and "
               "numerical analytics"};
  app.set_version_flag("--version", std::string("pavd ") + PAVD_BUILD_ID);
  app.require_subcommand(1);

  Opts an, sd, sc;
  std::vector<Opts> ex(6);
  const std::vector<std::string> experiment_names = {
      "elder", "persistence", "tightness", "embedding", "lifetime", "growth"};

  CLI::App* analyze =
      app.add_subcommand("analyze", "numerical analysis of a rate model");
  add_common(analyze, an);
  analyze->callback([&an] { run_analyze(an); });

  CLI::App* sim_d = app.add_subcommand(
      "simulate-discrete", "discrete-step tree trajectories at checkpoints");
  add_common(sim_d, sd);
  sd.o_replicas = sim_d->add_option("--replicas", sd.replicas, "replica count");
  sd.o_steps = sim_d->add_option("--steps", sd.steps, "events per replica");
  sd.o_hub_m = sim_d->add_option("--hub-m", sd.hub_m, "top-degree ranks tracked");
  sd.o_checkpoints =
      sim_d->add_option("--checkpoints", sd.checkpoints, "explicit checkpoint list")
          ->delimiter(',');
  sd.o_checkpoint_ratio = sim_d->add_option("--checkpoint-ratio", sd.checkpoint_ratio,
                                            "geometric checkpoint grid ratio (> 1)");
  sd.o_csv = sim_d->add_option("--csv-out", sd.csv_out, "per-checkpoint CSV path");
  sim_d->callback([&sd] { run_simulate_discrete(sd); });

  CLI::App* sim_c = app.add_subcommand(
      "simulate-ctbp", "continuous-time branching trajectories on a time grid");
  add_common(sim_c, sc);
  sc.o_replicas = sim_c->add_option("--replicas", sc.replicas, "replica count");
  sc.o_until_events =
      sim_c->add_option("--until-events", sc.until_events, "stop after N events");
  sc.o_until_time =
      sim_c->add_option("--until-time", sc.until_time, "stop at absolute time T");
  sc.o_grid_points =
      sim_c->add_option("--grid-points", sc.grid_points, "rows per trajectory");
  sc.o_hub_m = sim_c->add_option("--hub-m", sc.hub_m, "top-degree ranks tracked");
  sc.o_csv = sim_c->add_option("--csv-out", sc.csv_out, "per-grid-point CSV path");
  sim_c->callback([&sc] { run_simulate_ctbp(sc); });

  CLI::App* exp =
      app.add_subcommand("experiment", "run one verification experiment");
  exp->require_subcommand(1);
  for (std::size_t i = 0; i < experiment_names.size(); ++i) {
    const std::string& name = experiment_names[i];
    Opts& o = ex[i];
    CLI::App* cmd = exp->add_subcommand(name, "experiment: " + name);
    add_common(cmd, o);
    if (name == "elder" || name == "persistence") {
      o.o_steps = cmd->add_option("--steps", o.steps, "events per replica");
      o.o_target = cmd->add_option("--target-surviving", o.target,
                                   "surviving replicas required");
    }
    if (name == "persistence") {
      o.o_hub_m = cmd->add_option("--hub-m", o.hub_m, "top-degree ranks tracked");
    }
    if (name == "tightness") {
      o.o_target = cmd->add_option("--target-surviving", o.target,
                                   "surviving replicas required");
      o.o_n_grid = cmd->add_option("--n-grid", o.n_grid,
                                   "tree sizes n to sample (comma separated)")
                       ->delimiter(',');
    }
    if (name == "embedding") {
      o.o_replicas = cmd->add_option("--replicas", o.replicas, "replica count");
      o.o_n_max = cmd->add_option("--n-max", o.n_max, "compare steps 1..n_max");
    }
    if (name == "lifetime") {
      o.o_samples = cmd->add_option("--samples", o.samples, "lifetimes to sample");
    }
    if (name == "growth") {
      o.o_target = cmd->add_option("--target-surviving", o.target,
                                   "surviving replicas required");
      o.o_until_events =
          cmd->add_option("--until-events", o.until_events, "events per replica");
    }
    cmd->callback([&o, name] { run_experiment(name, o); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const pavd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
