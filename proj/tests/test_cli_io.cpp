/**
 * Configuration parsing, canonicalization and hashing, model construction
 * from configs, stream derivation, and the fixed CSV/JSON output formats.
 */

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pavd/config.hpp"
#include "pavd/ctbp_sim.hpp"
#include "pavd/discrete_sim.hpp"
#include "pavd/emit.hpp"
#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"
#include "pavd/rng.hpp"

using namespace pavd;
using nlohmann::json;

namespace {

/// Splits one CSV line into fields.
std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("make_model resolves builtin families and aliases") {
  ModelConfig mc;
  mc.family = "pa_pure";
  CHECK(make_model(mc).name() == "pa_pure");
  mc.family = "rdy1";
  CHECK(make_model(mc).name() == "rich_die_young_1");
  mc.family = "rao";
  const RateModel rao = make_model(mc);
  CHECK(rao.name() == "rich_are_old");
  CHECK(rao.birth(3) == 4.0);
  mc.family = "no_such_family";
  CHECK_THROWS_AS(make_model(mc), SchemaError);
}

TEST_CASE("make_model builds custom rate pairs") {
  ModelConfig mc;
  mc.name = "affine_demo";
  mc.b_table = {3.0};
  mc.b_tail = TailConfig{"affine", 0.0, 1.0, 1.0, 0.0, 0.0};
  mc.d_tail = TailConfig{"constant", 0.5, 0.0, 0.0, 0.0, 0.0};
  const RateModel m = make_model(mc);
  CHECK(m.name() == "affine_demo");
  CHECK(m.birth(0) == 3.0);   // head table
  CHECK(m.birth(1) == 2.0);   // affine tail: 1 + i
  CHECK(m.birth(10) == 11.0);
  CHECK(m.death(0) == 0.5);
  CHECK(m.death(7) == 0.5);

  // A geometric tail is a closed form for the whole sequence; a head table
  // alongside it is a contradiction and is rejected.
  mc.d_table = {1.0};
  mc.d_tail = TailConfig{"geometric", 0.0, 0.0, 0.0, 0.5, 0.5};
  CHECK_THROWS_AS(make_model(mc), SchemaError);
}

TEST_CASE("parse_config is strict about unknown fields and types") {
  CHECK_THROWS_WITH_AS(parse_config(json::parse(R"({"modl": {}})")),
                       "config field 'modl': unknown field", SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"model": {"family": "pa_pure",
                                                         "extra": 1}})")),
                  SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"seed": "one"})")), SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"replicas": -5})")), SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"steps": 1.5})")), SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"engine": "turbo"})")), SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"hub_m": 0})")), SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"checkpoints": "grid"})")),
                  SchemaError);
  CHECK_THROWS_WITH_AS(
      parse_config(json::parse(R"({"checkpoints": {"ratio": 1.0}})")),
      "config field 'checkpoints.ratio': must be > 1", SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"checkpoints": {"ratio": 2,
                                                               "n": 3}})")),
                  SchemaError);
  // Custom models must declare both tails.
  CHECK_THROWS_AS(parse_config(json::parse(
                      R"({"model": {"b_table": [1.0],
                                    "b_tail": {"kind": "constant", "value": 1}}})")),
                  SchemaError);
  CHECK_THROWS_AS(parse_config(json::parse(
                      R"({"model": {"b_tail": {"kind": "quadratic"}}})")),
                  SchemaError);
}

TEST_CASE("parse_config accepts both checkpoint forms") {
  const RunConfig a =
      parse_config(json::parse(R"({"checkpoints": [10, 100, 1000]})"));
  CHECK(a.checkpoints == std::vector<std::int64_t>{10, 100, 1000});
  CHECK_FALSE(a.checkpoint_ratio.has_value());

  const RunConfig b = parse_config(json::parse(R"({"checkpoints": {"ratio": 2.0}})"));
  CHECK(b.checkpoints.empty());
  CHECK(b.checkpoint_ratio == 2.0);
}

TEST_CASE("a custom model accepts an explicit null declared death limit") {
  const RunConfig cfg = parse_config(json::parse(
      R"({"model": {"b_tail": {"kind": "constant", "value": 1},
                    "d_tail": {"kind": "constant", "value": 1},
                    "d_star": null}})"));
  CHECK_FALSE(cfg.model.d_star.has_value());
  const RunConfig with = parse_config(json::parse(
      R"({"model": {"b_tail": {"kind": "constant", "value": 1},
                    "d_tail": {"kind": "constant", "value": 1},
                    "d_star": 1.0}})"));
  CHECK(with.model.d_star == 1.0);
}

TEST_CASE("canonical_config materializes every field") {
  const RunConfig cfg = parse_config(json::object());
  CHECK(cfg.seed == 1);
  CHECK(cfg.replicas == 1000);
  CHECK(cfg.steps == 100000);
  CHECK(cfg.engine == "discrete");

  const json c = canonical_config(cfg);
  CHECK(c.size() == 18);
  for (const char* key :
       {"model", "seed", "replicas", "steps", "until_events", "until_time",
        "checkpoints", "checkpoint_ratio", "hub_m", "grid_points", "threads",
        "target_surviving", "samples", "n_grid", "n_max", "engine", "out",
        "csv_out"}) {
    CHECK(c.contains(key));
  }
  CHECK(c.at("until_events").is_null());
  CHECK(c.at("checkpoint_ratio").is_null());
  CHECK(c.at("model").at("b_tail").is_null());

  RunConfig fam = cfg;
  fam.model.family = "pa_pure";
  const json cf = canonical_config(fam);
  CHECK(cf.at("model") == json{{"family", "pa_pure"}});
}

TEST_CASE("config_hash ignores output routing and threading only") {
  RunConfig base = parse_config(json::object());
  base.model.family = "pa_unit_death";
  RunConfig routed = base;
  routed.out = "report.json";
  routed.csv_out = "rows.csv";
  routed.threads = 16;
  CHECK(config_hash(base) == config_hash(routed));

  RunConfig reseeded = base;
  reseeded.seed = 2;
  CHECK(config_hash(base) != config_hash(reseeded));
  RunConfig remodeled = base;
  remodeled.model.family = "ua_pure";
  CHECK(config_hash(base) != config_hash(remodeled));

  const std::string hex = config_hash_hex(base);
  CHECK(hex.size() >= 1);
  CHECK(hex.size() <= 16);
  CHECK(hex.find_first_not_of("0123456789abcdef") == std::string::npos);
  std::ostringstream os;
  os << std::hex << config_hash(base);
  CHECK(hex == os.str());
}

TEST_CASE("load_config_file reports I/O and syntax problems distinctly") {
  CHECK_THROWS_AS(load_config_file("/tmp/pavd_no_such_config_file.json"), IoError);

  const std::string bad_path = "/tmp/pavd_test_bad_config.json";
  {
    std::ofstream out(bad_path);
    out << "{ this is not json";
  }
  CHECK_THROWS_AS(load_config_file(bad_path), SchemaError);
  std::remove(bad_path.c_str());

  const std::string good_path = "/tmp/pavd_test_good_config.json";
  RunConfig cfg = parse_config(json::object());
  cfg.model.family = "ua_geom_death";
  cfg.seed = 77;
  cfg.checkpoint_ratio = 2.5;
  {
    std::ofstream out(good_path);
    out << R"({"model": {"family": "ua_geom_death"},
               "seed": 77,
               "checkpoints": {"ratio": 2.5}})";
  }
  const RunConfig loaded = load_config_file(good_path);
  CHECK(canonical_config(loaded).dump() == canonical_config(cfg).dump());
  std::remove(good_path.c_str());
}

TEST_CASE("derive_stream is reproducible and index-separated") {
  Rng a = derive_stream(42, 7);
  Rng b = derive_stream(42, 7);
  for (int i = 0; i < 8; ++i) CHECK(a.next_u64() == b.next_u64());

  CHECK(derive_stream(42, 7).next_u64() != derive_stream(42, 8).next_u64());
  CHECK(derive_stream(42, 7).next_u64() != derive_stream(43, 7).next_u64());

  Rng c = derive_stream(1, 0);
  for (int i = 0; i < 100; ++i) {
    const double u = c.u01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 100; ++i) {
    const double e = c.expo(2.0);
    CHECK(e >= 0.0);
    CHECK(std::isfinite(e));
  }
  for (int i = 0; i < 100; ++i) CHECK(c.below(13) < 13);
}

TEST_CASE("format_double pins the sentinel spellings and round trips") {
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(1.5) == "1.5");
  CHECK(format_double(0.0) == "0");
  // strtod rather than stod: stod throws out_of_range on subnormals.
  for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, -2.718281828459045, 42.0}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("discrete CSV layout is fixed") {
  Rng rng = derive_stream(5, 0);
  std::vector<Trajectory> runs;
  runs.push_back(run_discrete(make_builtin("pa_pure"), 10, {5, 10}, 2, rng));
  runs.push_back(run_discrete(make_builtin("pa_pure"), 10, {5, 10}, 2, rng));

  std::ostringstream os;
  write_discrete_csv(os, runs, 2);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "replica,n,O_n,I1,I2,maxdeg,alive,survived");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    const auto f = fields_of(line);
    REQUIRE(f.size() == 8);
    ++rows;
    CHECK((f[0] == "0" || f[0] == "1"));
    CHECK(f[7] == "1");  // pure birth always survives
  }
  CHECK(rows == 4);  // two replicas x two checkpoints
}

TEST_CASE("continuous CSV layout is fixed and uses nan sentinels") {
  Rng rng = derive_stream(6, 0);
  RunCtbpSpec spec;
  spec.mode = RunCtbpSpec::Mode::UntilEvents;
  spec.target_events = 6;
  spec.grid_points = 4;
  spec.hub_m = 2;
  spec.lambda_star = 2.0;
  std::vector<ContTrajectory> runs;
  runs.push_back(run_ctbp(make_builtin("pa_pure"), spec, rng));

  std::ostringstream os;
  write_ctbp_csv(os, runs, 2);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "replica,t,n,O_cont,I1_cont,I2_cont,Za,Zb,W_hat");
  std::size_t rows = 0;
  bool saw_nan = false;
  while (std::getline(is, line)) {
    const auto f = fields_of(line);
    REQUIRE(f.size() == 9);
    ++rows;
    for (const std::string& cell : f) saw_nan = saw_nan || cell == "nan";
  }
  CHECK(rows == 4);
  // The t = 0 row has one alive individual, so the rank-2 hub is undefined.
  CHECK(saw_nan);
}

TEST_CASE("report envelope and run metadata have the pinned shape") {
  RunConfig cfg = parse_config(json::object());
  cfg.model.family = "pa_pure";
  cfg.seed = 99;
  json env = report_envelope(cfg, "analyze");
  CHECK(env.at("schema_version") == 1);
  CHECK(env.at("kind") == "analyze");
  CHECK(env.at("seed") == 99);
  CHECK(env.at("config_hash") == config_hash_hex(cfg));
  CHECK(env.at("config") == canonical_config(cfg));
  CHECK(env.at("build").is_string());
  CHECK_FALSE(env.contains("run_meta"));

  attach_run_meta(env, 1.25);
  REQUIRE(env.contains("run_meta"));
  CHECK(env.at("run_meta").size() == 2);
  CHECK(env.at("run_meta").at("runtime_seconds") == 1.25);
  const std::string ts = env.at("run_meta").at("timestamp");
  CHECK(ts.size() == 20);
  CHECK(ts.back() == 'Z');
  CHECK(ts[4] == '-');
  CHECK(ts[10] == 'T');
}

TEST_CASE("write_report round trips through a file and signals I/O errors") {
  RunConfig cfg = parse_config(json::object());
  cfg.model.family = "ua_pure";
  json env = report_envelope(cfg, "simulate-discrete");
  env["result"] = json{{"rows", json::array()}};

  const std::string path = "/tmp/pavd_test_report.json";
  write_report(env, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  CHECK(text.back() == '\n');
  CHECK(json::parse(text) == env);
  std::remove(path.c_str());

  CHECK_THROWS_AS(write_report(env, "/tmp/pavd_no_such_dir/x.json"), IoError);
}

}  // TEST_SUITE
