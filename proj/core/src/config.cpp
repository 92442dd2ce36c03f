/**
 * Strict JSON configuration parsing, the canonical form, and its hash.
 */

#include "pavd/config.hpp"

#include <fstream>
#include <sstream>

#include "pavd/errors.hpp"

namespace pavd {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw SchemaError("config field '" + path + "': " + what);
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw SchemaError("config field '" + path + item.key() + "': unknown field");
    }
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    bad(path, "expected an integer");
  }
  return j.get<std::int64_t>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_number_array(const json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

TailConfig parse_tail(const json& j, const std::string& path) {
  expect_object(j, path);
  TailConfig t;
  t.kind = j.contains("kind") ? as_string(j.at("kind"), path + ".kind") : "";
  if (t.kind == "constant") {
    reject_unknown(j, path + ".", {"kind", "value"});
    if (!j.contains("value")) bad(path, "constant tail requires 'value'");
    t.value = as_number(j.at("value"), path + ".value");
  } else if (t.kind == "affine") {
    reject_unknown(j, path + ".", {"kind", "intercept", "slope"});
    if (!j.contains("intercept") || !j.contains("slope")) {
      bad(path, "affine tail requires 'intercept' and 'slope'");
    }
    t.intercept = as_number(j.at("intercept"), path + ".intercept");
    t.slope = as_number(j.at("slope"), path + ".slope");
  } else if (t.kind == "geometric") {
    reject_unknown(j, path + ".", {"kind", "amplitude", "ratio"});
    if (!j.contains("amplitude") || !j.contains("ratio")) {
      bad(path, "geometric tail requires 'amplitude' and 'ratio'");
    }
    t.amplitude = as_number(j.at("amplitude"), path + ".amplitude");
    t.ratio = as_number(j.at("ratio"), path + ".ratio");
  } else {
    bad(path + ".kind", "expected 'constant', 'affine', or 'geometric'");
  }
  return t;
}

ModelConfig parse_model(const json& j, const std::string& path) {
  expect_object(j, path);
  ModelConfig mc;
  if (j.contains("family")) {
    reject_unknown(j, path + ".", {"family"});
    mc.family = as_string(j.at("family"), path + ".family");
    return mc;
  }
  reject_unknown(j, path + ".",
                 {"name", "b_table", "d_table", "b_tail", "d_tail", "d_star"});
  if (j.contains("name")) mc.name = as_string(j.at("name"), path + ".name");
  if (j.contains("b_table")) {
    mc.b_table = as_number_array(j.at("b_table"), path + ".b_table");
  }
  if (j.contains("d_table")) {
    mc.d_table = as_number_array(j.at("d_table"), path + ".d_table");
  }
  if (j.contains("b_tail")) mc.b_tail = parse_tail(j.at("b_tail"), path + ".b_tail");
  if (j.contains("d_tail")) mc.d_tail = parse_tail(j.at("d_tail"), path + ".d_tail");
  if (j.contains("d_star") && !j.at("d_star").is_null()) {
    mc.d_star = as_number(j.at("d_star"), path + ".d_star");
  }
  if (!mc.b_tail) bad(path + ".b_tail", "custom models must declare a birth tail");
  if (!mc.d_tail) bad(path + ".d_tail", "custom models must declare a death tail");
  return mc;
}

RateSequence make_sequence(const std::vector<double>& table, const TailConfig& tail,
                           const std::string& path) {
  if (tail.kind == "constant") {
    return RateSequence::table_then_constant(table, tail.value);
  }
  if (tail.kind == "affine") {
    return RateSequence::table_then_affine(table, tail.intercept, tail.slope);
  }
  // geometric
  if (!table.empty()) {
    throw SchemaError("config field '" + path +
                      "': a geometric tail does not take a head table");
  }
  return RateSequence::geometric(tail.amplitude, tail.ratio);
}

json tail_to_json(const TailConfig& t) {
  json j;
  j["kind"] = t.kind;
  if (t.kind == "constant") {
    j["value"] = t.value;
  } else if (t.kind == "affine") {
    j["intercept"] = t.intercept;
    j["slope"] = t.slope;
  } else {
    j["amplitude"] = t.amplitude;
    j["ratio"] = t.ratio;
  }
  return j;
}

}  // namespace

RateModel make_model(const ModelConfig& mc) {
  if (mc.family) return make_builtin(*mc.family);
  const RateSequence birth = make_sequence(mc.b_table, *mc.b_tail, "model.b_tail");
  const RateSequence death = make_sequence(mc.d_table, *mc.d_tail, "model.d_tail");
  return RateModel(birth, death, mc.d_star, mc.name);
}

RunConfig parse_config(const nlohmann::json& j) {
  expect_object(j, "(root)");
  reject_unknown(j, "",
                 {"model", "seed", "replicas", "steps", "until_events",
                  "until_time", "checkpoints", "hub_m", "grid_points", "threads",
                  "target_surviving", "samples", "n_grid", "n_max", "engine",
                  "out", "csv_out"});
  RunConfig cfg;
  if (j.contains("model")) cfg.model = parse_model(j.at("model"), "model");
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_integer() && !s.is_number_unsigned()) {
      bad("seed", "expected an integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("replicas")) cfg.replicas = as_integer(j.at("replicas"), "replicas");
  if (j.contains("steps")) cfg.steps = as_integer(j.at("steps"), "steps");
  if (j.contains("until_events")) {
    cfg.until_events = as_integer(j.at("until_events"), "until_events");
  }
  if (j.contains("until_time")) {
    cfg.until_time = as_number(j.at("until_time"), "until_time");
  }
  if (j.contains("checkpoints")) {
    const json& c = j.at("checkpoints");
    if (c.is_array()) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        cfg.checkpoints.push_back(
            as_integer(c[i], "checkpoints[" + std::to_string(i) + "]"));
      }
    } else if (c.is_object()) {
      reject_unknown(c, "checkpoints.", {"ratio"});
      if (!c.contains("ratio")) bad("checkpoints", "object form requires 'ratio'");
      cfg.checkpoint_ratio = as_number(c.at("ratio"), "checkpoints.ratio");
      if (*cfg.checkpoint_ratio <= 1.0) {
        bad("checkpoints.ratio", "must be > 1");
      }
    } else {
      bad("checkpoints", "expected an array or {\"ratio\": r}");
    }
  }
  if (j.contains("hub_m")) {
    cfg.hub_m = static_cast<int>(as_integer(j.at("hub_m"), "hub_m"));
  }
  if (j.contains("grid_points")) {
    cfg.grid_points = static_cast<int>(as_integer(j.at("grid_points"), "grid_points"));
  }
  if (j.contains("threads")) {
    cfg.threads = static_cast<int>(as_integer(j.at("threads"), "threads"));
  }
  if (j.contains("target_surviving")) {
    cfg.target_surviving = as_integer(j.at("target_surviving"), "target_surviving");
  }
  if (j.contains("samples")) cfg.samples = as_integer(j.at("samples"), "samples");
  if (j.contains("n_grid")) {
    const json& g = j.at("n_grid");
    if (!g.is_array()) bad("n_grid", "expected an array of integers");
    for (std::size_t i = 0; i < g.size(); ++i) {
      cfg.n_grid.push_back(as_integer(g[i], "n_grid[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("n_max")) cfg.n_max = as_integer(j.at("n_max"), "n_max");
  if (j.contains("engine")) cfg.engine = as_string(j.at("engine"), "engine");
  if (j.contains("out")) cfg.out = as_string(j.at("out"), "out");
  if (j.contains("csv_out")) cfg.csv_out = as_string(j.at("csv_out"), "csv_out");

  if (cfg.replicas < 0) bad("replicas", "must be >= 0");
  if (cfg.steps < 0) bad("steps", "must be >= 0");
  if (cfg.hub_m < 1) bad("hub_m", "must be >= 1");
  if (cfg.threads < 0) bad("threads", "must be >= 0");
  if (cfg.engine != "discrete" && cfg.engine != "gillespie") {
    bad("engine", "expected 'discrete' or 'gillespie'");
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError("config file '" + path + "': " + e.what());
  }
  return parse_config(j);
}

nlohmann::json canonical_config(const RunConfig& cfg) {
  json j;
  json m;
  if (cfg.model.family) {
    m["family"] = *cfg.model.family;
  } else {
    m["name"] = cfg.model.name;
    m["b_table"] = cfg.model.b_table;
    m["d_table"] = cfg.model.d_table;
    m["b_tail"] = cfg.model.b_tail ? tail_to_json(*cfg.model.b_tail) : json();
    m["d_tail"] = cfg.model.d_tail ? tail_to_json(*cfg.model.d_tail) : json();
    m["d_star"] = cfg.model.d_star ? json(*cfg.model.d_star) : json();
  }
  j["model"] = m;
  j["seed"] = cfg.seed;
  j["replicas"] = cfg.replicas;
  j["steps"] = cfg.steps;
  j["until_events"] = cfg.until_events ? json(*cfg.until_events) : json();
  j["until_time"] = cfg.until_time ? json(*cfg.until_time) : json();
  j["checkpoints"] = cfg.checkpoints;
  j["checkpoint_ratio"] = cfg.checkpoint_ratio ? json(*cfg.checkpoint_ratio) : json();
  j["hub_m"] = cfg.hub_m;
  j["grid_points"] = cfg.grid_points;
  j["threads"] = cfg.threads;
  j["target_surviving"] = cfg.target_surviving;
  j["samples"] = cfg.samples;
  j["n_grid"] = cfg.n_grid;
  j["n_max"] = cfg.n_max;
  j["engine"] = cfg.engine;
  j["out"] = cfg.out;
  j["csv_out"] = cfg.csv_out;
  return j;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  json j = canonical_config(cfg);
  j.erase("out");
  j.erase("csv_out");
  j.erase("threads");
  const std::string dump = j.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
  std::ostringstream os;
  os << std::hex << config_hash(cfg);
  return os.str();
}

}  // namespace pavd
