#include "qvoter/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "qvoter/dynamics.hpp"
#include "qvoter/greens.hpp"
#include "qvoter/reaction.hpp"

namespace qvoter {

namespace {

const std::vector<std::pair<ExperimentKind, std::string_view>> kKinds = {
    {ExperimentKind::persistence, "persistence"},   {ExperimentKind::extinction, "extinction"},
    {ExperimentKind::duality_check, "duality-check"}, {ExperimentKind::reaction_term, "reaction-term"},
    {ExperimentKind::ode_compare, "ode-compare"},   {ExperimentKind::box_clt, "box-clt"},
    {ExperimentKind::greens, "greens"},             {ExperimentKind::snapshot, "snapshot"},
};

enum class Type { string, number, integer, boolean, integer_list, offsets };

const std::map<std::string, Type>& key_types() {
  static const std::map<std::string, Type> types = {
      {"kind", Type::string},
      {"L", Type::integer},
      {"sizes", Type::integer_list},
      {"offsets", Type::offsets},
      {"model", Type::string},
      {"q", Type::number},
      {"epsilon", Type::number},
      {"regime", Type::string},
      {"u0", Type::number},
      {"t_max", Type::number},
      {"sample_dt", Type::number},
      {"transient_fraction", Type::number},
      {"band", Type::number},
      {"replicates", Type::integer},
      {"seed", Type::integer},
      {"threads", Type::integer},
      {"out", Type::string},
      {"box_r", Type::integer_list},
      {"lambda", Type::number},
      {"burn", Type::number},
      {"A", Type::integer_list},
      {"B", Type::integer_list},
      {"t", Type::number},
      {"x", Type::integer},
      {"z", Type::integer},
      {"rate", Type::string},
      {"fate_replicates", Type::integer},
      {"t_trunc", Type::number},
      {"fates_file", Type::string},
      {"truncation_check", Type::boolean},
      {"t0", Type::number},
      {"epsilon_exponent", Type::number},
      {"axis", Type::string},
      {"level", Type::integer},
  };
  return types;
}

bool is_integral(const nlohmann::json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.2e18;
}

std::string type_name(Type t) {
  switch (t) {
    case Type::string:
      return "a string";
    case Type::number:
      return "a number";
    case Type::integer:
      return "an integer";
    case Type::boolean:
      return "a boolean";
    case Type::integer_list:
      return "a list of integers";
    case Type::offsets:
      return "\"nearest\", \"positive\" or a list of [x,y,z] offsets";
  }
  return {};
}

bool type_ok(const nlohmann::json& v, Type t) {
  switch (t) {
    case Type::string:
      return v.is_string();
    case Type::number:
      return v.is_number();
    case Type::integer:
      return is_integral(v);
    case Type::boolean:
      return v.is_boolean();
    case Type::integer_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), is_integral);
    case Type::offsets:
      if (v.is_string()) return v == "nearest" || v == "positive";
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const nlohmann::json& o) {
               return o.is_array() && o.size() == 3 && std::all_of(o.begin(), o.end(), is_integral);
             });
  }
  return false;
}

std::int64_t as_int(const nlohmann::json& v) {
  return v.is_number_integer() ? v.get<std::int64_t>() : static_cast<std::int64_t>(v.get<double>());
}

std::vector<Vec3> parse_offsets(const nlohmann::json& v) {
  if (v.is_string()) return v == "positive" ? positive_axis_offsets() : nearest_neighbor_offsets();
  std::vector<Vec3> out;
  for (const auto& o : v) {
    out.push_back(Vec3{static_cast<int>(as_int(o[0])), static_cast<int>(as_int(o[1])),
                       static_cast<int>(as_int(o[2]))});
  }
  return out;
}

nlohmann::json offsets_json(const std::vector<Vec3>& offsets) {
  auto arr = nlohmann::json::array();
  for (const auto& o : offsets) arr.push_back({o.x, o.y, o.z});
  return arr;
}

}  // namespace

std::string_view kind_name(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return {};
}

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKinds) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> kind_names() {
  std::vector<std::string> out;
  for (const auto& [k, name] : kKinds) out.emplace_back(name);
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, t] : key_types()) out.push_back(k);
    return out;
  }();
  return keys;
}

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string msg = "invalid config:";
  for (const auto& e : errors) msg += "\n  " + e;
  return msg;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

ExperimentConfig validate_config(std::string_view text) {
  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) throw ConfigError({"missing experiment kind (empty config)"});
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  return validate_config(raw);
}

ExperimentConfig validate_config(const nlohmann::json& raw) {
  std::vector<std::string> errors;
  if (!raw.is_object()) throw ConfigError({"config must be a JSON object"});

  const auto& types = key_types();
  std::map<std::string, nlohmann::json> given;
  for (const auto& [key, value] : raw.items()) {
    const auto it = types.find(key);
    if (it == types.end()) {
      errors.push_back("unknown key '" + key + "'");
      continue;
    }
    if (!type_ok(value, it->second)) {
      errors.push_back("key '" + key + "' must be " + type_name(it->second));
      continue;
    }
    given[key] = value;
  }

  ExperimentConfig c;
  if (!given.count("kind")) {
    errors.push_back("missing experiment kind");
    throw ConfigError(errors);
  }
  const auto kind = parse_kind(given["kind"].get<std::string>());
  if (!kind) {
    std::string list;
    for (const auto& n : kind_names()) list += (list.empty() ? "" : ", ") + n;
    errors.push_back("unknown experiment kind '" + given["kind"].get<std::string>() + "' (one of " + list + ")");
    throw ConfigError(errors);
  }
  c.kind = *kind;

  auto has = [&](const char* key) { return given.count(key) != 0; };
  auto num = [&](const char* key, double fallback) { return has(key) ? given[key].get<double>() : fallback; };
  auto integer = [&](const char* key, std::int64_t fallback) { return has(key) ? as_int(given[key]) : fallback; };
  auto str = [&](const char* key, std::string fallback) {
    return has(key) ? given[key].get<std::string>() : fallback;
  };
  auto ints = [&](const char* key, std::vector<std::int64_t> fallback) {
    if (!has(key)) return fallback;
    std::vector<std::int64_t> out;
    for (const auto& v : given[key]) out.push_back(as_int(v));
    return out;
  };

  // Kind-specific defaults.
  int default_side = 20;
  std::vector<std::int64_t> default_sizes;
  double default_q = 0.9;
  double default_u0 = 0.5;
  std::uint64_t default_reps = 20;
  switch (c.kind) {
    case ExperimentKind::persistence:
      default_sizes = {16, 20, 26};
      break;
    case ExperimentKind::extinction:
      default_sizes = {16, 20, 26};
      default_q = 1.1;
      break;
    case ExperimentKind::duality_check:
      default_side = 3;
      default_reps = 100000;
      break;
    case ExperimentKind::reaction_term:
      break;
    case ExperimentKind::ode_compare:
      default_sizes = {10, 16, 22};
      default_u0 = 0.25;
      break;
    case ExperimentKind::box_clt:
      default_side = 64;
      default_reps = 10;
      break;
    case ExperimentKind::greens:
      default_reps = 100000;
      break;
    case ExperimentKind::snapshot:
      default_side = 100;
      default_reps = 1;
      break;
  }

  c.side = static_cast<int>(integer("L", default_side));
  for (auto s : ints("sizes", default_sizes)) c.sizes.push_back(static_cast<int>(s));
  c.offsets = has("offsets") ? parse_offsets(given["offsets"]) : nearest_neighbor_offsets();
  c.model = str("model", "direct");
  c.q = num("q", default_q);
  c.epsilon = num("epsilon", 0.0);
  c.regime = str("regime", c.kind == ExperimentKind::extinction ? "qgt1" : "qlt1");
  c.u0 = num("u0", default_u0);
  c.sample_dt = num("sample_dt", 1.0);
  c.transient_fraction = num("transient_fraction", 0.5);
  c.band = num("band", 0.1);
  const std::int64_t reps = integer("replicates", static_cast<std::int64_t>(default_reps));
  const std::int64_t seed = integer("seed", 1);
  const std::int64_t threads = integer("threads", 1);
  c.out = str("out", "out");
  for (auto r : ints("box_r", {4, 8, 16})) c.box_r.push_back(static_cast<int>(r));
  c.lambda = num("lambda", c.u0);
  c.burn = num("burn", static_cast<double>(c.side) * c.side);
  for (auto s : ints("A", {0, 1})) c.set_a.push_back(static_cast<Site>(std::max<std::int64_t>(s, 0)));
  for (auto s : ints("B", {13, 14})) c.set_b.push_back(static_cast<Site>(std::max<std::int64_t>(s, 0)));
  c.t = num("t", 1.0);
  c.x = integer("x", 10);
  c.z = integer("z", 100);
  c.rate = str("rate", "linear");
  const std::int64_t fate_reps = integer("fate_replicates", 100000);
  c.t_trunc = num("t_trunc", 1000.0);
  c.fates_file = str("fates_file", "");
  c.truncation_check = has("truncation_check") ? given["truncation_check"].get<bool>() : false;
  c.t0 = num("t0", 2.0);
  c.epsilon_exponent = num("epsilon_exponent", c.kind == ExperimentKind::ode_compare ? 0.8 : 0.0);
  const std::string axis = str("axis", "z");
  c.level = static_cast<int>(integer("level", c.side / 2));

  // t_max depends on the kind: persistence runs 50/|1-q|, extinction 50 n per lattice.
  double default_t_max = 100.0;
  if (c.kind == ExperimentKind::persistence && c.q != 1.0) default_t_max = 50.0 / std::abs(1.0 - c.q);
  c.t_max = num("t_max", c.kind == ExperimentKind::extinction ? 0.0 : default_t_max);

  // Constraints.
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  check(c.side >= 2, "L must be at least 2");
  for (int s : c.sizes) check(s >= 2, "every entry of sizes must be at least 2");
  const bool multi = c.kind == ExperimentKind::persistence || c.kind == ExperimentKind::extinction ||
                     c.kind == ExperimentKind::ode_compare;
  if (multi) check(!c.sizes.empty(), "sizes must not be empty");
  try {
    TorusLattice probe(std::max(c.side, 2), c.offsets);
  } catch (const std::exception& e) {
    errors.push_back(std::string("offsets: ") + e.what());
  }
  check(c.model == "direct" || c.model == "perturbation", "model must be \"direct\" or \"perturbation\"");
  check(c.q > 0.0, "q must be positive");
  check(c.regime == "qlt1" || c.regime == "qgt1", "regime must be \"qlt1\" or \"qgt1\"");
  check(c.u0 >= 0.0 && c.u0 <= 1.0, "u0 must lie in [0,1]");
  check(c.sample_dt > 0.0, "sample_dt must be positive");
  check(c.transient_fraction >= 0.0 && c.transient_fraction < 1.0, "transient_fraction must lie in [0,1)");
  check(c.band > 0.0, "band must be positive");
  check(reps >= 1, "replicates must be at least 1");
  check(seed >= 0, "seed must be non-negative");
  check(threads >= 1 && threads <= 1024, "threads must lie in [1,1024]");
  check(!c.out.empty(), "out must not be empty");
  check(fate_reps >= 1, "fate_replicates must be at least 1");
  check(c.t_trunc >= 0.0, "t_trunc must be non-negative");
  check(axis == "x" || axis == "y" || axis == "z", "axis must be \"x\", \"y\" or \"z\"");
  if (c.kind != ExperimentKind::extinction) check(c.t_max > 0.0, "t_max must be positive");
  if (has("t_max") && c.kind == ExperimentKind::extinction) check(c.t_max > 0.0, "t_max must be positive");
  if (c.model == "perturbation") {
    check(c.epsilon >= 0.0, "epsilon must be non-negative");
    try {
      const int k = static_cast<int>(c.offsets.size());
      QVoterParams::perturbation(c.epsilon, perturbation_rates(k, c.regime == "qgt1" ? Regime::q_above_one
                                                                                      : Regime::q_below_one));
    } catch (const std::exception& e) {
      errors.push_back(std::string("perturbation model: ") + e.what());
    }
  }
  switch (c.kind) {
    case ExperimentKind::box_clt: {
      std::set<int> distinct(c.box_r.begin(), c.box_r.end());
      check(distinct.size() >= 3, "box_r needs at least three distinct values");
      for (int r : c.box_r) {
        if (r < 1 || c.side % r != 0) {
          errors.push_back("r must divide L (r=" + std::to_string(r) + ", L=" + std::to_string(c.side) + ")");
        }
      }
      check(c.lambda > 0.0 && c.lambda < 1.0, "lambda must lie in (0,1)");
      check(c.u0 > 0.0 && c.u0 < 1.0, "u0 must lie in (0,1) for box-clt");
      check(c.burn >= 0.0, "burn must be non-negative");
      break;
    }
    case ExperimentKind::duality_check: {
      const std::int64_t n = static_cast<std::int64_t>(c.side) * c.side * c.side;
      check(!c.set_a.empty() && !c.set_b.empty(), "A and B must be nonempty");
      for (auto s : ints("A", {0, 1})) check(s >= 0 && s < n, "site " + std::to_string(s) + " in A out of range");
      for (auto s : ints("B", {13, 14})) check(s >= 0 && s < n, "site " + std::to_string(s) + " in B out of range");
      check(c.t >= 0.0, "t must be non-negative");
      break;
    }
    case ExperimentKind::greens:
      check(c.x > 0 && c.x < c.z, "need 0 < x < z");
      try {
        RateFunction::parse(c.rate);
      } catch (const std::exception& e) {
        errors.push_back(e.what());
      }
      break;
    case ExperimentKind::snapshot:
      check(c.level >= 0 && c.level < c.side, "level must lie in [0, L)");
      break;
    case ExperimentKind::ode_compare:
      check(c.epsilon_exponent > 0.0, "epsilon_exponent must be positive");
      check(c.t0 > 0.0, "t0 must be positive");
      check(c.u0 > 0.0 && c.u0 < 1.0, "u0 must lie in (0,1) for ode-compare");
      break;
    case ExperimentKind::reaction_term:
      check(c.offsets.size() <= 12, "reaction-term supports at most 12 offsets");
      break;
    default:
      break;
  }
  if (!errors.empty()) throw ConfigError(errors);

  c.replicates = static_cast<std::uint64_t>(reps);
  c.seed = static_cast<std::uint64_t>(seed);
  c.threads = static_cast<unsigned>(threads);
  c.fate_replicates = static_cast<std::uint64_t>(fate_reps);
  c.axis = axis[0];

  // Every key that can affect results; threads and out cannot.
  auto& e = c.echo;
  e["kind"] = std::string(kind_name(c.kind));
  e["L"] = c.side;
  e["sizes"] = c.sizes;
  e["offsets"] = offsets_json(c.offsets);
  e["model"] = c.model;
  e["q"] = c.q;
  e["epsilon"] = c.epsilon;
  e["regime"] = c.regime;
  e["u0"] = c.u0;
  e["t_max"] = c.t_max;
  e["sample_dt"] = c.sample_dt;
  e["transient_fraction"] = c.transient_fraction;
  e["band"] = c.band;
  e["replicates"] = c.replicates;
  e["seed"] = c.seed;
  e["box_r"] = c.box_r;
  e["lambda"] = c.lambda;
  e["burn"] = c.burn;
  e["A"] = c.set_a;
  e["B"] = c.set_b;
  e["t"] = c.t;
  e["x"] = c.x;
  e["z"] = c.z;
  e["rate"] = c.rate;
  e["fate_replicates"] = c.fate_replicates;
  e["t_trunc"] = c.t_trunc;
  e["fates_file"] = c.fates_file;
  e["truncation_check"] = c.truncation_check;
  e["t0"] = c.t0;
  e["epsilon_exponent"] = c.epsilon_exponent;
  e["axis"] = std::string(1, c.axis);
  e["level"] = c.level;
  return c;
}

}  // namespace qvoter
