#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qvoter/config.hpp"
#include "qvoter/experiments.hpp"

namespace {

using nlohmann::json;

// Accepts "1e6" as well as "1000000".
std::optional<std::int64_t> parse_count(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || v < 0 || v != std::floor(v) || v > 9.0e15) return std::nullopt;
    return static_cast<std::int64_t>(v);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

struct Common {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  std::string replicates;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("config", c.config_path, "JSON config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed");
  cmd->add_option("--threads", c.threads, "worker threads");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--replicates", c.replicates, "replicate count (1e6 style accepted)");
  cmd->add_option("--set", c.sets, "override any config key, key=value (value parsed as JSON)");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw qvoter::ConfigError({"cannot read config file " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    auto v = json::parse(text);
    if (!v.is_object()) throw qvoter::ConfigError({"config must be a JSON object"});
    return v;
  } catch (const json::parse_error& e) {
    // Delegate to the validator for its empty-file and syntax messages.
    qvoter::validate_config(std::string_view(text));
    throw qvoter::ConfigError({std::string("malformed JSON: ") + e.what()});
  }
}

// Fills in the config for one invocation: file, then kind, then flags.
json assemble(const Common& c, const std::string& kind, const std::string& replicate_key,
              const std::map<std::string, json>& flags) {
  json raw = load_config(c.config_path);
  if (!kind.empty()) {
    if (raw.contains("kind") && raw["kind"] != kind) {
      throw qvoter::ConfigError({"config kind '" + raw["kind"].dump() + "' does not match subcommand " + kind});
    }
    raw["kind"] = kind;
  }
  for (const auto& [k, v] : flags) raw[k] = v;
  if (c.seed) raw["seed"] = *c.seed;
  if (c.threads) raw["threads"] = *c.threads;
  if (!c.out.empty()) raw["out"] = c.out;
  if (!c.replicates.empty()) {
    const auto n = parse_count(c.replicates);
    if (!n) throw qvoter::ConfigError({"--replicates must be a non-negative integer, got '" + c.replicates + "'"});
    raw[replicate_key] = *n;
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw qvoter::ConfigError({"--set expects key=value, got '" + s + "'"});
    raw[s.substr(0, eq)] = parse_value(s.substr(eq + 1));
  }
  return raw;
}

int execute(const json& raw) {
  const auto start = std::chrono::steady_clock::now();
  const qvoter::ExperimentConfig config = qvoter::validate_config(raw);
  const qvoter::RunRecord rec = qvoter::run_experiment(config);
  for (const auto& line : rec.summary) std::cout << line << '\n';
  std::cout << "wrote " << rec.files.size() << " files to " << config.out << '\n';
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "wall clock " << secs << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-voter model and voter-perturbation experiments on the 3-d torus"};
  app.set_version_flag("--version", qvoter::version_string());
  app.require_subcommand(1);

  Common run_c;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
  add_common(run_cmd, run_c, true);

  Common reaction_c;
  int reaction_k = 6;
  std::optional<std::string> regime;
  std::optional<double> t_trunc;
  std::optional<std::string> fates_file;
  bool truncation = false;
  auto* reaction_cmd = app.add_subcommand("reaction", "coalescence fates and the reaction term");
  add_common(reaction_cmd, reaction_c, false);
  reaction_cmd->add_option("--k", reaction_k, "3 (positive axis offsets) or 6 (nearest neighbors)")
      ->check(CLI::IsMember({3, 6}));
  reaction_cmd->add_option("--regime", regime, "qlt1 or qgt1");
  reaction_cmd->add_option("--t-trunc", t_trunc, "walk truncation time");
  reaction_cmd->add_option("--fates", fates_file, "read fates from CSV instead of simulating");
  reaction_cmd->add_flag("--truncation-check", truncation, "compare fates at t and 2t");

  Common greens_c;
  std::optional<std::int64_t> gx;
  std::optional<std::int64_t> gz;
  std::optional<std::string> grate;
  auto* greens_cmd = app.add_subcommand("greens", "birth-death hitting time and its Green's function");
  add_common(greens_cmd, greens_c, false);
  greens_cmd->add_option("--x", gx, "start");
  greens_cmd->add_option("--z", gz, "upper barrier");
  greens_cmd->add_option("--rate", grate, "constant[:c], linear or power:p");

  Common duality_c;
  std::optional<int> dl;
  std::optional<double> dt;
  auto* duality_cmd = app.add_subcommand("duality", "forward versus dual estimate of the duality identity");
  add_common(duality_cmd, duality_c, false);
  duality_cmd->add_option("--L", dl, "torus side");
  duality_cmd->add_option("--t", dt, "time");

  struct Generic {
    std::string kind;
    Common c;
    std::optional<double> q;
    std::optional<int> side;
    std::optional<double> u0;
    std::optional<double> t_max;
    CLI::App* cmd = nullptr;
  };
  std::vector<Generic> generic(6);
  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"persistence", "density persistence near 1/2 for q < 1"},
      {"extinction", "absorption times for q > 1"},
      {"ode-compare", "particle density against the reaction ODE"},
      {"box-clt", "box-sum variance scaling under voter equilibrium"},
      {"snapshot", "long run and a 2-d cross-section"},
      {"reaction-term", "alias of reaction driven by a config"}};
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    auto& g = generic[i];
    g.kind = kinds[i].first;
    g.cmd = app.add_subcommand(g.kind, kinds[i].second);
    add_common(g.cmd, g.c, false);
    g.cmd->add_option("--q", g.q, "q");
    g.cmd->add_option("--L", g.side, "torus side");
    g.cmd->add_option("--u0", g.u0, "initial density");
    g.cmd->add_option("--t-max", g.t_max, "time horizon");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) return execute(assemble(run_c, "", "replicates", {}));
    if (reaction_cmd->parsed()) {
      std::map<std::string, json> f;
      f["offsets"] = reaction_k == 3 ? "positive" : "nearest";
      if (regime) f["regime"] = *regime;
      if (t_trunc) f["t_trunc"] = *t_trunc;
      if (fates_file) f["fates_file"] = *fates_file;
      if (truncation) f["truncation_check"] = true;
      return execute(assemble(reaction_c, "reaction-term", "fate_replicates", f));
    }
    if (greens_cmd->parsed()) {
      std::map<std::string, json> f;
      if (gx) f["x"] = *gx;
      if (gz) f["z"] = *gz;
      if (grate) f["rate"] = *grate;
      return execute(assemble(greens_c, "greens", "replicates", f));
    }
    if (duality_cmd->parsed()) {
      std::map<std::string, json> f;
      if (dl) f["L"] = *dl;
      if (dt) f["t"] = *dt;
      return execute(assemble(duality_c, "duality-check", "replicates", f));
    }
    for (auto& g : generic) {
      if (!g.cmd->parsed()) continue;
      std::map<std::string, json> f;
      if (g.q) f["q"] = *g.q;
      if (g.side) f["L"] = *g.side;
      if (g.u0) f["u0"] = *g.u0;
      if (g.t_max) f["t_max"] = *g.t_max;
      return execute(assemble(g.c, g.kind, g.kind == "reaction-term" ? "fate_replicates" : "replicates", f));
    }
  } catch (const qvoter::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
