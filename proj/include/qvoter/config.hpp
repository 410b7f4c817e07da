#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qvoter/lattice.hpp"

namespace qvoter {

enum class ExperimentKind {
  persistence,
  extinction,
  duality_check,
  reaction_term,
  ode_compare,
  box_clt,
  greens,
  snapshot
};

std::string_view kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);
std::vector<std::string> kind_names();

/// Effective experiment settings after defaults. `echo` holds every key with
/// its effective value and is written verbatim into metadata.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::persistence;
  int side = 20;
  std::vector<int> sizes;
  std::vector<Vec3> offsets;
  std::string model = "direct";
  double q = 0.9;
  double epsilon = 0.0;
  std::string regime = "qlt1";
  double u0 = 0.5;
  double t_max = 100.0;
  double sample_dt = 1.0;
  double transient_fraction = 0.5;
  double band = 0.1;
  std::uint64_t replicates = 20;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out = "out";
  std::vector<int> box_r;
  double lambda = 0.5;
  double burn = 0.0;
  std::vector<Site> set_a;
  std::vector<Site> set_b;
  double t = 1.0;
  std::int64_t x = 10;
  std::int64_t z = 100;
  std::string rate = "linear";
  std::uint64_t fate_replicates = 100000;
  double t_trunc = 1000.0;
  std::string fates_file;
  bool truncation_check = false;
  double t0 = 2.0;
  double epsilon_exponent = 0.0;
  char axis = 'z';
  int level = -1;

  nlohmann::json echo;
};

/// Every problem found in a config, reported together.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses JSON text, applies defaults and validates. Throws ConfigError
/// listing unknown keys, type mismatches and constraint violations.
ExperimentConfig validate_config(std::string_view text);
ExperimentConfig validate_config(const nlohmann::json& raw);

/// The documented key set.
const std::vector<std::string>& config_keys();

}  // namespace qvoter
