#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "qvoter/config.hpp"
#include "qvoter/dynamics.hpp"
#include "qvoter/lattice.hpp"

namespace qvoter {

std::string version_string();

struct OutputFile {
  std::string name;
  std::uint64_t hash = 0;
};

struct RunRecord {
  nlohmann::json config;
  std::string version;
  std::vector<OutputFile> files;
  /// Human-readable result lines, also written to summary.txt.
  std::vector<std::string> summary;
  /// Kept in memory only; output files never contain timing.
  double wall_seconds = 0.0;
};

/// Runs one experiment and writes its CSVs, summary.txt and metadata.json
/// into config.out. Throws std::runtime_error if the directory cannot be
/// written.
RunRecord run_experiment(const ExperimentConfig& config);

/// Flip-rate law described by the config for neighborhood size k.
QVoterParams model_params(const ExperimentConfig& config, int k);

/// Writes the L x L slice at `level` along `axis` ('x', 'y' or 'z') in the
/// snapshot text format: header line, then one row of '0'/'1' per line.
/// For axis z rows run over y and columns over x; for x, rows over z and
/// columns over y; for y, rows over z and columns over x.
void snapshot_cross_section(std::ostream& out, const Configuration& config, char axis, int level,
                            const SnapshotHeader& header);

struct SliceStats {
  std::uint64_t ones = 0;
  std::uint64_t sites = 0;
  double density = 0.0;
  /// Share held by the more common opinion.
  double majority_share = 0.0;
};

SliceStats slice_stats(const Configuration& config, char axis, int level);

}  // namespace qvoter
