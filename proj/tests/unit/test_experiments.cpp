#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qvoter/config.hpp"
#include "qvoter/experiments.hpp"

using namespace qvoter;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("qvoter_unit_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

RunRecord run_with(nlohmann::json raw, const std::filesystem::path& out, unsigned threads) {
  raw["out"] = out.string();
  raw["threads"] = threads;
  return run_experiment(validate_config(raw));
}

}  // namespace

TEST_CASE("cross-section of the all-ones configuration") {
  const TorusLattice lat(5, nearest_neighbor_offsets());
  const Configuration ones(lat, true);
  for (char axis : {'x', 'y', 'z'}) {
    std::ostringstream os;
    snapshot_cross_section(os, ones, axis, 2, SnapshotHeader{5, 0.0, 1.0, 1});
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("L=5", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) {
      CHECK(line == "11111");
      ++rows;
    }
    CHECK(rows == 5);
    const auto s = slice_stats(ones, axis, 2);
    CHECK(s.sites == 25);
    CHECK(s.majority_share == 1.0);
  }
  CHECK_THROWS_AS(slice_stats(ones, 'w', 0), std::invalid_argument);
  CHECK_THROWS_AS(slice_stats(ones, 'z', 5), std::invalid_argument);
}

TEST_CASE("cross-section axis convention") {
  const TorusLattice lat(4, nearest_neighbor_offsets());
  Configuration c(lat);
  c.set(lat.index({1, 2, 3}), true);
  auto rows_of = [&](char axis, int level) {
    std::ostringstream os;
    snapshot_cross_section(os, c, axis, level, SnapshotHeader{4, 0.0, 1.0, 0});
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    return rows;
  };
  CHECK(rows_of('z', 3)[2][1] == '1');
  CHECK(rows_of('x', 1)[3][2] == '1');
  CHECK(rows_of('y', 2)[3][1] == '1');
  CHECK(slice_stats(c, 'z', 0).ones == 0);
}

TEST_CASE("product measure slice passes a binomial check") {
  const TorusLattice lat(40, nearest_neighbor_offsets());
  Engine rng(8);
  Configuration c(lat);
  set_product_measure(c, 0.5, rng);
  const auto s = slice_stats(c, 'z', 17);
  CHECK(s.sites == 1600);
  CHECK(std::abs(static_cast<double>(s.ones) - 800.0) <= 4 * std::sqrt(400.0));
}

TEST_CASE("q > 1 coarsens a slice toward one opinion") {
  const TorusLattice lat(16, nearest_neighbor_offsets());
  Engine rng(3);
  Configuration c(lat);
  set_product_measure(c, 0.5, rng);
  const Trajectory t = run(c, QVoterParams::direct(1.1), 3000.0, rng, 3000.0);
  const auto s = slice_stats(t.terminal, 'z', 8);
  CHECK(s.majority_share > 0.9);
}

TEST_CASE("outputs are byte-identical across thread counts and re-runs") {
  const nlohmann::json raw = {{"kind", "persistence"}, {"sizes", {6, 8}}, {"replicates", 4}, {"t_max", 30.0}};
  const auto a = run_with(raw, scratch("a"), 1);
  const auto b = run_with(raw, scratch("b"), 3);
  const auto c = run_with(raw, scratch("a"), 1);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    CHECK(a.files[i].name == b.files[i].name);
    CHECK(a.files[i].hash == b.files[i].hash);
    CHECK(a.files[i].hash == c.files[i].hash);
  }
}

TEST_CASE("metadata records the config, version and file hashes") {
  const auto dir = scratch("meta");
  const nlohmann::json raw = {{"kind", "greens"}, {"replicates", 200}};
  const auto rec = run_with(raw, dir, 1);
  std::ifstream in(dir / "metadata.json");
  REQUIRE(in.good());
  const auto meta = nlohmann::json::parse(in);
  CHECK(meta["version"] == version_string());
  CHECK(meta["config"]["kind"] == "greens");
  // The returned record also carries the hash of metadata.json itself.
  CHECK(meta["files"].size() + 1 == rec.files.size());
  CHECK(rec.files.back().name == "metadata.json");
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  CHECK(std::filesystem::exists(dir / "greens.csv"));
}
