#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qvoter/rational.hpp"

namespace qvoter {

using Site = std::uint32_t;

struct Vec3 {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
  friend auto operator<=>(const Vec3&, const Vec3&) = default;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
};

std::string to_string(const Vec3& v);

/// The six offsets {±e1, ±e2, ±e3}.
std::vector<Vec3> nearest_neighbor_offsets();

/// The three offsets {e1, e2, e3}.
std::vector<Vec3> positive_axis_offsets();

/// Rank of the integer span of the offsets (0..3), by fraction-free
/// Gaussian elimination.
int integer_rank(std::span<const Vec3> offsets);

/// Periodic cube of side L with n = L^3 sites and a translation-invariant
/// neighborhood. Sites are indexed x-fastest: index = x + L*y + L*L*z.
///
/// The offsets must span a rank-3 lattice. Whether they generate all of Z^3
/// is not verified; callers needing irreducible walks must choose offsets
/// accordingly.
class TorusLattice {
 public:
  TorusLattice(int side, std::vector<Vec3> offsets);

  static TorusLattice nearest_neighbor(int side);

  int side() const { return side_; }
  std::size_t size() const { return size_; }
  int k() const { return static_cast<int>(offsets_.size()); }
  std::span<const Vec3> offsets() const { return offsets_; }

  /// True when the offset set is closed under negation, so that the neighbor
  /// relation is symmetric.
  bool symmetric() const { return symmetric_; }

  Vec3 coords(Site site) const;
  /// Index of the site at the given coordinates, reduced mod L.
  Site index(const Vec3& c) const;

  /// Neighbors of `site` in offset order. Throws std::out_of_range.
  std::span<const Site> neighbors(Site site) const;

  /// Sites y with `site` among neighbors(y), i.e. site - offset, in offset
  /// order.
  std::span<const Site> reverse_neighbors(Site site) const;

  // Unchecked row access for inner loops.
  const Site* neighbor_row(Site site) const {
    return table_.data() + static_cast<std::size_t>(site) * offsets_.size();
  }
  const Site* reverse_row(Site site) const {
    return reverse_.data() + static_cast<std::size_t>(site) * offsets_.size();
  }

  friend bool operator==(const TorusLattice& a, const TorusLattice& b) {
    return a.side_ == b.side_ && a.offsets_ == b.offsets_;
  }

 private:
  int side_;
  std::size_t size_;
  std::vector<Vec3> offsets_;
  bool symmetric_;
  std::vector<Site> table_;
  std::vector<Site> reverse_;
};

/// Binary opinion field over a torus, bit-packed, with a cached count of
/// ones. The lattice must outlive the configuration.
class Configuration {
 public:
  explicit Configuration(const TorusLattice& lattice, bool value = false);

  const TorusLattice& lattice() const { return *lattice_; }
  std::size_t size() const { return lattice_->size(); }

  bool get(Site site) const {
    return (words_[site >> 6] >> (site & 63U)) & 1U;
  }
  void set(Site site, bool value);
  void flip(Site site);
  void fill(bool value);

  std::size_t ones() const { return ones_; }
  double density() const {
    return static_cast<double>(ones_) / static_cast<double>(size());
  }

  /// Recounts ones from the raw bits, ignoring the cache.
  std::size_t count_ones() const;

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.lattice_ == b.lattice_ && a.words_ == b.words_;
  }

 private:
  const TorusLattice* lattice_;
  std::vector<std::uint64_t> words_;
  std::size_t ones_ = 0;
};

/// Number of neighbors of `site` whose opinion differs from it.
int discordant_count(const Configuration& config, Site site);

/// f_x: fraction of neighbors holding the opposite opinion.
Rational discordant_fraction(const Configuration& config, Site site);

struct SnapshotHeader {
  int side = 0;
  double time = 0.0;
  double q = 1.0;
  std::uint64_t seed = 0;
};

/// Full-volume snapshot: header line, then one text row per (y, z) with
/// x running along the row; z-slices separated by a blank line.
void write_snapshot(std::ostream& out, const Configuration& config,
                    const SnapshotHeader& header);

/// Inverse of write_snapshot. Throws std::runtime_error on malformed input
/// or a side mismatch with the lattice.
Configuration read_snapshot(std::istream& in, const TorusLattice& lattice,
                            SnapshotHeader* header = nullptr);

std::string format_snapshot_header(const SnapshotHeader& header);

}  // namespace qvoter
