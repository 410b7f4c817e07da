#include "qvoter/lattice.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qvoter/csv.hpp"

namespace qvoter {

std::string to_string(const Vec3& v) {
  return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + "," +
         std::to_string(v.z) + ")";
}

std::vector<Vec3> nearest_neighbor_offsets() {
  return {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
}

std::vector<Vec3> positive_axis_offsets() {
  return {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
}

int integer_rank(std::span<const Vec3> offsets) {
  std::vector<std::array<long long, 3>> rows;
  rows.reserve(offsets.size());
  for (const auto& v : offsets) rows.push_back({v.x, v.y, v.z});

  int rank = 0;
  for (int col = 0; col < 3 && rank < static_cast<int>(rows.size()); ++col) {
    auto pivot = std::find_if(rows.begin() + rank, rows.end(),
                              [col](const auto& r) { return r[col] != 0; });
    if (pivot == rows.end()) continue;
    std::iter_swap(rows.begin() + rank, pivot);
    const auto& p = rows[rank];
    for (std::size_t i = rank + 1; i < rows.size(); ++i) {
      auto& r = rows[i];
      if (r[col] == 0) continue;
      const long long a = p[col];
      const long long b = r[col];
      for (int c = 0; c < 3; ++c) r[c] = a * r[c] - b * p[c];
      long long g = std::gcd(std::gcd(std::llabs(r[0]), std::llabs(r[1])),
                             std::llabs(r[2]));
      if (g > 1) {
        for (int c = 0; c < 3; ++c) r[c] /= g;
      }
    }
    ++rank;
  }
  return rank;
}

namespace {

int wrap(int v, int side) {
  int m = v % side;
  return m < 0 ? m + side : m;
}

}  // namespace

TorusLattice::TorusLattice(int side, std::vector<Vec3> offsets)
    : side_(side), offsets_(std::move(offsets)) {
  if (side < 2) throw std::invalid_argument("torus side must be at least 2");
  if (offsets_.size() < 3) {
    throw std::invalid_argument("neighborhood needs at least 3 offsets");
  }
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    if (offsets_[i] == Vec3{}) {
      throw std::invalid_argument("neighborhood must not contain the origin");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (offsets_[i] == offsets_[j]) {
        throw std::invalid_argument("duplicate offset " + to_string(offsets_[i]));
      }
    }
  }
  if (integer_rank(offsets_) < 3) {
    throw std::invalid_argument("offsets do not span a rank-3 lattice");
  }
  const long long n = static_cast<long long>(side) * side * side;
  if (n > static_cast<long long>(UINT32_MAX)) {
    throw std::invalid_argument("torus too large for 32-bit site indices");
  }
  size_ = static_cast<std::size_t>(n);

  symmetric_ = std::all_of(offsets_.begin(), offsets_.end(), [&](const Vec3& v) {
    return std::find(offsets_.begin(), offsets_.end(), -v) != offsets_.end();
  });

  const std::size_t k = offsets_.size();
  table_.resize(size_ * k);
  reverse_.resize(size_ * k);
  for (Site s = 0; s < size_; ++s) {
    const Vec3 c = coords(s);
    for (std::size_t j = 0; j < k; ++j) {
      table_[s * k + j] = index(c + offsets_[j]);
      reverse_[s * k + j] = index(c - offsets_[j]);
    }
  }
}

TorusLattice TorusLattice::nearest_neighbor(int side) {
  return TorusLattice(side, nearest_neighbor_offsets());
}

Vec3 TorusLattice::coords(Site site) const {
  const int s = static_cast<int>(site);
  return {s % side_, (s / side_) % side_, s / (side_ * side_)};
}

Site TorusLattice::index(const Vec3& c) const {
  return static_cast<Site>(wrap(c.x, side_) + side_ * wrap(c.y, side_) +
                           side_ * side_ * wrap(c.z, side_));
}

std::span<const Site> TorusLattice::neighbors(Site site) const {
  if (site >= size_) throw std::out_of_range("site index out of range");
  return {neighbor_row(site), offsets_.size()};
}

std::span<const Site> TorusLattice::reverse_neighbors(Site site) const {
  if (site >= size_) throw std::out_of_range("site index out of range");
  return {reverse_row(site), offsets_.size()};
}

Configuration::Configuration(const TorusLattice& lattice, bool value)
    : lattice_(&lattice), words_((lattice.size() + 63) / 64, 0) {
  fill(value);
}

void Configuration::set(Site site, bool value) {
  if (get(site) != value) flip(site);
}

void Configuration::flip(Site site) {
  const std::uint64_t mask = std::uint64_t{1} << (site & 63U);
  std::uint64_t& w = words_[site >> 6];
  if (w & mask) {
    --ones_;
  } else {
    ++ones_;
  }
  w ^= mask;
}

void Configuration::fill(bool value) {
  std::fill(words_.begin(), words_.end(), value ? ~std::uint64_t{0} : 0);
  const std::size_t tail = size() & 63U;
  if (value && tail != 0) words_.back() = (std::uint64_t{1} << tail) - 1;
  ones_ = value ? size() : 0;
}

std::size_t Configuration::count_ones() const {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

int discordant_count(const Configuration& config, Site site) {
  const auto nbrs = config.lattice().neighbors(site);
  const bool own = config.get(site);
  int count = 0;
  for (Site y : nbrs) count += config.get(y) != own ? 1 : 0;
  return count;
}

Rational discordant_fraction(const Configuration& config, Site site) {
  return Rational(discordant_count(config, site), config.lattice().k());
}

std::string format_snapshot_header(const SnapshotHeader& header) {
  return "L=" + std::to_string(header.side) + " t=" + format_real(header.time) +
         " q=" + format_real(header.q) + " seed=" + std::to_string(header.seed);
}

void write_snapshot(std::ostream& out, const Configuration& config,
                    const SnapshotHeader& header) {
  const TorusLattice& lat = config.lattice();
  SnapshotHeader h = header;
  h.side = lat.side();
  out << format_snapshot_header(h) << '\n';
  const int L = lat.side();
  std::string row(static_cast<std::size_t>(L), '0');
  for (int z = 0; z < L; ++z) {
    if (z > 0) out << '\n';
    for (int y = 0; y < L; ++y) {
      for (int x = 0; x < L; ++x) {
        row[static_cast<std::size_t>(x)] = config.get(lat.index({x, y, z})) ? '1' : '0';
      }
      out << row << '\n';
    }
  }
}

namespace {

SnapshotHeader parse_header(const std::string& line) {
  SnapshotHeader h;
  std::istringstream ss(line);
  std::string token;
  int seen = 0;
  while (ss >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad snapshot header token: " + token);
    const std::string key = token.substr(0, eq);
    const std::string val = token.substr(eq + 1);
    if (key == "L") {
      h.side = std::stoi(val);
    } else if (key == "t") {
      h.time = std::stod(val);
    } else if (key == "q") {
      h.q = std::stod(val);
    } else if (key == "seed") {
      h.seed = std::stoull(val);
    } else {
      throw std::runtime_error("unknown snapshot header key: " + key);
    }
    ++seen;
  }
  if (seen != 4) throw std::runtime_error("snapshot header must have L, t, q, seed");
  return h;
}

}  // namespace

Configuration read_snapshot(std::istream& in, const TorusLattice& lattice,
                            SnapshotHeader* header) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty snapshot");
  SnapshotHeader h = parse_header(line);
  if (h.side != lattice.side()) throw std::runtime_error("snapshot side does not match lattice");
  const int L = lattice.side();
  Configuration config(lattice);
  for (int z = 0; z < L; ++z) {
    if (z > 0) {
      if (!std::getline(in, line) || !line.empty()) {
        throw std::runtime_error("expected blank line between slices");
      }
    }
    for (int y = 0; y < L; ++y) {
      if (!std::getline(in, line) || static_cast<int>(line.size()) != L) {
        throw std::runtime_error("snapshot row has wrong length");
      }
      for (int x = 0; x < L; ++x) {
        const char c = line[static_cast<std::size_t>(x)];
        if (c != '0' && c != '1') throw std::runtime_error("snapshot cell must be 0 or 1");
        if (c == '1') config.set(lattice.index({x, y, z}), true);
      }
    }
  }
  if (header) *header = h;
  return config;
}

}  // namespace qvoter
