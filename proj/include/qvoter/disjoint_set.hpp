#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

namespace qvoter {

// Union by size with path halving.
class DisjointSet {
 public:
  DisjointSet() = default;
  explicit DisjointSet(std::size_t n) { reset(n); }

  void reset(std::size_t n) {
    parent_.resize(n);
    size_.assign(n, 1);
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    sets_ = n;
  }

  /// Appends a new singleton and returns its id.
  std::uint32_t add() {
    const auto id = static_cast<std::uint32_t>(parent_.size());
    parent_.push_back(id);
    size_.push_back(1);
    ++sets_;
    return id;
  }

  std::uint32_t find(std::uint32_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  std::uint32_t find(std::uint32_t i) const {
    while (parent_[i] != i) i = parent_[i];
    return i;
  }

  /// Merges the sets of a and b; returns the surviving root.
  std::uint32_t unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --sets_;
    return a;
  }

  bool same(std::uint32_t a, std::uint32_t b) { return find(a) == find(b); }
  std::uint32_t set_size(std::uint32_t i) { return size_[find(i)]; }
  std::size_t set_count() const { return sets_; }
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::size_t sets_ = 0;
};

}  // namespace qvoter
