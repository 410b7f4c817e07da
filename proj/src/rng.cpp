#include "qvoter/rng.hpp"

#include <array>

namespace qvoter {

Engine make_stream(std::uint64_t master, std::uint64_t index) {
  const std::uint64_t s = stream_seed(master, index);
  std::array<std::uint32_t, 4> words{
      static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
      static_cast<std::uint32_t>(mix64(s)), static_cast<std::uint32_t>(mix64(s) >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace qvoter
