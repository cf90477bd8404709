#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tcv {

// Purpose tags keep streams for different consumers of the same
// (replication, split) pair independent of each other.
enum class Purpose : std::uint64_t {
  data = 1,
  eval = 2,
  split = 3,
  fit = 4,
  outer = 5,
  probe = 6,
  folds = 7,
  tree = 8,
  final_fit = 9,
};

std::string_view to_string(Purpose purpose);

using Engine = std::mt19937_64;

// Counter-based stream derivation: the engine seed is a hash of the full
// label tuple, so any labelled stream can be regenerated in isolation and in
// any order.
struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replication = 0;
  std::uint64_t split = 0;
  Purpose purpose = Purpose::data;
  std::uint64_t sub = 0;

  RngSpec with_replication(std::uint64_t r) const;
  RngSpec with_split(std::uint64_t k) const;
  RngSpec with_purpose(Purpose p, std::uint64_t sub_index = 0) const;
  RngSpec with_sub(std::uint64_t sub_index) const;
  // A stream rooted at this stream's seed, for consumers nested inside one
  // labelled task (trees of a forest, folds of an inner CV).
  RngSpec child(Purpose p, std::uint64_t sub_index = 0) const;

  std::uint64_t stream_seed() const noexcept;
  Engine engine() const;

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace tcv
