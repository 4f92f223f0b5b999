#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace dapmap {

/// What a random stream is used for. Part of the stream key so different
/// samplers never share draws.
enum class StreamPurpose : std::uint32_t {
  Demand = 1,
  Capacity = 2,
  TradeCost = 3,
  Test = 99,
};

/// Independent random stream keyed by (master seed, replication, purpose,
/// index). Streams are derived from the key alone, so draws do not depend on
/// which worker runs a replication or in which order.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t replication, StreamPurpose purpose,
               std::uint64_t index = 0);

  /// +1 or -1 with probability 1/2 each.
  int rademacher() { return (engine_() & 1U) ? 1 : -1; }

  /// Uniform index in [0, n).
  std::size_t pick(std::size_t n);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dapmap
