#include "dapmap/rng.hpp"

namespace dapmap {
namespace {

std::seed_seq make_seed(std::uint64_t master, std::uint64_t replication, StreamPurpose purpose,
                        std::uint64_t index) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xFFFFFFFFULL); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  return std::seed_seq{lo(master), hi(master), lo(replication), hi(replication),
                       static_cast<std::uint32_t>(purpose), lo(index), hi(index)};
}

}  // namespace

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t replication,
                           StreamPurpose purpose, std::uint64_t index) {
  auto seq = make_seed(master_seed, replication, purpose, index);
  engine_.seed(seq);
}

std::size_t RandomStream::pick(std::size_t n) {
  // Multiply-shift maps a 64-bit draw onto [0, n) identically on every
  // standard library, unlike std::uniform_int_distribution.
  __extension__ using Wide = unsigned __int128;
  const Wide wide = static_cast<Wide>(engine_()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

}  // namespace dapmap
