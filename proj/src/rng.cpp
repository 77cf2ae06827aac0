#include "qcm/rng.hpp"

namespace qcm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Engine make_engine(const RngSeed& seed) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed.seed),
      static_cast<std::uint32_t>(seed.seed >> 32),
      static_cast<std::uint32_t>(seed.stream),
      static_cast<std::uint32_t>(seed.stream >> 32),
  };
  return Engine(seq);
}

std::uint64_t derive_stream(std::uint64_t domain, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
  std::uint64_t h = splitmix64(domain);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

}  // namespace qcm
