#pragma once

#include <cstdint>
#include <random>

namespace qcm {

using Engine = std::mt19937_64;

/// A (seed, stream) pair names one independent, reproducible substream.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// Engine for one substream. Identical seeds give identical draws.
Engine make_engine(const RngSeed& seed);

/// Stable mixing of structured coordinates (ground truth, time index,
/// trial, ...) into a single stream id.
std::uint64_t derive_stream(std::uint64_t domain, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0);

}  // namespace qcm
