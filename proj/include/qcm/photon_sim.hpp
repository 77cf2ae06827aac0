#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcm/configs.hpp"
#include "qcm/optics.hpp"
#include "qcm/rng.hpp"

namespace qcm {

/// Raw detector counts at one focal point: singles c1, c2 and the
/// same-emitter (c11, c22) and cross-emitter (c12) pair events.
struct CountRecord {
  std::uint64_t c1 = 0;
  std::uint64_t c2 = 0;
  std::uint64_t c11 = 0;
  std::uint64_t c22 = 0;
  std::uint64_t c12 = 0;
  double t = 1.0;
};

struct Measurement {
  FocalPoint focal;
  double intensity = 0.0;
  /// Empty when no pair events were recorded.
  std::optional<double> g2;
  double t = 1.0;
};

enum class SimWarning {
  /// Fewer than four focal points; seven unknowns are then underdetermined.
  ConfigTooSmall,
};

struct MeasurementSet {
  std::string config_name;
  std::vector<Measurement> measurements;
  RngSeed seed;
  std::vector<SimWarning> warnings;

  std::size_t size() const { return measurements.size(); }
  bool empty() const { return measurements.empty(); }
};

CountRecord sample_counts(const EmitterPair& pair, const BeamModel& beam,
                          const FocalPoint& focal, double t, Engine& engine);
CountRecord sample_counts(const EmitterPair& pair, const BeamModel& beam,
                          const FocalPoint& focal, double t, const RngSeed& seed);

Measurement reduce_measurement(const CountRecord& rec, const FocalPoint& focal,
                               double brightness_sum);

/// One independent draw per focal point; `t` is the per-focal-point
/// acquisition time.
MeasurementSet simulate_measurement_set(const EmitterPair& pair, const BeamModel& beam,
                                        const DetectionConfig& config, double t,
                                        const RngSeed& seed);

/// Measurements set exactly to the model means (no shot noise).
MeasurementSet noiseless_measurement_set(const EmitterPair& pair, const BeamModel& beam,
                                         const DetectionConfig& config, double t);

}  // namespace qcm
