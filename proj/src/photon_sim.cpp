#include "qcm/photon_sim.hpp"

#include <cmath>

#include "qcm/errors.hpp"

namespace qcm {
namespace {

std::uint64_t draw_poisson(double mean, Engine& engine) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(engine);
}

}  // namespace

CountRecord sample_counts(const EmitterPair& pair, const BeamModel& beam,
                          const FocalPoint& focal, double t, Engine& engine) {
  if (!(t > 0.0)) throw InvalidInput("acquisition time must be positive");
  const double p1 = detection_probability(beam, pair.x1(), 1.0, focal);
  const double p2 = detection_probability(beam, pair.x2(), pair.alpha(), focal);
  CountRecord rec;
  rec.t = t;
  rec.c1 = draw_poisson(p1 * t, engine);
  rec.c2 = draw_poisson(p2 * t, engine);
  rec.c11 = draw_poisson(p1 * p1 * t, engine);
  rec.c22 = draw_poisson(p2 * p2 * t, engine);
  rec.c12 = draw_poisson(p1 * p2 * t, engine);
  return rec;
}

CountRecord sample_counts(const EmitterPair& pair, const BeamModel& beam,
                          const FocalPoint& focal, double t, const RngSeed& seed) {
  Engine engine = make_engine(seed);
  return sample_counts(pair, beam, focal, t, engine);
}

Measurement reduce_measurement(const CountRecord& rec, const FocalPoint& focal,
                               double brightness_sum) {
  Measurement m;
  m.focal = focal;
  m.t = rec.t;
  m.intensity = static_cast<double>(rec.c1 + rec.c2) / (brightness_sum * rec.t);
  const std::uint64_t denom = rec.c11 + rec.c22 + 2 * rec.c12;
  if (denom > 0) m.g2 = 2.0 * static_cast<double>(rec.c12) / static_cast<double>(denom);
  return m;
}

MeasurementSet simulate_measurement_set(const EmitterPair& pair, const BeamModel& beam,
                                        const DetectionConfig& config, double t,
                                        const RngSeed& seed) {
  MeasurementSet set;
  set.config_name = config.name;
  set.seed = seed;
  if (config.size() < 4) set.warnings.push_back(SimWarning::ConfigTooSmall);
  Engine engine = make_engine(seed);
  set.measurements.reserve(config.size());
  for (const FocalPoint& focal : config.focal_points) {
    const CountRecord rec = sample_counts(pair, beam, focal, t, engine);
    set.measurements.push_back(reduce_measurement(rec, focal, pair.brightness_sum()));
  }
  return set;
}

MeasurementSet noiseless_measurement_set(const EmitterPair& pair, const BeamModel& beam,
                                         const DetectionConfig& config, double t) {
  MeasurementSet set;
  set.config_name = config.name;
  if (config.size() < 4) set.warnings.push_back(SimWarning::ConfigTooSmall);
  for (const FocalPoint& focal : config.focal_points) {
    const MomentModel mm = moment_model(pair, beam, focal, t);
    set.measurements.push_back(Measurement{focal, mm.mu_intensity, mm.mu_g2, t});
  }
  return set;
}

}  // namespace qcm
