#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "qcm/nelder_mead.hpp"
#include "qcm/optics.hpp"
#include "qcm/photon_sim.hpp"

namespace qcm {

/// Unconstrained optimiser coordinates: (x1, y1, z1, x2, y2, z2, logit alpha).
struct ParamVector {
  std::array<double, 7> values{};

  static ParamVector from_pair(const EmitterPair& pair);
  static ParamVector from_span(std::span<const double> v);
  Vec3 first() const { return {values[0], values[1], values[2]}; }
  Vec3 second() const { return {values[3], values[4], values[5]}; }
  double alpha() const;
  EmitterPair to_pair() const;
};

enum class Stage { MME, MLE };

struct Estimate {
  EmitterPair pair;
  double objective = 0.0;
  Stage stage = Stage::MLE;
  bool converged = false;
  /// Iterations of the returned stage.
  int iterations = 0;
  int mme_iterations = 0;
  /// Emitters closer than kDegenerateSeparation.
  bool degenerate = false;
  double wall_seconds = 0.0;
};

inline constexpr double kDegenerateSeparation = 1e-4;

/// Axis-aligned box sampled with `resolution` points per axis.
struct ScanGrid {
  Vec3 lower{-1.0, -1.0, -1.0};
  Vec3 upper{1.0, 1.0, 1.0};
  int resolution = 11;

  double spacing(int axis) const;
  Vec3 point(int i, int j, int k) const;
};

/// Grid spanning the bounding box of the focal points, padded to a minimum
/// half-width of 0.5 w0 per axis.
ScanGrid grid_around(const MeasurementSet& ms);

struct SeedResult {
  Vec3 first;
  Vec3 second;
  double first_score = 0.0;
  double second_score = 0.0;
  bool degenerate = false;
};

/// Scores each grid point by how well a single emitter placed there
/// explains the measured intensities, and returns the two best distinct
/// grid points.
SeedResult intensity_seed(const MeasurementSet& ms, const BeamModel& beam, const ScanGrid& grid);

/// Variance-weighted residual sum of intensities and g2 readings.
double neg_log_likelihood(const ParamVector& p, const MeasurementSet& ms, const BeamModel& beam);
double neg_log_likelihood(const EmitterPair& pair, const MeasurementSet& ms, const BeamModel& beam);

/// Unweighted residual sum (method of moments).
double mme_objective(const ParamVector& p, const MeasurementSet& ms, const BeamModel& beam);
double mme_objective(const EmitterPair& pair, const MeasurementSet& ms, const BeamModel& beam);

struct LocaliserOptions {
  /// Defaults to grid_around(ms).
  std::optional<ScanGrid> grid;
  NmOptions nm{};
  double position_step = 0.05;
  double logit_step = 0.1;
  /// Brightness ratios tried for every seeded start.
  std::vector<double> alpha_seeds{0.2, 0.5, 0.8};
  /// Half-separation of the extra starts placed symmetrically about the
  /// best scan point along x, y and z. Zero disables them.
  double split_offset = 0.2;
};

/// Method-of-moments starts derived from the intensity scan: the two scan
/// seeds in both label orders, plus pairs split about the best scan point
/// along each axis, each combined with every entry of `alpha_seeds`.
std::vector<ParamVector> seeded_starts(const SeedResult& seed, const LocaliserOptions& opts);

/// Intensity scan, method-of-moments fit from every seeded start, then
/// likelihood refinement from each distinct moment fit; the refined
/// candidate with the lowest neg_log_likelihood is returned. Throws
/// ConfigTooSmall for fewer than four measurements.
Estimate localise(const MeasurementSet& ms, const BeamModel& beam,
                  const LocaliserOptions& opts = {});

}  // namespace qcm
