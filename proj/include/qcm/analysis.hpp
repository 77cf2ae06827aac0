#pragma once

// Post-processing of Monte-Carlo ensembles: balanced two-cluster assignment,
// effective-PSF widths, relative-frequency histograms, histogram modes and
// log-log scaling fits.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcm/optics.hpp"

namespace qcm {

/// Fraction of points enclosed by the effective-PSF radius, 1 - 1/sqrt(e).
inline const double kEnclosedFraction = 1.0 - 1.0 / std::sqrt(std::exp(1.0));

struct EnsemblePoint {
  Vec3 position;
  int trial = 0;
  /// 0 for the brighter estimated emitter, 1 for the dimmer one.
  int slot = 0;
};

/// Pooled estimates of M trials for one ground truth at one time.
struct McEnsemble {
  std::vector<EnsemblePoint> points;
  EmitterPair truth;
  double t = 0.0;
  std::string config_name;

  std::vector<Vec3> positions() const;
};

struct ClusterResult {
  Vec3 centroid1;
  Vec3 centroid2;
  /// Cluster label (0 or 1) per input point.
  std::vector<int> assignment;
  int iterations = 0;
  /// Within-cluster sum of squares after every assignment step.
  std::vector<double> sse_history;
};

/// Two equal-size clusters via balanced Lloyd iterations, initialised from
/// the farthest pair of points. Requires an even number of points >= 2.
ClusterResult equal_kmeans2(std::span<const Vec3> points, int max_iterations = 100);

/// Sum of squared distances of every point to its assigned centroid.
double within_cluster_sse(std::span<const Vec3> points, const ClusterResult& clusters);

struct EffectivePsf {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double weff1 = 0.0;
  double weff2 = 0.0;
  double weff_bar = 0.0;
};

/// Linearly interpolated `q`-quantile of `values` (sorted copy).
double quantile(std::vector<double> values, double q);

/// Radius enclosing the kEnclosedFraction quantile of distances to each
/// centroid; widths are twice that radius.
EffectivePsf effective_psf(std::span<const Vec3> points, const ClusterResult& clusters);
EffectivePsf effective_psf(const McEnsemble& ensemble, const ClusterResult& clusters);

/// `bins + 1` logarithmically spaced edges from `lo` to `hi`.
std::vector<double> log_bin_edges(double lo, double hi, int bins);

struct HistogramColumn {
  double t = 0.0;
  std::vector<std::size_t> counts;
  std::vector<double> relative;
  std::size_t below = 0;
  std::size_t above = 0;
  std::size_t samples = 0;
};

struct HistogramMap {
  std::vector<double> edges;
  std::vector<HistogramColumn> columns;
  /// N * M, the denominator of every relative frequency.
  double experiments = 1.0;
};

struct SampleColumn {
  double t = 0.0;
  std::vector<double> values;
};

/// One histogram column per time; relative frequency n / (N * M). Values
/// outside the edges are tallied in `below` / `above`.
HistogramMap histogram_map(std::span<const SampleColumn> columns, std::span<const double> edges,
                           std::size_t n_truths, std::size_t m_trials);

/// Peak of a Gaussian (in log10 w) least-squares fitted around the tallest
/// bin; the tallest bin's geometric centre when the fit is unusable.
/// Throws EmptyColumn when every bin is zero.
double histogram_mode(std::span<const double> column, std::span<const double> edges);

struct ScalingFit {
  /// log10 w = a + b log10 t
  double a = 0.0;
  double b = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  /// RMS of the log10 residuals.
  double residual = 0.0;
  std::size_t points_used = 0;
};

struct ModePoint {
  double t = 0.0;
  double w = 0.0;
};

/// Ordinary least squares of log10 w against log10 t over points with
/// t_min <= t <= t_max. Throws InsufficientPoints below two points.
ScalingFit fit_scaling(std::span<const ModePoint> modes, double t_min, double t_max);

}  // namespace qcm
