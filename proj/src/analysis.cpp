#include "qcm/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "qcm/errors.hpp"
#include "qcm/nelder_mead.hpp"

namespace qcm {
namespace {

// Bins on each side of the tallest bin used by the mode fit.
constexpr int kModeWindow = 5;

Vec3 mean_of(std::span<const Vec3> points, const std::vector<int>& assignment, int label) {
  Vec3 sum;
  std::size_t n = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (assignment[i] != label) continue;
    sum += points[i];
    ++n;
  }
  return n ? sum * (1.0 / static_cast<double>(n)) : sum;
}

}  // namespace

std::vector<Vec3> McEnsemble::positions() const {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const EnsemblePoint& p : points) out.push_back(p.position);
  return out;
}

double within_cluster_sse(std::span<const Vec3> points, const ClusterResult& clusters) {
  double sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& c = clusters.assignment[i] == 0 ? clusters.centroid1 : clusters.centroid2;
    sse += squared_norm(points[i] - c);
  }
  return sse;
}

ClusterResult equal_kmeans2(std::span<const Vec3> points, int max_iterations) {
  const std::size_t n = points.size();
  if (n < 2 || n % 2 != 0) {
    throw InvalidInput("equal_kmeans2 needs an even number of points, got " + std::to_string(n));
  }

  std::size_t far_a = 0;
  std::size_t far_b = 1;
  double far_d = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_norm(points[i] - points[j]);
      if (d > far_d) {
        far_d = d;
        far_a = i;
        far_b = j;
      }
    }
  }

  ClusterResult result;
  result.centroid1 = points[far_a];
  result.centroid2 = points[far_b];
  std::vector<std::size_t> order(n);
  std::vector<double> key(n);
  std::vector<int> previous;

  for (int iter = 0; iter < std::max(max_iterations, 1); ++iter) {
    // With centroids fixed, giving cluster 0 the half of the points with the
    // smallest d0^2 - d1^2 is the optimal balanced assignment.
    for (std::size_t i = 0; i < n; ++i) {
      key[i] = squared_norm(points[i] - result.centroid1) - squared_norm(points[i] - result.centroid2);
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    std::vector<int> assignment(n, 1);
    for (std::size_t r = 0; r < n / 2; ++r) assignment[order[r]] = 0;
    result.assignment = assignment;
    result.iterations = iter + 1;
    result.sse_history.push_back(within_cluster_sse(points, result));

    if (assignment == previous) break;
    previous = std::move(assignment);
    result.centroid1 = mean_of(points, result.assignment, 0);
    result.centroid2 = mean_of(points, result.assignment, 1);
  }
  return result;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

EffectivePsf effective_psf(std::span<const Vec3> points, const ClusterResult& clusters) {
  if (clusters.assignment.size() != points.size()) {
    throw InvalidInput("cluster assignment does not match the point count");
  }
  std::array<std::vector<double>, 2> radii;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int label = clusters.assignment[i];
    const Vec3& c = label == 0 ? clusters.centroid1 : clusters.centroid2;
    radii[label].push_back(distance(points[i], c));
  }
  if (radii[0].empty() || radii[1].empty()) throw InvalidInput("effective_psf: empty cluster");

  EffectivePsf psf;
  psf.rho1 = quantile(std::move(radii[0]), kEnclosedFraction);
  psf.rho2 = quantile(std::move(radii[1]), kEnclosedFraction);
  // Sphere of radius rho has volume (4/3) pi rho^3 and width cbrt(6V/pi) = 2 rho.
  psf.weff1 = 2.0 * psf.rho1;
  psf.weff2 = 2.0 * psf.rho2;
  psf.weff_bar = 0.5 * (psf.weff1 + psf.weff2);
  return psf;
}

EffectivePsf effective_psf(const McEnsemble& ensemble, const ClusterResult& clusters) {
  const std::vector<Vec3> pts = ensemble.positions();
  return effective_psf(pts, clusters);
}

std::vector<double> log_bin_edges(double lo, double hi, int bins) {
  if (!(lo > 0.0) || !(hi > lo) || bins < 1) throw InvalidInput("invalid logarithmic bin range");
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  const double llo = std::log10(lo);
  const double lhi = std::log10(hi);
  for (int i = 0; i <= bins; ++i) edges[i] = std::pow(10.0, llo + (lhi - llo) * i / bins);
  edges.front() = lo;
  edges.back() = hi;
  return edges;
}

HistogramMap histogram_map(std::span<const SampleColumn> columns, std::span<const double> edges,
                           std::size_t n_truths, std::size_t m_trials) {
  if (edges.size() < 2) throw InvalidInput("histogram needs at least one bin");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InvalidInput("histogram edges must be strictly increasing");
  }
  if (n_truths == 0 || m_trials == 0) throw InvalidInput("N and M must be positive");

  HistogramMap map;
  map.edges.assign(edges.begin(), edges.end());
  map.experiments = static_cast<double>(n_truths) * static_cast<double>(m_trials);
  const std::size_t bins = edges.size() - 1;
  for (const SampleColumn& col : columns) {
    HistogramColumn out;
    out.t = col.t;
    out.counts.assign(bins, 0);
    out.samples = col.values.size();
    for (double v : col.values) {
      // Bins are [e_k, e_{k+1}); the last bin also includes its upper edge.
      if (!(v >= edges.front())) {
        ++out.below;
      } else if (v > edges.back()) {
        ++out.above;
      } else {
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::size_t k = static_cast<std::size_t>(it - edges.begin()) - 1;
        ++out.counts[std::min(k, bins - 1)];
      }
    }
    out.relative.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      out.relative[k] = static_cast<double>(out.counts[k]) / map.experiments;
    }
    map.columns.push_back(std::move(out));
  }
  return map;
}

double histogram_mode(std::span<const double> column, std::span<const double> edges) {
  if (edges.size() != column.size() + 1) throw InvalidInput("column and edges size mismatch");
  if (column.empty()) throw EmptyColumn("histogram column has no bins");
  const auto tallest = std::max_element(column.begin(), column.end());
  if (!(*tallest > 0.0)) throw EmptyColumn("histogram column is empty");
  const int peak = static_cast<int>(tallest - column.begin());
  const int bins = static_cast<int>(column.size());

  std::vector<double> centres(bins);
  for (int k = 0; k < bins; ++k) {
    centres[k] = 0.5 * (std::log10(edges[k]) + std::log10(edges[k + 1]));
  }
  const double fallback = std::pow(10.0, centres[peak]);

  const int lo = std::max(0, peak - kModeWindow);
  const int hi = std::min(bins - 1, peak + kModeWindow);
  int occupied = 0;
  double weight = 0.0;
  double first = 0.0;
  double second = 0.0;
  for (int k = lo; k <= hi; ++k) {
    if (column[k] > 0.0) ++occupied;
    weight += column[k];
    first += column[k] * centres[k];
    second += column[k] * centres[k] * centres[k];
  }
  if (occupied < 3) return fallback;

  const double height = *tallest;
  const double mean = first / weight;
  const double width = std::log10(edges[peak + 1]) - std::log10(edges[peak]);
  const double spread = std::sqrt(std::max(second / weight - mean * mean, 0.0));

  const Objective sse = [&](std::span<const double> p) {
    const double amp = std::exp(p[0]);
    const double mu = p[1];
    const double s = std::exp(p[2]);
    double total = 0.0;
    for (int k = lo; k <= hi; ++k) {
      const double z = (centres[k] - mu) / s;
      const double r = column[k] / height - amp * std::exp(-0.5 * z * z);
      total += r * r;
    }
    return total;
  };
  const std::array<double, 3> start = {0.0, centres[peak], std::log(std::max(spread, width))};
  const std::array<double, 3> steps = {0.1, 0.5 * width, 0.2};
  NmOptions opts;
  opts.f_tolerance = 1e-14;
  opts.x_tolerance = 1e-9;
  opts.max_iterations = 2000;
  const NmResult fit = nelder_mead(sse, start, steps, opts);

  const double mu = fit.x[1];
  const bool inside = mu >= std::log10(edges[lo]) && mu <= std::log10(edges[hi + 1]);
  if (!fit.converged || !std::isfinite(mu) || !inside) return fallback;
  return std::pow(10.0, mu);
}

ScalingFit fit_scaling(std::span<const ModePoint> modes, double t_min, double t_max) {
  std::vector<std::pair<double, double>> pts;
  for (const ModePoint& m : modes) {
    if (m.t >= t_min && m.t <= t_max && m.t > 0.0 && m.w > 0.0) {
      pts.emplace_back(std::log10(m.t), std::log10(m.w));
    }
  }
  // Summation order fixed by sorting so the fit ignores input order.
  std::sort(pts.begin(), pts.end());
  if (pts.size() < 2) {
    throw InsufficientPoints("scaling fit needs at least 2 modes inside the window, got " +
                             std::to_string(pts.size()));
  }
  const double n = static_cast<double>(pts.size());
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw InsufficientPoints("scaling fit needs at least 2 distinct times");

  ScalingFit fit;
  fit.b = sxy / sxx;
  fit.a = my - fit.b * mx;
  fit.t_min = t_min;
  fit.t_max = t_max;
  fit.points_used = pts.size();
  double ss = 0.0;
  for (const auto& [x, y] : pts) {
    const double r = y - (fit.a + fit.b * x);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace qcm
