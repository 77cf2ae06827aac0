#include "qcm/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "qcm/errors.hpp"

namespace qcm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Keeps sigmoid(logit) strictly inside (0, 1].
constexpr double kAlphaFloor = 1e-12;
// Moment-fit endpoints closer than this (max-norm) share one refinement.
constexpr double kDuplicateEndpoint = 1e-4;

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double logit(double a) { return std::log(a / (1.0 - a)); }

template <bool Weighted>
double residual_sum(const Vec3& x1, const Vec3& x2, double alpha, const MeasurementSet& ms,
                    const BeamModel& beam) {
  if (!is_finite(x1) || !is_finite(x2) || !(alpha > 0.0 && alpha <= 1.0)) return kInf;
  double total = 0.0;
  for (const Measurement& m : ms.measurements) {
    const double p1 = detection_probability(beam, x1, 1.0, m.focal);
    const double p2 = detection_probability(beam, x2, alpha, m.focal);
    if (!(p1 + p2 > 0.0)) return kInf;
    const MomentModel mm = moments_from_rates(p1, p2, 1.0 + alpha, m.t);
    const double di = mm.mu_intensity - m.intensity;
    if constexpr (Weighted) {
      total += di * di / mm.var_intensity;
    } else {
      total += di * di;
    }
    if (m.g2) {
      const double dg = mm.mu_g2 - *m.g2;
      if constexpr (Weighted) {
        total += dg * dg / mm.var_g2;
      } else {
        total += dg * dg;
      }
    }
  }
  return total;
}

// Least-squares fit quality of a single emitter at x:
// (sum_j I_j P_j)^2 / sum_j P_j^2.
double single_emitter_score(const Vec3& x, const MeasurementSet& ms, const BeamModel& beam) {
  double cross = 0.0;
  double self = 0.0;
  for (const Measurement& m : ms.measurements) {
    const double p = detection_probability(beam, x, 1.0, m.focal);
    cross += m.intensity * p;
    self += p * p;
  }
  if (!(self > 0.0)) return 0.0;
  return cross * cross / self;
}

}  // namespace

ParamVector ParamVector::from_pair(const EmitterPair& pair) {
  ParamVector p;
  p.values = {pair.x1().x, pair.x1().y, pair.x1().z, pair.x2().x, pair.x2().y, pair.x2().z,
              logit(std::clamp(pair.alpha(), kAlphaFloor, 1.0 - 1e-15))};
  return p;
}

ParamVector ParamVector::from_span(std::span<const double> v) {
  if (v.size() != 7) throw InvalidInput("parameter vector must have 7 entries");
  ParamVector p;
  std::copy(v.begin(), v.end(), p.values.begin());
  return p;
}

double ParamVector::alpha() const { return std::max(sigmoid(values[6]), kAlphaFloor); }

EmitterPair ParamVector::to_pair() const { return EmitterPair::canonical(first(), second(), alpha()); }

double ScanGrid::spacing(int axis) const {
  const double lo = axis == 0 ? lower.x : axis == 1 ? lower.y : lower.z;
  const double hi = axis == 0 ? upper.x : axis == 1 ? upper.y : upper.z;
  return (hi - lo) / static_cast<double>(resolution - 1);
}

Vec3 ScanGrid::point(int i, int j, int k) const {
  return {lower.x + i * spacing(0), lower.y + j * spacing(1), lower.z + k * spacing(2)};
}

ScanGrid grid_around(const MeasurementSet& ms) {
  if (ms.empty()) throw InvalidInput("cannot build a scan grid for an empty measurement set");
  Vec3 lo = ms.measurements.front().focal.xi;
  Vec3 hi = lo;
  for (const Measurement& m : ms.measurements) {
    lo = {std::min(lo.x, m.focal.xi.x), std::min(lo.y, m.focal.xi.y), std::min(lo.z, m.focal.xi.z)};
    hi = {std::max(hi.x, m.focal.xi.x), std::max(hi.y, m.focal.xi.y), std::max(hi.z, m.focal.xi.z)};
  }
  auto pad = [](double& a, double& b) {
    const double mid = 0.5 * (a + b);
    const double half = std::max(0.5 * (b - a), 0.5);
    a = mid - half;
    b = mid + half;
  };
  pad(lo.x, hi.x);
  pad(lo.y, hi.y);
  pad(lo.z, hi.z);
  return ScanGrid{lo, hi, 11};
}

SeedResult intensity_seed(const MeasurementSet& ms, const BeamModel& beam, const ScanGrid& grid) {
  if (ms.empty()) throw InvalidInput("intensity_seed: empty measurement set");
  if (grid.resolution < 3) throw InvalidInput("scan grid needs at least 3 points per axis");

  const Vec3 centre = 0.5 * (grid.lower + grid.upper);
  const bool no_signal = std::all_of(ms.measurements.begin(), ms.measurements.end(),
                                     [](const Measurement& m) { return m.intensity <= 0.0; });
  if (no_signal) return SeedResult{centre, centre, 0.0, 0.0, true};

  // Strictly-greater comparisons keep the first grid point on ties.
  double best = -1.0;
  double runner_up = -1.0;
  Vec3 best_point = centre;
  Vec3 runner_point = centre;
  const int n = grid.resolution;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const Vec3 x = grid.point(i, j, k);
        const double score = single_emitter_score(x, ms, beam);
        if (score > best) {
          runner_up = best;
          runner_point = best_point;
          best = score;
          best_point = x;
        } else if (score > runner_up) {
          runner_up = score;
          runner_point = x;
        }
      }
    }
  }
  return SeedResult{best_point, runner_point, best, runner_up, false};
}

double neg_log_likelihood(const ParamVector& p, const MeasurementSet& ms, const BeamModel& beam) {
  return residual_sum<true>(p.first(), p.second(), p.alpha(), ms, beam);
}

double neg_log_likelihood(const EmitterPair& pair, const MeasurementSet& ms, const BeamModel& beam) {
  return residual_sum<true>(pair.x1(), pair.x2(), pair.alpha(), ms, beam);
}

double mme_objective(const ParamVector& p, const MeasurementSet& ms, const BeamModel& beam) {
  return residual_sum<false>(p.first(), p.second(), p.alpha(), ms, beam);
}

double mme_objective(const EmitterPair& pair, const MeasurementSet& ms, const BeamModel& beam) {
  return residual_sum<false>(pair.x1(), pair.x2(), pair.alpha(), ms, beam);
}

std::vector<ParamVector> seeded_starts(const SeedResult& seed, const LocaliserOptions& opts) {
  std::vector<std::pair<Vec3, Vec3>> positions = {{seed.first, seed.second},
                                                  {seed.second, seed.first}};
  if (opts.split_offset > 0.0) {
    const double d = opts.split_offset;
    for (const Vec3& axis : {Vec3{d, 0, 0}, Vec3{0, d, 0}, Vec3{0, 0, d}}) {
      positions.emplace_back(seed.first + axis, seed.first - axis);
      positions.emplace_back(seed.first - axis, seed.first + axis);
    }
  }
  std::vector<ParamVector> starts;
  starts.reserve(positions.size() * opts.alpha_seeds.size());
  for (double alpha : opts.alpha_seeds) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha seeds must lie in (0, 1)");
    for (const auto& [a, b] : positions) {
      ParamVector p;
      p.values = {a.x, a.y, a.z, b.x, b.y, b.z, logit(alpha)};
      starts.push_back(p);
    }
  }
  return starts;
}

Estimate localise(const MeasurementSet& ms, const BeamModel& beam, const LocaliserOptions& opts) {
  if (ms.size() < 4) {
    throw ConfigTooSmall("localisation needs at least 4 focal points, got " +
                         std::to_string(ms.size()));
  }
  if (opts.alpha_seeds.empty()) throw InvalidInput("at least one alpha seed is required");
  const auto started = std::chrono::steady_clock::now();

  const ScanGrid grid = opts.grid ? *opts.grid : grid_around(ms);
  const SeedResult seed = intensity_seed(ms, beam, grid);

  std::array<double, 7> steps;
  std::fill(steps.begin(), steps.begin() + 6, opts.position_step);
  steps[6] = opts.logit_step;

  const Objective mme = [&](std::span<const double> v) {
    return mme_objective(ParamVector::from_span(v), ms, beam);
  };
  const Objective nll = [&](std::span<const double> v) {
    return neg_log_likelihood(ParamVector::from_span(v), ms, beam);
  };

  // Moment fits from every start; endpoints that coincide are refined once.
  std::vector<NmResult> rough;
  for (const ParamVector& start : seeded_starts(seed, opts)) {
    NmResult r = nelder_mead(mme, start.values, steps, opts.nm);
    const bool seen = std::any_of(rough.begin(), rough.end(), [&](const NmResult& other) {
      for (std::size_t i = 0; i < r.x.size(); ++i) {
        if (std::abs(r.x[i] - other.x[i]) > kDuplicateEndpoint) return false;
      }
      return true;
    });
    if (!seen) rough.push_back(std::move(r));
  }

  // The estimate is the refined candidate with the highest likelihood;
  // strict comparison keeps the earliest candidate on ties.
  NmResult refined;
  int rough_iterations = 0;
  for (std::size_t c = 0; c < rough.size(); ++c) {
    NmResult r = nelder_mead(nll, rough[c].x, steps, opts.nm);
    if (c == 0 || r.value < refined.value) {
      refined = std::move(r);
      rough_iterations = rough[c].iterations;
    }
  }

  Estimate est;
  est.pair = ParamVector::from_span(refined.x).to_pair();
  est.objective = refined.value;
  est.stage = Stage::MLE;
  est.converged = refined.converged;
  est.iterations = refined.iterations;
  est.mme_iterations = rough_iterations;
  est.degenerate = est.pair.separation() < kDegenerateSeparation;
  est.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return est;
}

}  // namespace qcm
