#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qcm {

struct NmOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Converged when max |f_i - f_best| <= f_tolerance ...
  double f_tolerance = 1e-10;
  /// ... and max_i ||x_i - x_best||_inf <= x_tolerance.
  double x_tolerance = 1e-6;
  int max_iterations = 5000;
  /// Re-seed a fresh simplex at the converged point this many times; a
  /// restart that fails to improve the objective ends the search.
  int restarts = 0;
};

struct NmResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead downhill simplex following the Lagarias et al. ordering and
/// tie rules. The initial simplex is `start` plus one vertex per coordinate
/// displaced by `steps[i]`. Non-finite objective values are treated as +inf
/// away from the start; a non-finite value at the start throws
/// NonFiniteObjective.
NmResult nelder_mead(const Objective& f, std::span<const double> start,
                     std::span<const double> steps, const NmOptions& options = {});

}  // namespace qcm
