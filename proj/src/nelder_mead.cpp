#include "qcm/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qcm/errors.hpp"

namespace qcm {
namespace {

struct Simplex {
  std::vector<std::vector<double>> vertices;
  std::vector<double> values;
};

class Minimiser {
 public:
  Minimiser(const Objective& f, std::span<const double> steps, const NmOptions& opts)
      : f_(f), steps_(steps.begin(), steps.end()), opts_(opts), n_(steps.size()) {}

  double eval(const std::vector<double>& x) {
    ++evaluations_;
    const double v = f_(std::span<const double>(x));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  // Runs one simplex search from `start` (whose value is known) using at
  // most `budget` iterations.
  NmResult run(const std::vector<double>& start, double start_value, int budget) {
    Simplex s;
    s.vertices.assign(n_ + 1, start);
    s.values.assign(n_ + 1, start_value);
    for (std::size_t i = 0; i < n_; ++i) {
      s.vertices[i + 1][i] += steps_[i];
      s.values[i + 1] = eval(s.vertices[i + 1]);
    }
    std::vector<std::size_t> order(n_ + 1);

    NmResult result;
    std::vector<double> centroid(n_), xr(n_), xe(n_), xc(n_);
    int iter = 0;
    for (;; ++iter) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
      reorder(s, order);

      if (has_converged(s)) {
        result.converged = true;
        break;
      }
      if (iter >= budget) break;

      const std::vector<double>& worst = s.vertices[n_];
      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t v = 0; v < n_; ++v)
        for (std::size_t i = 0; i < n_; ++i) centroid[i] += s.vertices[v][i];
      for (double& c : centroid) c /= static_cast<double>(n_);

      for (std::size_t i = 0; i < n_; ++i)
        xr[i] = centroid[i] + opts_.reflection * (centroid[i] - worst[i]);
      const double fr = eval(xr);
      const double f_best = s.values[0];
      const double f_second_worst = s.values[n_ - 1];
      const double f_worst = s.values[n_];

      if (fr < f_best) {
        for (std::size_t i = 0; i < n_; ++i)
          xe[i] = centroid[i] + opts_.reflection * opts_.expansion * (centroid[i] - worst[i]);
        const double fe = eval(xe);
        if (fe < fr) {
          replace_worst(s, xe, fe);
        } else {
          replace_worst(s, xr, fr);
        }
        continue;
      }
      if (fr < f_second_worst) {
        replace_worst(s, xr, fr);
        continue;
      }
      if (fr < f_worst) {
        for (std::size_t i = 0; i < n_; ++i)
          xc[i] = centroid[i] + opts_.contraction * (xr[i] - centroid[i]);
        const double fc = eval(xc);
        if (fc <= fr) {
          replace_worst(s, xc, fc);
          continue;
        }
      } else {
        for (std::size_t i = 0; i < n_; ++i)
          xc[i] = centroid[i] - opts_.contraction * (centroid[i] - worst[i]);
        const double fcc = eval(xc);
        if (fcc < f_worst) {
          replace_worst(s, xc, fcc);
          continue;
        }
      }
      // Shrink towards the best vertex.
      for (std::size_t v = 1; v <= n_; ++v) {
        for (std::size_t i = 0; i < n_; ++i)
          s.vertices[v][i] = s.vertices[0][i] + opts_.shrink * (s.vertices[v][i] - s.vertices[0][i]);
        s.values[v] = eval(s.vertices[v]);
      }
    }
    result.x = s.vertices[0];
    result.value = s.values[0];
    result.iterations = iter;
    return result;
  }

  int evaluations() const { return evaluations_; }

 private:
  void reorder(Simplex& s, const std::vector<std::size_t>& order) const {
    Simplex sorted;
    sorted.vertices.reserve(n_ + 1);
    sorted.values.reserve(n_ + 1);
    for (std::size_t k : order) {
      sorted.vertices.push_back(std::move(s.vertices[k]));
      sorted.values.push_back(s.values[k]);
    }
    s = std::move(sorted);
  }

  void replace_worst(Simplex& s, const std::vector<double>& x, double fx) const {
    s.vertices[n_] = x;
    s.values[n_] = fx;
  }

  bool has_converged(const Simplex& s) const {
    double f_spread = 0.0;
    double x_spread = 0.0;
    for (std::size_t v = 1; v <= n_; ++v) {
      f_spread = std::max(f_spread, std::abs(s.values[v] - s.values[0]));
      for (std::size_t i = 0; i < n_; ++i)
        x_spread = std::max(x_spread, std::abs(s.vertices[v][i] - s.vertices[0][i]));
    }
    // inf - inf is NaN; such a simplex has not converged.
    return f_spread <= opts_.f_tolerance && x_spread <= opts_.x_tolerance;
  }

  const Objective& f_;
  std::vector<double> steps_;
  const NmOptions& opts_;
  std::size_t n_;
  int evaluations_ = 0;
};

}  // namespace

NmResult nelder_mead(const Objective& f, std::span<const double> start,
                     std::span<const double> steps, const NmOptions& options) {
  if (steps.size() != start.size()) throw InvalidInput("nelder_mead: steps/start size mismatch");
  if (start.empty()) throw InvalidInput("nelder_mead: empty parameter vector");

  std::vector<double> x(start.begin(), start.end());
  const double f0 = f(std::span<const double>(x));
  if (!std::isfinite(f0)) throw NonFiniteObjective("objective is not finite at the start point");

  NmResult result{x, f0, false, 0, 1};
  if (options.max_iterations <= 0) return result;

  Minimiser minimiser(f, steps, options);
  result = minimiser.run(x, f0, options.max_iterations);
  for (int r = 0; r < options.restarts && result.converged; ++r) {
    const int budget = options.max_iterations - result.iterations;
    if (budget <= 0) break;
    NmResult again = minimiser.run(result.x, result.value, budget);
    again.iterations += result.iterations;
    const bool improved = result.value - again.value > options.f_tolerance;
    result = std::move(again);
    if (!improved) break;
  }
  result.evaluations = minimiser.evaluations() + 1;
  return result;
}

}  // namespace qcm
