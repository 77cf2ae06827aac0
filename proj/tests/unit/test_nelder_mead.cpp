#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "qcm/errors.hpp"
#include "qcm/nelder_mead.hpp"

using namespace qcm;

namespace {
double rosenbrock(std::span<const double> x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}
}  // namespace

TEST_SUITE("nelder_mead") {

TEST_CASE("convex quadratic") {
  const std::vector<double> target{0.3, -1.2, 2.5, 0.0};
  auto f = [&](std::span<const double> x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - target[i]) * (x[i] - target[i]);
    return s;
  };
  const std::vector<double> start{2, 2, 2, 2};
  const std::vector<double> steps(4, 0.1);
  const NmResult r = nelder_mead(f, start, steps);
  CHECK(r.converged);
  for (std::size_t i = 0; i < target.size(); ++i) CHECK(std::abs(r.x[i] - target[i]) < 1e-5);
  CHECK(r.value < 1e-10);
}

TEST_CASE("zero iterations returns the start") {
  NmOptions opts;
  opts.max_iterations = 0;
  const std::vector<double> start{-1.2, 1.0};
  const std::vector<double> steps{0.1, 0.1};
  const NmResult r = nelder_mead(rosenbrock, start, steps, opts);
  CHECK_FALSE(r.converged);
  CHECK(r.x == start);
  CHECK(r.value == doctest::Approx(rosenbrock(start)));
}

TEST_CASE("Rosenbrock from the classic start") {
  const std::vector<double> start{-1.2, 1.0};
  const std::vector<double> steps{0.05, 0.05};
  const NmResult r = nelder_mead(rosenbrock, start, steps);
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-4);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-4);
}

TEST_CASE("non-finite start throws, non-finite region is avoided") {
  auto f = [](std::span<const double> x) {
    return x[0] < 0 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 1) * (x[0] - 1);
  };
  const std::vector<double> bad{-1.0};
  const std::vector<double> ok{0.05};
  const std::vector<double> steps{0.5};
  CHECK_THROWS_AS(nelder_mead(f, bad, steps), NonFiniteObjective);
  const NmResult r = nelder_mead(f, ok, steps);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-5);
}

TEST_CASE("best value never exceeds the start value") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3, 3);
  auto f = [](std::span<const double> x) {
    return std::sin(3 * x[0]) * std::cos(2 * x[1]) + 0.1 * (x[0] * x[0] + x[1] * x[1]) + std::abs(x[2]);
  };
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> start{u(rng), u(rng), u(rng)};
    const std::vector<double> steps{0.2, 0.2, 0.2};
    NmOptions opts;
    opts.max_iterations = 1 + k * 3;
    const NmResult r = nelder_mead(f, start, steps, opts);
    CHECK(r.value <= f(start));
    CHECK(r.iterations <= opts.max_iterations);
  }
}

TEST_CASE("restarts do not make things worse") {
  const std::vector<double> start{-1.2, 1.0};
  const std::vector<double> steps{0.05, 0.05};
  NmOptions opts;
  opts.restarts = 2;
  const NmResult r = nelder_mead(rosenbrock, start, steps, opts);
  CHECK(r.value <= nelder_mead(rosenbrock, start, steps).value + 1e-15);
}

}
