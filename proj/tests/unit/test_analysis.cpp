#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qcm/analysis.hpp"
#include "qcm/errors.hpp"

using namespace qcm;

namespace {

// Unconstrained Lloyd 2-means, best of several random restarts.
std::vector<int> plain_two_means(const std::vector<Vec3>& pts, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::vector<int> best;
  double best_sse = INFINITY;
  for (int restart = 0; restart < 10; ++restart) {
    Vec3 c[2] = {pts[pick(rng)], pts[pick(rng)]};
    std::vector<int> lab(pts.size(), 0);
    for (int it = 0; it < 100; ++it) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        lab[i] = squared_norm(pts[i] - c[0]) <= squared_norm(pts[i] - c[1]) ? 0 : 1;
      }
      Vec3 sum[2] = {};
      int n[2] = {0, 0};
      for (std::size_t i = 0; i < pts.size(); ++i) {
        sum[lab[i]] += pts[i];
        ++n[lab[i]];
      }
      for (int k = 0; k < 2; ++k) if (n[k] > 0) c[k] = sum[k] * (1.0 / n[k]);
    }
    double sse = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) sse += squared_norm(pts[i] - c[lab[i]]);
    if (sse < best_sse) {
      best_sse = sse;
      best = lab;
    }
  }
  return best;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  bool same = true, flipped = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i] == b[i];
    flipped = flipped && a[i] != b[i];
  }
  return same || flipped;
}

// Chi distribution (3 dof) CDF inverted by bisection.
double chi3_quantile(double q) {
  auto cdf = [](double r) {
    return std::erf(r / std::numbers::sqrt2) - std::sqrt(2.0 / std::numbers::pi) * r * std::exp(-r * r / 2);
  };
  double lo = 0, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> bin_centres(const std::vector<double>& edges) {
  std::vector<double> c;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) c.push_back(std::sqrt(edges[k] * edges[k + 1]));
  return c;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("equal k-means on two symmetric pairs") {
  const std::vector<Vec3> pts{{1, 0, 0}, {1.1, 0, 0}, {-1, 0, 0}, {-1.1, 0, 0}};
  const ClusterResult c = equal_kmeans2(pts);
  CHECK(c.assignment[0] == c.assignment[1]);
  CHECK(c.assignment[2] == c.assignment[3]);
  CHECK(c.assignment[0] != c.assignment[2]);
  const Vec3 plus = c.assignment[0] == 0 ? c.centroid1 : c.centroid2;
  const Vec3 minus = c.assignment[0] == 0 ? c.centroid2 : c.centroid1;
  CHECK(plus.x == doctest::Approx(1.05));
  CHECK(minus.x == doctest::Approx(-1.05));
}

TEST_CASE("equal k-means on identical points") {
  const std::vector<Vec3> pts(6, Vec3{0.3, 0.1, -0.2});
  const ClusterResult c = equal_kmeans2(pts);
  CHECK(std::count(c.assignment.begin(), c.assignment.end(), 0) == 3);
  CHECK(distance(c.centroid1, pts[0]) < 1e-15);
  CHECK(distance(c.centroid2, pts[0]) < 1e-15);
}

TEST_CASE("equal k-means input checks") {
  CHECK_THROWS_AS(equal_kmeans2(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}), InvalidInput);
  CHECK_THROWS_AS(equal_kmeans2(std::vector<Vec3>{}), InvalidInput);
}

TEST_CASE("equal k-means matches unconstrained 2-means on separated blobs") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.push_back({n(rng), n(rng), n(rng)});
  for (int i = 0; i < 100; ++i) pts.push_back({10 + n(rng), n(rng), n(rng)});
  std::shuffle(pts.begin(), pts.end(), rng);
  const ClusterResult c = equal_kmeans2(pts);
  CHECK(same_partition(c.assignment, plain_two_means(pts, rng)));
}

TEST_CASE("equal k-means is balanced and its SSE never rises") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec3> pts;
    const int half = 5 + trial * 3;
    const double gap = 0.2 * trial;
    for (int i = 0; i < 2 * half; ++i) pts.push_back({n(rng) + (i % 3 == 0 ? gap : 0.0), n(rng), 0.5 * n(rng)});
    const ClusterResult c = equal_kmeans2(pts);
    CHECK(std::count(c.assignment.begin(), c.assignment.end(), 0) == half);
    for (std::size_t k = 1; k < c.sse_history.size(); ++k) CHECK(c.sse_history[k] <= c.sse_history[k - 1] + 1e-9);
    CHECK(within_cluster_sse(pts, c) == doctest::Approx(c.sse_history.back()));
  }
}

TEST_CASE("effective psf of points on a sphere") {
  std::vector<Vec3> pts;
  const double r0 = 0.37;
  for (const Vec3 c : {Vec3{5, 0, 0}, Vec3{-5, 0, 0}}) {
    for (const Vec3 d : {Vec3{1, 0, 0}, Vec3{-1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, -1, 0}, Vec3{0, 0, 1}, Vec3{0, 0, -1}}) {
      pts.push_back(c + d * r0);
    }
  }
  const EffectivePsf psf = effective_psf(pts, equal_kmeans2(pts));
  CHECK(psf.rho1 == doctest::Approx(r0));
  CHECK(psf.rho2 == doctest::Approx(r0));
  CHECK(psf.weff_bar == doctest::Approx(2 * r0));

  // Width from the enclosed sphere volume, V = 4/3 pi rho^3, is cbrt(6 V / pi).
  const double v = 4.0 / 3.0 * std::numbers::pi;
  CHECK(std::cbrt(6 * v / std::numbers::pi) == doctest::Approx(2.0));
}

TEST_CASE("quantile interpolation") {
  CHECK(quantile({3, 1, 2}, 0.5) == doctest::Approx(2.0));
  CHECK(quantile({0, 10}, 0.25) == doctest::Approx(2.5));
  CHECK(quantile({4}, 0.9) == doctest::Approx(4.0));
  CHECK(kEnclosedFraction == doctest::Approx(0.393469).epsilon(1e-6));
}

TEST_CASE("effective psf of a Gaussian cloud hits the chi(3) quantile") {
  const double oracle = chi3_quantile(kEnclosedFraction);
  // Tabulated value: chi(3) inverse CDF at 1 - 1/sqrt(e).
  CHECK(oracle == doctest::Approx(1.35602).epsilon(1e-5));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  const int per = 50000;
  std::vector<Vec3> pts;
  for (int i = 0; i < per; ++i) pts.push_back({n(rng), n(rng), n(rng)});
  for (int i = 0; i < per; ++i) pts.push_back({20 + n(rng), n(rng), n(rng)});
  const EffectivePsf psf = effective_psf(pts, equal_kmeans2(pts));
  CHECK(std::abs(psf.rho1 / oracle - 1) < 0.01);
  CHECK(std::abs(psf.rho2 / oracle - 1) < 0.01);
}

TEST_CASE("effective psf under rotation and dilation") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({(i % 2 ? 3.0 : -3.0) + n(rng), 0.5 * n(rng), n(rng)});
  const EffectivePsf base = effective_psf(pts, equal_kmeans2(pts));

  const double a = 0.7;
  std::vector<Vec3> rotated, scaled;
  for (const Vec3& p : pts) {
    rotated.push_back({std::cos(a) * p.x - std::sin(a) * p.y, std::sin(a) * p.x + std::cos(a) * p.y, p.z});
    scaled.push_back(p * 2.5);
  }
  const EffectivePsf r = effective_psf(rotated, equal_kmeans2(rotated));
  const EffectivePsf s = effective_psf(scaled, equal_kmeans2(scaled));
  CHECK(r.weff_bar == doctest::Approx(base.weff_bar).epsilon(1e-9));
  CHECK(s.weff_bar == doctest::Approx(2.5 * base.weff_bar).epsilon(1e-9));
}

TEST_CASE("log bin edges") {
  const auto e = log_bin_edges(1e-3, 10, 60);
  REQUIRE(e.size() == 61);
  CHECK(e.front() == doctest::Approx(1e-3));
  CHECK(e.back() == doctest::Approx(10));
  CHECK(e[15] == doctest::Approx(1e-2));
}

TEST_CASE("histogram relative frequencies") {
  const auto edges = log_bin_edges(1e-3, 10, 60);
  const std::vector<SampleColumn> cols{{1e4, {0.2, 0.2, 0.2, 0.2, 0.2}}};
  const HistogramMap h = histogram_map(cols, edges, 600, 1000);
  const auto& rel = h.columns[0].relative;
  CHECK(*std::max_element(rel.begin(), rel.end()) == doctest::Approx(5.0 / 600000));

  const std::vector<SampleColumn> single{{1e4, {0.05}}};
  const HistogramMap one = histogram_map(single, edges, 3, 7);
  const auto& r1 = one.columns[0].relative;
  CHECK(std::count_if(r1.begin(), r1.end(), [](double v) { return v != 0; }) == 1);
  CHECK(*std::max_element(r1.begin(), r1.end()) == doctest::Approx(1.0 / 21));
}

TEST_CASE("histogram conserves counts") {
  const auto edges = log_bin_edges(1e-3, 10, 60);
  std::mt19937_64 rng(12);
  std::lognormal_distribution<double> ln(-1.0, 2.5);
  std::vector<SampleColumn> cols;
  for (double t : {1e3, 1e4, 1e5}) {
    SampleColumn c{t, {}};
    for (int i = 0; i < 500; ++i) c.values.push_back(ln(rng));
    cols.push_back(c);
  }
  const HistogramMap h = histogram_map(cols, edges, 10, 100);
  for (const HistogramColumn& c : h.columns) {
    std::size_t total = c.below + c.above;
    double rel = 0;
    for (std::size_t k = 0; k < c.counts.size(); ++k) {
      total += c.counts[k];
      rel += c.relative[k];
    }
    CHECK(total == 500);
    CHECK(c.samples == 500);
    CHECK(rel + static_cast<double>(c.below + c.above) / 1000 == doctest::Approx(0.5));
  }
}

TEST_CASE("histogram mode") {
  const auto edges = log_bin_edges(1e-3, 10, 60);
  const auto centres = bin_centres(edges);
  const double half_bin = (std::log10(edges[1]) - std::log10(edges[0])) / 2;

  std::vector<double> one(60, 0.0);
  one[23] = 0.4;
  CHECK(histogram_mode(one, edges) == doctest::Approx(centres[23]));

  CHECK_THROWS_AS(histogram_mode(std::vector<double>(60, 0.0), edges), EmptyColumn);

  for (double mu : {-1.713, -0.5, 0.31}) {
    std::vector<double> col;
    for (double c : centres) col.push_back(std::exp(-std::pow(std::log10(c) - mu, 2) / (2 * 0.15 * 0.15)));
    CHECK(std::abs(std::log10(histogram_mode(col, edges)) - mu) < half_bin);
  }

  std::vector<double> two(60, 0.0);
  for (std::size_t k = 0; k < 60; ++k) {
    const double x = std::log10(centres[k]);
    two[k] = 0.6 * std::exp(-std::pow(x + 2, 2) / 0.02) + 1.0 * std::exp(-std::pow(x - 0.2, 2) / 0.02);
  }
  CHECK(std::abs(std::log10(histogram_mode(two, edges)) - 0.2) < half_bin);

  std::vector<double> tie(60, 0.0);
  tie[10] = tie[40] = 0.3;
  CHECK(histogram_mode(tie, edges) == doctest::Approx(centres[10]));
}

TEST_CASE("scaling fit") {
  const double a = 1.2264, b = -0.3644;
  std::vector<ModePoint> pts;
  for (double t : {1e4, 3e4, 1e5, 3e5, 1e6}) pts.push_back({t, std::pow(10.0, a) * std::pow(t, b)});
  const ScalingFit f = fit_scaling(pts, 1e4, 1e6);
  CHECK(std::abs(f.a - a) < 1e-6);
  CHECK(std::abs(f.b - b) < 1e-6);
  CHECK(f.points_used == 5);

  auto with_wild = pts;
  with_wild.push_back({1e7, 123.0});
  with_wild.push_back({1e3, 1e-4});
  const ScalingFit w = fit_scaling(with_wild, 1e4, 1e6);
  CHECK(w.a == f.a);
  CHECK(w.b == f.b);

  const std::vector<ModePoint> two{{1e4, 0.1}, {1e6, 0.01}};
  const ScalingFit line = fit_scaling(two, 1e4, 1e6);
  CHECK(line.b == doctest::Approx(-0.5));
  CHECK(line.a == doctest::Approx(1.0));

  CHECK_THROWS_AS(fit_scaling(std::vector<ModePoint>{{1e4, 0.1}}, 1e4, 1e6), InsufficientPoints);
}

TEST_CASE("scaling fit ignores point order") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<ModePoint> pts;
  for (double t = 1e4; t <= 1e6; t *= 1.7) pts.push_back({t, u(rng)});
  const ScalingFit f = fit_scaling(pts, 1e4, 1e6);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(pts.begin(), pts.end(), rng);
    const ScalingFit g = fit_scaling(pts, 1e4, 1e6);
    CHECK(g.a == f.a);
    CHECK(g.b == f.b);
  }
}

}
