#include <doctest.h>

#include <cmath>

#include "qcm/configs.hpp"
#include "qcm/photon_sim.hpp"

using namespace qcm;

TEST_SUITE("photon_sim") {

TEST_CASE("emitters far outside the beam give no counts") {
  const BeamModel beam;
  const auto pair = EmitterPair::canonical({100, 0, 0}, {0, 100, 0}, 0.5);
  const CountRecord c = sample_counts(pair, beam, FocalPoint{}, 1e6, RngSeed{1, 2});
  CHECK(c.c1 == 0);
  CHECK(c.c2 == 0);
  CHECK(c.c11 == 0);
  CHECK(c.c22 == 0);
  CHECK(c.c12 == 0);
}

TEST_CASE("cross-emitter coincidences have the Poisson mean") {
  const BeamModel beam;
  const auto pair = EmitterPair::canonical({}, {}, 0.5);  // P1 = 1, P2 = 0.5 at the focus
  const double t = 1e6;
  Engine engine = make_engine({5, 0});
  const int draws = 10000;
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) sum += static_cast<double>(sample_counts(pair, beam, FocalPoint{}, t, engine).c12);
  const double mean = sum / draws;
  const double expected = 0.5 * t;
  const double se = std::sqrt(expected / draws);
  CHECK(std::abs(mean - expected) < 3 * se);
}

TEST_CASE("counts are reproducible from the seed") {
  const BeamModel beam;
  const auto pair = EmitterPair::canonical({0.1, 0, 0}, {0, -0.2, 0.3}, 0.4);
  const FocalPoint f{{1, 1, 1}};
  const CountRecord a = sample_counts(pair, beam, f, 1e4, RngSeed{9, 3});
  const CountRecord b = sample_counts(pair, beam, f, 1e4, RngSeed{9, 3});
  const CountRecord c = sample_counts(pair, beam, f, 1e4, RngSeed{9, 4});
  CHECK(a.c1 == b.c1);
  CHECK(a.c12 == b.c12);
  CHECK(a.c11 == b.c11);
  CHECK((a.c1 != c.c1 || a.c2 != c.c2 || a.c12 != c.c12));
}

TEST_CASE("reduce measurement") {
  const FocalPoint f{};
  CountRecord none;
  none.t = 1e4;
  const Measurement m0 = reduce_measurement(none, f, 1.5);
  CHECK(m0.intensity == 0.0);
  CHECK_FALSE(m0.g2.has_value());

  CountRecord coinc;
  coinc.t = 10;
  coinc.c12 = 7;
  const Measurement m1 = reduce_measurement(coinc, f, 1.5);
  REQUIRE(m1.g2.has_value());
  CHECK(*m1.g2 == doctest::Approx(1.0));

  CountRecord r;
  r.t = 1e4;
  r.c1 = 10000;
  r.c2 = 5000;
  CHECK(reduce_measurement(r, f, 1.5).intensity == doctest::Approx(1.0));
}

TEST_CASE("measurement sets") {
  const BeamModel beam;
  const auto pair = EmitterPair::canonical({0.2, 0.2, 0.2}, {-0.2, -0.2, -0.2}, 0.5);
  const auto ms = simulate_measurement_set(pair, beam, builtin_config("tetrahedral"), 1e4, {7, 0});
  CHECK(ms.size() == 4);
  CHECK(ms.warnings.empty());
  CHECK(ms.config_name == "tetrahedral");

  const auto again = simulate_measurement_set(pair, beam, builtin_config("tetrahedral"), 1e4, {7, 0});
  for (std::size_t j = 0; j < ms.size(); ++j) {
    CHECK(ms.measurements[j].intensity == again.measurements[j].intensity);
    CHECK(ms.measurements[j].g2 == again.measurements[j].g2);
  }

  DetectionConfig three{"three", {FocalPoint{{1, 0, 0}}, FocalPoint{{0, 1, 0}}, FocalPoint{{0, 0, 1}}}};
  const auto small = simulate_measurement_set(pair, beam, three, 1e4, {7, 0});
  REQUIRE(small.warnings.size() == 1);
  CHECK(small.warnings.front() == SimWarning::ConfigTooSmall);
}

TEST_CASE("co-located emitters read the constant g2 at every focal point") {
  const BeamModel beam;
  const double alpha = 0.5;
  const auto pair = EmitterPair::canonical({0.1, -0.1, 0.05}, {0.1, -0.1, 0.05}, alpha);
  const double t = 1e6;
  const auto ms = simulate_measurement_set(pair, beam, builtin_config("grid-2x2x2"), t, {21, 0});
  for (const Measurement& m : ms.measurements) {
    const MomentModel model = moment_model(pair, beam, m.focal, t);
    REQUIRE(m.g2.has_value());
    CHECK(std::abs(*m.g2 - 4.0 / 9.0) < 5 * std::sqrt(model.var_g2));
  }
}

TEST_CASE("intensity mean and variance match the moment model") {
  const BeamModel beam;
  const auto pair = EmitterPair::canonical({0.3, 0, 0.1}, {-0.2, 0.25, 0}, 0.6);
  const FocalPoint f{{1, -1, -1}};
  const double t = 1e4;
  Engine engine = make_engine({77, 1});
  const int draws = 20000;
  double s = 0, s2 = 0;
  for (int k = 0; k < draws; ++k) {
    const double i = reduce_measurement(sample_counts(pair, beam, f, t, engine), f, pair.brightness_sum()).intensity;
    s += i;
    s2 += i * i;
  }
  const double mean = s / draws;
  const double var = (s2 - draws * mean * mean) / (draws - 1);
  const MomentModel m = moment_model(pair, beam, f, t);
  CHECK(std::abs(mean - m.mu_intensity) < 5 * std::sqrt(m.var_intensity / draws));
  // Standard error of a sample variance is about var * sqrt(2 / n).
  CHECK(std::abs(var - m.var_intensity) < 5 * m.var_intensity * std::sqrt(2.0 / draws));
}

TEST_CASE("missing g2 becomes rarer with longer exposure") {
  const BeamModel beam;
  const auto pair = EmitterPair::canonical({0.8, 0.8, 0.8}, {0.9, 0.6, 0.7}, 0.3);
  const FocalPoint f{{-1, -1, -1}};
  int prev = 1 << 30;
  for (double t : {1e1, 1e2, 1e3}) {
    Engine engine = make_engine({3, 3});
    int missing = 0;
    for (int k = 0; k < 2000; ++k) {
      if (!reduce_measurement(sample_counts(pair, beam, f, t, engine), f, pair.brightness_sum()).g2) ++missing;
    }
    CHECK(missing <= prev);
    prev = missing;
  }
}

}
