#include "qcm/configs.hpp"

#include <cmath>
#include <numbers>

#include "qcm/errors.hpp"

namespace qcm {
namespace {

const double kSin60 = std::sin(std::numbers::pi / 3.0);
const double kCos60 = std::cos(std::numbers::pi / 3.0);

DetectionConfig make(std::string name, std::initializer_list<Vec3> points) {
  DetectionConfig config{std::move(name), {}};
  for (const Vec3& p : points) config.focal_points.push_back(FocalPoint{p});
  return config;
}

}  // namespace

const std::vector<std::string>& builtin_config_names() {
  static const std::vector<std::string> names = {
      "tetrahedral",
      "z-augmented-trilateration",
      "orthogonal-trilateration",
      "orthogonal-trilateration-plus",
      "grid-2x2x2",
      "z-stack",
  };
  return names;
}

DetectionConfig builtin_config(std::string_view name) {
  const double s = kSin60;
  const double c = kCos60;
  if (name == "tetrahedral") {
    return make("tetrahedral", {{1, 1, 1}, {-1, -1, 1}, {-1, 1, -1}, {1, -1, -1}});
  }
  if (name == "z-augmented-trilateration") {
    return make("z-augmented-trilateration",
                {{0, 1, 0}, {0, 0, 0.5}, {0, 0, -0.5}, {-s, -c, 0}, {s, -c, 0}});
  }
  if (name == "orthogonal-trilateration") {
    return make("orthogonal-trilateration",
                {{0, 1, 0}, {0, 0, 1}, {-s, -c, 0}, {s, -c, 0}, {0, -s, -c}, {0, s, -c}});
  }
  if (name == "orthogonal-trilateration-plus") {
    return make("orthogonal-trilateration-plus",
                {{0, 1, 0.5},
                 {0, 1, -0.5},
                 {0, 0, 0},
                 {-s, -c, 0.5},
                 {s, -c, 0.5},
                 {-s, -c, -0.5},
                 {s, -c, -0.5}});
  }
  if (name == "grid-2x2x2") {
    return make("grid-2x2x2", {{-1, -1, -1},
                               {-1, 1, -1},
                               {1, -1, -1},
                               {1, 1, -1},
                               {-1, -1, 1},
                               {-1, 1, 1},
                               {1, -1, 1},
                               {1, 1, 1}});
  }
  if (name == "z-stack") {
    // The published coordinate table lists cos(pi/30) for the (sin, -cos)
    // point of the z = 1 and z = 0 layers, and +cos(pi/3) for the (-sin, cos)
    // point of the z = 1 layer. Both break the three-fold trilateration that
    // is scanned along z; the same triple (0,1), (-s,-c), (s,-c) is used on
    // every layer here.
    return make("z-stack", {{0, 1, 1},
                            {0, 1, 0},
                            {0, 1, -1},
                            {-s, -c, 1},
                            {s, -c, 1},
                            {-s, -c, 0},
                            {s, -c, 0},
                            {-s, -c, -1},
                            {s, -c, -1}});
  }
  throw UnknownConfig("unknown detection configuration: " + std::string(name));
}

}  // namespace qcm
