#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qcm/optics.hpp"

namespace qcm {

/// Named, ordered set of focal points (units of w0).
struct DetectionConfig {
  std::string name;
  std::vector<FocalPoint> focal_points;

  std::size_t size() const { return focal_points.size(); }
};

/// Names of the six built-in configurations, in canonical order.
const std::vector<std::string>& builtin_config_names();

/// Throws UnknownConfig for names outside builtin_config_names().
DetectionConfig builtin_config(std::string_view name);

}  // namespace qcm
