#pragma once

// Flat record formats: measurement sets (CSV or JSON lines) and estimate
// records.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qcm/estimator.hpp"
#include "qcm/photon_sim.hpp"

namespace qcm {

enum class Format { Csv, Json };

/// Parses "csv" or "json"; throws InvalidInput otherwise.
Format parse_format(std::string_view name);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::vector<std::string> split_csv_line(std::string_view line);

/// Columns: config, focal_index, xi_x, xi_y, xi_z, t, intensity, g2 (empty
/// when missing), seed, stream. JSON lines carry the same keys, g2 null.
void write_measurements(std::ostream& out, const MeasurementSet& ms, Format format);
/// Accepts either format; detection is by the first non-blank character.
MeasurementSet read_measurements(std::istream& in);

struct EstimateRecord {
  std::uint64_t gt_id = 0;
  std::uint64_t trial = 0;
  Estimate estimate;
};

/// Columns: gt_id, trial, x1_hat, y1_hat, z1_hat, x2_hat, y2_hat, z2_hat,
/// alpha_hat, objective, converged, iterations, degenerate, wall_seconds.
void write_estimate(std::ostream& out, const EstimateRecord& rec, Format format,
                    bool header = true);

}  // namespace qcm
