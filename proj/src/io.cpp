#include "qcm/io.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "qcm/errors.hpp"

namespace qcm {
namespace {

using nlohmann::json;

const std::vector<std::string> kMeasurementColumns = {
    "config", "focal_index", "xi_x", "xi_y", "xi_z", "t", "intensity", "g2", "seed", "stream"};

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidInput("not an unsigned integer: '" + std::string(text) + "'");
  }
  return v;
}

Measurement measurement_from(double x, double y, double z, double t, double intensity,
                             std::optional<double> g2) {
  if (!(t > 0.0)) throw InvalidInput("measurement t must be positive");
  if (!(intensity >= 0.0)) throw InvalidInput("measurement intensity must be non-negative");
  if (g2 && !(*g2 >= 0.0 && *g2 <= 1.0)) throw InvalidInput("g2 must lie in [0, 1]");
  Measurement m;
  m.focal.xi = {x, y, z};
  m.t = t;
  m.intensity = intensity;
  m.g2 = g2;
  return m;
}

MeasurementSet read_csv(std::istream& in, std::string first_line) {
  const std::vector<std::string> header = split_csv_line(first_line);
  if (header != kMeasurementColumns) throw InvalidInput("unexpected measurement CSV header");
  MeasurementSet ms;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) throw InvalidInput("measurement row has the wrong column count");
    std::optional<double> g2;
    if (!f[7].empty()) g2 = parse_double(f[7]);
    ms.measurements.push_back(measurement_from(parse_double(f[2]), parse_double(f[3]),
                                               parse_double(f[4]), parse_double(f[5]),
                                               parse_double(f[6]), g2));
    if (first) {
      ms.config_name = f[0];
      ms.seed = RngSeed{parse_u64(f[8]), parse_u64(f[9])};
      first = false;
    }
  }
  return ms;
}

MeasurementSet read_jsonl(std::istream& in, std::string first_line) {
  MeasurementSet ms;
  bool first = true;
  std::string line = std::move(first_line);
  do {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("malformed JSON line: ") + e.what());
    }
    for (const auto& [key, _] : j.items()) {
      if (std::find(kMeasurementColumns.begin(), kMeasurementColumns.end(), key) ==
          kMeasurementColumns.end()) {
        throw InvalidInput("unknown measurement key: " + key);
      }
    }
    try {
      std::optional<double> g2;
      if (!j.at("g2").is_null()) g2 = j.at("g2").get<double>();
      ms.measurements.push_back(measurement_from(j.at("xi_x").get<double>(), j.at("xi_y").get<double>(),
                                                 j.at("xi_z").get<double>(), j.at("t").get<double>(),
                                                 j.at("intensity").get<double>(), g2));
      if (first) {
        ms.config_name = j.at("config").get<std::string>();
        ms.seed = RngSeed{j.at("seed").get<std::uint64_t>(), j.at("stream").get<std::uint64_t>()};
        first = false;
      }
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("bad measurement record: ") + e.what());
    }
  } while (std::getline(in, line));
  return ms;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw InvalidInput("unknown format: " + std::string(name));
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) throw InvalidInput("not a number: '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void write_measurements(std::ostream& out, const MeasurementSet& ms, Format format) {
  if (format == Format::Csv) {
    for (std::size_t i = 0; i < kMeasurementColumns.size(); ++i) {
      out << (i ? "," : "") << kMeasurementColumns[i];
    }
    out << '\n';
  }
  for (std::size_t i = 0; i < ms.measurements.size(); ++i) {
    const Measurement& m = ms.measurements[i];
    if (format == Format::Csv) {
      out << ms.config_name << ',' << i << ',' << format_double(m.focal.xi.x) << ','
          << format_double(m.focal.xi.y) << ',' << format_double(m.focal.xi.z) << ','
          << format_double(m.t) << ',' << format_double(m.intensity) << ','
          << (m.g2 ? format_double(*m.g2) : "") << ',' << ms.seed.seed << ',' << ms.seed.stream
          << '\n';
    } else {
      json j = {{"config", ms.config_name},
                {"focal_index", i},
                {"xi_x", m.focal.xi.x},
                {"xi_y", m.focal.xi.y},
                {"xi_z", m.focal.xi.z},
                {"t", m.t},
                {"intensity", m.intensity},
                {"g2", m.g2 ? json(*m.g2) : json(nullptr)},
                {"seed", ms.seed.seed},
                {"stream", ms.seed.stream}};
      out << j.dump() << '\n';
    }
  }
}

MeasurementSet read_measurements(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    MeasurementSet ms = line[pos] == '{' ? read_jsonl(in, line) : read_csv(in, line);
    if (ms.empty()) throw InvalidInput("measurement file holds no records");
    return ms;
  }
  throw InvalidInput("measurement file is empty");
}

void write_estimate(std::ostream& out, const EstimateRecord& rec, Format format, bool header) {
  const Estimate& e = rec.estimate;
  const Vec3& a = e.pair.x1();
  const Vec3& b = e.pair.x2();
  if (format == Format::Json) {
    json j = {{"gt_id", rec.gt_id},
              {"trial", rec.trial},
              {"x1_hat", {a.x, a.y, a.z}},
              {"x2_hat", {b.x, b.y, b.z}},
              {"alpha_hat", e.pair.alpha()},
              {"objective", e.objective},
              {"stage", e.stage == Stage::MLE ? "MLE" : "MME"},
              {"converged", e.converged},
              {"iterations", e.iterations},
              {"degenerate", e.degenerate},
              {"wall_seconds", e.wall_seconds}};
    out << j.dump() << '\n';
    return;
  }
  if (header) {
    out << "gt_id,trial,x1_hat,y1_hat,z1_hat,x2_hat,y2_hat,z2_hat,alpha_hat,objective,converged,"
           "iterations,degenerate,wall_seconds\n";
  }
  out << rec.gt_id << ',' << rec.trial << ',' << format_double(a.x) << ',' << format_double(a.y)
      << ',' << format_double(a.z) << ',' << format_double(b.x) << ',' << format_double(b.y) << ','
      << format_double(b.z) << ',' << format_double(e.pair.alpha()) << ','
      << format_double(e.objective) << ',' << (e.converged ? 1 : 0) << ',' << e.iterations << ','
      << (e.degenerate ? 1 : 0) << ',' << format_double(e.wall_seconds) << '\n';
}

}  // namespace qcm
