// qcm: command-line front end for simulation, localisation and campaigns.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcm/configs.hpp"
#include "qcm/errors.hpp"
#include "qcm/estimator.hpp"
#include "qcm/harness.hpp"
#include "qcm/io.hpp"
#include "qcm/photon_sim.hpp"

namespace {

using nlohmann::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string output;
  std::string format = "csv";
};

qcm::Vec3 parse_vec(const std::string& text, const char* what) {
  const auto parts = qcm::split_csv_line(text);
  if (parts.size() != 3) throw qcm::InvalidInput(std::string(what) + " needs three comma-separated values");
  try {
    return {qcm::parse_double(parts[0]), qcm::parse_double(parts[1]), qcm::parse_double(parts[2])};
  } catch (const std::exception&) {
    throw qcm::InvalidInput(std::string("bad number in ") + what + ": " + text);
  }
}

// Writes to --output when given, stdout otherwise.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw qcm::InvalidInput("cannot open " + path + " for writing");
  fn(out);
}

void list_configs(const Globals& g) {
  const qcm::Format fmt = qcm::parse_format(g.format);
  emit(g.output, [&](std::ostream& out) {
    if (fmt == qcm::Format::Json) {
      json all = json::array();
      for (const auto& name : qcm::builtin_config_names()) {
        const auto cfg = qcm::builtin_config(name);
        json pts = json::array();
        for (const auto& f : cfg.focal_points) pts.push_back({f.xi.x, f.xi.y, f.xi.z});
        all.push_back({{"name", cfg.name}, {"focal_points", pts}});
      }
      out << all.dump(2) << '\n';
      return;
    }
    out << "config,index,x,y,z\n";
    for (const auto& name : qcm::builtin_config_names()) {
      const auto cfg = qcm::builtin_config(name);
      for (std::size_t i = 0; i < cfg.size(); ++i) {
        const auto& xi = cfg.focal_points[i].xi;
        out << cfg.name << ',' << i << ',' << qcm::format_double(xi.x) << ','
            << qcm::format_double(xi.y) << ',' << qcm::format_double(xi.z) << '\n';
      }
    }
  });
}

struct SimulateArgs {
  std::string config = "tetrahedral";
  double t = 0.0;
  std::string x1, x2;
  std::optional<double> alpha;
  std::uint64_t stream = 0;
  bool noiseless = false;
};

void simulate(const Globals& g, const SimulateArgs& a) {
  const qcm::Format fmt = qcm::parse_format(g.format);
  const auto cfg = qcm::builtin_config(a.config);
  const std::uint64_t seed = g.seed.value_or(0);
  const qcm::RngSeed rng{seed, a.stream};

  qcm::EmitterPair pair;
  if (a.x1.empty() && a.x2.empty() && !a.alpha) {
    // No pair given: draw one from the default sampler on a separate stream.
    pair = qcm::sample_ground_truth({seed, qcm::derive_stream(0x636c69ULL, a.stream)}, {});
  } else {
    if (a.x1.empty() || a.x2.empty() || !a.alpha) {
      throw qcm::InvalidInput("--x1, --x2 and --alpha must be given together");
    }
    pair = qcm::EmitterPair::canonical(parse_vec(a.x1, "--x1"), parse_vec(a.x2, "--x2"), *a.alpha);
  }
  const qcm::BeamModel beam;
  const qcm::MeasurementSet ms = a.noiseless ? qcm::noiseless_measurement_set(pair, beam, cfg, a.t)
                                             : qcm::simulate_measurement_set(pair, beam, cfg, a.t, rng);
  for (const auto& w : ms.warnings) {
    if (w == qcm::SimWarning::ConfigTooSmall) {
      std::cerr << "warning: fewer than 4 focal points; the pair is not identifiable\n";
    }
  }
  emit(g.output, [&](std::ostream& out) { qcm::write_measurements(out, ms, fmt); });
}

void localise(const Globals& g, const std::string& input) {
  const qcm::Format fmt = qcm::parse_format(g.format);
  std::ifstream in(input);
  if (!in) throw qcm::InvalidInput("cannot open " + input);
  const qcm::MeasurementSet ms = qcm::read_measurements(in);
  const qcm::Estimate est = qcm::localise(ms, qcm::BeamModel{});
  emit(g.output, [&](std::ostream& out) { qcm::write_estimate(out, {0, 0, est}, fmt); });
}

void campaign(const Globals& g, const std::string& spec_path) {
  std::ifstream in(spec_path);
  if (!in) throw qcm::InvalidInput("cannot open " + spec_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw qcm::InvalidInput(std::string("spec is not valid JSON: ") + e.what());
  }
  qcm::CampaignSpec spec = qcm::campaign_spec_from_json(j);
  if (g.seed) spec.seed = *g.seed;
  if (g.threads) spec.threads = *g.threads;
  if (!g.output.empty()) spec.output = g.output;
  if (spec.output.empty()) throw qcm::InvalidInput("no output directory: set \"output\" or --output");

  const auto result = qcm::run_campaign(spec, [](const qcm::BlockProgress& p) {
    std::cerr << "block " << p.blocks_done << '/' << p.blocks_total << " gt=" << p.gt_id
              << " t=" << qcm::format_double(p.t) << (p.resumed ? " (resumed)" : "") << '\n';
  });
  if (result.fit) {
    std::cerr << "slope b = " << result.fit->b << ", intercept a = " << result.fit->a << '\n';
  } else {
    std::cerr << "too few modes in the fit window for a scaling fit\n";
  }
}

void analyse(const Globals& g, const std::string& dir) {
  std::optional<std::filesystem::path> out;
  if (!g.output.empty()) out = g.output;
  const auto result = qcm::analyse_directory(dir, out);
  if (result.fit) std::cerr << "slope b = " << result.fit->b << ", intercept a = " << result.fit->a << '\n';
}

void report(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum correlation microscopy localisation toolkit", "qcm"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "64-bit master seed");
  app.add_option("--threads", g.threads, "Worker threads for campaigns")->check(CLI::PositiveNumber);
  app.add_option("--output,-o", g.output, "Output file (directory for campaign/analyse)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* configs_cmd = app.add_subcommand("configs", "List built-in detection configurations");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate one measurement set");
  sim_cmd->add_option("--config", sim.config, "Detection configuration");
  sim_cmd->add_option("--t", sim.t, "Acquisition time")->required();
  sim_cmd->add_option("--x1", sim.x1, "Position of emitter 1 as x,y,z");
  sim_cmd->add_option("--x2", sim.x2, "Position of emitter 2 as x,y,z");
  sim_cmd->add_option("--alpha", sim.alpha, "Brightness ratio");
  sim_cmd->add_option("--stream", sim.stream, "RNG stream id");
  sim_cmd->add_flag("--noiseless", sim.noiseless, "Emit model means instead of samples");

  std::string loc_input;
  auto* loc_cmd = app.add_subcommand("localise", "Estimate an emitter pair from a measurement file");
  loc_cmd->add_option("--input,input", loc_input, "Measurement file")->required();

  std::string spec_path;
  auto* camp_cmd = app.add_subcommand("campaign", "Run or resume a Monte-Carlo campaign");
  camp_cmd->add_option("--spec,spec", spec_path, "Campaign spec (JSON)")->required();

  std::string analyse_dir;
  auto* an_cmd = app.add_subcommand("analyse", "Recompute histograms, modes and fits of a campaign");
  an_cmd->add_option("--input,input", analyse_dir, "Campaign directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report("UsageError", e.what());
    return 2;
  }

  try {
    if (*configs_cmd) list_configs(g);
    else if (*sim_cmd) simulate(g, sim);
    else if (*loc_cmd) localise(g, loc_input);
    else if (*camp_cmd) campaign(g, spec_path);
    else if (*an_cmd) analyse(g, analyse_dir);
  } catch (const qcm::Error& e) {
    report(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report("InternalError", e.what());
    return 1;
  }
  return 0;
}
