#include "qcm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "qcm/configs.hpp"
#include "qcm/errors.hpp"
#include "qcm/io.hpp"
#include "qcm/photon_sim.hpp"

namespace qcm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kTruthDomain = 0x7472757468ULL;  // "truth"
constexpr std::uint64_t kTrialDomain = 0x747269616cULL;  // "trial"
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* const kEstimateHeader =
    "config,gt_id,t,trial,x1,y1,z1,x2,y2,z2,alpha,x1_hat,y1_hat,z1_hat,x2_hat,y2_hat,z2_hat,"
    "alpha_hat,objective,converged,iterations,degenerate,failed";
constexpr std::size_t kEstimateColumns = 23;

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw InvalidInput(std::string(what) + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw InvalidInput(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw InvalidInput(std::string("unknown key in ") + where + ": " + key);
    }
  }
}

void write_trial(std::ostream& out, const std::string& config, const TrialRecord& r) {
  const Vec3& a = r.truth.x1();
  const Vec3& b = r.truth.x2();
  const Vec3& ea = r.estimate.pair.x1();
  const Vec3& eb = r.estimate.pair.x2();
  const auto f = format_double;
  out << config << ',' << r.gt_id << ',' << f(r.t) << ',' << r.trial << ',' << f(a.x) << ','
      << f(a.y) << ',' << f(a.z) << ',' << f(b.x) << ',' << f(b.y) << ',' << f(b.z) << ','
      << f(r.truth.alpha()) << ',' << f(ea.x) << ',' << f(ea.y) << ',' << f(ea.z) << ','
      << f(eb.x) << ',' << f(eb.y) << ',' << f(eb.z) << ',' << f(r.estimate.pair.alpha()) << ','
      << f(r.estimate.objective) << ',' << (r.estimate.converged ? 1 : 0) << ','
      << r.estimate.iterations << ',' << (r.estimate.degenerate ? 1 : 0) << ','
      << (r.failed ? 1 : 0) << '\n';
}

TrialRecord parse_trial(const std::vector<std::string>& f) {
  if (f.size() != kEstimateColumns) throw InvalidInput("estimate row has the wrong column count");
  auto d = [&](std::size_t i) { return parse_double(f[i]); };
  auto u = [&](std::size_t i) { return static_cast<std::size_t>(std::stoull(f[i])); };
  TrialRecord r;
  r.gt_id = u(1);
  r.t = d(2);
  r.trial = u(3);
  r.truth = EmitterPair::canonical({d(4), d(5), d(6)}, {d(7), d(8), d(9)}, d(10));
  r.failed = f[22] == "1";
  if (!r.failed) {
    r.estimate.pair = EmitterPair::canonical({d(11), d(12), d(13)}, {d(14), d(15), d(16)}, d(17));
  }
  r.estimate.objective = d(18);
  r.estimate.converged = f[19] == "1";
  r.estimate.iterations = static_cast<int>(std::stol(f[20]));
  r.estimate.degenerate = f[21] == "1";
  return r;
}

// Rows of one estimates file grouped by ground truth. A malformed final
// line (interrupted write) is dropped; malformed lines elsewhere throw.
std::map<std::size_t, std::vector<TrialRecord>> load_estimates(const fs::path& path) {
  std::map<std::size_t, std::vector<TrialRecord>> blocks;
  std::ifstream in(path);
  if (!in) return blocks;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.empty()) return blocks;
  if (lines.front() != kEstimateHeader) throw InvalidInput("unexpected header in " + path.string());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      TrialRecord r = parse_trial(split_csv_line(lines[i]));
      blocks[r.gt_id].push_back(std::move(r));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) break;
      throw InvalidInput("bad row " + std::to_string(i + 1) + " in " + path.string() + ": " +
                         e.what());
    }
  }
  return blocks;
}

bool block_complete(std::vector<TrialRecord>& rows, std::size_t m, double t) {
  if (rows.size() != m) return false;
  std::sort(rows.begin(), rows.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.trial < b.trial; });
  for (std::size_t k = 0; k < m; ++k) {
    if (rows[k].trial != k || rows[k].t != t) return false;
  }
  return true;
}

void write_results(const fs::path& dir, const CampaignSpec& spec, const CampaignResult& result) {
  const auto f = format_double;
  {
    std::ofstream out(dir / "effective_psf.csv");
    out << "config,gt_id,t,rho1,rho2,weff1,weff2,weff_bar,c1x,c1y,c1z,c2x,c2y,c2z,trials_used,"
           "unconverged\n";
    for (const PsfRecord& r : result.records) {
      out << spec.config << ',' << r.gt_id << ',' << f(r.t) << ',' << f(r.psf.rho1) << ','
          << f(r.psf.rho2) << ',' << f(r.psf.weff1) << ',' << f(r.psf.weff2) << ','
          << f(r.psf.weff_bar) << ',' << f(r.centroid1.x) << ',' << f(r.centroid1.y) << ','
          << f(r.centroid1.z) << ',' << f(r.centroid2.x) << ',' << f(r.centroid2.y) << ','
          << f(r.centroid2.z) << ',' << r.trials_used << ',' << r.unconverged << '\n';
    }
  }
  {
    std::ofstream out(dir / "histogram.csv");
    out << "t,bin,lo,hi,count,relative\n";
    const auto& edges = result.histogram.edges;
    for (const HistogramColumn& c : result.histogram.columns) {
      for (std::size_t k = 0; k < c.counts.size(); ++k) {
        out << f(c.t) << ',' << k << ',' << f(edges[k]) << ',' << f(edges[k + 1]) << ','
            << c.counts[k] << ',' << f(c.relative[k]) << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "modes.csv");
    out << "t,mode,samples,below,above,sub_diffraction\n";
    for (std::size_t i = 0; i < result.columns.size(); ++i) {
      const ColumnSummary& c = result.columns[i];
      const HistogramColumn& h = result.histogram.columns[i];
      out << f(c.t) << ',' << (c.mode ? f(*c.mode) : "") << ',' << h.samples << ',' << h.below
          << ',' << h.above << ',' << c.sub_diffraction << '\n';
    }
  }
  json summary = {{"config", spec.config},
                  {"n_truths", spec.n_truths},
                  {"m_trials", spec.m_trials},
                  {"window", {spec.fit_t_min, spec.fit_t_max}}};
  json modes = json::array();
  json sub = json::array();
  for (const ColumnSummary& c : result.columns) {
    if (c.mode) modes.push_back({c.t, *c.mode});
    sub.push_back({c.t, c.sub_diffraction});
  }
  summary["modes"] = modes;
  summary["sub_diffraction"] = sub;
  if (result.fit) {
    summary["a"] = result.fit->a;
    summary["b"] = result.fit->b;
    summary["residual"] = result.fit->residual;
    summary["points_used"] = result.fit->points_used;
  } else {
    summary["a"] = nullptr;
    summary["b"] = nullptr;
    summary["residual"] = nullptr;
    summary["points_used"] = 0;
  }
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
}

std::vector<EmitterPair> ground_truths(const CampaignSpec& spec) {
  std::vector<EmitterPair> truths;
  truths.reserve(spec.n_truths);
  for (std::size_t g = 0; g < spec.n_truths; ++g) {
    truths.push_back(spec.fixed_truth
                         ? *spec.fixed_truth
                         : sample_ground_truth(RngSeed{spec.seed, derive_stream(kTruthDomain, g)},
                                               spec.sampler));
  }
  return truths;
}

}  // namespace

EmitterPair sample_ground_truth(const RngSeed& seed, const GroundTruthSampler& sampler) {
  Engine engine = make_engine(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  auto in_ball = [&] {
    Vec3 dir{normal(engine), normal(engine), normal(engine)};
    const double len = norm(dir);
    const double r = sampler.radius * std::cbrt(uniform(engine));
    return len > 0.0 ? dir * (r / len) : Vec3{};
  };
  const Vec3 a = in_ball();
  const Vec3 b = in_ball();
  const double alpha = sampler.alpha_min + (sampler.alpha_max - sampler.alpha_min) * uniform(engine);
  return EmitterPair::canonical(a, b, alpha);
}

void CampaignSpec::validate() const {
  builtin_config(config);
  if (n_truths < 1) throw InvalidInput("N must be at least 1");
  if (m_trials < 2) throw InvalidInput("M must be at least 2");
  if (t_grid.empty()) throw InvalidInput("t_grid must not be empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0) || !std::isfinite(t_grid[i])) throw InvalidInput("t_grid entries must be positive");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw InvalidInput("t_grid must be strictly increasing");
  }
  if (!(sampler.radius >= 0.0)) throw InvalidInput("sampler radius must be non-negative");
  if (!(sampler.alpha_min > 0.0 && sampler.alpha_min < sampler.alpha_max && sampler.alpha_max <= 1.0)) {
    throw InvalidInput("sampler alpha range must satisfy 0 < alpha_min < alpha_max <= 1");
  }
  if (threads < 1) throw InvalidInput("threads must be at least 1");
  if (!(fit_t_min > 0.0 && fit_t_max > fit_t_min)) throw InvalidInput("invalid fit window");
  if (bins < 1 || !(bin_lo > 0.0 && bin_hi > bin_lo)) throw InvalidInput("invalid histogram binning");
}

CampaignSpec campaign_spec_from_json(const json& j) {
  require_keys(j,
               {"config", "N", "M", "t_grid", "seed", "sampler", "fixed_truth", "output", "threads",
                "exclude_unconverged", "fit_window", "bins"},
               "campaign spec");
  CampaignSpec spec;
  try {
    spec.config = j.at("config").get<std::string>();
    spec.n_truths = j.at("N").get<std::size_t>();
    spec.m_trials = j.at("M").get<std::size_t>();
    spec.t_grid = j.at("t_grid").get<std::vector<double>>();
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("sampler")) {
      const json& s = j["sampler"];
      require_keys(s, {"radius", "alpha_min", "alpha_max"}, "sampler");
      spec.sampler.radius = s.value("radius", spec.sampler.radius);
      spec.sampler.alpha_min = s.value("alpha_min", spec.sampler.alpha_min);
      spec.sampler.alpha_max = s.value("alpha_max", spec.sampler.alpha_max);
    }
    if (j.contains("fixed_truth") && !j["fixed_truth"].is_null()) {
      const json& ft = j["fixed_truth"];
      require_keys(ft, {"x1", "x2", "alpha"}, "fixed_truth");
      spec.fixed_truth = EmitterPair::canonical(vec_from(ft.at("x1"), "x1"), vec_from(ft.at("x2"), "x2"),
                                                ft.at("alpha").get<double>());
    }
    if (j.contains("output")) spec.output = j["output"].get<std::string>();
    spec.threads = j.value("threads", 1);
    spec.exclude_unconverged = j.value("exclude_unconverged", false);
    if (j.contains("fit_window")) {
      const auto w = j["fit_window"].get<std::vector<double>>();
      if (w.size() != 2) throw InvalidInput("fit_window must hold [t_min, t_max]");
      spec.fit_t_min = w[0];
      spec.fit_t_max = w[1];
    }
    if (j.contains("bins")) {
      const json& b = j["bins"];
      require_keys(b, {"count", "lo", "hi"}, "bins");
      spec.bins = b.value("count", spec.bins);
      spec.bin_lo = b.value("lo", spec.bin_lo);
      spec.bin_hi = b.value("hi", spec.bin_hi);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad campaign spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json campaign_spec_to_json(const CampaignSpec& spec) {
  json j = {{"config", spec.config},
            {"N", spec.n_truths},
            {"M", spec.m_trials},
            {"t_grid", spec.t_grid},
            {"seed", spec.seed},
            {"sampler",
             {{"radius", spec.sampler.radius},
              {"alpha_min", spec.sampler.alpha_min},
              {"alpha_max", spec.sampler.alpha_max}}},
            {"exclude_unconverged", spec.exclude_unconverged},
            {"fit_window", {spec.fit_t_min, spec.fit_t_max}},
            {"bins", {{"count", spec.bins}, {"lo", spec.bin_lo}, {"hi", spec.bin_hi}}}};
  if (spec.fixed_truth) {
    j["fixed_truth"] = {{"x1", vec_json(spec.fixed_truth->x1())},
                        {"x2", vec_json(spec.fixed_truth->x2())},
                        {"alpha", spec.fixed_truth->alpha()}};
  }
  return j;
}

std::string estimates_file_name(const std::string& config, double t) {
  return "estimates_" + config + "_t" + format_double(t) + ".csv";
}

std::vector<TrialRecord> run_block(const CampaignSpec& spec, const DetectionConfig& config,
                                   const BeamModel& beam, std::size_t gt_id,
                                   const EmitterPair& truth, double t) {
  std::vector<TrialRecord> rows(spec.m_trials);
  const std::uint64_t t_bits = std::bit_cast<std::uint64_t>(t);
  auto run_trial = [&](std::size_t k) {
    TrialRecord& r = rows[k];
    r.gt_id = gt_id;
    r.t = t;
    r.trial = k;
    r.truth = truth;
    const RngSeed seed{spec.seed, derive_stream(kTrialDomain, gt_id, t_bits, k)};
    try {
      const MeasurementSet ms = simulate_measurement_set(truth, beam, config, t, seed);
      r.estimate = localise(ms, beam);
      r.estimate.wall_seconds = 0.0;
    } catch (const Error&) {
      r.failed = true;
      r.estimate = Estimate{};
      r.estimate.objective = kNaN;
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(spec.threads), rows.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < rows.size(); ++k) run_trial(k);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < rows.size(); k = next++) run_trial(k);
      });
    }
  }
  return rows;
}

PsfRecord analyse_block(const std::vector<TrialRecord>& trials, bool exclude_unconverged) {
  PsfRecord rec;
  if (!trials.empty()) {
    rec.gt_id = trials.front().gt_id;
    rec.t = trials.front().t;
  }
  std::vector<Vec3> points;
  for (const TrialRecord& r : trials) {
    if (!r.estimate.converged) ++rec.unconverged;
    if (r.failed || (exclude_unconverged && !r.estimate.converged)) continue;
    points.push_back(r.estimate.pair.x1());
    points.push_back(r.estimate.pair.x2());
    ++rec.trials_used;
  }
  if (points.empty()) {
    rec.psf = EffectivePsf{kNaN, kNaN, kNaN, kNaN, kNaN};
    rec.centroid1 = rec.centroid2 = Vec3{kNaN, kNaN, kNaN};
    return rec;
  }
  const ClusterResult clusters = equal_kmeans2(points);
  rec.psf = effective_psf(points, clusters);
  rec.centroid1 = clusters.centroid1;
  rec.centroid2 = clusters.centroid2;
  return rec;
}

CampaignResult summarise(const CampaignSpec& spec, std::vector<PsfRecord> records) {
  std::sort(records.begin(), records.end(), [](const PsfRecord& a, const PsfRecord& b) {
    return a.t != b.t ? a.t < b.t : a.gt_id < b.gt_id;
  });
  CampaignResult result;
  result.records = std::move(records);

  std::vector<SampleColumn> samples;
  for (double t : spec.t_grid) {
    SampleColumn col{t, {}};
    for (const PsfRecord& r : result.records) {
      if (r.t == t && std::isfinite(r.psf.weff_bar)) col.values.push_back(r.psf.weff_bar);
    }
    samples.push_back(std::move(col));
  }
  const std::vector<double> edges = log_bin_edges(spec.bin_lo, spec.bin_hi, spec.bins);
  result.histogram = histogram_map(samples, edges, spec.n_truths, spec.m_trials);

  std::vector<ModePoint> modes;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ColumnSummary c;
    c.t = samples[i].t;
    c.sub_diffraction = static_cast<std::size_t>(std::count_if(
        samples[i].values.begin(), samples[i].values.end(), [](double w) { return w >= 0.0 && w <= 1.0; }));
    try {
      c.mode = histogram_mode(result.histogram.columns[i].relative, edges);
      modes.push_back({c.t, *c.mode});
    } catch (const EmptyColumn&) {
    }
    result.columns.push_back(c);
  }
  try {
    result.fit = fit_scaling(modes, spec.fit_t_min, spec.fit_t_max);
  } catch (const InsufficientPoints&) {
  }
  return result;
}

CampaignResult run_campaign(const CampaignSpec& spec, const ProgressFn& progress) {
  spec.validate();
  if (spec.output.empty()) throw InvalidInput("campaign output path is empty");
  const DetectionConfig config = builtin_config(spec.config);
  const BeamModel beam;
  const fs::path dir = spec.output;
  fs::create_directories(dir);

  const json spec_json = campaign_spec_to_json(spec);
  const fs::path spec_path = dir / "spec.json";
  if (fs::exists(spec_path)) {
    std::ifstream in(spec_path);
    json saved;
    try {
      saved = json::parse(in);
    } catch (const json::exception&) {
      throw InvalidInput("unreadable spec.json in " + dir.string());
    }
    if (saved != spec_json) throw InvalidInput("output directory holds a different campaign: " + dir.string());
  } else {
    std::ofstream(spec_path) << spec_json.dump(2) << '\n';
  }

  const std::vector<EmitterPair> truths = ground_truths(spec);
  std::vector<PsfRecord> records;
  BlockProgress state;
  state.blocks_total = spec.t_grid.size() * spec.n_truths;

  for (double t : spec.t_grid) {
    const fs::path path = dir / estimates_file_name(spec.config, t);
    auto existing = load_estimates(path);
    std::map<std::size_t, std::vector<TrialRecord>> complete;
    for (auto& [g, rows] : existing) {
      if (g < spec.n_truths && block_complete(rows, spec.m_trials, t)) complete[g] = std::move(rows);
    }
    {
      // Keep only complete blocks so appended blocks start on a clean line.
      std::ofstream out(path, std::ios::trunc);
      out << kEstimateHeader << '\n';
      for (const auto& [g, rows] : complete) {
        for (const TrialRecord& r : rows) write_trial(out, spec.config, r);
      }
    }
    for (std::size_t g = 0; g < spec.n_truths; ++g) {
      state.gt_id = g;
      state.t = t;
      if (auto it = complete.find(g); it != complete.end()) {
        records.push_back(analyse_block(it->second, spec.exclude_unconverged));
        state.resumed = true;
      } else {
        std::vector<TrialRecord> rows = run_block(spec, config, beam, g, truths[g], t);
        std::ofstream out(path, std::ios::app);
        for (const TrialRecord& r : rows) write_trial(out, spec.config, r);
        out.flush();
        records.push_back(analyse_block(rows, spec.exclude_unconverged));
        state.resumed = false;
      }
      ++state.blocks_done;
      if (progress) progress(state);
    }
  }

  // Blocks may have been appended after resumed ones; store sorted.
  for (double t : spec.t_grid) {
    const fs::path path = dir / estimates_file_name(spec.config, t);
    auto blocks = load_estimates(path);
    std::ofstream out(path, std::ios::trunc);
    out << kEstimateHeader << '\n';
    for (auto& [g, rows] : blocks) {
      std::sort(rows.begin(), rows.end(),
                [](const TrialRecord& a, const TrialRecord& b) { return a.trial < b.trial; });
      for (const TrialRecord& r : rows) write_trial(out, spec.config, r);
    }
  }

  CampaignResult result = summarise(spec, std::move(records));
  write_results(dir, spec, result);
  return result;
}

CampaignResult analyse_directory(const fs::path& dir, std::optional<fs::path> out_dir) {
  std::ifstream in(dir / "spec.json");
  if (!in) throw InvalidInput("no spec.json in " + dir.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("unreadable spec.json: ") + e.what());
  }
  const CampaignSpec spec = campaign_spec_from_json(j);

  std::vector<PsfRecord> records;
  for (double t : spec.t_grid) {
    const fs::path path = dir / estimates_file_name(spec.config, t);
    if (!fs::exists(path)) throw InvalidInput("missing estimates file " + path.string());
    auto blocks = load_estimates(path);
    for (auto& [g, rows] : blocks) {
      if (g < spec.n_truths && block_complete(rows, spec.m_trials, t)) {
        records.push_back(analyse_block(rows, spec.exclude_unconverged));
      }
    }
  }
  CampaignResult result = summarise(spec, std::move(records));
  const fs::path target = out_dir.value_or(dir);
  fs::create_directories(target);
  write_results(target, spec, result);
  return result;
}

}  // namespace qcm
