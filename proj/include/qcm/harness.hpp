#pragma once

// Monte-Carlo campaigns: random ground truths, reproducible per-trial
// streams, incremental persistence with resume, and the post-processing
// that turns estimate files into effective-PSF statistics and scaling fits.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcm/analysis.hpp"
#include "qcm/estimator.hpp"
#include "qcm/rng.hpp"

namespace qcm {

struct GroundTruthSampler {
  /// Both emitters uniform in the ball of this radius about the origin.
  double radius = 0.5;
  double alpha_min = 0.1;
  double alpha_max = 0.9;
};

EmitterPair sample_ground_truth(const RngSeed& seed, const GroundTruthSampler& sampler);

struct CampaignSpec {
  std::string config = "tetrahedral";
  std::size_t n_truths = 1;
  std::size_t m_trials = 2;
  std::vector<double> t_grid;
  std::uint64_t seed = 0;
  GroundTruthSampler sampler;
  /// Replaces the sampler (every ground truth is this pair).
  std::optional<EmitterPair> fixed_truth;
  std::filesystem::path output;
  int threads = 1;
  /// Drop trials whose likelihood stage did not converge before clustering.
  bool exclude_unconverged = false;
  double fit_t_min = 1e4;
  double fit_t_max = 1e6;
  int bins = 60;
  double bin_lo = 1e-3;
  double bin_hi = 10.0;

  /// Throws InvalidInput when a field is out of range.
  void validate() const;
};

/// Unknown keys and malformed values throw InvalidInput.
CampaignSpec campaign_spec_from_json(const nlohmann::json& j);
/// `threads` and `output` are run settings and are not serialised.
nlohmann::json campaign_spec_to_json(const CampaignSpec& spec);

/// One simulate -> localise trial.
struct TrialRecord {
  std::size_t gt_id = 0;
  double t = 0.0;
  std::size_t trial = 0;
  EmitterPair truth;
  Estimate estimate;
  /// localise threw; the estimate holds NaN positions.
  bool failed = false;
};

struct PsfRecord {
  std::size_t gt_id = 0;
  double t = 0.0;
  EffectivePsf psf;
  Vec3 centroid1;
  Vec3 centroid2;
  std::size_t trials_used = 0;
  std::size_t unconverged = 0;
};

struct ColumnSummary {
  double t = 0.0;
  std::optional<double> mode;
  /// Samples with weff_bar in [0, 1] w0.
  std::size_t sub_diffraction = 0;
};

struct CampaignResult {
  std::vector<PsfRecord> records;
  HistogramMap histogram;
  std::vector<ColumnSummary> columns;
  std::optional<ScalingFit> fit;
};

/// Runs M trials for one (ground truth, time) block using `threads` workers.
std::vector<TrialRecord> run_block(const CampaignSpec& spec, const DetectionConfig& config,
                                   const BeamModel& beam, std::size_t gt_id,
                                   const EmitterPair& truth, double t);

/// Pools the block's estimates, clusters them and measures the effective PSF.
/// weff values are NaN when no usable trial remains.
PsfRecord analyse_block(const std::vector<TrialRecord>& trials, bool exclude_unconverged);

/// Histogram, modes and scaling fit over per-block records.
CampaignResult summarise(const CampaignSpec& spec, std::vector<PsfRecord> records);

struct BlockProgress {
  std::size_t gt_id = 0;
  double t = 0.0;
  std::size_t blocks_done = 0;
  std::size_t blocks_total = 0;
  bool resumed = false;
};
using ProgressFn = std::function<void(const BlockProgress&)>;

/// Runs or resumes the campaign in spec.output and writes all result files.
/// An exception from `progress` stops the run; completed blocks stay on disk.
CampaignResult run_campaign(const CampaignSpec& spec, const ProgressFn& progress = {});

/// Recomputes every result file of a campaign directory from its estimate
/// files; results go to `out_dir` (defaults to `dir`).
CampaignResult analyse_directory(const std::filesystem::path& dir,
                                 std::optional<std::filesystem::path> out_dir = std::nullopt);

/// Name of the estimates file for one time point.
std::string estimates_file_name(const std::string& config, double t);

}  // namespace qcm
