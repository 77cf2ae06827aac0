#pragma once

// Gaussian-beam detection model for two single-photon emitters observed
// through a translated confocal focus. All lengths are in units of w0.

#include <numbers>

#include "qcm/vec3.hpp"

namespace qcm {

/// Floor applied to every model variance so the Gaussian likelihood stays
/// finite when both emitters sit far outside the PSF.
inline constexpr double kVarianceFloor = 1e-12;

enum class WaistModel {
  /// w(z) = w0 * sqrt(1 + (z/zR)^2)
  Standard,
  /// w(z) = w0 * sqrt(1 + z/zR); NaN for z < -zR. Kept for comparison only.
  AsPrinted,
};

class BeamModel {
 public:
  /// Defaults give w0 = 1 and lambda = pi, hence zR = w0.
  explicit BeamModel(double w0 = 1.0, double lambda = std::numbers::pi,
                     WaistModel waist = WaistModel::Standard);

  double w0() const { return w0_; }
  double lambda() const { return lambda_; }
  double rayleigh_range() const { return std::numbers::pi * w0_ * w0_ / lambda_; }
  WaistModel waist_model() const { return waist_; }

 private:
  double w0_;
  double lambda_;
  WaistModel waist_;
};

/// Two emitters and their brightness ratio. Emitter 1 is always the
/// brighter one (intrinsic brightness 1), emitter 2 has brightness `alpha`.
class EmitterPair {
 public:
  EmitterPair() = default;

  /// Builds a canonical pair from emitters with arbitrary positive
  /// brightness `ratio = P0(b) / P0(a)`. A ratio above one swaps the labels
  /// and inverts the ratio.
  static EmitterPair canonical(const Vec3& a, const Vec3& b, double ratio);

  const Vec3& x1() const { return x1_; }
  const Vec3& x2() const { return x2_; }
  double alpha() const { return alpha_; }
  /// P0,1 + P0,2
  double brightness_sum() const { return 1.0 + alpha_; }
  double separation() const { return distance(x1_, x2_); }

  EmitterPair translated(const Vec3& shift) const;

  friend bool operator==(const EmitterPair&, const EmitterPair&) = default;

 private:
  Vec3 x1_{};
  Vec3 x2_{};
  double alpha_ = 1.0;
};

struct FocalPoint {
  Vec3 xi{};
};

/// Mean and variance of the normalised intensity and of g2 at one focal point.
struct MomentModel {
  double mu_intensity = 0.0;
  double var_intensity = 0.0;
  double mu_g2 = 0.0;
  double var_g2 = 0.0;
};

double beam_waist(const BeamModel& beam, double z);

/// Detection probability of an emitter with intrinsic brightness
/// `intrinsic` in (0, 1], normalised so that it equals `intrinsic` when
/// the emitter sits at the focal point.
double detection_probability(const BeamModel& beam, const Vec3& emitter, double intrinsic,
                             const FocalPoint& focal);

/// Analytic gradient of detection_probability with respect to the emitter
/// position. Standard waist model only.
Vec3 detection_probability_gradient(const BeamModel& beam, const Vec3& emitter,
                                    double intrinsic, const FocalPoint& focal);

/// g2(0) = 2 p1 p2 / (p1 + p2)^2. Throws DegenerateInput when p1 + p2 == 0.
double g2_forward(double p1, double p2);

/// Moments from the detection rates directly; shared by moment_model and
/// the estimator's objectives.
MomentModel moments_from_rates(double p1, double p2, double brightness_sum, double t);

MomentModel moment_model(const EmitterPair& pair, const BeamModel& beam,
                         const FocalPoint& focal, double t);

}  // namespace qcm
