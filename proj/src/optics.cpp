#include "qcm/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcm/errors.hpp"

namespace qcm {

BeamModel::BeamModel(double w0, double lambda, WaistModel waist)
    : w0_(w0), lambda_(lambda), waist_(waist) {
  if (!(w0 > 0.0) || !(lambda > 0.0) || !std::isfinite(w0) || !std::isfinite(lambda)) {
    throw InvalidInput("beam requires finite w0 > 0 and lambda > 0");
  }
}

EmitterPair EmitterPair::canonical(const Vec3& a, const Vec3& b, double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw InvalidInput("brightness ratio must be finite and positive");
  }
  EmitterPair pair;
  if (ratio > 1.0) {
    pair.x1_ = b;
    pair.x2_ = a;
    pair.alpha_ = 1.0 / ratio;
  } else {
    pair.x1_ = a;
    pair.x2_ = b;
    pair.alpha_ = ratio;
  }
  return pair;
}

EmitterPair EmitterPair::translated(const Vec3& shift) const {
  EmitterPair out = *this;
  out.x1_ += shift;
  out.x2_ += shift;
  return out;
}

double beam_waist(const BeamModel& beam, double z) {
  const double ratio = z / beam.rayleigh_range();
  switch (beam.waist_model()) {
    case WaistModel::AsPrinted:
      if (ratio < -1.0) return std::numeric_limits<double>::quiet_NaN();
      return beam.w0() * std::sqrt(1.0 + ratio);
    case WaistModel::Standard:
      break;
  }
  return beam.w0() * std::sqrt(1.0 + ratio * ratio);
}

double detection_probability(const BeamModel& beam, const Vec3& emitter, double intrinsic,
                             const FocalPoint& focal) {
  if (!(intrinsic > 0.0 && intrinsic <= 1.0)) {
    throw InvalidInput("intrinsic brightness must lie in (0, 1]");
  }
  const Vec3 d = emitter - focal.xi;
  const double w = beam_waist(beam, d.z);
  const double w2 = w * w;
  const double r2 = d.x * d.x + d.y * d.y;
  const double w0 = beam.w0();
  return intrinsic * (w0 * w0 / w2) * std::exp(-2.0 * r2 / w2);
}

Vec3 detection_probability_gradient(const BeamModel& beam, const Vec3& emitter,
                                    double intrinsic, const FocalPoint& focal) {
  const Vec3 d = emitter - focal.xi;
  const double p = detection_probability(beam, emitter, intrinsic, focal);
  const double w0 = beam.w0();
  const double zr = beam.rayleigh_range();
  const double s = w0 * w0 * (1.0 + (d.z / zr) * (d.z / zr));
  const double r2 = d.x * d.x + d.y * d.y;
  // d ln P / d s, with s = w(z)^2
  const double dlogp_ds = -1.0 / s + 2.0 * r2 / (s * s);
  const double ds_dz = 2.0 * w0 * w0 * d.z / (zr * zr);
  return {p * (-4.0 * d.x / s), p * (-4.0 * d.y / s), p * dlogp_ds * ds_dz};
}

double g2_forward(double p1, double p2) {
  const double sum = p1 + p2;
  if (!(sum > 0.0)) throw DegenerateInput("g2 undefined: no light at this focal point");
  return 2.0 * (p1 / sum) * (p2 / sum);
}

MomentModel moments_from_rates(double p1, double p2, double brightness_sum, double t) {
  const double sum = p1 + p2;
  if (!(sum > 0.0)) throw DegenerateInput("moments undefined: no light at this focal point");
  MomentModel m;
  m.mu_intensity = sum / brightness_sum;
  m.var_intensity = std::max(sum / (brightness_sum * brightness_sum * t), kVarianceFloor);
  // Delta method on g2 = 2 c12 / (c11 + c22 + 2 c12) with Poisson counts,
  // written in rate fractions to avoid underflow of (p1 + p2)^8.
  const double a = p1 / sum;
  const double b = p2 / sum;
  m.mu_g2 = 2.0 * a * b;
  const double sq = a * a + b * b;
  m.var_g2 = std::max(4.0 * a * b * sq * (sq + a * b) / (sum * sum * t), kVarianceFloor);
  return m;
}

MomentModel moment_model(const EmitterPair& pair, const BeamModel& beam,
                         const FocalPoint& focal, double t) {
  if (!(t > 0.0)) throw InvalidInput("acquisition time must be positive");
  const double p1 = detection_probability(beam, pair.x1(), 1.0, focal);
  const double p2 = detection_probability(beam, pair.x2(), pair.alpha(), focal);
  return moments_from_rates(p1, p2, pair.brightness_sum(), t);
}

}  // namespace qcm
