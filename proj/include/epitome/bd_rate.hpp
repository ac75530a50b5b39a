#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace epitome {

struct RDPoint {
  double rate = 0.0;  // bits per pixel (any positive unit works)
  double psnr = 0.0;  // dB

  friend bool operator==(const RDPoint&, const RDPoint&) = default;
};

/// Rate-distortion samples ordered by strictly increasing rate.
struct RDCurve {
  std::vector<RDPoint> points;

  /// Throws InputError with fewer than 4 points, non-positive rates, or
  /// rates that are not strictly increasing.
  void validate() const;

  /// Non-fatal issues (PSNR decreasing with rate).
  std::vector<std::string> warnings() const;
};

/// Least-squares cubic fit of log10(rate) as a function of (psnr - center).
/// Coefficients are in ascending powers.
Eigen::Vector4d fit_log_rate(const RDCurve& curve, double center);

/// Bjontegaard delta rate of `test` against `reference`, in percent.
/// Negative values mean `test` needs fewer bits for the same PSNR.
/// Throws EvaluationError when the PSNR ranges do not overlap.
double bd_rate(const RDCurve& test, const RDCurve& reference);

}  // namespace epitome
