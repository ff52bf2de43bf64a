#pragma once

#include "bpinn/analytic.hpp"
#include "bpinn/types.hpp"

#include <vector>

namespace bpinn::harness {

/// PSNR magnitude limit in dB; exact reconstructions report +kPsnrCapDb.
inline constexpr double kPsnrCapDb = 300.0;

struct InstanceMetrics {
  /// |f_hat - f| / |f|, or the absolute error |f_hat - f| when f is all zero.
  double relative_error = 0.0;
  double absolute_error = 0.0;
  /// 10 log10(peak^2 / mse) with peak = max |f|, clamped to +-kPsnrCapDb.
  double psnr_db = 0.0;
  bool absolute_fallback = false;
};

InstanceMetrics evaluate(const Vector& f_hat, const Vector& f_true);

/// Fraction of (instance, component) pairs whose central credible interval
/// at `level` contains the truth.
double coverage_test(const std::vector<GaussianBelief>& beliefs, const VectorList& truths,
                     double level);

}  // namespace bpinn::harness
