#include "bpinn/harness/metrics.hpp"

#include "bpinn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bpinn::harness {

InstanceMetrics evaluate(const Vector& f_hat, const Vector& f_true) {
  if (f_hat.size() != f_true.size()) {
    throw DimensionError("evaluate", static_cast<std::size_t>(f_true.size()),
                         static_cast<std::size_t>(f_hat.size()));
  }
  if (f_true.size() == 0) throw ParameterError("evaluate: empty vectors");
  InstanceMetrics m;
  const double err = (f_hat - f_true).norm();
  const double ref = f_true.norm();
  m.absolute_error = err;
  m.absolute_fallback = ref == 0.0;
  m.relative_error = m.absolute_fallback ? err : err / ref;

  const double mse = err * err / static_cast<double>(f_true.size());
  const double peak = f_true.cwiseAbs().maxCoeff();
  if (mse == 0.0) {
    m.psnr_db = kPsnrCapDb;
  } else if (peak == 0.0) {
    m.psnr_db = -kPsnrCapDb;
  } else {
    m.psnr_db = std::clamp(10.0 * std::log10(peak * peak / mse), -kPsnrCapDb, kPsnrCapDb);
  }
  return m;
}

double coverage_test(const std::vector<GaussianBelief>& beliefs, const VectorList& truths,
                     double level) {
  if (beliefs.empty()) throw ParameterError("coverage_test: no beliefs");
  if (beliefs.size() != truths.size()) {
    throw DimensionError("coverage_test: truths", beliefs.size(), truths.size());
  }
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < beliefs.size(); ++s) {
    if (truths[s].size() != static_cast<Eigen::Index>(beliefs[s].dim())) {
      throw DimensionError("coverage_test: truth " + std::to_string(s), beliefs[s].dim(),
                           static_cast<std::size_t>(truths[s].size()));
    }
    const auto intervals = credible_interval(beliefs[s], level);
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      hits += intervals[i].contains(truths[s][static_cast<Eigen::Index>(i)]) ? 1 : 0;
      ++total;
    }
  }
  if (total == 0) throw ParameterError("coverage_test: zero-dimensional beliefs");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace bpinn::harness
