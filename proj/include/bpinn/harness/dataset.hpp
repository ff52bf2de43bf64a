#pragma once

#include "bpinn/harness/problem_spec.hpp"
#include "bpinn/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace bpinn::harness {

/// Synthetic observations g = H f + noise. Test records always keep the
/// truth; unsupervised training records keep g only.
struct Dataset {
  Mode mode = Mode::kSupervised;
  VectorList train_g;
  VectorList train_f;
  VectorList test_g;
  VectorList test_f;
  double noise_variance = 0.0;
  std::string spec_hash;
  std::uint64_t seed = 0;
  std::uint64_t truth_seed = 0;
  std::uint64_t noise_seed = 0;

  void validate(std::size_t n, std::size_t m) const;
};

/// Seed streams derived from the master seed.
std::uint64_t truth_seed(std::uint64_t master);
std::uint64_t noise_seed(std::uint64_t master);

/// One truth drawn from the spec's prior family.
Vector draw_truth(const ProblemSpec& spec, Rng& rng);

/// Noise variance of the spec given the noiseless observations of every
/// record (used when the noise level is set by SNR).
double resolve_noise_variance(const ProblemSpec& spec, const VectorList& clean);

Dataset generate_dataset(const ProblemSpec& spec, Mode mode);

/// Files: train.csv, test.csv (header `sample,role,index,value`) and dataset.json.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace bpinn::harness
