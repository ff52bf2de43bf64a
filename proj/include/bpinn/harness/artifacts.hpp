#pragma once

#include "bpinn/analytic.hpp"
#include "bpinn/harness/io.hpp"
#include "bpinn/mlp.hpp"
#include "bpinn/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace bpinn::harness {

/// {"mean": [...], "covariance": [[...], ...], "lambda": x}
Json belief_to_json(const GaussianBelief& belief);
GaussianBelief belief_from_json(const Json& j);

/// Saved network: architecture, activation, seed, mode and flat parameters.
struct SavedModel {
  MlpParameters params;
  std::uint64_t seed = 0;
  std::string mode;
};

Json model_to_json(const MlpParameters& params, std::uint64_t seed, const std::string& mode);
SavedModel model_from_json(const Json& j);

/// One row per epoch: `epoch,j_nn,j_phys,j_prior_f,j_sparse,j_weights,total,best_total`.
CsvTable history_table(const TrainReport& report);
/// `epoch,index,value` rows for every stored snapshot.
CsvTable snapshots_table(const TrainReport& report);

/// `sample,index,value` rows for a list of reconstructions.
CsvTable estimates_table(const VectorList& estimates);
VectorList estimates_from_table(const CsvTable& table, const std::string& where);

/// `sample,index,mean,stddev` rows.
CsvTable ensemble_table(const EnsembleEstimate& ensemble);

}  // namespace bpinn::harness
