#include "bpinn/harness/artifacts.hpp"

#include "bpinn/errors.hpp"

#include <cmath>

namespace bpinn::harness {

namespace {

const std::vector<std::string> kEstimatesHeader = {"sample", "index", "value"};

}  // namespace

Json belief_to_json(const GaussianBelief& belief) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < belief.covariance.rows(); ++i) {
    rows.push_back(to_json(Vector(belief.covariance.row(i).transpose())));
  }
  return {{"mean", to_json(belief.mean)},
          {"covariance", rows},
          {"lambda", std::isfinite(belief.lambda) ? Json(belief.lambda) : Json(nullptr)}};
}

GaussianBelief belief_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("mean") || !j.contains("covariance")) {
    throw SchemaError("belief needs 'mean' and 'covariance'");
  }
  GaussianBelief b;
  b.mean = vector_from_json(j.at("mean"), "belief mean");
  const auto n = b.mean.size();
  const Json& rows = j.at("covariance");
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) {
    throw SchemaError("belief covariance must have one row per mean entry");
  }
  b.covariance.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector row = vector_from_json(rows[static_cast<std::size_t>(i)], "belief covariance row");
    if (row.size() != n) throw SchemaError("belief covariance must be square");
    b.covariance.row(i) = row.transpose();
  }
  if (j.contains("lambda") && j.at("lambda").is_number()) b.lambda = j.at("lambda").get<double>();
  return b;
}

Json model_to_json(const MlpParameters& params, std::uint64_t seed, const std::string& mode) {
  const auto& arch = params.architecture();
  return {{"format", "bpinn-mlp-1"},
          {"layer_sizes", arch.layer_sizes},
          {"activation", to_string(arch.hidden_activation)},
          {"seed", seed},
          {"mode", mode},
          {"parameters", to_json(params.flatten())}};
}

SavedModel model_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "bpinn-mlp-1") {
      throw SchemaError("model: unsupported format");
    }
    MlpArchitecture arch;
    arch.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    arch.hidden_activation = activation_from_string(j.at("activation").get<std::string>());
    arch.validate();
    const Vector flat = vector_from_json(j.at("parameters"), "model parameters");
    if (static_cast<std::size_t>(flat.size()) != arch.parameter_count()) {
      throw SchemaError("model: parameter count " + std::to_string(flat.size()) +
                        " does not match architecture (" +
                        std::to_string(arch.parameter_count()) + ")");
    }
    return {MlpParameters::unflatten(arch, flat), j.at("seed").get<std::uint64_t>(),
            j.at("mode").get<std::string>()};
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("model: ") + e.what());
  } catch (const ParameterError& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
}

CsvTable history_table(const TrainReport& report) {
  CsvTable t{{"epoch", "j_nn", "j_phys", "j_prior_f", "j_sparse", "j_weights", "total",
              "best_total"},
             {}};
  for (std::size_t e = 0; e < report.history.size(); ++e) {
    const LossBreakdown& b = report.history[e];
    t.rows.push_back({std::to_string(e), format_double(b.j_nn), format_double(b.j_phys),
                      format_double(b.j_prior_f), format_double(b.j_sparse),
                      format_double(b.j_weights), format_double(b.total),
                      format_double(report.best_total[e])});
  }
  return t;
}

CsvTable snapshots_table(const TrainReport& report) {
  CsvTable t{{"epoch", "index", "value"}, {}};
  for (const auto& [epoch, flat] : report.snapshots) {
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
      t.rows.push_back({std::to_string(epoch), std::to_string(i), format_double(flat[i])});
    }
  }
  return t;
}

CsvTable estimates_table(const VectorList& estimates) {
  CsvTable t{kEstimatesHeader, {}};
  for (std::size_t s = 0; s < estimates.size(); ++s) {
    for (Eigen::Index i = 0; i < estimates[s].size(); ++i) {
      t.rows.push_back({std::to_string(s), std::to_string(i), format_double(estimates[s][i])});
    }
  }
  return t;
}

VectorList estimates_from_table(const CsvTable& table, const std::string& where) {
  if (table.header != kEstimatesHeader) {
    throw SchemaError(where + ": header must be sample,index,value");
  }
  std::vector<std::vector<double>> acc;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string at = where + " row " + std::to_string(r + 2);
    const auto s = static_cast<std::size_t>(parse_index(table.rows[r][0], at));
    const auto i = static_cast<std::size_t>(parse_index(table.rows[r][1], at));
    if (s == acc.size()) acc.emplace_back();
    if (s + 1 != acc.size() || i != acc[s].size()) {
      throw SchemaError(at + ": rows must be ordered by sample then index");
    }
    acc[s].push_back(parse_double(table.rows[r][2], at));
  }
  VectorList out;
  for (const auto& v : acc) out.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  return out;
}

CsvTable ensemble_table(const EnsembleEstimate& ensemble) {
  CsvTable t{{"sample", "index", "mean", "stddev"}, {}};
  for (std::size_t s = 0; s < ensemble.mean.size(); ++s) {
    for (Eigen::Index i = 0; i < ensemble.mean[s].size(); ++i) {
      t.rows.push_back({std::to_string(s), std::to_string(i), format_double(ensemble.mean[s][i]),
                        format_double(ensemble.stddev[s][i])});
    }
  }
  return t;
}

}  // namespace bpinn::harness
