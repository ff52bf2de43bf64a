#include "bpinn/harness/dataset.hpp"

#include "bpinn/errors.hpp"
#include "bpinn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace bpinn::harness {

namespace {

const std::vector<std::string> kRecordHeader = {"sample", "role", "index", "value"};

void append_records(CsvTable& table, std::size_t sample, const char* role, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    table.rows.push_back({std::to_string(sample), role, std::to_string(i), format_double(v[i])});
  }
}

CsvTable records_table(const VectorList& g, const VectorList& f) {
  CsvTable table{kRecordHeader, {}};
  for (std::size_t s = 0; s < g.size(); ++s) {
    append_records(table, s, "g", g[s]);
    if (!f.empty()) append_records(table, s, "f", f[s]);
  }
  return table;
}

// Rebuilds per-sample vectors from `sample,role,index,value` rows. Samples
// and indices must be dense and start at 0.
void parse_records(const std::filesystem::path& path, VectorList& g, VectorList& f) {
  const CsvTable table = read_csv(path);
  if (table.header != kRecordHeader) {
    throw SchemaError(path.string() + ": header must be sample,role,index,value");
  }
  std::map<std::pair<std::size_t, std::string>, std::map<std::size_t, double>> cells;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + " row " + std::to_string(r + 2);
    if (row[1] != "g" && row[1] != "f") throw SchemaError(where + ": role must be g or f");
    const auto sample = static_cast<std::size_t>(parse_index(row[0], where));
    const auto index = static_cast<std::size_t>(parse_index(row[2], where));
    if (!cells[{sample, row[1]}].emplace(index, parse_double(row[3], where)).second) {
      throw SchemaError(where + ": duplicate entry");
    }
  }
  auto to_vector = [&](const std::map<std::size_t, double>& entries, const std::string& what) {
    Vector v(static_cast<Eigen::Index>(entries.size()));
    std::size_t expect = 0;
    for (const auto& [index, value] : entries) {
      if (index != expect++) throw SchemaError(path.string() + ": " + what + " has a gap in index");
      v[static_cast<Eigen::Index>(index)] = value;
    }
    return v;
  };
  g.clear();
  f.clear();
  for (const auto& [key, entries] : cells) {
    const auto& [sample, role] = key;
    VectorList& target = role == "g" ? g : f;
    if (sample != target.size()) {
      throw SchemaError(path.string() + ": samples must be numbered 0, 1, ... for role " + role);
    }
    target.push_back(to_vector(entries, "sample " + std::to_string(sample)));
  }
  if (!f.empty() && f.size() != g.size()) {
    throw SchemaError(path.string() + ": every sample needs both g and f, or none has f");
  }
}

}  // namespace

std::uint64_t truth_seed(std::uint64_t master) { return derive_seed(master, 1); }
std::uint64_t noise_seed(std::uint64_t master) { return derive_seed(master, 2); }

void Dataset::validate(std::size_t n, std::size_t m) const {
  auto check = [](const VectorList& list, std::size_t len, const std::string& what) {
    for (std::size_t s = 0; s < list.size(); ++s) {
      if (static_cast<std::size_t>(list[s].size()) != len) {
        throw DimensionError(what + " sample " + std::to_string(s), len,
                             static_cast<std::size_t>(list[s].size()));
      }
    }
  };
  if (train_g.empty() || test_g.empty()) throw SchemaError("dataset: empty train or test split");
  if (test_f.size() != test_g.size()) throw SchemaError("dataset: test split needs truths");
  if (mode == Mode::kSupervised && train_f.size() != train_g.size()) {
    throw SchemaError("dataset: supervised training records need both g and f");
  }
  check(train_g, m, "train g");
  check(train_f, n, "train f");
  check(test_g, m, "test g");
  check(test_f, n, "test f");
}

Vector draw_truth(const ProblemSpec& spec, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(spec.n);
  const PriorSpec& p = spec.prior;
  Vector f(n);
  if (p.family == PriorFamily::kGaussian) {
    const double sd = std::sqrt(p.variance);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = p.mean[i] + sd * rng.normal();
    return f;
  }
  const auto max_segments = std::min<std::size_t>(p.segments_max, spec.n);
  const auto min_segments = std::min<std::size_t>(p.segments_min, max_segments);
  const auto segments = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(min_segments), static_cast<std::int64_t>(max_segments)));
  // Boundaries: segments - 1 distinct cut points from {1, ..., n-1}.
  std::vector<std::size_t> cuts(spec.n - 1);
  std::iota(cuts.begin(), cuts.end(), std::size_t{1});
  for (std::size_t i = 0; i + 1 < segments; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(i), static_cast<std::int64_t>(cuts.size()) - 1));
    std::swap(cuts[i], cuts[j]);
  }
  cuts.resize(segments - 1);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(spec.n);
  std::size_t start = 0;
  for (std::size_t cut : cuts) {
    const double a = rng.uniform(p.amplitude_lo, p.amplitude_hi);
    for (std::size_t i = start; i < cut; ++i) f[static_cast<Eigen::Index>(i)] = a;
    start = cut;
  }
  return f;
}

double resolve_noise_variance(const ProblemSpec& spec, const VectorList& clean) {
  if (spec.noise.variance) return *spec.noise.variance;
  double power = 0.0;
  for (const Vector& g : clean) power += g.squaredNorm() / static_cast<double>(g.size());
  power /= static_cast<double>(clean.size());
  return power / std::pow(10.0, *spec.noise.snr_db / 10.0);
}

Dataset generate_dataset(const ProblemSpec& spec, Mode mode) {
  const LinearOperator h = build_operator(spec);
  Dataset data;
  data.mode = mode;
  data.spec_hash = spec.hash();
  data.seed = spec.seed;
  data.truth_seed = truth_seed(spec.seed);
  data.noise_seed = noise_seed(spec.seed);

  Rng truth_rng(data.truth_seed);
  VectorList truths;
  for (std::size_t s = 0; s < spec.train_count + spec.test_count; ++s) {
    truths.push_back(draw_truth(spec, truth_rng));
  }
  VectorList clean;
  for (const Vector& f : truths) clean.push_back(h.apply(f));
  data.noise_variance = resolve_noise_variance(spec, clean);

  Rng noise_rng(data.noise_seed);
  const double sd = std::sqrt(data.noise_variance);
  for (std::size_t s = 0; s < truths.size(); ++s) {
    Vector g = clean[s];
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] += sd * noise_rng.normal();
    const bool train = s < spec.train_count;
    (train ? data.train_g : data.test_g).push_back(std::move(g));
    if (!train) {
      data.test_f.push_back(truths[s]);
    } else if (mode == Mode::kSupervised) {
      data.train_f.push_back(truths[s]);
    }
  }
  return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  write_csv(dir / "train.csv", records_table(data.train_g, data.train_f));
  write_csv(dir / "test.csv", records_table(data.test_g, data.test_f));
  write_json_file(dir / "dataset.json",
                  {{"mode", to_string(data.mode)},
                   {"spec_hash", data.spec_hash},
                   {"seed", data.seed},
                   {"truth_seed", data.truth_seed},
                   {"noise_seed", data.noise_seed},
                   {"noise_variance", data.noise_variance},
                   {"train_count", data.train_g.size()},
                   {"test_count", data.test_g.size()},
                   {"files", {"train.csv", "test.csv"}}});
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const Json meta = read_json_file(dir / "dataset.json");
  Dataset data;
  try {
    data.mode = mode_from_string(meta.at("mode").get<std::string>());
    data.spec_hash = meta.at("spec_hash").get<std::string>();
    data.seed = meta.at("seed").get<std::uint64_t>();
    data.truth_seed = meta.at("truth_seed").get<std::uint64_t>();
    data.noise_seed = meta.at("noise_seed").get<std::uint64_t>();
    data.noise_variance = meta.at("noise_variance").get<double>();
  } catch (const Json::exception& e) {
    throw SchemaError("dataset.json: " + std::string(e.what()));
  } catch (const UsageError& e) {
    throw SchemaError(std::string("dataset.json: ") + e.what());
  }
  parse_records(dir / "train.csv", data.train_g, data.train_f);
  parse_records(dir / "test.csv", data.test_g, data.test_f);
  if (data.mode == Mode::kUnsupervised) data.train_f.clear();
  return data;
}

}  // namespace bpinn::harness
