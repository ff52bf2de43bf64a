#include "bpinn/harness/pipeline.hpp"

#include "bpinn/analytic.hpp"
#include "bpinn/harness/artifacts.hpp"
#include "bpinn/harness/dataset.hpp"
#include "bpinn/harness/metrics.hpp"
#include "bpinn/harness/problem_spec.hpp"
#include "bpinn/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>

namespace bpinn::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMethods[] = {"analytic", "map", "supervised", "unsupervised", "infer"};
struct CoverageLevel {
  const char* key;
  double level;
};
constexpr CoverageLevel kCoverageLevels[] = {{"0.5", 0.5}, {"0.9", 0.9}};

struct Options {
  std::string command;
  std::string spec_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string mode = "supervised";
  std::string model_path;
  std::string input_path;
  std::optional<std::size_t> ensemble;
};

// Everything a subcommand needs: the resolved spec and its output directory.
struct Context {
  Options opt;
  fs::path out;
  ProblemSpec spec;
  std::vector<std::string> artifacts;

  void write_csv_artifact(const std::string& name, const CsvTable& table) {
    write_csv(out / name, table);
    artifacts.push_back(name);
  }
  void write_json_artifact(const std::string& name, const Json& value) {
    write_json_file(out / name, value);
    artifacts.push_back(name);
  }

  Dataset dataset() const {
    if (!fs::exists(out / "dataset.json")) {
      throw IoError((out / "dataset.json").string() + " not found; run gen first");
    }
    Dataset data = read_dataset(out);
    if (data.spec_hash != spec.hash()) {
      throw SchemaError("dataset in " + out.string() +
                        " was generated from a different spec (hash " + data.spec_hash +
                        ", current " + spec.hash() + "); rerun gen");
    }
    data.validate(spec.n, spec.observation_size());
    return data;
  }
};

ProblemSpec load_spec(const Options& opt, const fs::path& out) {
  const fs::path path = opt.spec_path.empty() ? out / "spec.json" : fs::path(opt.spec_path);
  if (!fs::exists(path)) throw IoError(path.string() + " not found; pass --spec");
  ProblemSpec spec = ProblemSpec::from_json(read_json_file(path));
  if (opt.seed) spec.seed = *opt.seed;
  return spec;
}

Json seeds_json(const ProblemSpec& spec, std::uint64_t init_seed) {
  return {{"master", spec.seed},
          {"truth", truth_seed(spec.seed)},
          {"noise", noise_seed(spec.seed)},
          {"init", init_seed}};
}

Json report_json(const TrainReport& r) {
  return {{"epochs_run", r.history.size()},
          {"best_epoch", r.best_epoch},
          {"best_total", r.best_total.empty() ? 0.0 : r.best_total.back()},
          {"final_grad_norm", r.final_grad_norm},
          {"stop_reason", to_string(r.stop_reason)}};
}

void cmd_gen(Context& ctx) {
  const Mode mode = mode_from_string(ctx.opt.mode);
  const Dataset data = generate_dataset(ctx.spec, mode);
  ctx.write_json_artifact("spec.json", ctx.spec.to_json());
  write_dataset(data, ctx.out);
  for (const char* name : {"train.csv", "test.csv", "dataset.json"}) ctx.artifacts.push_back(name);
}

void cmd_analytic(Context& ctx) {
  if (ctx.spec.prior.family != PriorFamily::kGaussian) {
    throw ParameterError("analytic posterior needs a gaussian prior");
  }
  const Dataset data = ctx.dataset();
  const LinearOperator h = build_operator(ctx.spec);
  const NoiseModel noise{data.noise_variance};
  const GaussianPrior prior{ctx.spec.prior.mean, ctx.spec.prior.variance};
  Json beliefs = Json::array();
  VectorList means;
  for (const Vector& g : data.test_g) {
    const GaussianBelief b = posterior_linear_gaussian(h, g, noise, prior);
    beliefs.push_back(belief_to_json(b));
    means.push_back(b.mean);
  }
  ctx.write_json_artifact("analytic_beliefs.json",
                          {{"spec_hash", data.spec_hash},
                           {"noise_variance", data.noise_variance},
                           {"prior_variance", ctx.spec.prior.variance},
                           {"beliefs", beliefs}});
  ctx.write_csv_artifact("estimates_analytic.csv", estimates_table(means));
}

void cmd_map(Context& ctx) {
  const Dataset data = ctx.dataset();
  const LinearOperator h = build_operator(ctx.spec);
  const LinearOperator d = build_regularizer(ctx.spec);
  const TrainConfig config = map_config(ctx.spec, data.noise_variance);
  VectorList estimates;
  CsvTable runs{{"sample", "epochs_run", "best_epoch", "best_total", "final_grad_norm",
                 "stop_reason"},
                {}};
  for (std::size_t s = 0; s < data.test_g.size(); ++s) {
    const MapEstimate est = map_estimate_direct(data.test_g[s], h, d, ctx.spec.prior.mean, config);
    estimates.push_back(est.f);
    const TrainReport& r = est.report;
    runs.rows.push_back({std::to_string(s), std::to_string(r.history.size()),
                         std::to_string(r.best_epoch), format_double(r.best_total.back()),
                         format_double(r.final_grad_norm), to_string(r.stop_reason)});
  }
  ctx.write_csv_artifact("estimates_map.csv", estimates_table(estimates));
  ctx.write_csv_artifact("map_runs.csv", runs);
}

void cmd_train(Context& ctx) {
  const Mode mode = mode_from_string(ctx.opt.mode);
  const std::string tag = to_string(mode);
  const Dataset data = ctx.dataset();
  const LinearOperator h = build_operator(ctx.spec);
  const LinearOperator d = build_regularizer(ctx.spec);
  const MlpArchitecture arch = build_architecture(ctx.spec);
  const TrainConfig config = train_config(ctx.spec, mode, data.noise_variance);

  TrainedModel model{MlpParameters::zeros(arch), {}};
  SupervisedBatch sup{data.train_g, data.train_f};
  UnsupervisedBatch unsup{data.train_g};
  if (mode == Mode::kSupervised) {
    if (data.train_f.empty()) {
      throw SchemaError("dataset has no training truths; generate with --mode supervised");
    }
    model = train_supervised(sup, h, ctx.spec.prior.mean, arch, config);
  } else {
    model = train_unsupervised(unsup, h, d, arch, config);
  }

  ctx.write_json_artifact("model_" + tag + ".json", model_to_json(model.params, config.seed, tag));
  ctx.write_csv_artifact("history_" + tag + ".csv", history_table(model.report));
  if (!model.report.snapshots.empty()) {
    ctx.write_csv_artifact("snapshots_" + tag + ".csv", snapshots_table(model.report));
  }
  ctx.write_csv_artifact("estimates_" + tag + ".csv", estimates_table(predict(model.params, data.test_g)));

  Json sidecar = {{"spec_hash", ctx.spec.hash()},
                  {"mode", tag},
                  {"seeds", seeds_json(ctx.spec, config.seed)},
                  {"noise_variance", data.noise_variance},
                  {"weights",
                   {{"w_data", config.weights.w_data},
                    {"w_phys", config.weights.w_phys},
                    {"w_prior", config.weights.w_prior},
                    {"gamma", config.weights.gamma},
                    {"beta", config.weights.beta},
                    {"gamma_w", config.weights.gamma_w},
                    {"beta_w", config.weights.beta_w},
                    {"smooth_eps", config.weights.smooth_eps}}},
                  {"report", report_json(model.report)}};

  const std::size_t members = ctx.opt.ensemble.value_or(ctx.spec.ensemble_members);
  if (members == 1) throw UsageError("--ensemble needs at least 2 members");
  if (members >= 2) {
    const EnsembleEstimate ens =
        mode == Mode::kSupervised
            ? ensemble_uncertainty(sup, h, ctx.spec.prior.mean, arch, config, members, data.test_g)
            : ensemble_uncertainty(unsup, h, d, arch, config, members, data.test_g);
    ctx.write_csv_artifact("ensemble_" + tag + ".csv", ensemble_table(ens));
    sidecar["ensemble"] = {{"members", members},
                           {"seed_first", config.seed},
                           {"seed_stride", 1},
                           {"note", "seed-ensemble spread; heuristic, not a posterior"}};
  }
  ctx.write_json_artifact("train_" + tag + ".json", sidecar);
}

void cmd_infer(Context& ctx) {
  const SavedModel saved = model_from_json(read_json_file(ctx.opt.model_path));
  const MlpArchitecture& arch = saved.params.architecture();
  if (arch.input_size() != ctx.spec.observation_size()) {
    throw DimensionError("infer: model input vs operator rows", ctx.spec.observation_size(),
                         arch.input_size());
  }
  if (arch.output_size() != ctx.spec.n) {
    throw DimensionError("infer: model output vs unknown size", ctx.spec.n, arch.output_size());
  }
  if (!ctx.opt.input_path.empty()) {
    const Vector g = read_vector_csv(ctx.opt.input_path);
    if (static_cast<std::size_t>(g.size()) != arch.input_size()) {
      throw DimensionError("infer: input vector", arch.input_size(), static_cast<std::size_t>(g.size()));
    }
    write_vector_csv(ctx.out / "inference.csv", forward(saved.params, g).output());
    ctx.artifacts.push_back("inference.csv");
    return;
  }
  const Dataset data = ctx.dataset();
  ctx.write_csv_artifact("estimates_infer.csv", estimates_table(predict(saved.params, data.test_g)));
}

struct MethodSummary {
  std::size_t count = 0;
  double mean_relative_error = 0.0;
  double max_relative_error = 0.0;
  double mean_psnr_db = 0.0;
  std::size_t fallback_count = 0;
};

void cmd_eval(Context& ctx) {
  const Dataset data = ctx.dataset();
  CsvTable rows{{"method", "sample", "relative_error", "absolute_error", "psnr_db",
                 "absolute_fallback"},
                {}};
  Json methods = Json::object();
  for (const char* method : kMethods) {
    const fs::path path = ctx.out / (std::string("estimates_") + method + ".csv");
    if (!fs::exists(path)) continue;
    const VectorList est = estimates_from_table(read_csv(path), path.string());
    if (est.size() != data.test_f.size()) {
      throw DimensionError(path.string() + ": sample count", data.test_f.size(), est.size());
    }
    MethodSummary sum;
    for (std::size_t s = 0; s < est.size(); ++s) {
      const InstanceMetrics m = evaluate(est[s], data.test_f[s]);
      rows.rows.push_back({method, std::to_string(s), format_double(m.relative_error),
                           format_double(m.absolute_error), format_double(m.psnr_db),
                           m.absolute_fallback ? "1" : "0"});
      ++sum.count;
      sum.mean_relative_error += m.relative_error;
      sum.max_relative_error = std::max(sum.max_relative_error, m.relative_error);
      sum.mean_psnr_db += m.psnr_db;
      sum.fallback_count += m.absolute_fallback ? 1 : 0;
    }
    sum.mean_relative_error /= static_cast<double>(sum.count);
    sum.mean_psnr_db /= static_cast<double>(sum.count);
    methods[method] = {{"count", sum.count},
                       {"mean_relative_error", sum.mean_relative_error},
                       {"max_relative_error", sum.max_relative_error},
                       {"mean_psnr_db", sum.mean_psnr_db},
                       {"fallback_count", sum.fallback_count}};
  }
  if (methods.empty()) {
    throw IoError("no estimates_<method>.csv in " + ctx.out.string() +
                  "; run analytic, map, train or infer first");
  }

  Json coverage = Json::object();
  const fs::path beliefs_path = ctx.out / "analytic_beliefs.json";
  if (fs::exists(beliefs_path)) {
    const Json j = read_json_file(beliefs_path);
    std::vector<GaussianBelief> beliefs;
    for (const auto& b : j.at("beliefs")) beliefs.push_back(belief_from_json(b));
    for (const auto& [key, level] : kCoverageLevels) {
      coverage[key] = coverage_test(beliefs, data.test_f, level);
    }
  }
  ctx.write_csv_artifact("metrics.csv", rows);
  ctx.write_json_artifact("metrics.json", {{"spec_hash", data.spec_hash},
                                           {"methods", methods},
                                           {"analytic_coverage", coverage}});
}

void cmd_report(Context& ctx) {
  const fs::path metrics_path = ctx.out / "metrics.json";
  if (!fs::exists(metrics_path)) throw IoError(metrics_path.string() + " not found; run eval first");
  const Json metrics = read_json_file(metrics_path);
  const Json& coverage = metrics.at("analytic_coverage");

  CsvTable summary{{"method", "count", "mean_relative_error", "max_relative_error",
                    "mean_psnr_db", "fallback_count", "coverage_50", "coverage_90"},
                   {}};
  Json methods = Json::array();
  for (const char* method : kMethods) {
    if (!metrics.at("methods").contains(method)) continue;
    const Json& m = metrics.at("methods").at(method);
    const bool analytic = std::string(method) == "analytic" && !coverage.empty();
    const std::string c50 = analytic ? format_double(coverage.at("0.5").get<double>()) : "";
    const std::string c90 = analytic ? format_double(coverage.at("0.9").get<double>()) : "";
    summary.rows.push_back({method, std::to_string(m.at("count").get<std::size_t>()),
                            format_double(m.at("mean_relative_error").get<double>()),
                            format_double(m.at("max_relative_error").get<double>()),
                            format_double(m.at("mean_psnr_db").get<double>()),
                            std::to_string(m.at("fallback_count").get<std::size_t>()), c50, c90});
    Json entry = m;
    entry["method"] = method;
    if (analytic) entry["coverage"] = coverage;
    if (std::string(method) == "supervised" || std::string(method) == "unsupervised") {
      const fs::path ens = ctx.out / ("ensemble_" + std::string(method) + ".csv");
      if (fs::exists(ens)) entry["ensemble_file"] = ens.filename().string();
    }
    methods.push_back(entry);
  }

  Json out = {{"spec_hash", metrics.at("spec_hash")}, {"methods", methods}};
  const fs::path a = ctx.out / "estimates_analytic.csv";
  const fs::path m = ctx.out / "estimates_map.csv";
  if (fs::exists(a) && fs::exists(m)) {
    const VectorList va = estimates_from_table(read_csv(a), a.string());
    const VectorList vm = estimates_from_table(read_csv(m), m.string());
    if (va.size() != vm.size()) throw DimensionError("report: map vs analytic", va.size(), vm.size());
    double worst = 0.0;
    for (std::size_t s = 0; s < va.size(); ++s) {
      const double scale = std::max(va[s].norm(), 1e-300);
      worst = std::max(worst, (vm[s] - va[s]).norm() / scale);
    }
    out["map_vs_analytic_max_relative_difference"] = worst;
  }
  ctx.write_csv_artifact("summary.csv", summary);
  ctx.write_json_artifact("summary.json", out);
}

void append_timing(const fs::path& out, const std::string& command, double seconds) {
  std::ofstream log(out / "timing.log", std::ios::app);
  if (log) log << command << ' ' << format_double(seconds) << '\n';
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kSchema: return 3;
    case ErrorKind::kIo: return 4;
    case ErrorKind::kDimension: return 5;
    case ErrorKind::kParameter: return 6;
    case ErrorKind::kConditioning: return 7;
    case ErrorKind::kDivergence: return 8;
    case ErrorKind::kBatch: return 9;
  }
  return 1;
}

Json error_json(const std::exception& e) {
  std::string kind = "internal";
  int code = 1;
  Json extra = Json::object();
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    kind = to_string(err->kind());
    code = exit_code(err->kind());
  }
  if (const auto* div = dynamic_cast<const DivergenceError*>(&e)) extra["epoch"] = div->epoch();
  if (const auto* cond = dynamic_cast<const ConditioningError*>(&e)) {
    extra["smallest_pivot"] = cond->smallest_pivot();
  }
  Json body = {{"kind", kind}, {"exit_code", code}, {"message", e.what()}};
  body.update(extra);
  return {{"status", "error"}, {"error", body}};
}

int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Bayesian physics-informed inversion pipeline", "bpinn"};
  app.require_subcommand(1, 1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", opt.spec_path, "Problem spec JSON (default: <out>/spec.json)");
    sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Master seed, overrides the spec");
  };
  auto* gen = app.add_subcommand("gen", "Generate train/test datasets");
  add_common(gen);
  gen->add_option("--mode", opt.mode, "supervised | unsupervised")->capture_default_str();
  add_common(app.add_subcommand("analytic", "Closed-form Gaussian posterior per test instance"));
  add_common(app.add_subcommand("map", "Direct MAP estimate per test instance"));
  auto* train = app.add_subcommand("train", "Train a network");
  add_common(train);
  train->add_option("--mode", opt.mode, "supervised | unsupervised")->capture_default_str();
  train->add_option("--ensemble", opt.ensemble, "Seed-ensemble size K >= 2");
  auto* infer = app.add_subcommand("infer", "Apply a saved network");
  add_common(infer);
  infer->add_option("--model", opt.model_path, "Model JSON")->required();
  infer->add_option("--input", opt.input_path, "Single observation CSV (index,value)");
  add_common(app.add_subcommand("eval", "Metrics for every estimates file"));
  add_common(app.add_subcommand("report", "Aggregate summary CSV and JSON"));

  try {
    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }
    opt.command = app.get_subcommands().front()->get_name();

    const auto start = std::chrono::steady_clock::now();
    Context ctx;
    ctx.opt = opt;
    ctx.out = opt.out_dir;
    fs::create_directories(ctx.out);
    ctx.spec = load_spec(opt, ctx.out);

    if (opt.command == "gen") cmd_gen(ctx);
    else if (opt.command == "analytic") cmd_analytic(ctx);
    else if (opt.command == "map") cmd_map(ctx);
    else if (opt.command == "train") cmd_train(ctx);
    else if (opt.command == "infer") cmd_infer(ctx);
    else if (opt.command == "eval") cmd_eval(ctx);
    else cmd_report(ctx);

    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    append_timing(ctx.out, opt.command, elapsed.count());
    out << Json{{"status", "ok"}, {"command", opt.command}, {"artifacts", ctx.artifacts}}.dump()
        << '\n';
    return 0;
  } catch (const fs::filesystem_error& e) {
    const Json j = error_json(IoError(e.what()));
    err << j.dump() << '\n';
    return j["error"]["exit_code"].get<int>();
  } catch (const std::exception& e) {
    const Json j = error_json(e);
    err << j.dump() << '\n';
    return j["error"]["exit_code"].get<int>();
  }
}

}  // namespace bpinn::harness
