// Command-line front end: plan generation, simulation, training, transfer,
// tuning, evaluation, rollout and plot export.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pbfgnn/config.hpp"
#include "pbfgnn/error.hpp"
#include "pbfgnn/io.hpp"
#include "pbfgnn/pipeline.hpp"
#include "pbfgnn/plot.hpp"
#include "pbfgnn/rollout.hpp"

namespace fs = std::filesystem;
using namespace pbfgnn;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

struct Run {
  RunConfig config;
  fs::path out;
  std::string command;
  std::vector<std::string> args;
  json outputs = json::array();

  fs::path path(const std::string& name) const { return out / name; }

  void wrote(const fs::path& p) {
    outputs.push_back(p.string());
    std::cout << "wrote " << p.string() << "\n";
  }
};

Run start(const std::string& command, const Common& common, int argc, char** argv) {
  Run run;
  run.command = command;
  run.config = common.config_path.empty() ? default_run_config() : load_run_config(common.config_path);
  if (common.seed) override_seed(run.config, *common.seed);
  std::string dir = run.config.output_dir;
  if (const char* env = std::getenv("PBFGNN_OUTPUT_DIR"); env && *env) dir = env;
  if (!common.output_dir.empty()) dir = common.output_dir;
  run.out = dir;
  for (int i = 0; i < argc; ++i) run.args.emplace_back(argv[i]);
  return run;
}

void write_manifest(const Run& run) {
  json m;
  m["command"] = run.command;
  m["arguments"] = run.args;
  m["config_hash"] = config_hash(run.config);
  m["config"] = json::parse(run_config_json(run.config));
  m["seeds"] = {{"global", run.config.seed},
                {"training", run.config.training.seed},
                {"split", run.config.training.split.seed},
                {"tune", run.config.tune.search.seed}};
  m["versions"] = {{"pbfgnn", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"history_format", kHistoryVersion},
                   {"checkpoint_format", kCheckpointVersion},
                   {"plan_format", kPlanVersion},
                   {"compiler", __VERSION__}};
  m["outputs"] = run.outputs;
  const fs::path p = run.path("manifest-" + run.command + ".json");
  write_file(p, m.dump(2) + "\n");
  std::cout << "wrote " << p.string() << "\n";
}

std::vector<fs::path> expand(const std::vector<std::string>& inputs, const std::string& extension) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == extension) found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      if (!fs::exists(in)) throw IoError("no such file: " + in);
      out.emplace_back(in);
    }
  }
  if (out.empty()) throw InvalidArgument("no " + extension + " inputs given");
  return out;
}

std::vector<CasePtr> load_cases(const std::vector<fs::path>& files, Aggregation aggregation) {
  std::vector<ThermalHistory> hs;
  std::vector<std::string> labels;
  for (const auto& f : files) {
    hs.push_back(load_history(f));
    labels.push_back(f.stem().string());
  }
  return make_cases(std::move(hs), labels, aggregation);
}

FeatureVariant variant_for(const ModelParams& model, double b) {
  if (model.architecture == Architecture::SingleLaser && model.input_width() == 6) return FeatureVariant::single_laser();
  const int a = model.input_width() - 5;
  if (a < 1) throw InvalidArgument("model input width " + std::to_string(model.input_width()) + " is too small");
  return FeatureVariant::multi_laser(a, b);
}

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

void print_report(const EvalReport& r) {
  std::printf("rmse %.4f C  mape %.4f %%  peak APE %.4f %%  mean frame-peak APE %.4f %%  max peak APE %.4f %%  frames %zu\n",
              r.rmse, r.mape, r.mean_peak_ape, r.mean_frame_peak_ape, r.max_peak_ape, r.frames.size());
}

// ---- subcommands ---------------------------------------------------------

struct GenPlans {
  std::string domain = "A";
  std::string kind = "islands";
  int lasers = 3;
  std::size_t limit = 24;
  double side = 0.0;
};

void gen_plans(Run& run, const GenPlans& o) {
  std::vector<ScanPlan> plans;
  GridSpec grid;
  if (o.kind == "islands" || o.kind == "reference") {
    const DomainSpec& d = run.config.domain(o.domain);
    grid = domain_grid(d);
    if (o.kind == "islands")
      plans = island_plans(d, o.limit, run.config.seed);
    else
      plans.push_back(island_plan(grid, d.island_size, reference_sequence(o.domain)));
  } else {
    const double side = o.side > 0 ? o.side : run.config.tune.side_length;
    grid = make_grid(side, run.config.domains.empty() ? 0.05 : run.config.domains.front().node_spacing);
    if (o.kind == "doe")
      plans = multi_laser_doe(grid, o.lasers);
    else if (o.kind == "raster")
      plans.push_back(multi_laser_plan(grid, std::vector<LaserFill>(static_cast<std::size_t>(o.lasers))));
    else if (o.kind == "spiral")
      plans.push_back(spiral_plan(grid, o.lasers));
    else if (o.kind == "hilbert")
      plans.push_back(hilbert_plan(grid, o.lasers));
    else
      throw InvalidArgument("unknown plan kind \"" + o.kind + "\"");
  }
  for (std::size_t i = 0; i < plans.size(); ++i) {
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%04zu-", i + 1);
    const fs::path p = run.path(std::string(prefix) + safe_name(plans[i].label) + ".plan");
    persist_plan(plans[i], p);
    run.wrote(p);
  }
}

void gen_data(Run& run, const std::vector<std::string>& inputs, unsigned workers) {
  const auto files = expand(inputs, ".plan");
  std::vector<ScanPlan> plans;
  for (const auto& f : files) plans.push_back(load_plan(f));
  const auto histories = simulate_plans(plans, run.config, workers);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const fs::path p = run.path(files[i].stem().string() + ".mgth");
    persist_history(histories[i], p);
    run.wrote(p);
  }
}

struct TrainOpts {
  std::vector<std::string> data;
  std::string architecture = "SL";
  int a = 1;
  double b = 1.0;
  double c = 1.0;
  std::string model_name = "model.mgck";
};

void train(Run& run, const TrainOpts& o) {
  const Architecture arch = parse_architecture(o.architecture);
  const FeatureVariant variant =
      arch == Architecture::SingleLaser && o.a == 1 && o.b == 1.0 ? FeatureVariant::single_laser()
                                                                  : FeatureVariant::multi_laser(o.a, o.b);
  TrainConfig tc = run.config.training;
  if (o.c != 1.0) tc.loss = LossSpec::weighted(o.c, tc.loss.threshold);
  const auto cases = load_cases(expand(o.data, ".mgth"), run.config.aggregation);
  const ModelParams init = initial_model(arch, variant, run.config, run.config.training.seed);
  TrainResult r = train_sequential(sample_lists(cases), tc, init, variant);
  const fs::path m = run.path(o.model_name);
  persist_checkpoint(r.params, m);
  run.wrote(m);
  const fs::path t = run.path(fs::path(o.model_name).stem().string() + "-trace.csv");
  write_file(t, train_trace_csv(r.trace));
  run.wrote(t);
}

struct TransferOpts {
  std::string model;
  std::vector<std::string> data;
  std::string preset = "tl3";
  std::optional<int> freeze_last;
  std::optional<std::size_t> n_train, n_val;
  std::string model_name = "transfer.mgck";
  double b = 1.0;
};

void transfer(Run& run, const TransferOpts& o) {
  TransferSpec spec = o.preset == "tl4" ? run.config.tl4 : run.config.tl3;
  if (o.preset != "tl3" && o.preset != "tl4") throw InvalidArgument("preset must be tl3 or tl4");
  if (o.freeze_last) spec.freeze_last = *o.freeze_last;
  if (o.n_train) spec.n_train = *o.n_train;
  if (o.n_val) spec.n_val = *o.n_val;
  const ModelParams parent = load_checkpoint(o.model);
  const FeatureVariant variant = variant_for(parent, o.b);
  const auto cases = load_cases(expand(o.data, ".mgth"), parent.aggregation);
  std::vector<SampleRef> pool;
  for (const auto& c : cases)
    for (const auto& s : case_samples(c)) pool.push_back(s);
  TrainResult r = transfer_retrain(parent, spec.freeze_last, pool, spec.n_train, spec.n_val, run.config.training,
                                   run.config.seed, variant);
  const fs::path m = run.path(o.model_name);
  persist_checkpoint(r.params, m);
  run.wrote(m);
  const fs::path t = run.path(fs::path(o.model_name).stem().string() + "-trace.csv");
  write_file(t, train_trace_csv(r.trace));
  run.wrote(t);
}

void tune_cmd(Run& run, unsigned workers) {
  const MultiLaserData data = multi_laser_data(run.config, workers);
  std::cout << "tuning on " << data.train.size() << " training and " << data.validation.size()
            << " validation plans\n";
  int evaluation = 0;
  auto objective = [&](const HyperPoint& p) {
    const double v = multi_laser_objective(p, data, run.config, run.config.seed);
    std::printf("eval %2d  a=%d b=%.2f c=%.2f  rmse %.4f\n", ++evaluation, p.a, p.b, p.c, v);
    std::fflush(stdout);
    return v;
  };
  TuneResult r = tune(objective, run.config.tune.search);
  const fs::path t = run.path("tune-trace.csv");
  write_file(t, tune_trace_csv(r.trace));
  run.wrote(t);
  std::printf("best a=%d b=%.4f c=%.4f rmse %.4f\n", r.best.a, r.best.b, r.best.c, r.best_rmse);
}

void evaluate_cmd(Run& run, const std::string& model_path, const std::vector<std::string>& data, int stride, double b) {
  const ModelParams model = load_checkpoint(model_path);
  const FeatureVariant variant = variant_for(model, b);
  const auto cases = load_cases(expand(data, ".mgth"), model.aggregation);
  const EvalReport r = evaluate_metrics(model, strided_samples(cases, stride), variant, run.config.training.loss.threshold);
  print_report(r);
  const fs::path p = run.path("metrics.csv");
  write_file(p, frame_metrics_csv(r.frames));
  run.wrote(p);
}

void rollout_cmd(Run& run, const std::string& model_path, const std::string& plan_path, const std::string& truth_path,
                 double b) {
  const ModelParams model = load_checkpoint(model_path);
  const FeatureVariant variant = variant_for(model, b);
  const ScanPlan plan = load_plan(plan_path);
  const LaserSchedule schedule = compile_schedule(plan, run.config.process);
  const MeshGraph graph = grid_to_graph(plan.grid);
  const PropagationMatrix prop = propagation_matrix(graph, model.aggregation);
  const std::string stem = fs::path(plan_path).stem().string();
  ThermalHistory predicted;
  if (!truth_path.empty()) {
    RolloutResult r = rollout_against(model, graph, prop, schedule, load_history(truth_path), variant);
    const fs::path e = run.path(stem + "-rollout-error.csv");
    write_file(e, error_curve_csv(r.error));
    run.wrote(e);
    if (r.error.size() > 1)
      std::printf("final rmse %.4f C  slope over first %zu steps %.6f C/step\n", r.error.back(),
                  std::min<std::size_t>(50, r.error.size()),
                  regression_slope(r.error, 0, std::min<std::size_t>(49, r.error.size() - 1)));
    predicted = std::move(r.predicted);
  } else {
    predicted = rollout(model, graph, prop, schedule, run.config.simulation.initial_temperature, variant);
  }
  const fs::path p = run.path(stem + "-rollout.mgth");
  persist_history(predicted, p);
  run.wrote(p);
}

void export_plot(Run& run, const std::string& history_path, const std::vector<int>& frames,
                 const std::vector<std::string>& curves) {
  if (!history_path.empty()) {
    const ThermalHistory h = load_history(history_path);
    const std::string stem = fs::path(history_path).stem().string();
    std::vector<int> which = frames;
    if (which.empty()) which.push_back(static_cast<int>(h.frame_count()) - 1);
    for (int f : which) {
      if (f < 0 || static_cast<std::size_t>(f) >= h.frame_count())
        throw InvalidArgument("frame " + std::to_string(f) + " out of range");
      const Eigen::VectorXd field = h.temperatures(static_cast<std::size_t>(f));
      const std::string base = stem + "-frame" + std::to_string(f);
      const fs::path svg = run.path(base + ".svg"), csv = run.path(base + ".csv");
      write_file(svg, field_svg(h.grid, field, stem + " timestep " + std::to_string(h.frames[static_cast<std::size_t>(f)].timestep)));
      write_file(csv, field_csv(h.grid, field));
      run.wrote(svg);
      run.wrote(csv);
    }
  }
  if (!curves.empty()) {
    std::vector<CurveSeries> series;
    std::string combined = "series,timestep,rmse\n";
    for (const auto& c : curves) {
      const std::string text = read_file(c);
      CurveSeries s{fs::path(c).stem().string(), {}};
      std::size_t pos = text.find('\n');
      while (pos != std::string::npos && pos + 1 < text.size()) {
        const std::size_t end = text.find('\n', pos + 1);
        const std::string line = text.substr(pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
        pos = end;
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw FormatError("curve row without a comma in " + c, 0);
        s.values.push_back(std::stod(line.substr(comma + 1)));
        combined += s.name + "," + line + "\n";
      }
      series.push_back(std::move(s));
    }
    const fs::path svg = run.path("error-curves.svg"), csv = run.path("error-curves.csv");
    write_file(svg, curve_svg(series, "Rollout RMSE", "timestep", "RMSE (C)"));
    write_file(csv, combined);
    run.wrote(svg);
    run.wrote(csv);
  }
  if (history_path.empty() && curves.empty()) throw InvalidArgument("export-plot needs --history or --curve");
}

void table3(const std::string& trace_path, std::size_t rows) {
  const std::string text = read_file(trace_path);
  TuneTrace trace;
  std::size_t pos = text.find('\n');
  while (pos != std::string::npos && pos + 1 < text.size()) {
    const std::size_t end = text.find('\n', pos + 1);
    std::string line = text.substr(pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
    pos = end;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t s = 0;
    for (std::size_t k = line.find(','); ; k = line.find(',', s)) {
      f.push_back(line.substr(s, k == std::string::npos ? std::string::npos : k - s));
      if (k == std::string::npos) break;
      s = k + 1;
    }
    if (f.size() < 7) throw FormatError("tune trace row has " + std::to_string(f.size()) + " fields", 0);
    TuneEvaluation e;
    e.point = {std::stoi(f[1]), std::stod(f[2]), std::stod(f[3])};
    e.rmse = std::stod(f[4]);
    trace.evaluations.push_back(e);
  }
  std::printf("%-6s %-4s %-10s %-12s %-10s\n", "Model", "a", "b", "c", "RMSE");
  int k = 0;
  for (const auto& e : best_evaluations(trace, rows))
    std::printf("%-6d %-4d %-10.0f %-12.2f %-10.3f\n", ++k, e.point.a, e.point.b, e.point.c, e.rmse);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-network thermal surrogate for laser powder bed fusion"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override every seed in the config");
    sub->add_option("-o,--output-dir", common.output_dir, "Output directory (else $PBFGNN_OUTPUT_DIR, else config)");
  };

  GenPlans gp;
  auto* c_plans = app.add_subcommand("gen-plans", "Write scan plans");
  add_common(c_plans);
  c_plans->add_option("--domain", gp.domain, "Domain label for island plans");
  c_plans->add_option("--kind", gp.kind, "islands | reference | doe | raster | spiral | hilbert")
      ->check(CLI::IsMember({"islands", "reference", "doe", "raster", "spiral", "hilbert"}));
  c_plans->add_option("--lasers", gp.lasers, "Laser count for multi-laser kinds")->check(CLI::PositiveNumber);
  c_plans->add_option("--limit", gp.limit, "Maximum island orders");
  c_plans->add_option("--side", gp.side, "Side length (mm) for multi-laser kinds");

  std::vector<std::string> data_inputs;
  unsigned workers = 0;
  auto* c_data = app.add_subcommand("gen-data", "Simulate plans into thermal histories");
  add_common(c_data);
  c_data->add_option("plans", data_inputs, "Plan files or directories")->required();
  c_data->add_option("-j,--workers", workers, "Concurrent simulations (0 = all cores)");

  TrainOpts to;
  auto* c_train = app.add_subcommand("train", "Train on histories case by case");
  add_common(c_train);
  c_train->add_option("data", to.data, "History files or directories, in case order")->required();
  c_train->add_option("--arch", to.architecture, "SL or ML")->check(CLI::IsMember({"SL", "ML"}));
  c_train->add_option("-a", to.a, "Laser column duplication")->check(CLI::PositiveNumber);
  c_train->add_option("-b", to.b, "Laser column amplification")->check(CLI::Range(1.0, 1e12));
  c_train->add_option("--peak-weight", to.c, "Peak weight c of the weighted loss")->check(CLI::Range(1.0, 1e12));
  c_train->add_option("--name", to.model_name, "Checkpoint file name");

  TransferOpts tr;
  auto* c_transfer = app.add_subcommand("transfer", "Freeze trailing layers and retrain on a few target samples");
  add_common(c_transfer);
  c_transfer->add_option("--model", tr.model, "Parent checkpoint")->required()->check(CLI::ExistingFile);
  c_transfer->add_option("data", tr.data, "Target-domain histories")->required();
  c_transfer->add_option("--preset", tr.preset, "tl3 or tl4 sample counts from the config")
      ->check(CLI::IsMember({"tl3", "tl4"}));
  c_transfer->add_option("--freeze-last", tr.freeze_last, "Frozen trailing layers");
  c_transfer->add_option("--n-train", tr.n_train, "Training samples");
  c_transfer->add_option("--n-val", tr.n_val, "Validation samples");
  c_transfer->add_option("-b", tr.b, "Laser column amplification of the parent");
  c_transfer->add_option("--name", tr.model_name, "Checkpoint file name");

  auto* c_tune = app.add_subcommand("tune", "Bayesian optimization of (a, b, c) for the multi-laser model");
  add_common(c_tune);
  c_tune->add_option("-j,--workers", workers, "Concurrent simulations (0 = all cores)");

  std::string model_path;
  int stride = 1;
  double amp = 1.0;
  std::vector<std::string> eval_data;
  auto* c_eval = app.add_subcommand("evaluate", "Score a model on histories");
  add_common(c_eval);
  c_eval->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_eval->add_option("data", eval_data, "History files or directories")->required();
  c_eval->add_option("--stride", stride, "Score every n-th timestep")->check(CLI::PositiveNumber);
  c_eval->add_option("-b", amp, "Laser column amplification the model was trained with");

  std::string plan_path, truth_path;
  auto* c_roll = app.add_subcommand("rollout", "Autoregressive prediction of a plan");
  add_common(c_roll);
  c_roll->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_roll->add_option("--plan", plan_path, "Plan file")->required()->check(CLI::ExistingFile);
  c_roll->add_option("--truth", truth_path, "Solver history of the same plan")->check(CLI::ExistingFile);
  c_roll->add_option("-b", amp, "Laser column amplification the model was trained with");

  std::string history_path;
  std::vector<int> frames;
  std::vector<std::string> curves;
  auto* c_plot = app.add_subcommand("export-plot", "Render fields and error curves to SVG and CSV");
  add_common(c_plot);
  c_plot->add_option("--history", history_path, "History file")->check(CLI::ExistingFile);
  c_plot->add_option("--frame", frames, "Frame indices (default: last)");
  c_plot->add_option("--curve", curves, "Error-curve CSV files")->check(CLI::ExistingFile);

  std::string trace_path;
  std::size_t rows = 10;
  auto* c_table = app.add_subcommand("table3", "Print the best tuning evaluations");
  c_table->add_option("trace", trace_path, "tune-trace.csv")->required()->check(CLI::ExistingFile);
  c_table->add_option("--rows", rows, "Rows to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "table3") {
      table3(trace_path, rows);
      return kOk;
    }
    Run run = start(name, common, argc, argv);
    const auto t0 = std::chrono::steady_clock::now();
    if (name == "gen-plans") gen_plans(run, gp);
    else if (name == "gen-data") gen_data(run, data_inputs, workers);
    else if (name == "train") train(run, to);
    else if (name == "transfer") transfer(run, tr);
    else if (name == "tune") tune_cmd(run, workers);
    else if (name == "evaluate") evaluate_cmd(run, model_path, eval_data, stride, amp);
    else if (name == "rollout") rollout_cmd(run, model_path, plan_path, truth_path, amp);
    else if (name == "export-plot") export_plot(run, history_path, frames, curves);
    write_manifest(run);
    std::printf("%s finished in %.1f s\n", name.c_str(),
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return kOk;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const InvalidState& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const IoError& e) {
    std::cerr << "i/o failure: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
}
