#include "pbfgnn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "pbfgnn/error.hpp"

namespace pbfgnn {

GridSpec domain_grid(const DomainSpec& domain) { return make_grid(domain.side_length, domain.node_spacing); }

std::vector<int> reference_sequence(const std::string& label) {
  if (label == "A") return {1, 2, 3, 4};
  if (label == "B") return {7, 4, 1, 8, 5, 2, 9, 6, 3};
  if (label == "C") return {13, 9, 5, 1, 14, 10, 6, 2, 15, 11, 7, 3, 16, 12, 8, 4};
  throw InvalidArgument("no reference sequence for domain \"" + label + "\"");
}

std::vector<ScanPlan> island_plans(const DomainSpec& domain, std::size_t limit, std::uint64_t seed) {
  const GridSpec grid = domain_grid(domain);
  std::vector<ScanPlan> plans;
  for (const auto& seq : enumerate_island_sequences(grid, domain.island_size, limit, seed))
    plans.push_back(island_plan(grid, domain.island_size, seq));
  return plans;
}

std::vector<ScanPlan> sample_doe_plans(const GridSpec& grid, int lasers, std::size_t count, std::uint64_t seed) {
  std::vector<ScanPlan> doe = multi_laser_doe(grid, lasers);
  if (count > doe.size())
    throw InvalidArgument("requested " + std::to_string(count) + " plans from a design of " +
                          std::to_string(doe.size()));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, doe.size() - 1);
    std::swap(doe[i], doe[pick(rng)]);
  }
  doe.resize(count);
  return doe;
}

ThermalHistory simulate_plan(const ScanPlan& plan, const RunConfig& config) {
  return simulate(plan, config.material, config.process, config.simulation);
}

std::vector<ThermalHistory> simulate_plans(const std::vector<ScanPlan>& plans, const RunConfig& config,
                                           unsigned workers) {
  std::vector<ThermalHistory> out(plans.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(plans.size(), 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < plans.size(); ++i) out[i] = simulate_plan(plans[i], config);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < plans.size(); i = next++) {
      try {
        out[i] = simulate_plan(plans[i], config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<CasePtr> make_cases(std::vector<ThermalHistory> histories, const std::vector<std::string>& labels,
                                Aggregation aggregation) {
  if (labels.size() != histories.size()) throw InvalidArgument("one label per history required");
  std::vector<CasePtr> cases;
  for (std::size_t i = 0; i < histories.size(); ++i) {
    CasePtr shared;
    for (const auto& c : cases)
      if (c->history.grid == histories[i].grid) shared = c;
    cases.push_back(make_case(labels[i], std::move(histories[i]), aggregation, shared));
  }
  return cases;
}

ModelParams initial_model(Architecture architecture, const FeatureVariant& variant, const RunConfig& config,
                          std::uint64_t seed) {
  ModelParams p = init_params(architecture, variant.width(), seed, config.aggregation);
  p.scaling = config.scaling;
  return p;
}

std::vector<std::vector<SampleRef>> sample_lists(const std::vector<CasePtr>& cases) {
  std::vector<std::vector<SampleRef>> out;
  for (const auto& c : cases) out.push_back(case_samples(c));
  return out;
}

std::vector<SampleRef> strided_samples(const std::vector<CasePtr>& cases, int stride, int offset) {
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  std::vector<SampleRef> out;
  for (const auto& c : cases)
    for (const auto& s : case_samples(c))
      if ((s.timestep - offset) % stride == 0) out.push_back(s);
  return out;
}

std::vector<SampleRef> exclude_samples(const std::vector<SampleRef>& pool, const std::vector<SampleRef>& used) {
  std::vector<SampleRef> out;
  for (const auto& s : pool) {
    const bool taken = std::any_of(used.begin(), used.end(),
                                   [&](const SampleRef& u) { return u.data == s.data && u.timestep == s.timestep; });
    if (!taken) out.push_back(s);
  }
  return out;
}

MultiLaserData multi_laser_data(const RunConfig& config, unsigned workers) {
  const TuneSpec& t = config.tune;
  const GridSpec grid = make_grid(t.side_length, config.domains.empty() ? 0.05 : config.domains.front().node_spacing);
  const auto total = static_cast<std::size_t>(t.training_plans + t.validation_plans);
  const std::vector<ScanPlan> plans = sample_doe_plans(grid, t.lasers, total, config.seed + 17);
  std::vector<std::string> labels;
  for (const auto& p : plans) labels.push_back(p.label);
  std::vector<CasePtr> cases = make_cases(simulate_plans(plans, config, workers), labels, config.aggregation);
  MultiLaserData d;
  d.train.assign(cases.begin(), cases.begin() + t.training_plans);
  d.validation.assign(cases.begin() + t.training_plans, cases.end());
  return d;
}

double multi_laser_objective(const HyperPoint& point, const MultiLaserData& data, const RunConfig& config,
                             std::uint64_t seed, ModelParams* model_out) {
  if (data.train.empty() || data.validation.empty()) throw InvalidArgument("tuning data needs train and validation plans");
  const FeatureVariant variant = FeatureVariant::multi_laser(point.a, point.b);
  TrainConfig tc = config.training;
  tc.loss = LossSpec::weighted(point.c, config.training.loss.threshold);
  tc.seed = seed;
  tc.split.seed = seed;
  const int plans = static_cast<int>(data.train.size());
  tc.max_steps_per_case = (config.tune.steps_per_candidate + plans - 1) / plans;
  const ModelParams init = initial_model(Architecture::MultiLaser, variant, config, seed);
  TrainResult r = train_sequential(sample_lists(data.train), tc, init, variant);
  const EvalReport rep = evaluate_metrics(r.params, strided_samples(data.validation, config.tune.validation_stride),
                                          variant, config.training.loss.threshold);
  if (model_out) *model_out = std::move(r.params);
  return rep.rmse;
}

}  // namespace pbfgnn
