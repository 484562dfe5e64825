#include "pbfgnn/training.hpp"

#include <limits>
#include <numeric>

namespace pbfgnn {

CasePtr make_case(std::string label, ThermalHistory history, Aggregation aggregation, const CasePtr& shared) {
  auto c = std::make_shared<CaseData>();
  c->label = std::move(label);
  if (shared && shared->history.grid == history.grid && shared->propagation->mode == aggregation) {
    c->graph = shared->graph;
    c->propagation = shared->propagation;
  } else {
    auto graph = std::make_shared<MeshGraph>(grid_to_graph(history.grid));
    c->propagation = std::make_shared<PropagationMatrix>(propagation_matrix(*graph, aggregation));
    c->graph = std::move(graph);
  }
  c->history = std::move(history);
  return c;
}

std::vector<SampleRef> case_samples(const CasePtr& data) {
  std::vector<SampleRef> out;
  for (std::size_t t = 1; t < data->history.frame_count(); ++t) out.push_back({data, static_cast<int>(t)});
  return out;
}

GraphSample materialize(const SampleRef& ref, const FeatureVariant& variant) {
  const auto& h = ref.data->history;
  if (ref.timestep < 1 || static_cast<std::size_t>(ref.timestep) >= h.frame_count())
    throw InvalidArgument("sample timestep out of range");
  const auto& frame = h.frames[ref.timestep];
  std::vector<int> focal(frame.focal_nodes.begin(), frame.focal_nodes.end());
  GraphSample s;
  s.propagation = ref.data->propagation;
  s.features = assemble_features(h.temperatures(ref.timestep - 1), *ref.data->graph, focal, variant);
  s.target = h.temperatures(ref.timestep);
  s.timestep = ref.timestep;
  s.case_label = ref.data->label;
  return s;
}

double mean_loss(const ModelParams& model, const std::vector<SampleRef>& samples, const FeatureVariant& variant,
                 const LossSpec& loss) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& ref : samples) {
    GraphSample s = materialize(ref, variant);
    acc += evaluate_loss(loss, predict(model, s.features, *s.propagation), s.target);
  }
  return acc / static_cast<double>(samples.size());
}

namespace {

struct Trainer {
  const TrainConfig& config;
  const FeatureVariant& variant;
  ModelParams params;
  AdamState adam;
  std::uint64_t counter = 0;
  std::vector<TraceRow> trace;

  Trainer(const TrainConfig& c, const FeatureVariant& v, ModelParams initial)
      : config(c), variant(v), params(std::move(initial)), adam(AdamState::zeros(params)) {}

  double validation_loss(const std::vector<SampleRef>& val) const {
    if (config.validation_limit <= 0 || val.size() <= static_cast<std::size_t>(config.validation_limit))
      return mean_loss(params, val, variant, config.loss);
    std::vector<SampleRef> head(val.begin(), val.begin() + config.validation_limit);
    return mean_loss(params, head, variant, config.loss);
  }

  // Optimizer steps over `train` with early stopping on `val`; keeps the
  // best-validation parameters.
  void run(const std::vector<SampleRef>& train, const std::vector<SampleRef>& val, int case_index,
           std::uint64_t shuffle_seed) {
    if (train.empty() || config.max_steps_per_case <= 0) return;
    const bool has_val = !val.empty();
    double best = has_val ? validation_loss(val) : std::numeric_limits<double>::infinity();
    trace.push_back({case_index, 0, has_val ? best : mean_loss(params, {train.front()}, variant, config.loss), best});
    ModelParams best_params = params;
    int best_step = 0;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(shuffle_seed);
    std::size_t cursor = order.size();
    double running = 0.0;
    int running_count = 0;
    const int interval = std::max(1, config.eval_interval);

    for (int step = 1; step <= config.max_steps_per_case; ++step) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      GraphSample s = materialize(train[order[cursor++]], variant);
      auto fwd = forward(params, s.features, *s.propagation,
                         ForwardMode::train(config.seed, counter++, config.dropout));
      running += evaluate_loss(config.loss, fwd.predictions, s.target);
      ++running_count;
      Gradients g = backward(params, fwd.cache, config.loss, fwd.predictions, s.target);
      optimizer_step(params, g, adam, config.adam);

      const bool last = step == config.max_steps_per_case;
      if (step % interval == 0 || last) {
        const double v = has_val ? validation_loss(val) : std::numeric_limits<double>::quiet_NaN();
        trace.push_back({case_index, step, running / running_count, v});
        running = 0.0;
        running_count = 0;
        if (!std::isfinite(trace.back().train_loss))
          throw NumericError("training loss became non-finite at case " + std::to_string(case_index) +
                             " step " + std::to_string(step));
        if (has_val && v < best) {
          best = v;
          best_params = params;
          best_step = step;
        } else if (has_val && step - best_step >= config.patience) {
          break;
        }
      }
    }
    if (has_val) {
      const auto iterations = params.meta.iterations;
      params = std::move(best_params);
      params.meta.iterations = iterations;
    }
  }
};

}  // namespace

TrainResult train_sequential(const std::vector<std::vector<SampleRef>>& cases, const TrainConfig& config,
                             const ModelParams& initial, const FeatureVariant& variant) {
  if (cases.empty()) throw InvalidArgument("train_sequential needs at least one case");
  if (initial.input_width() != variant.width())
    throw InvalidArgument("model input width does not match feature variant");
  Trainer trainer(config, variant, initial);
  trainer.params.meta.loss = config.loss;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    SplitSpec spec = config.split;
    spec.seed = config.split.seed + 7919 * c;
    auto split = split_case(cases[c], spec);
    trainer.run(split.train, split.validation, static_cast<int>(c), config.seed + 104729 * (c + 1));
  }
  return {std::move(trainer.params), std::move(trainer.trace)};
}

std::vector<SampleRef> draw_samples(const std::vector<SampleRef>& pool, std::size_t count, std::uint64_t seed) {
  if (count > pool.size())
    throw InvalidArgument("cannot draw " + std::to_string(count) + " samples from a pool of " +
                          std::to_string(pool.size()));
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<SampleRef> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(pool[idx[i]]);
  return out;
}

TrainResult transfer_retrain(const ModelParams& parent, int freeze_last, const std::vector<SampleRef>& pool,
                             std::size_t n_train, std::size_t n_val, const TrainConfig& config,
                             std::uint64_t seed, const FeatureVariant& variant) {
  if (n_train + n_val > pool.size())
    throw InvalidArgument("transfer needs " + std::to_string(n_train + n_val) + " samples but the pool has " +
                          std::to_string(pool.size()));
  ModelParams params = parent;
  params.freeze_last(freeze_last);
  params.meta.loss = config.loss;
  params.meta.seed = seed;

  const std::vector<SampleRef> drawn = draw_samples(pool, n_train + n_val, seed);
  std::vector<SampleRef> train(drawn.begin(), drawn.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<SampleRef> val(drawn.begin() + static_cast<std::ptrdiff_t>(n_train), drawn.end());

  Trainer trainer(config, variant, std::move(params));
  trainer.run(train, val, 0, seed ^ 0x5deece66dULL);
  return {std::move(trainer.params), std::move(trainer.trace)};
}

void MetricAccumulator::add(const Eigen::VectorXd& y, const Eigen::VectorXd& t, std::string label, int timestep) {
  check_loss_args(y, t);
  FrameMetrics fm;
  fm.case_label = std::move(label);
  fm.timestep = timestep;
  double sq = 0.0, ape = 0.0;
  std::size_t ape_n = 0;
  Eigen::Index hottest = 0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double e = y[i] - t[i];
    sq += e * e;
    if (std::abs(t[i]) > 1e-6) {
      ape += std::abs(e) / std::abs(t[i]) * 100.0;
      ++ape_n;
    }
    if (t[i] > t[hottest]) hottest = i;
    if (t[i] >= threshold_) {
      const double p = std::abs(e) / std::abs(t[i]) * 100.0;
      partial_.peak_apes.push_back(p);
      fm.max_peak_ape = std::max(fm.max_peak_ape, p);
    }
  }
  fm.rmse = std::sqrt(sq / static_cast<double>(t.size()));
  fm.mape = ape_n ? ape / static_cast<double>(ape_n) : 0.0;
  if (std::abs(t[hottest]) > 1e-6) fm.peak_ape = std::abs(y[hottest] - t[hottest]) / std::abs(t[hottest]) * 100.0;
  squared_ += sq;
  nodes_ += static_cast<std::size_t>(t.size());
  ape_sum_ += ape;
  ape_count_ += ape_n;
  partial_.frames.push_back(std::move(fm));
}

EvalReport MetricAccumulator::report() const {
  EvalReport r = partial_;
  r.rmse = nodes_ ? std::sqrt(squared_ / static_cast<double>(nodes_)) : 0.0;
  r.mape = ape_count_ ? ape_sum_ / static_cast<double>(ape_count_) : 0.0;
  r.max_peak_ape = r.peak_apes.empty() ? 0.0 : *std::max_element(r.peak_apes.begin(), r.peak_apes.end());
  r.mean_peak_ape = r.peak_apes.empty()
                        ? 0.0
                        : std::accumulate(r.peak_apes.begin(), r.peak_apes.end(), 0.0) /
                              static_cast<double>(r.peak_apes.size());
  double fp = 0.0;
  for (const auto& f : r.frames) fp += f.peak_ape;
  r.mean_frame_peak_ape = r.frames.empty() ? 0.0 : fp / static_cast<double>(r.frames.size());
  return r;
}

EvalReport evaluate_metrics(const ModelParams& model, const std::vector<SampleRef>& samples,
                            const FeatureVariant& variant, double peak_threshold) {
  if (samples.empty()) throw InvalidArgument("evaluate_metrics needs at least one sample");
  MetricAccumulator acc(peak_threshold);
  for (const auto& ref : samples) {
    GraphSample s = materialize(ref, variant);
    acc.add(predict(model, s.features, *s.propagation), s.target, s.case_label, s.timestep);
  }
  return acc.report();
}

}  // namespace pbfgnn
