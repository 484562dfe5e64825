#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pbfgnn/error.hpp"
#include "pbfgnn/gnn.hpp"
#include "pbfgnn/meshgraph.hpp"
#include "pbfgnn/thermal_sim.hpp"

namespace pbfgnn {

/// One simulated (or predicted) history together with its graph. Samples are
/// references into a case and are materialized into features on demand.
struct CaseData {
  std::string label;
  std::shared_ptr<const MeshGraph> graph;
  std::shared_ptr<const PropagationMatrix> propagation;
  ThermalHistory history;
};
using CasePtr = std::shared_ptr<const CaseData>;

/// Builds graph and propagation matrix for the history's grid. Pass `shared`
/// to reuse the graph of an earlier case on the same grid.
CasePtr make_case(std::string label, ThermalHistory history, Aggregation aggregation,
                  const CasePtr& shared = nullptr);

/// Predict frame `timestep` from frame `timestep - 1` and the lasers active at `timestep`.
struct SampleRef {
  CasePtr data;
  int timestep = 1;
};

std::vector<SampleRef> case_samples(const CasePtr& data);
GraphSample materialize(const SampleRef& ref, const FeatureVariant& variant);

struct SplitSpec {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
  std::uint64_t seed = 0;
};

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

/// Seeded shuffle, then contiguous slices: train gets floor(n·f_train),
/// validation floor(n·f_val), test the remainder.
template <typename T>
Split<T> split_case(std::vector<T> samples, const SplitSpec& spec) {
  if (samples.size() < 3) throw InvalidArgument("need at least 3 samples to split");
  if (!(spec.train > 0 && spec.validation > 0 && spec.test > 0) ||
      std::abs(spec.train + spec.validation + spec.test - 1.0) > 1e-9)
    throw InvalidArgument("split fractions must be positive and sum to 1");
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = samples.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(samples[i], samples[pick(rng)]);
  }
  const double n = static_cast<double>(samples.size());
  const auto n_train = static_cast<std::size_t>(std::floor(n * spec.train + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(n * spec.validation + 1e-9));
  Split<T> out;
  auto it = samples.begin();
  out.train.assign(std::make_move_iterator(it), std::make_move_iterator(it + n_train));
  it += n_train;
  out.validation.assign(std::make_move_iterator(it), std::make_move_iterator(it + n_val));
  it += n_val;
  out.test.assign(std::make_move_iterator(it), std::make_move_iterator(samples.end()));
  return out;
}

struct TrainConfig {
  LossSpec loss;
  AdamConfig adam{3e-3};
  int max_steps_per_case = 3000;
  int patience = 2000;        // optimizer steps without validation improvement
  int eval_interval = 200;    // steps between validation passes
  int validation_limit = 16;  // validation samples scored per pass (0 = all)
  double dropout = 0.1;
  SplitSpec split;
  std::uint64_t seed = 0;
};

struct TraceRow {
  int case_index = 0;
  int step = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<TraceRow> trace;
};

/// Trains on each case in order; every case is split, trained with validation
/// early stopping, and the best-validation parameters carry into the next case.
TrainResult train_sequential(const std::vector<std::vector<SampleRef>>& cases, const TrainConfig& config,
                             const ModelParams& initial, const FeatureVariant& variant);

/// `count` distinct samples of `pool`, uniformly at random; the first
/// n_train of a transfer draw train and the rest validate.
std::vector<SampleRef> draw_samples(const std::vector<SampleRef>& pool, std::size_t count, std::uint64_t seed);

/// Freezes the last `freeze_last` layers of `parent` and retrains the rest on
/// n_train + n_val samples drawn at random from `pool`.
TrainResult transfer_retrain(const ModelParams& parent, int freeze_last, const std::vector<SampleRef>& pool,
                             std::size_t n_train, std::size_t n_val, const TrainConfig& config,
                             std::uint64_t seed, const FeatureVariant& variant);

struct FrameMetrics {
  std::string case_label;
  int timestep = 0;
  double rmse = 0.0;
  double mape = 0.0;
  double peak_ape = 0.0;      // APE at the hottest target node
  double max_peak_ape = 0.0;  // max APE over super-threshold target nodes
};

struct EvalReport {
  double rmse = 0.0;          // °C over all nodes of all samples
  double mape = 0.0;          // percent, nodes with |t| > 1e-6
  std::vector<double> peak_apes;  // percent, one per super-threshold target node
  double mean_peak_ape = 0.0;  // mean of peak_apes
  double max_peak_ape = 0.0;
  double mean_frame_peak_ape = 0.0;  // mean over frames of the APE at each frame's hottest node
  std::vector<FrameMetrics> frames;
};

/// Metrics of predictions against targets, accumulated over samples.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(double peak_threshold) : threshold_(peak_threshold) {}
  void add(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target, std::string label = {},
           int timestep = 0);
  EvalReport report() const;

 private:
  double threshold_;
  double squared_ = 0.0;
  std::size_t nodes_ = 0;
  double ape_sum_ = 0.0;
  std::size_t ape_count_ = 0;
  EvalReport partial_;
};

EvalReport evaluate_metrics(const ModelParams& model, const std::vector<SampleRef>& samples,
                            const FeatureVariant& variant, double peak_threshold = 1000.0);

/// Mean loss over samples in inference mode.
double mean_loss(const ModelParams& model, const std::vector<SampleRef>& samples, const FeatureVariant& variant,
                 const LossSpec& loss);

}  // namespace pbfgnn
