#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pbfgnn/error.hpp"
#include "pbfgnn/meshgraph.hpp"

namespace pbfgnn {

enum class Architecture { SingleLaser, MultiLaser };

std::string architecture_name(Architecture a);
Architecture parse_architecture(const std::string& name);

/// Output widths of every layer after the input: SL {32, 64, 32, 1},
/// ML {32, 64, 128, 64, 32, 1}.
std::vector<int> layer_widths(Architecture a);

enum class LossKind { Mse, Weighted };

/// Weighted loss: sqrt(mean(w_i (y_i - t_i)^2)), w_i = peak_weight where the
/// target exceeds threshold, 1 elsewhere.
struct LossSpec {
  LossKind kind = LossKind::Mse;
  double peak_weight = 1.0;
  double threshold = 1000.0;

  static LossSpec mse() { return {}; }
  static LossSpec weighted(double c, double threshold = 1000.0) { return {LossKind::Weighted, c, threshold}; }
  bool operator==(const LossSpec&) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // F_in × F_out
  Eigen::VectorXd bias;    // F_out
  bool frozen = false;

  bool operator==(const DenseLayer&) const = default;
};

struct ModelMeta {
  std::uint64_t iterations = 0;
  LossSpec loss;
  std::uint64_t seed = 0;

  bool operator==(const ModelMeta&) const = default;
};

/// Fixed affine change of temperature units around the network: the
/// temperature input column becomes (T − offset)/scale and predictions are
/// offset + scale·z. The identity default leaves features untouched.
struct TemperatureScaling {
  double offset = 0.0;
  double scale = 1.0;

  static TemperatureScaling identity() { return {}; }
  static TemperatureScaling standard() { return {80.0, 1000.0}; }
  bool operator==(const TemperatureScaling&) const = default;
};

struct ModelParams {
  std::vector<DenseLayer> layers;
  TemperatureScaling scaling;
  Architecture architecture = Architecture::SingleLaser;
  Aggregation aggregation = Aggregation::Mean;
  ModelMeta meta;

  int input_width() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.rows()); }
  int layer_count() const { return static_cast<int>(layers.size()); }
  /// Freezes the last `count` layers and unfreezes the rest.
  void freeze_last(int count);
  bool operator==(const ModelParams&) const = default;
};

/// Empty when layer shapes chain and end in width 1.
std::vector<std::string> validate_params(const ModelParams& params);

/// Fan-in uniform weights U(-1/√F_in, 1/√F_in) per layer, zero biases.
ModelParams init_params(Architecture architecture, int input_width, std::uint64_t seed,
                        Aggregation aggregation = Aggregation::Mean);

struct ForwardMode {
  bool training = false;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;  // advanced once per forward call by the caller

  static ForwardMode infer() { return {}; }
  static ForwardMode train(std::uint64_t seed, std::uint64_t counter, double rate = 0.1) {
    return {true, rate, seed, counter};
  }
};

/// Intermediate values kept for reverse-mode differentiation.
struct ForwardCache {
  bool training = false;
  const PropagationMatrix* propagation = nullptr;
  std::vector<RowMatrix> aggregated;     // P·H_l, input to layer l's weights
  std::vector<RowMatrix> preactivation;  // P·H_l·W_l + b_l
  std::vector<RowMatrix> masks;          // 0 or 1/(1 - rate), hidden layers only
};

struct ForwardResult {
  Eigen::VectorXd predictions;
  ForwardCache cache;
};

/// H ← P·H·W + b per layer; ReLU then (training only) inverted dropout on
/// every layer but the last, which stays linear. Column kTemperatureColumn of
/// the input and the output pass through params.scaling.
ForwardResult forward(const ModelParams& params, const Eigen::MatrixXd& features,
                      const PropagationMatrix& propagation, const ForwardMode& mode);

inline Eigen::VectorXd predict(const ModelParams& params, const Eigen::MatrixXd& features,
                               const PropagationMatrix& propagation) {
  return forward(params, features, propagation, ForwardMode::infer()).predictions;
}

template <typename DerivedY, typename DerivedT>
void check_loss_args(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedT>& t) {
  if (y.size() == 0 || t.size() == 0) throw InvalidArgument("loss of empty vectors");
  if (y.size() != t.size()) throw InvalidArgument("prediction and target lengths differ");
}

/// (1/N) Σ (y_i − t_i)²
template <typename DerivedY, typename DerivedT>
double loss_mse(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedT>& t) {
  check_loss_args(y, t);
  return (y.derived().template cast<double>() - t.derived().template cast<double>()).squaredNorm() /
         static_cast<double>(y.size());
}

template <typename DerivedY, typename DerivedT>
double loss_weighted(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedT>& t,
                     double peak_weight, double threshold) {
  check_loss_args(y, t);
  if (!(peak_weight >= 1.0)) throw InvalidArgument("peak weight must be >= 1");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double e = static_cast<double>(y(i)) - static_cast<double>(t(i));
    const double w = static_cast<double>(t(i)) > threshold ? peak_weight : 1.0;
    acc += w * e * e;
  }
  return std::sqrt(acc / static_cast<double>(y.size()));
}

double evaluate_loss(const LossSpec& spec, const Eigen::VectorXd& y, const Eigen::VectorXd& t);
/// dL/dy
Eigen::VectorXd loss_gradient(const LossSpec& spec, const Eigen::VectorXd& y, const Eigen::VectorXd& t);

struct LayerGradient {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};
using Gradients = std::vector<LayerGradient>;

Gradients zero_gradients(const ModelParams& params);

/// Gradients of the loss at the cached forward pass. Frozen layers get zero
/// blocks but still pass gradients through to earlier layers.
/// Throws InvalidState for an inference-mode cache.
Gradients backward(const ModelParams& params, const ForwardCache& cache, const LossSpec& loss,
                   const Eigen::VectorXd& predictions, const Eigen::VectorXd& target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Gradients first;
  Gradients second;
  std::uint64_t step = 0;

  static AdamState zeros(const ModelParams& params);
};

/// Adaptive-moment update of every unfrozen layer; frozen layers and their
/// moment accumulators are left untouched.
void optimizer_step(ModelParams& params, const Gradients& gradients, AdamState& state,
                    const AdamConfig& config = {});

}  // namespace pbfgnn
