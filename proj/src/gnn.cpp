#include "pbfgnn/gnn.hpp"

#include <random>

namespace pbfgnn {

std::string architecture_name(Architecture a) { return a == Architecture::SingleLaser ? "SL" : "ML"; }

Architecture parse_architecture(const std::string& name) {
  if (name == "SL" || name == "sl") return Architecture::SingleLaser;
  if (name == "ML" || name == "ml") return Architecture::MultiLaser;
  throw InvalidArgument("unknown architecture '" + name + "'");
}

std::vector<int> layer_widths(Architecture a) {
  if (a == Architecture::SingleLaser) return {32, 64, 32, 1};
  return {32, 64, 128, 64, 32, 1};
}

void ModelParams::freeze_last(int count) {
  if (count < 0 || count >= layer_count())
    throw InvalidArgument("cannot freeze " + std::to_string(count) + " of " +
                          std::to_string(layer_count()) + " layers");
  for (int l = 0; l < layer_count(); ++l) layers[l].frozen = l >= layer_count() - count;
}

std::vector<std::string> validate_params(const ModelParams& params) {
  std::vector<std::string> report;
  if (params.layers.empty()) report.push_back("model has no layers");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.bias.size() != layer.weight.cols())
      report.push_back("layer " + std::to_string(l) + ": bias length differs from F_out");
    if (l > 0 && layer.weight.rows() != params.layers[l - 1].weight.cols())
      report.push_back("layer " + std::to_string(l) + ": F_in does not match previous F_out");
  }
  if (!params.layers.empty() && params.layers.back().weight.cols() != 1)
    report.push_back("final layer must have width 1");
  return report;
}

ModelParams init_params(Architecture architecture, int input_width, std::uint64_t seed,
                        Aggregation aggregation) {
  if (input_width < 1) throw InvalidArgument("input width must be >= 1");
  ModelParams p;
  p.architecture = architecture;
  p.aggregation = aggregation;
  p.meta.seed = seed;
  std::mt19937_64 rng(seed);
  int fan_in = input_width;
  for (int width : layer_widths(architecture)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer;
    layer.weight.resize(fan_in, width);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    layer.bias = Eigen::VectorXd::Zero(width);
    p.layers.push_back(std::move(layer));
    fan_in = width;
  }
  return p;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// out = s·w + b, accumulated row by row in a fixed order so each output row
// depends only on its own input row.
RowMatrix dense_rows(const RowMatrix& s, const RowMatrix& w, const Eigen::VectorXd& b) {
  RowMatrix out(s.rows(), w.cols());
  const Eigen::RowVectorXd bias = b.transpose();
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    auto row = out.row(i);
    row = bias;
    for (Eigen::Index k = 0; k < s.cols(); ++k) row += s(i, k) * w.row(k);
  }
  return out;
}

}  // namespace

ForwardResult forward(const ModelParams& params, const Eigen::MatrixXd& features,
                      const PropagationMatrix& propagation, const ForwardMode& mode) {
  if (auto r = validate_params(params); !r.empty()) throw InvalidArgument("model: " + r.front());
  if (features.cols() != params.input_width())
    throw InvalidArgument("feature width " + std::to_string(features.cols()) +
                          " does not match model input width " + std::to_string(params.input_width()));
  if (propagation.size() != features.rows())
    throw InvalidArgument("propagation matrix size does not match node count");
  if (mode.training && !(mode.dropout_rate >= 0.0 && mode.dropout_rate < 1.0))
    throw InvalidArgument("dropout rate must lie in [0, 1)");

  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.training = mode.training;
  cache.propagation = &propagation;

  // Counter-based stream: element k of this call draws splitmix64(key + k).
  const std::uint64_t key = splitmix64(mode.seed ^ splitmix64(mode.counter));
  std::uint64_t draw = 0;
  const double keep = 1.0 - mode.dropout_rate;
  const double scale = keep > 0.0 ? 1.0 / keep : 0.0;

  RowMatrix h = features;
  const TemperatureScaling& scaling = params.scaling;
  if (!(scaling.scale > 0.0)) throw InvalidArgument("temperature scale must be positive");
  if (h.cols() > kTemperatureColumn)
    h.col(kTemperatureColumn) = (h.col(kTemperatureColumn).array() - scaling.offset) / scaling.scale;
  const int last = params.layer_count() - 1;
  for (int l = 0; l <= last; ++l) {
    const auto& layer = params.layers[l];
    RowMatrix s = propagate(propagation, h);
    RowMatrix z = dense_rows(s, layer.weight, layer.bias);
    if (l == last) {
      result.predictions = (scaling.offset + scaling.scale * z.col(0).array()).matrix();
    } else {
      h = z.cwiseMax(0.0);
      if (mode.training) {
        RowMatrix mask(h.rows(), h.cols());
        for (Eigen::Index k = 0; k < mask.size(); ++k) {
          const double u = static_cast<double>(splitmix64(key + draw++) >> 11) * 0x1.0p-53;
          mask.data()[k] = u < keep ? scale : 0.0;
        }
        h = h.cwiseProduct(mask);
        cache.masks.push_back(std::move(mask));
      }
    }
    if (mode.training) {
      cache.aggregated.push_back(std::move(s));
      cache.preactivation.push_back(std::move(z));
    }
  }
  return result;
}

double evaluate_loss(const LossSpec& spec, const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
  return spec.kind == LossKind::Mse ? loss_mse(y, t) : loss_weighted(y, t, spec.peak_weight, spec.threshold);
}

Eigen::VectorXd loss_gradient(const LossSpec& spec, const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
  check_loss_args(y, t);
  const double n = static_cast<double>(y.size());
  if (spec.kind == LossKind::Mse) return 2.0 * (y - t) / n;
  const double l = loss_weighted(y, t, spec.peak_weight, spec.threshold);
  if (l == 0.0) return Eigen::VectorXd::Zero(y.size());
  Eigen::VectorXd g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double w = t[i] > spec.threshold ? spec.peak_weight : 1.0;
    g[i] = w * (y[i] - t[i]) / (n * l);
  }
  return g;
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients g;
  for (const auto& layer : params.layers)
    g.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                 Eigen::VectorXd::Zero(layer.bias.size())});
  return g;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, const LossSpec& loss,
                   const Eigen::VectorXd& predictions, const Eigen::VectorXd& target) {
  if (!cache.training || cache.propagation == nullptr)
    throw InvalidState("backward requires a training-mode forward cache");
  if (static_cast<int>(cache.preactivation.size()) != params.layer_count())
    throw InvalidState("forward cache does not match the model");

  Gradients grads = zero_gradients(params);
  const int last = params.layer_count() - 1;
  RowMatrix dz = params.scaling.scale * loss_gradient(loss, predictions, target);  // dL/dz, N × 1
  for (int l = last; l >= 0; --l) {
    const auto& layer = params.layers[l];
    if (!layer.frozen) {
      grads[l].weight.noalias() = cache.aggregated[l].transpose() * dz;
      grads[l].bias = dz.colwise().sum().transpose();
    }
    if (l == 0) break;
    RowMatrix ds = dz * layer.weight.transpose();
    RowMatrix dh = cache.propagation->transpose * ds;
    const RowMatrix& zprev = cache.preactivation[l - 1];
    dz = dh.cwiseProduct(cache.masks[l - 1]).cwiseProduct((zprev.array() > 0.0).cast<double>().matrix());
  }
  return grads;
}

AdamState AdamState::zeros(const ModelParams& params) {
  return {zero_gradients(params), zero_gradients(params), 0};
}

void optimizer_step(ModelParams& params, const Gradients& gradients, AdamState& state,
                    const AdamConfig& config) {
  if (gradients.size() != params.layers.size() || state.first.size() != params.layers.size())
    throw InvalidArgument("gradient/optimizer state does not match the model");
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
    param.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.epsilon);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    if (layer.frozen) continue;
    if (gradients[l].weight.rows() != layer.weight.rows() || gradients[l].weight.cols() != layer.weight.cols())
      throw InvalidArgument("gradient shape mismatch at layer " + std::to_string(l));
    update(layer.weight, gradients[l].weight, state.first[l].weight, state.second[l].weight);
    update(layer.bias, gradients[l].bias, state.first[l].bias, state.second[l].bias);
  }
  ++params.meta.iterations;
}

}  // namespace pbfgnn
