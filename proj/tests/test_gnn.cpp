#include <doctest.h>

#include <random>

#include "gradcheck.hpp"
#include "pbfgnn/gnn.hpp"

using namespace pbfgnn;

namespace {

MeshGraph path_graph(int n) {
  MeshGraph g;
  g.node_count = n;
  for (int v = 0; v + 1 < n; ++v) g.edges.emplace_back(v, v + 1);
  g.coordinates = Eigen::MatrixX3d::Zero(n, 3);
  g.node_type = Eigen::VectorXi::Zero(n);
  return g;
}

ModelParams scalar_model(double w) {
  ModelParams p;
  p.layers.push_back({Eigen::MatrixXd::Constant(1, 1, w), Eigen::VectorXd::Zero(1), false});
  return p;
}

// Dense re-evaluation of the forward pass in inference mode.
Eigen::VectorXd dense_forward(const ModelParams& params, Eigen::MatrixXd x, const Eigen::MatrixXd& p) {
  x.col(kTemperatureColumn) = (x.col(kTemperatureColumn).array() - params.scaling.offset) / params.scaling.scale;
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Eigen::MatrixXd z = p * h * params.layers[l].weight;
    z.rowwise() += params.layers[l].bias.transpose();
    h = l + 1 < params.layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return (params.scaling.offset + params.scaling.scale * h.col(0).array()).matrix();
}

}  // namespace

TEST_CASE("init_params shapes and determinism") {
  const ModelParams a = init_params(Architecture::SingleLaser, 6, 7);
  const ModelParams b = init_params(Architecture::SingleLaser, 6, 7);
  CHECK(a == b);
  CHECK_FALSE(a == init_params(Architecture::SingleLaser, 6, 8));
  const int sl[][2] = {{6, 32}, {32, 64}, {64, 32}, {32, 1}};
  REQUIRE(a.layer_count() == 4);
  for (int l = 0; l < 4; ++l) {
    CHECK(a.layers[l].weight.rows() == sl[l][0]);
    CHECK(a.layers[l].weight.cols() == sl[l][1]);
    CHECK(a.layers[l].bias.isZero());
    CHECK_FALSE(a.layers[l].frozen);
    const double bound = 1.0 / std::sqrt(static_cast<double>(sl[l][0]));
    CHECK(a.layers[l].weight.cwiseAbs().maxCoeff() <= bound);
  }
  const ModelParams m = init_params(Architecture::MultiLaser, 7, 1);
  REQUIRE(m.layer_count() == 6);
  CHECK(m.layers.front().weight.rows() == 7);
  CHECK(m.layers[2].weight.cols() == 128);
  CHECK(m.layers[3].weight.cols() == 64);
  CHECK(m.layers.back().weight.rows() == 32);
  CHECK(m.layers.back().weight.cols() == 1);
  CHECK(validate_params(m).empty());
  CHECK(layer_widths(Architecture::MultiLaser) == std::vector<int>{32, 64, 128, 64, 32, 1});
}

TEST_CASE("validate_params rejects broken chains") {
  ModelParams p = init_params(Architecture::SingleLaser, 6, 1);
  p.layers[1].weight.resize(31, 64);
  CHECK_FALSE(validate_params(p).empty());
  p = init_params(Architecture::SingleLaser, 6, 1);
  p.layers.back().weight.resize(32, 2);
  p.layers.back().bias.resize(2);
  CHECK_FALSE(validate_params(p).empty());
}

TEST_CASE("forward examples") {
  const MeshGraph g = path_graph(3);
  const PropagationMatrix prop = propagation_matrix(g, Aggregation::Mean);
  Eigen::MatrixXd x = assemble_features(Eigen::Vector3d(100, 500, 900), g, std::vector<int>{1},
                                        FeatureVariant::single_laser());
  ModelParams zero = init_params(Architecture::SingleLaser, 6, 1);
  for (auto& layer : zero.layers) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  CHECK(predict(zero, x, prop).isZero());

  // Single node, self loop only, 1×1 unit layers.
  const PropagationMatrix self = propagation_matrix(path_graph(1), Aggregation::Mean);
  ModelParams unit;
  for (int l = 0; l < 3; ++l) unit.layers.push_back({Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), false});
  CHECK(predict(unit, Eigen::MatrixXd::Constant(1, 1, 5.0), self)[0] == 5.0);
}

TEST_CASE("forward matches a dense oracle") {
  const MeshGraph g = path_graph(3);
  for (Aggregation mode : {Aggregation::Mean, Aggregation::Symmetric}) {
    const PropagationMatrix prop = propagation_matrix(g, mode);
    const Eigen::MatrixXd dense_p(prop.matrix);
    Eigen::MatrixXd x = assemble_features(Eigen::Vector3d(100, 500, 900), g, std::vector<int>{1},
                                          FeatureVariant::single_laser());
    ModelParams two;
    Eigen::MatrixXd w0(6, 2);
    w0 << 0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8, 0.002, 0.001, 1.5, -1.0;
    two.layers.push_back({w0, Eigen::Vector2d(0.25, -0.5), false});
    two.layers.push_back({Eigen::Vector2d(2.0, -3.0), Eigen::VectorXd::Constant(1, 0.125), false});
    for (TemperatureScaling s : {TemperatureScaling::identity(), TemperatureScaling::standard()}) {
      two.scaling = s;
      const Eigen::VectorXd y = predict(two, x, prop);
      const Eigen::VectorXd oracle = dense_forward(two, x, dense_p);
      CHECK((y - oracle).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, oracle.cwiseAbs().maxCoeff()));
    }
    ModelParams sl = init_params(Architecture::SingleLaser, 6, 4, mode);
    sl.scaling = TemperatureScaling::standard();
    const Eigen::VectorXd oracle = dense_forward(sl, x, dense_p);
    CHECK((predict(sl, x, prop) - oracle).cwiseAbs().maxCoeff() <= 1e-12 * oracle.cwiseAbs().maxCoeff());
  }
  ModelParams sl = init_params(Architecture::SingleLaser, 6, 4);
  CHECK_THROWS_AS(predict(sl, Eigen::MatrixXd::Zero(3, 5), propagation_matrix(g, Aggregation::Mean)),
                  InvalidArgument);
  CHECK_THROWS_AS(predict(sl, Eigen::MatrixXd::Zero(4, 6), propagation_matrix(g, Aggregation::Mean)),
                  InvalidArgument);
}

TEST_CASE("forward is permutation equivariant") {
  const GridSpec grid = make_grid(0.3, 0.05);
  const MeshGraph g = grid_to_graph(grid);
  const int n = g.node_count;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  const MeshGraph pg = permute_graph(g, perm);
  Eigen::VectorXd frame(n), pframe(n);
  for (int v = 0; v < n; ++v) frame[v] = 80.0 + 13.0 * v;
  for (int v = 0; v < n; ++v) pframe[perm[static_cast<std::size_t>(v)]] = frame[v];
  const std::vector<int> focal{10};
  const std::vector<int> pfocal{perm[10]};
  for (Architecture arch : {Architecture::SingleLaser, Architecture::MultiLaser}) {
    const auto variant = arch == Architecture::SingleLaser ? FeatureVariant::single_laser()
                                                           : FeatureVariant::multi_laser(2, 431);
    for (Aggregation mode : {Aggregation::Mean, Aggregation::Symmetric}) {
      ModelParams params = init_params(arch, variant.width(), 2, mode);
      params.scaling = TemperatureScaling::standard();
      const Eigen::VectorXd y =
          predict(params, assemble_features(frame, g, focal, variant), propagation_matrix(g, mode));
      const Eigen::VectorXd py =
          predict(params, assemble_features(pframe, pg, pfocal, variant), propagation_matrix(pg, mode));
      bool exact = true;
      for (int v = 0; v < n; ++v) exact = exact && py[perm[static_cast<std::size_t>(v)]] == y[v];
      CHECK(exact);
    }
  }
}

TEST_CASE("loss examples") {
  CHECK(loss_mse(Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 4)) == 0.0);
  CHECK(loss_mse(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 0)) == 2.5);
  CHECK(loss_weighted(Eigen::Vector2d(1190, 510), Eigen::Vector2d(1200, 500), 9.0, 1000.0) ==
        doctest::Approx(std::sqrt(500.0)).epsilon(1e-14));
  CHECK(loss_weighted(Eigen::Vector2d(1190, 510), Eigen::Vector2d(999, 500), 9.0, 1000.0) ==
        doctest::Approx(std::sqrt(loss_mse(Eigen::Vector2d(1190, 510), Eigen::Vector2d(999, 500)))).epsilon(1e-14));
  CHECK_THROWS_AS(loss_mse(Eigen::VectorXd(), Eigen::VectorXd()), InvalidArgument);
  CHECK_THROWS_AS(loss_weighted(Eigen::VectorXd(), Eigen::VectorXd(), 2.0, 1000.0), InvalidArgument);
  CHECK_THROWS_AS(loss_mse(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), InvalidArgument);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 2000.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd y(100), t(100);
    for (int i = 0; i < 100; ++i) {
      y[i] = u(rng);
      t[i] = u(rng);
    }
    double sum = 0.0, wsum = 0.0;
    for (int i = 0; i < 100; ++i) {
      sum += (y[i] - t[i]) * (y[i] - t[i]);
      wsum += (t[i] > 1000.0 ? 4.0 : 1.0) * (y[i] - t[i]) * (y[i] - t[i]);
    }
    CHECK(loss_mse(y, t) == doctest::Approx(sum / 100).epsilon(1e-12));
    CHECK(loss_weighted(y, t, 4.0, 1000.0) == doctest::Approx(std::sqrt(wsum / 100)).epsilon(1e-12));
    const double unit = loss_weighted(y, t, 1.0, 1000.0);
    CHECK(std::abs(unit - std::sqrt(loss_mse(y, t))) <= 1e-12 * unit);
  }
}

TEST_CASE("backward agrees with central finite differences") {
  for (Architecture arch : {Architecture::SingleLaser, Architecture::MultiLaser}) {
    for (LossKind kind : {LossKind::Mse, LossKind::Weighted}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const gradcheck::Instance in = gradcheck::random_instance(arch, kind, seed);
        const gradcheck::Result r = gradcheck::check(in);
        CAPTURE(architecture_name(arch));
        CAPTURE(seed);
        CHECK(r.checked > r.skipped);
        CHECK(r.max_relative_error < 1e-4);
      }
    }
  }
}

TEST_CASE("backward special cases") {
  gradcheck::Instance in = gradcheck::random_instance(Architecture::SingleLaser, LossKind::Mse, 5);
  // Perfect fit: use the model's own predictions as targets.
  auto r = forward(in.params, in.features, in.propagation, in.mode);
  Gradients g = backward(in.params, r.cache, in.loss, r.predictions, r.predictions);
  for (const auto& lg : g) {
    CHECK(lg.weight.isZero());
    CHECK(lg.bias.isZero());
  }

  in.params.freeze_last(2);
  CHECK_FALSE(in.params.layers[1].frozen);
  CHECK(in.params.layers[2].frozen);
  r = forward(in.params, in.features, in.propagation, in.mode);
  g = backward(in.params, r.cache, in.loss, r.predictions, in.target);
  CHECK(g[2].weight.isZero());
  CHECK(g[3].weight.isZero());
  CHECK(g[3].bias.isZero());
  CHECK_FALSE(g[0].weight.isZero());

  const auto inferred = forward(in.params, in.features, in.propagation, ForwardMode::infer());
  CHECK(inferred.cache.masks.empty());
  CHECK_THROWS_AS(backward(in.params, inferred.cache, in.loss, inferred.predictions, in.target), InvalidState);
}

TEST_CASE("forward and backward are bit-reproducible") {
  const gradcheck::Instance in = gradcheck::random_instance(Architecture::MultiLaser, LossKind::Weighted, 8);
  const auto a = forward(in.params, in.features, in.propagation, in.mode);
  const auto b = forward(in.params, in.features, in.propagation, in.mode);
  CHECK(a.predictions == b.predictions);
  const Gradients ga = backward(in.params, a.cache, in.loss, a.predictions, in.target);
  const Gradients gb = backward(in.params, b.cache, in.loss, b.predictions, in.target);
  for (std::size_t l = 0; l < ga.size(); ++l) CHECK(ga[l].weight == gb[l].weight);
  ForwardMode other = in.mode;
  ++other.counter;
  CHECK_FALSE(forward(in.params, in.features, in.propagation, other).predictions == a.predictions);
}

TEST_CASE("inverted dropout preserves the expected layer output") {
  const MeshGraph g = path_graph(4);
  const PropagationMatrix prop = propagation_matrix(g, Aggregation::Mean);
  // One hidden ReLU layer feeding a linear output: the output is linear in the
  // dropped activations, so its mean over masks equals the inference output.
  ModelParams p;
  Eigen::MatrixXd w0(2, 8);
  w0.row(0) << 0.5, 1.0, 0.25, 2.0, 0.75, 1.5, 0.1, 0.3;
  w0.row(1) << 0.2, -0.1, 0.4, 0.3, 0.0, 0.6, 0.9, -0.2;
  p.layers.push_back({w0, Eigen::VectorXd::Constant(8, 0.1), false});
  Eigen::VectorXd w1(8);
  w1 << 1.0, 0.5, 2.0, 1.5, 0.25, 0.75, 1.0, 0.5;
  p.layers.push_back({w1, Eigen::VectorXd::Zero(1), false});
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 3, 1, 2, 2, 4, 0.5;

  const Eigen::VectorXd expected = forward(p, x, prop, ForwardMode::infer()).predictions;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) mean += forward(p, x, prop, ForwardMode::train(17, k)).predictions;
  mean /= draws;
  for (int v = 0; v < 4; ++v) CHECK(std::abs(mean[v] - expected[v]) <= 0.02 * std::abs(expected[v]));

  const auto r = forward(p, x, prop, ForwardMode::train(17, 0));
  REQUIRE(r.cache.masks.size() == 1);
  const RowMatrix& mask = r.cache.masks[0];
  for (Eigen::Index k = 0; k < mask.size(); ++k)
    CHECK((mask.data()[k] == 0.0 || mask.data()[k] == doctest::Approx(1.0 / 0.9)));
}

TEST_CASE("optimizer_step") {
  ModelParams p = scalar_model(1.0);
  AdamState s = AdamState::zeros(p);
  optimizer_step(p, zero_gradients(p), s);
  CHECK(p.layers[0].weight(0, 0) == 1.0);
  CHECK(s.step == 1u);
  // Existing moments decay under a zero gradient.
  s.first[0].weight(0, 0) = 0.5;
  s.second[0].weight(0, 0) = 0.25;
  optimizer_step(p, zero_gradients(p), s);
  CHECK(s.first[0].weight(0, 0) == doctest::Approx(0.45));
  CHECK(s.second[0].weight(0, 0) == doctest::Approx(0.24975));

  p = scalar_model(0.0);
  s = AdamState::zeros(p);
  Gradients g = zero_gradients(p);
  g[0].weight(0, 0) = 2.0;
  for (int k = 0; k < 50; ++k) optimizer_step(p, g, s);
  CHECK(p.layers[0].weight(0, 0) < 0.0);
  // Adam's first step moves by lr regardless of gradient size.
  p = scalar_model(0.0);
  s = AdamState::zeros(p);
  optimizer_step(p, g, s);
  CHECK(p.layers[0].weight(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));

  p = scalar_model(0.0);
  s = AdamState::zeros(p);
  const AdamConfig fast{1e-2};
  for (int k = 0; k < 2000; ++k) {
    g[0].weight(0, 0) = 2.0 * (p.layers[0].weight(0, 0) - 3.0);
    optimizer_step(p, g, s, fast);
  }
  CHECK(std::abs(p.layers[0].weight(0, 0) - 3.0) < 1e-2);

  ModelParams net = init_params(Architecture::SingleLaser, 6, 3);
  net.freeze_last(2);
  const ModelParams before = net;
  AdamState ns = AdamState::zeros(net);
  Gradients ng = zero_gradients(net);
  for (auto& lg : ng) lg.weight.setConstant(0.5);
  optimizer_step(net, ng, ns);
  CHECK(net.layers[2] == before.layers[2]);
  CHECK(net.layers[3] == before.layers[3]);
  CHECK_FALSE(net.layers[0] == before.layers[0]);
}

TEST_CASE("names round trip") {
  for (Architecture a : {Architecture::SingleLaser, Architecture::MultiLaser})
    CHECK(parse_architecture(architecture_name(a)) == a);
  CHECK_THROWS_AS(parse_architecture("XL"), InvalidArgument);
}
