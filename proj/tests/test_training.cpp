#include <doctest.h>

#include <numeric>
#include <set>

#include "pbfgnn/training.hpp"

using namespace pbfgnn;

namespace {

// History on a 3×3 grid whose every frame is the same constant field.
CasePtr constant_case(double value, int frames, const CasePtr& shared = nullptr) {
  ThermalHistory h;
  h.grid = make_grid(0.1, 0.05);
  h.dwell = 0.05 / 1200.0;
  for (int f = 0; f < frames; ++f) {
    ThermalFrame frame;
    frame.timestep = static_cast<std::uint32_t>(f);
    if (f > 0) frame.focal_nodes = {static_cast<std::uint32_t>(f % 9)};
    frame.temperature.assign(9, static_cast<float>(value));
    h.frames.push_back(std::move(frame));
  }
  return make_case("const", std::move(h), Aggregation::Mean, shared);
}

CasePtr simulated_case(const GridSpec& grid, const std::string& label) {
  ScanPlan plan{grid, {raster_path(grid, full_rect(grid), RasterOrientation::Lateral, Corner::BottomLeft)}, label};
  return make_case(label, simulate(plan, MaterialTable::in625(), ProcessParams{}), Aggregation::Mean);
}

ModelParams fresh_model(std::uint64_t seed = 1) {
  ModelParams m = init_params(Architecture::SingleLaser, 6, seed);
  m.scaling = TemperatureScaling::standard();
  return m;
}

}  // namespace

TEST_CASE("split_case sizes, disjointness and determinism") {
  std::vector<int> items(1477);
  std::iota(items.begin(), items.end(), 0);
  const auto s = split_case(items, SplitSpec{0.7, 0.1, 0.2, 3});
  CHECK(s.train.size() == 1033u);
  CHECK(s.validation.size() == 147u);
  CHECK(s.test.size() == 297u);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1477u);

  std::vector<int> ten(10);
  std::iota(ten.begin(), ten.end(), 0);
  const auto t = split_case(ten, SplitSpec{0.7, 0.1, 0.2, 9});
  CHECK(t.train.size() == 7u);
  CHECK(t.validation.size() == 1u);
  CHECK(t.test.size() == 2u);

  const auto again = split_case(items, SplitSpec{0.7, 0.1, 0.2, 3});
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  CHECK_FALSE(split_case(items, SplitSpec{0.7, 0.1, 0.2, 4}).train == s.train);

  CHECK_THROWS_AS(split_case(std::vector<int>{1, 2}, SplitSpec{}), InvalidArgument);
  CHECK_THROWS_AS(split_case(ten, SplitSpec{0.7, 0.2, 0.2, 0}), InvalidArgument);
  CHECK_THROWS_AS(split_case(ten, SplitSpec{1.0, 0.0, 0.0, 0}), InvalidArgument);
}

TEST_CASE("samples reference consecutive frames") {
  const CasePtr c = constant_case(500.0, 6);
  const auto samples = case_samples(c);
  REQUIRE(samples.size() == 5u);
  const GraphSample s = materialize(samples[2], FeatureVariant::single_laser());
  CHECK(s.timestep == 3);
  CHECK(s.features.rows() == 9);
  CHECK(s.features(3, 5) == 1.0);
  CHECK(s.features.col(5).sum() == 1.0);
  CHECK((s.target.array() == 500.0).all());
  CHECK(s.propagation.get() == c->propagation.get());
  const CasePtr shared = constant_case(100.0, 3, c);
  CHECK(shared->propagation.get() == c->propagation.get());
}

TEST_CASE("train_sequential fits a tiny constant case") {
  const auto samples = case_samples(constant_case(500.0, 40));
  TrainConfig cfg;
  cfg.max_steps_per_case = 600;
  cfg.eval_interval = 50;
  cfg.adam.learning_rate = 3e-3;
  const ModelParams init = fresh_model();
  const double before = mean_loss(init, samples, FeatureVariant::single_laser(), cfg.loss);
  const TrainResult r = train_sequential({samples}, cfg, init, FeatureVariant::single_laser());
  const double after = mean_loss(r.params, samples, FeatureVariant::single_laser(), cfg.loss);
  CHECK(after < 0.1 * before);
  CHECK(r.params.meta.iterations > 0u);
  CHECK_FALSE(r.trace.empty());

  TrainConfig none = cfg;
  none.max_steps_per_case = 0;
  const TrainResult unchanged = train_sequential({samples}, none, init, FeatureVariant::single_laser());
  CHECK(unchanged.params.layers == init.layers);

  CHECK_THROWS_AS(train_sequential({}, cfg, init, FeatureVariant::single_laser()), InvalidArgument);
  CHECK_THROWS_AS(train_sequential({samples}, cfg, init, FeatureVariant::multi_laser(2, 1.0)), InvalidArgument);
}

TEST_CASE("train_sequential warm-starts the second case") {
  const auto samples = case_samples(constant_case(700.0, 40));
  TrainConfig cfg;
  cfg.max_steps_per_case = 300;
  cfg.eval_interval = 50;
  const TrainResult r = train_sequential({samples, samples}, cfg, fresh_model(2), FeatureVariant::single_laser());
  double first = -1.0, second = -1.0;
  for (const auto& row : r.trace) {
    if (row.step != 0) continue;
    (row.case_index == 0 ? first : second) = row.train_loss;
  }
  REQUIRE(first > 0.0);
  REQUIRE(second >= 0.0);
  CHECK(second <= first);
}

TEST_CASE("training is bit-reproducible") {
  const auto samples = case_samples(constant_case(300.0, 20));
  TrainConfig cfg;
  cfg.max_steps_per_case = 40;
  cfg.eval_interval = 10;
  const auto a = train_sequential({samples}, cfg, fresh_model(), FeatureVariant::single_laser());
  const auto b = train_sequential({samples}, cfg, fresh_model(), FeatureVariant::single_laser());
  CHECK(a.params == b.params);
}

TEST_CASE("transfer_retrain freezes the tail bit-exactly") {
  const CasePtr c = simulated_case(make_grid(0.3, 0.05), "tiny");
  const auto pool = case_samples(c);
  TrainConfig cfg;
  cfg.max_steps_per_case = 60;
  cfg.eval_interval = 10;
  const ModelParams parent = fresh_model(5);
  const TrainResult r = transfer_retrain(parent, 2, pool, 14, 2, cfg, 11, FeatureVariant::single_laser());
  REQUIRE(r.params.layer_count() == 4);
  CHECK(r.params.layers[2].weight == parent.layers[2].weight);
  CHECK(r.params.layers[2].bias == parent.layers[2].bias);
  CHECK(r.params.layers[3].weight == parent.layers[3].weight);
  CHECK(r.params.layers[3].bias == parent.layers[3].bias);
  CHECK(r.params.layers[2].frozen);
  CHECK_FALSE(r.params.layers[0].frozen);
  CHECK_FALSE(r.params.layers[0].weight == parent.layers[0].weight);

  const TrainResult tl4 = transfer_retrain(r.params, 2, pool, 4, 1, cfg, 12, FeatureVariant::single_laser());
  CHECK(tl4.params.layers[3].weight == parent.layers[3].weight);

  CHECK_THROWS_AS(transfer_retrain(parent, 2, pool, pool.size(), 1, cfg, 1, FeatureVariant::single_laser()),
                  InvalidArgument);
  CHECK_THROWS(transfer_retrain(parent, 4, pool, 4, 1, cfg, 1, FeatureVariant::single_laser()));
}

TEST_CASE("draw_samples draws distinct samples deterministically") {
  const auto pool = case_samples(constant_case(100.0, 30));
  const auto a = draw_samples(pool, 16, 4);
  const auto b = draw_samples(pool, 16, 4);
  std::set<int> steps;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].timestep == b[i].timestep);
    steps.insert(a[i].timestep);
  }
  CHECK(steps.size() == 16u);
  CHECK_THROWS_AS(draw_samples(pool, 30, 1), InvalidArgument);
}

TEST_CASE("metric examples") {
  MetricAccumulator perfect(1000.0);
  perfect.add(Eigen::Vector3d(1200, 80, 500), Eigen::Vector3d(1200, 80, 500));
  const EvalReport p = perfect.report();
  CHECK(p.rmse == 0.0);
  CHECK(p.mape == 0.0);
  CHECK(p.max_peak_ape == 0.0);

  MetricAccumulator one(1000.0);
  one.add(Eigen::VectorXd::Constant(1, 110.0), Eigen::VectorXd::Constant(1, 100.0));
  CHECK(one.report().mape == doctest::Approx(10.0));
  CHECK(one.report().rmse == doctest::Approx(10.0));

  MetricAccumulator peak(1000.0);
  peak.add(Eigen::Vector2d(1100, 100), Eigen::Vector2d(1000, 100));
  const EvalReport r = peak.report();
  REQUIRE(r.peak_apes.size() == 1u);
  CHECK(r.peak_apes[0] == doctest::Approx(10.0));
  CHECK(r.max_peak_ape == doctest::Approx(10.0));
  CHECK(r.mean_peak_ape == doctest::Approx(10.0));
  CHECK(r.rmse == doctest::Approx(std::sqrt(10000.0 / 2)));

  MetricAccumulator zero(1000.0);
  zero.add(Eigen::Vector2d(5, 105), Eigen::Vector2d(0, 100));
  CHECK(zero.report().mape == doctest::Approx(5.0));
  CHECK(zero.report().peak_apes.empty());
  CHECK(zero.report().max_peak_ape == 0.0);
}

TEST_CASE("metric invariants") {
  const CasePtr c = simulated_case(make_grid(0.3, 0.05), "tiny");
  const auto samples = case_samples(c);
  const ModelParams m = fresh_model(3);
  const EvalReport rep = evaluate_metrics(m, samples, FeatureVariant::single_laser());
  CHECK(rep.rmse >= 0.0);
  CHECK(rep.mape >= 0.0);
  CHECK(rep.frames.size() == samples.size());
  const double max_peak = rep.peak_apes.empty() ? 0.0 : *std::max_element(rep.peak_apes.begin(), rep.peak_apes.end());
  CHECK(rep.max_peak_ape == max_peak);
  double sum = 0.0;
  for (double p : rep.peak_apes) sum += p;
  CHECK(rep.mean_peak_ape == doctest::Approx(rep.peak_apes.empty() ? 0.0 : sum / rep.peak_apes.size()));
  CHECK(rep.mean_peak_ape <= rep.max_peak_ape);

  // Single-sample RMSE equals √MSE.
  for (std::size_t k : {0u, 5u, 20u}) {
    const GraphSample s = materialize(samples[k], FeatureVariant::single_laser());
    const double rmse = std::sqrt(loss_mse(predict(m, s.features, *s.propagation), s.target));
    const double got = evaluate_metrics(m, {samples[k]}, FeatureVariant::single_laser()).rmse;
    CHECK(std::abs(got - rmse) <= 1e-12 * rmse);
  }
}
