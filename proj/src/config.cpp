#include "pbfgnn/config.hpp"

#include <cstdio>
#include <json.hpp>

#include "pbfgnn/error.hpp"
#include "pbfgnn/io.hpp"

namespace pbfgnn {

using nlohmann::json;

namespace {

json points_json(const std::vector<PropertyPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.temperature, p.value});
  return a;
}

std::vector<PropertyPoint> points_from(const json& a) {
  std::vector<PropertyPoint> out;
  for (const auto& row : a) {
    if (!row.is_array() || row.size() != 2) throw InvalidArgument("property points must be [temperature, value] pairs");
    out.push_back({row[0].get<double>(), row[1].get<double>()});
  }
  return out;
}

json bounds_json(double lo, double hi) { return json::array({lo, hi}); }

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["model"] = c.model;
  j["material"] = {{"density", c.material.density},
                   {"conductivity", points_json(c.material.conductivity)},
                   {"expansion", points_json(c.material.expansion)},
                   {"specific_heat", points_json(c.material.specific_heat)}};
  const ProcessParams& p = c.process;
  j["process"] = {{"scan_speed", p.scan_speed},
                  {"laser_radius", p.laser_radius},
                  {"power", p.power},
                  {"absorptivity", p.absorptivity},
                  {"substrate_temperature", p.substrate_temperature},
                  {"ambient_temperature", p.ambient_temperature},
                  {"effective_htc", p.effective_htc},
                  {"plate_thickness", p.plate_thickness},
                  {"substrate_htc", p.substrate_htc}};
  const SimOptions& s = c.simulation;
  j["simulation"] = {{"initial_temperature", s.initial_temperature},
                     {"safety", s.safety},
                     {"substep_multiplier", s.substep_multiplier},
                     {"goldak_a", s.goldak_a},
                     {"goldak_b", s.goldak_b},
                     {"goldak_c", s.goldak_c}};
  j["domains"] = json::object();
  for (const auto& d : c.domains)
    j["domains"][d.label] = {
        {"side_length", d.side_length}, {"node_spacing", d.node_spacing}, {"island_size", d.island_size}};
  const TrainConfig& t = c.training;
  j["training"] = {{"learning_rate", t.adam.learning_rate},
                   {"beta1", t.adam.beta1},
                   {"beta2", t.adam.beta2},
                   {"epsilon", t.adam.epsilon},
                   {"max_steps_per_case", t.max_steps_per_case},
                   {"patience", t.patience},
                   {"eval_interval", t.eval_interval},
                   {"validation_limit", t.validation_limit},
                   {"dropout", t.dropout},
                   {"split", {t.split.train, t.split.validation, t.split.test}},
                   {"split_seed", t.split.seed},
                   {"seed", t.seed},
                   {"loss", {{"kind", t.loss.kind == LossKind::Mse ? "mse" : "weighted"},
                             {"peak_weight", t.loss.peak_weight},
                             {"threshold", t.loss.threshold}}},
                   {"aggregation", aggregation_name(c.aggregation)},
                   {"temperature_offset", c.scaling.offset},
                   {"temperature_scale", c.scaling.scale},
                   {"train_cases", c.train_cases}};
  auto transfer = [](const TransferSpec& s) {
    return json{{"freeze_last", s.freeze_last}, {"n_train", s.n_train}, {"n_val", s.n_val}};
  };
  j["transfer"] = {{"tl3", transfer(c.tl3)}, {"tl4", transfer(c.tl4)}};
  const TuneSpec& u = c.tune;
  j["tune"] = {{"n_init", u.search.n_init},
               {"n_iter", u.search.n_iter},
               {"seed", u.search.seed},
               {"penalty", u.search.penalty},
               {"acquisition_starts", u.search.acquisition_starts},
               {"bounds", {{"a", bounds_json(u.search.bounds.a_min, u.search.bounds.a_max)},
                           {"b", bounds_json(u.search.bounds.b_min, u.search.bounds.b_max)},
                           {"c", bounds_json(u.search.bounds.c_min, u.search.bounds.c_max)}}},
               {"lasers", u.lasers},
               {"training_plans", u.training_plans},
               {"validation_plans", u.validation_plans},
               {"side_length", u.side_length},
               {"steps_per_candidate", u.steps_per_candidate},
               {"validation_stride", u.validation_stride}};
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.output_dir = j.at("output_dir").get<std::string>();
  c.model = j.at("model").get<std::string>();
  const json& m = j.at("material");
  c.material.density = m.at("density").get<double>();
  c.material.conductivity = points_from(m.at("conductivity"));
  c.material.expansion = points_from(m.at("expansion"));
  c.material.specific_heat = points_from(m.at("specific_heat"));
  const json& p = j.at("process");
  c.process.scan_speed = p.at("scan_speed").get<double>();
  c.process.laser_radius = p.at("laser_radius").get<double>();
  c.process.power = p.at("power").get<double>();
  c.process.absorptivity = p.at("absorptivity").get<double>();
  c.process.substrate_temperature = p.at("substrate_temperature").get<double>();
  c.process.ambient_temperature = p.at("ambient_temperature").get<double>();
  c.process.effective_htc = p.at("effective_htc").get<double>();
  c.process.plate_thickness = p.at("plate_thickness").get<double>();
  c.process.substrate_htc = p.at("substrate_htc").get<double>();
  const json& s = j.at("simulation");
  c.simulation.initial_temperature = s.at("initial_temperature").get<double>();
  c.simulation.safety = s.at("safety").get<double>();
  c.simulation.substep_multiplier = s.at("substep_multiplier").get<int>();
  c.simulation.goldak_a = s.at("goldak_a").get<double>();
  c.simulation.goldak_b = s.at("goldak_b").get<double>();
  c.simulation.goldak_c = s.at("goldak_c").get<double>();
  for (const auto& [label, d] : j.at("domains").items())
    c.domains.push_back({label, d.at("side_length").get<double>(), d.at("node_spacing").get<double>(),
                         d.at("island_size").get<double>()});
  const json& t = j.at("training");
  c.training.adam.learning_rate = t.at("learning_rate").get<double>();
  c.training.adam.beta1 = t.at("beta1").get<double>();
  c.training.adam.beta2 = t.at("beta2").get<double>();
  c.training.adam.epsilon = t.at("epsilon").get<double>();
  c.training.max_steps_per_case = t.at("max_steps_per_case").get<int>();
  c.training.patience = t.at("patience").get<int>();
  c.training.eval_interval = t.at("eval_interval").get<int>();
  c.training.validation_limit = t.at("validation_limit").get<int>();
  c.training.dropout = t.at("dropout").get<double>();
  const json& split = t.at("split");
  if (!split.is_array() || split.size() != 3) throw InvalidArgument("training.split must be [train, validation, test]");
  c.training.split.train = split[0].get<double>();
  c.training.split.validation = split[1].get<double>();
  c.training.split.test = split[2].get<double>();
  c.training.split.seed = t.at("split_seed").get<std::uint64_t>();
  c.training.seed = t.at("seed").get<std::uint64_t>();
  const json& loss = t.at("loss");
  const std::string kind = loss.at("kind").get<std::string>();
  if (kind != "mse" && kind != "weighted") throw InvalidArgument("unknown loss kind \"" + kind + "\"");
  c.training.loss.kind = kind == "mse" ? LossKind::Mse : LossKind::Weighted;
  c.training.loss.peak_weight = loss.at("peak_weight").get<double>();
  c.training.loss.threshold = loss.at("threshold").get<double>();
  c.aggregation = parse_aggregation(t.at("aggregation").get<std::string>());
  c.scaling.offset = t.at("temperature_offset").get<double>();
  c.scaling.scale = t.at("temperature_scale").get<double>();
  c.train_cases = t.at("train_cases").get<int>();
  auto transfer = [](const json& x) {
    return TransferSpec{x.at("freeze_last").get<int>(), x.at("n_train").get<std::size_t>(),
                        x.at("n_val").get<std::size_t>()};
  };
  c.tl3 = transfer(j.at("transfer").at("tl3"));
  c.tl4 = transfer(j.at("transfer").at("tl4"));
  const json& u = j.at("tune");
  c.tune.search.n_init = u.at("n_init").get<int>();
  c.tune.search.n_iter = u.at("n_iter").get<int>();
  c.tune.search.seed = u.at("seed").get<std::uint64_t>();
  c.tune.search.penalty = u.at("penalty").get<double>();
  c.tune.search.acquisition_starts = u.at("acquisition_starts").get<int>();
  auto pair = [](const json& x, double& lo, double& hi) {
    if (!x.is_array() || x.size() != 2) throw InvalidArgument("bounds must be [min, max]");
    lo = x[0].get<double>();
    hi = x[1].get<double>();
  };
  const json& b = u.at("bounds");
  pair(b.at("a"), c.tune.search.bounds.a_min, c.tune.search.bounds.a_max);
  pair(b.at("b"), c.tune.search.bounds.b_min, c.tune.search.bounds.b_max);
  pair(b.at("c"), c.tune.search.bounds.c_min, c.tune.search.bounds.c_max);
  c.tune.lasers = u.at("lasers").get<int>();
  c.tune.training_plans = u.at("training_plans").get<int>();
  c.tune.validation_plans = u.at("validation_plans").get<int>();
  c.tune.side_length = u.at("side_length").get<double>();
  c.tune.steps_per_candidate = u.at("steps_per_candidate").get<int>();
  c.tune.validation_stride = u.at("validation_stride").get<int>();
  return c;
}

// Every key of `user` must exist in `reference`; domain labels are free.
void check_keys(const json& user, const json& reference, const std::string& where) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (where == "domains") {
      if (!value.is_object()) throw InvalidArgument("domain \"" + key + "\" must be an object");
      check_keys(value, reference.begin().value(), path);
      continue;
    }
    if (!reference.contains(key)) throw InvalidArgument("unknown config key \"" + path + "\"");
    if (reference[key].is_object() && !value.is_object())
      throw InvalidArgument("config key \"" + path + "\" must be an object");
    check_keys(value, reference[key], path);
  }
}

}  // namespace

const DomainSpec& RunConfig::domain(const std::string& label) const {
  for (const auto& d : domains)
    if (d.label == label) return d;
  throw InvalidArgument("no domain labelled \"" + label + "\"");
}

RunConfig default_run_config() {
  RunConfig c;
  c.domains = {{"A", 2.0, 0.05, 1.0}, {"B", 3.0, 0.05, 1.0}, {"C", 4.0, 0.05, 1.0}};
  return c;
}

std::vector<std::string> validate_run_config(const RunConfig& c) {
  std::vector<std::string> errs;
  for (const auto& e : validate_table(c.material)) errs.push_back("material: " + e);
  for (const auto& e : validate_process(c.process)) errs.push_back("process: " + e);
  if (!(c.simulation.safety > 0.0 && c.simulation.safety <= 1.0)) errs.push_back("simulation.safety must be in (0, 1]");
  if (c.simulation.substep_multiplier < 1) errs.push_back("simulation.substep_multiplier must be >= 1");
  if (c.simulation.goldak_a < 0 || c.simulation.goldak_b < 0 || c.simulation.goldak_c < 0)
    errs.push_back("simulation goldak axes must be >= 0");
  for (const auto& d : c.domains) {
    try {
      const GridSpec g = make_grid(d.side_length, d.node_spacing);
      (void)g;
      (void)make_grid(d.side_length, d.island_size);
    } catch (const InvalidArgument& e) {
      errs.push_back("domain " + d.label + ": " + e.what());
    }
  }
  const TrainConfig& t = c.training;
  if (!(t.adam.learning_rate > 0.0)) errs.push_back("training.learning_rate must be > 0");
  if (!(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0) || !(t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0))
    errs.push_back("training betas must be in [0, 1)");
  if (!(t.adam.epsilon > 0.0)) errs.push_back("training.epsilon must be > 0");
  if (t.max_steps_per_case < 0) errs.push_back("training.max_steps_per_case must be >= 0");
  if (t.patience <= 0) errs.push_back("training.patience must be > 0");
  if (t.eval_interval <= 0) errs.push_back("training.eval_interval must be > 0");
  if (t.validation_limit < 0) errs.push_back("training.validation_limit must be >= 0");
  if (!(t.dropout >= 0.0 && t.dropout < 1.0)) errs.push_back("training.dropout must be in [0, 1)");
  if (!(t.split.train > 0 && t.split.validation > 0 && t.split.test > 0) ||
      std::abs(t.split.train + t.split.validation + t.split.test - 1.0) > 1e-9)
    errs.push_back("training.split fractions must be positive and sum to 1");
  if (!(t.loss.peak_weight >= 1.0)) errs.push_back("training.loss.peak_weight must be >= 1");
  if (!std::isfinite(t.loss.threshold)) errs.push_back("training.loss.threshold must be finite");
  if (!(c.scaling.scale != 0.0 && std::isfinite(c.scaling.scale) && std::isfinite(c.scaling.offset)))
    errs.push_back("training temperature scaling must be finite with nonzero scale");
  if (c.train_cases < 1) errs.push_back("training.train_cases must be >= 1");
  for (const auto* s : {&c.tl3, &c.tl4})
    if (s->freeze_last < 0 || s->n_train < 1 || s->n_val < 1) errs.push_back("transfer specs need freeze_last >= 0, n_train >= 1, n_val >= 1");
  try {
    validate_bounds(c.tune.search.bounds);
  } catch (const InvalidArgument& e) {
    errs.push_back(std::string("tune.bounds: ") + e.what());
  }
  if (c.tune.search.n_init < 2) errs.push_back("tune.n_init must be >= 2");
  if (c.tune.search.n_iter < 1) errs.push_back("tune.n_iter must be >= 1");
  if (c.tune.lasers < 1) errs.push_back("tune.lasers must be >= 1");
  if (c.tune.training_plans < 1 || c.tune.validation_plans < 1) errs.push_back("tune plan counts must be >= 1");
  if (c.tune.steps_per_candidate < 0) errs.push_back("tune.steps_per_candidate must be >= 0");
  if (c.tune.validation_stride < 1) errs.push_back("tune.validation_stride must be >= 1");
  if (!c.model.empty() && !std::filesystem::exists(c.model)) errs.push_back("model checkpoint not found: " + c.model);
  return errs;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  json user;
  try {
    user = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw InvalidArgument("config must be a JSON object");
  const json reference = to_json(default_run_config());
  check_keys(user, reference, "");

  json merged = reference;
  // Domains given in the file replace the default set wholesale.
  if (user.contains("domains")) merged["domains"] = json::object();
  merged.merge_patch(user);
  RunConfig c;
  try {
    c = from_json(merged);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config type error: ") + e.what());
  }
  if (!c.model.empty() && std::filesystem::path(c.model).is_relative() && !base_dir.empty())
    c.model = (base_dir / c.model).lexically_normal().string();
  if (auto errs = validate_run_config(c); !errs.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw InvalidArgument(msg);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

void override_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.training.seed = seed;
  c.training.split.seed = seed;
  c.tune.search.seed = seed;
}

std::string run_config_json(const RunConfig& c) { return to_json(c).dump(2); }

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pbfgnn
