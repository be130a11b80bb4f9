#include "pmviab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pmviab/report.hpp"

namespace pmv {

namespace {

using nlohmann::json;

json params_to_json(const std::map<std::string, double>& params) {
  json out = json::object();
  for (const auto& [k, v] : params) out[k] = v;
  return out;
}

std::map<std::string, double> params_from_json(const json& j) {
  std::map<std::string, double> out;
  if (j.is_null()) return out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value().get<double>();
  return out;
}

json stream_to_json(const StreamSpec& s) {
  return json{{"name", s.name}, {"amplitude", s.amplitude}, {"mode_x", s.mode_x},
              {"mode_y", s.mode_y}};
}

StreamSpec stream_from_json(const json& j, const StreamSpec& fallback) {
  if (j.is_null()) return fallback;
  StreamSpec s;
  s.name = j.value("name", fallback.name);
  s.amplitude = j.value("amplitude", fallback.amplitude);
  s.mode_x = j.value("mode_x", fallback.mode_x);
  s.mode_y = j.value("mode_y", fallback.mode_y);
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    const json grid = j.value("grid", json::object());
    cfg.n_per_dim = grid.value("n_per_dim", cfg.n_per_dim);
    cfg.n_per_dim_2 = grid.value("n_per_dim_2", cfg.n_per_dim_2);
    cfg.scalar_mode = j.value("scalar_mode", cfg.scalar_mode);

    const json drift = j.value("drift", json::object());
    cfg.stream1 = stream_from_json(drift.contains("stream_1") ? drift["stream_1"] : json(),
                                   cfg.stream1);
    cfg.stream2 = stream_from_json(drift.contains("stream_2") ? drift["stream_2"] : json(),
                                   cfg.stream2);

    const json beta = j.value("beta", json::object());
    if (beta.contains("beta_1")) {
      cfg.beta1_family = beta["beta_1"].value("family", cfg.beta1_family);
      cfg.beta1_params = params_from_json(beta["beta_1"].value("params", json::object()));
    }
    if (beta.contains("beta_2")) {
      cfg.beta2_family = beta["beta_2"].value("family", cfg.beta2_family);
      cfg.beta2_params = params_from_json(beta["beta_2"].value("params", json::object()));
    }

    const json coupling = j.value("coupling", json::object());
    if (coupling.contains("f_1")) {
      cfg.f1_family = coupling["f_1"].value("family", cfg.f1_family);
      cfg.f1_params = params_from_json(coupling["f_1"].value("params", json::object()));
    }
    if (coupling.contains("f_2")) {
      cfg.f2_family = coupling["f_2"].value("family", cfg.f2_family);
      cfg.f2_params = params_from_json(coupling["f_2"].value("params", json::object()));
    }

    const json controls = j.value("controls", json::object());
    if (controls.contains("points"))
      cfg.control_points = controls["points"].get<std::vector<std::vector<double>>>();
    cfg.rate_control = controls.value("rate_control", cfg.rate_control);

    const json constraint = j.value("constraint", json::object());
    cfg.constraint_kind = constraint.value("kind", cfg.constraint_kind);
    cfg.constraint_params = params_from_json(constraint.value("params", json::object()));

    const json init = j.value("init", json::object());
    if (init.contains("x_modes")) {
      cfg.init_modes.clear();
      for (const auto& m : init["x_modes"])
        cfg.init_modes.push_back(ModeAmp{m.at(0).get<int>(), m.at(1).get<int>(),
                                         m.at(2).get<double>()});
    }
    if (init.contains("eta") && !init["eta"].is_null())
      cfg.init_eta = init["eta"].get<double>();

    const json time = j.value("time", json::object());
    cfg.t0 = time.value("t0", cfg.t0);
    cfg.horizon = time.value("horizon", cfg.horizon);
    cfg.dt = time.value("dt", cfg.dt);

    if (j.contains("epsilons")) cfg.epsilons = j["epsilons"].get<std::vector<double>>();

    const json stab = j.value("stabilization", json::object());
    if (stab.contains("c_values")) cfg.c_values = stab["c_values"].get<std::vector<double>>();
    cfg.truncation_level = stab.value("J", cfg.truncation_level);

    const json mc = j.value("mc", json::object());
    cfg.n_mc = mc.value("n_mc", cfg.n_mc);
    if (mc.contains("seeds")) cfg.seeds = mc["seeds"].get<std::vector<std::uint64_t>>();

    const json output = j.value("output", json::object());
    cfg.out_dir = output.value("dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config schema error: ") + e.what());
  }
  if (cfg.seeds.empty()) throw std::invalid_argument("config: mc.seeds must be non-empty");
  if (cfg.control_points.empty()) throw std::invalid_argument("config: controls.points empty");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["grid"] = {{"n_per_dim", n_per_dim}, {"n_per_dim_2", n_per_dim_2}};
  j["scalar_mode"] = scalar_mode;
  j["drift"] = {{"stream_1", stream_to_json(stream1)}, {"stream_2", stream_to_json(stream2)}};
  j["beta"] = {{"beta_1", {{"family", beta1_family}, {"params", params_to_json(beta1_params)}}},
               {"beta_2", {{"family", beta2_family}, {"params", params_to_json(beta2_params)}}}};
  j["coupling"] = {{"f_1", {{"family", f1_family}, {"params", params_to_json(f1_params)}}},
                   {"f_2", {{"family", f2_family}, {"params", params_to_json(f2_params)}}}};
  j["controls"] = {{"points", control_points}, {"rate_control", rate_control}};
  j["constraint"] = {{"kind", constraint_kind}, {"params", params_to_json(constraint_params)}};
  json modes = json::array();
  for (const auto& m : init_modes) modes.push_back(json::array({m.j, m.k, m.amp}));
  j["init"] = {{"x_modes", modes}, {"eta", init_eta ? json(*init_eta) : json()}};
  j["time"] = {{"t0", t0}, {"horizon", horizon}, {"dt", dt}};
  j["epsilons"] = epsilons;
  j["stabilization"] = {{"c_values", c_values}, {"J", truncation_level}};
  j["mc"] = {{"n_mc", n_mc}, {"seeds", seeds}};
  j["output"] = {{"dir", out_dir}};
  return j.dump(2) + "\n";
}

std::string ExperimentConfig::config_hash() const { return fnv1a_hex(to_json_text()); }

StabilizationConfig BuiltExperiment::stabilization(double c) const {
  StabilizationConfig cfg;
  cfg.grid = model.grid1;
  cfg.gamma1 = model.gamma1;
  cfg.beta1 = model.beta1;
  cfg.f1 = model.f1;
  cfg.controls = model.controls;
  cfg.c = c;
  cfg.J = config.truncation_level;
  return cfg;
}

BuiltExperiment build_experiment(const ExperimentConfig& config) {
  BuiltExperiment built;
  built.config = config;

  const GridPtr grid1 = build_grid(config.n_per_dim);
  built.model.grid1 = grid1;
  built.model.scalar_mode = config.scalar_mode;
  built.model.gamma1 = DriftGroup::build(grid1, build_drift(grid1, config.stream1));

  if (config.scalar_mode) {
    built.model.grid2 = nullptr;
    built.model.gamma2 = DriftGroup::identity(grid1);
  } else {
    const int n2 = config.n_per_dim_2 > 0 ? config.n_per_dim_2 : config.n_per_dim;
    const GridPtr grid2 = n2 == config.n_per_dim ? grid1 : build_grid(n2);
    built.model.grid2 = grid2;
    built.model.gamma2 = DriftGroup::build(grid2, build_drift(grid2, config.stream2));
  }

  built.model.beta1 = make_beta(config.beta1_family, config.beta1_params);
  built.model.beta2 = make_beta(config.beta2_family, config.beta2_params,
                                /*may_be_zero=*/true);

  ControlSet controls;
  for (const auto& point : config.control_points) controls.points.push_back(Control{point});
  built.model.controls = controls;

  built.model.f1 = make_coupling(config.f1_family, config.f1_params, controls, grid1);
  built.model.f2 = make_coupling(config.f2_family, config.f2_params, controls,
                                 config.scalar_mode ? grid1 : built.model.grid2);

  Field x = Field::zero(grid1);
  for (const auto& m : config.init_modes) {
    const Field e = grid1->eigenfield(m.j, m.k);
    x.values += m.amp * e.values;
  }
  built.init.x = x;
  if (config.scalar_mode) {
    const double norm = grid1->norm(x, Metric::Hminus1);
    built.init.y = YState::of(config.init_eta ? *config.init_eta : norm * norm);
  } else {
    built.init.y = YState::of(Field::zero(built.model.grid2));
  }

  built.constraint = make_constraint(config.constraint_kind, config.constraint_params);
  return built;
}

}  // namespace pmv
