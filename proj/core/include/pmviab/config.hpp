#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmviab/drift.hpp"
#include "pmviab/dynamics.hpp"
#include "pmviab/stabilization.hpp"
#include "pmviab/viability.hpp"

namespace pmv {

/// One experiment = one structured-text (JSON) config file. Parsing and
/// emission round-trip byte-identically, and the emitted canonical text is
/// hashed into every artifact.
struct ExperimentConfig {
  // grid
  int n_per_dim = 15;
  int n_per_dim_2 = 0;  // 0: same grid for the second component (field mode)
  bool scalar_mode = true;

  // drift streams per component
  StreamSpec stream1;
  StreamSpec stream2;

  // nonlinearities
  std::string beta1_family = "linear";
  std::map<std::string, double> beta1_params;
  std::string beta2_family = "zero";
  std::map<std::string, double> beta2_params;

  // couplings
  std::string f1_family = "zero";
  std::map<std::string, double> f1_params;
  std::string f2_family = "decay";
  std::map<std::string, double> f2_params;

  // finite control set
  std::vector<std::vector<double>> control_points{{0.0}};
  int rate_control = 0;  // constant control index for the rate studies

  // constraint set
  std::string constraint_kind = "decay-epigraph";
  std::map<std::string, double> constraint_params;

  // initial data: x as an eigenmode combination, eta defaulting to ||xi||^2
  std::vector<ModeAmp> init_modes{{1, 1, 0.2}};
  std::optional<double> init_eta;

  // time grid
  double t0 = 0.0;
  double horizon = 0.5;
  double dt = 0.0;  // 0: auto (stable_step snapped to the horizon)

  // epsilon ladders
  std::vector<double> epsilons;

  // stabilization
  std::vector<double> c_values{1.0};
  int truncation_level = 0;  // 0: full basis

  // Monte Carlo
  int n_mc = 100;
  std::vector<std::uint64_t> seeds{1};

  std::string out_dir = "out";

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);

  /// Canonical JSON emission (sorted keys, 2-space indent, trailing newline).
  std::string to_json_text() const;

  std::string config_hash() const;
};

/// Everything assembled from a config: grids, groups, model, initial state,
/// constraint oracle and the stabilization view.
struct BuiltExperiment {
  ExperimentConfig config;
  ModelSpec model;
  CoupledState init;
  ConstraintOracle constraint;

  StabilizationConfig stabilization(double c) const;
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

}  // namespace pmv
