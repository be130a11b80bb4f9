#pragma once

#include <string>
#include <vector>

#include "pmviab/dynamics.hpp"

namespace pmv {

/// Configuration of the exponential-stabilization application: reduced mode
/// with beta2 = 0 and f2(x,y,u) = -c y, constraint set the decay epigraph.
struct StabilizationConfig {
  GridPtr grid;
  DriftGroup gamma1;
  Nonlinearity beta1;
  CouplingMap f1;  // second argument scalar (truncated spectral sum)
  ControlSet controls;
  double c = 1.0;  // decay rate
  int J = 0;       // spectral truncation level (defaults to the full basis)

  int truncation() const { return J > 0 ? J : grid->size(); }
};

/// Truncated spectral form
///   psi_j(x,u) = 2 sum_{k<=j} <x,e_k>_{H^{-1}} <-lambda_k beta(x)
///                + f1(x, sum_{l<=j} <x,e_l>^2_{H^{-1}}, u), e_k>_{H^{-1}}
///                + 2c sum_{l<=j} <x,e_l>^2_{H^{-1}},
/// eigenindices enumerated by increasing eigenvalue.
double psi_j(const Field& x, const Control& u, int j, const StabilizationConfig& cfg);

/// Indices of the controls with max_{1<=j<=J} psi_j(x,u) <= 1e-10. Empty is a
/// legal result (stabilization infeasible at x).
std::vector<int> feasible_controls(const Field& x, const StabilizationConfig& cfg);

struct FeedbackChoice {
  int index = 0;
  bool feasible = false;
  double worst_psi = 0.0;
};

/// argmin over U of max_{j<=J} psi_j(x,u); ties broken by lowest index.
/// Returned even when infeasible (best effort) with the feasibility flag.
FeedbackChoice select_feedback(const Field& x, const StabilizationConfig& cfg);

struct NecessaryCondition {
  double value = 0.0;       // inf over U of the truncated bracketed expression
  double tail = 0.0;        // remainder of the spectral sum beyond J (exact discretely)
  int argmin_control = 0;
};

/// Necessary-condition residual with the full-norm second argument
/// f1(x, ||x||^2_{H^{-1}}, u); nonpositive values are consistent with
/// invariance of the decay set.
NecessaryCondition necessary_residual(const Field& x, const StabilizationConfig& cfg);

struct DecayRow {
  double s = 0.0;
  double norm_sq = 0.0;   // ||x(s)||^2_{H^{-1}}
  double bound = 0.0;     // eta0 e^{-c s}
  double margin = 0.0;    // bound - norm_sq
  int control = 0;
  bool feasible = true;
};

struct DecayReport {
  bool pass = false;
  double tol_decay = 0.0;
  int first_violation = -1;  // row index of the first margin < -tol node
  double max_backtransform_mismatch = 0.0;
  int infeasible_nodes = 0;
  std::vector<DecayRow> rows;
};

/// Closed-loop run of the reduced system with sampled-data feedback from
/// select_feedback at every step; passes when the margin eta0 e^{-cs} -
/// ||x(s)||^2 stays above -tol_decay at every node. Also verifies the
/// back-transform isometry ||X(s)|| = ||x(s)|| along the loop.
DecayReport run_stabilization(const StabilizationConfig& cfg, const Field& xi, double eta0,
                              double T, double dt, const BrownianPath& path);

}  // namespace pmv
