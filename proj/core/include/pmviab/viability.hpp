#pragma once

#include <map>
#include <string>
#include <vector>

#include "pmviab/dynamics.hpp"

namespace pmv {

/// Constraint set in the product space H^{-1} x (R or H^{-1}) with an exact
/// nearest-point projection in the product metric.
///
/// Kinds:
///   "whole-space"     no constraint; projection is the identity
///   "centered-ball"   sqrt(||x||^2 + ||y||^2) <= radius; radial projection
///   "decay-epigraph"  ||x||^2_{H^{-1}} <= y (scalar y); by Parseval this is
///                     the spectral-sum set of the stabilization application.
///                     Projection = radial scaling + scalar cubic root find.
class ConstraintOracle {
 public:
  static ConstraintOracle whole_space();
  static ConstraintOracle centered_ball(double radius);
  static ConstraintOracle decay_epigraph();

  const std::string& kind() const { return kind_; }

  bool contains(const ModelSpec& model, const CoupledState& z) const;
  CoupledState project(const ModelSpec& model, const CoupledState& z) const;
  double distance(const ModelSpec& model, const CoupledState& z) const;

 private:
  std::string kind_;
  double radius_ = 0.0;
};

ConstraintOracle make_constraint(const std::string& kind,
                                 const std::map<std::string, double>& params = {});

struct TangencyProfile {
  std::vector<double> epsilons;
  std::vector<double> q_values;  // min over controls of E[dist^2]/eps^2
  std::vector<int> argmin_control;
  std::vector<std::vector<double>> q_per_control;
  double liminf_estimate = 0.0;  // linear extrapolation of q to eps -> 0, clipped at 0
};

/// Quasi-tangency profile at (t, init) in K: for each epsilon and constant
/// control, Q = E[dist_K^2 of the fundamental scheme at t+eps]/eps^2 with the
/// inner infimum realized pathwise by the exact projection.
TangencyProfile tangency_profile(const ConstraintOracle& K, const ModelSpec& model, double t,
                                 const CoupledState& init, const std::vector<double>& epsilons,
                                 int n_mc, const std::vector<std::uint64_t>& seeds,
                                 unsigned workers = 0);

/// Per greedy node of the eps-approximate construction.
struct EpsApproxNode {
  double t_start = 0.0;
  double delta = 0.0;
  int control = 0;
  double p_norm2 = 0.0;             // squared product norm of the correction jump
  double correction_energy = 0.0;   // ||p||^2 / delta = int ||phi||^2 over the subinterval
};

/// The Appendix 7-tuple (T_bar, tau, u, phi_1, phi_2, (X, Y)) at grid-time
/// resolution along one Brownian path. Corrections are stored as the jump
/// residuals p_i; phi_i = p_i / delta_k on the corresponding subinterval.
struct EpsApproxRecord {
  double t = 0.0;
  double t_bar = 0.0;
  double horizon_request = 0.0;
  double eps = 0.0;
  double eps_prime = 0.0;
  double dt = 0.0;
  bool complete = false;
  std::string diagnostic;

  BrownianPath path;
  std::vector<double> times;
  std::vector<CoupledState> states;  // post-jump at node times
  std::vector<double> tau;           // tau(s) per stored time
  std::vector<int> control_per_step;
  std::vector<EpsApproxNode> nodes;
  std::vector<Field> p1;             // correction jumps per node
  std::vector<double> p2_scalar;
  std::vector<Field> p2_field;

  double correction_energy() const;
};

/// Greedy Step-1 construction iterated to the horizon: at each node pick the
/// (control, delta) minimizing the post-step projected distance, halving
/// delta until the local clause-4 and clause-6 budgets hold; the state jumps
/// to the projected point. Returns a partial record with a diagnostic when
/// the step size underflows the integrator step.
EpsApproxRecord construct_eps_approx(const ConstraintOracle& K, const ModelSpec& model, double t,
                                     double T, const CoupledState& init, double eps,
                                     std::uint64_t seed);

struct ClauseEntry {
  std::string name;
  bool pass = false;
  double slack = 0.0;
  std::string note;
};

struct SixClauseReport {
  std::vector<ClauseEntry> entries;
  bool all_pass = false;
};

/// Validates the six clauses of the constrained eps-approximate solution
/// definition; clause 5's equation residual is checked by re-integration.
SixClauseReport validate_eps_approx(const EpsApproxRecord& rec, const ConstraintOracle& K,
                                    const ModelSpec& model, double eps);

struct PolicyGap {
  std::string policy;
  double gap = 0.0;
  bool complete = true;
};

struct NearViabilityReport {
  double gap = 0.0;  // min over policies
  std::vector<PolicyGap> policies;
};

/// Evaluates the near-viability gap inf_u sup_s E-dist along implementable
/// policies: greedy projected policies at each eps level plus all constant
/// controls.
NearViabilityReport near_viability_gap(const ConstraintOracle& K, const ModelSpec& model,
                                       double t, double T, const CoupledState& init,
                                       const std::vector<double>& eps_levels, int n_mc,
                                       const std::vector<std::uint64_t>& seeds,
                                       unsigned workers = 0);

struct InitialEstimateReport {
  std::vector<double> gaps;     // s - t values
  std::vector<double> lhs;      // ||X(s)-xi||^2 + ||Y(s)-eta||^2 along the record
  double slope = 0.0;           // log-log fit of lhs against (s - t)
  double c_emp = 0.0;           // smallest admissible constant of the linear bound
};

/// Measures the initial-data estimate E[||X(s)-xi||^2 + ||Y(s)-eta||^2] <=
/// C (1 + ||xi||^2_{L2} + ||eta||^2 + correction energy)(s-t) along the record.
InitialEstimateReport appendix_initial_estimate(const EpsApproxRecord& rec,
                                                const ModelSpec& model,
                                                const std::vector<double>& gaps);

}  // namespace pmv
